#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tgc/architecture.hpp"
#include "tgc/model.hpp"
#include "tgc/netlist.hpp"

namespace tgc {

/// Incremental netlist construction. Wire ids are laid out as const0,
/// const1, the client inputs, the server inputs, then gate outputs in
/// creation order, so gates are topologically sorted by construction.
class NetlistBuilder {
 public:
  NetlistBuilder(std::size_t client_inputs, std::size_t server_inputs);

  WireId const0() const { return n_.const0; }
  WireId const1() const { return n_.const1; }
  WireId client_input(std::size_t i) const { return n_.client_inputs.at(i); }
  WireId server_input(std::size_t i) const { return n_.server_inputs.at(i); }

  WireId gate(GateKind kind, WireId a, WireId b = kNoWire);
  WireId xor_(WireId a, WireId b) { return gate(GateKind::kXor, a, b); }
  WireId xnor_(WireId a, WireId b) { return gate(GateKind::kXnor, a, b); }
  WireId not_(WireId a) { return gate(GateKind::kNot, a); }
  WireId and_(WireId a, WireId b) { return gate(GateKind::kAnd, a, b); }
  WireId or_(WireId a, WireId b) { return gate(GateKind::kOr, a, b); }

  void add_output(OutputGroup group) { n_.outputs.push_back(std::move(group)); }
  void reserve_gates(std::size_t n) { n_.gates.reserve(n); }

  const Netlist& peek() const { return n_; }
  Netlist build() &&;

 private:
  Netlist n_;
};

/// Sums the given bits with a column-compression tree of full adders (while
/// a column holds three or more bits) and half adders (two bits). Returns
/// the sum LSB first, ceil(log2(N+1)) bits wide; empty for N = 0.
std::vector<WireId> compile_popcount(NetlistBuilder& b, std::span<const WireId> bits);

/// Wire that is 1 iff the unsigned value on `sum` (LSB first) is >= t,
/// where the value is known never to exceed max_value. t <= 0 yields the
/// const1 wire and t > max_value the const0 wire; otherwise the comparison
/// costs width - 1 - trailing_zeros(t) AND/OR gates.
WireId compile_threshold(NetlistBuilder& b, std::span<const WireId> sum, std::int64_t max_value,
                         std::int64_t t);

/// Smallest popcount that makes a neuron fire: dot - theta >= 0 with
/// dot = 2 * pc - n_eff, i.e. pc >= ceil((n_eff + theta) / 2), floored at 0.
std::int64_t popcount_threshold(std::int64_t n_eff, std::int64_t theta);

/// Compiles the public model structure. Client inputs are the binarized
/// image in HWC order. Server inputs are the sign bits (1 for +1) of the
/// nonzero weights, layer by layer in storage order. Each output group is
/// one class: the popcount bits and n_eff of that class neuron.
Netlist compile_model(const ModelStructure& structure);

/// Server input bits for compile_model, in the same order.
std::vector<std::uint8_t> weight_sign_bits(const ModelParams& params);

/// Circuit for a single hidden layer whose input is supplied by the client.
/// Outputs one single-bit group per activation (n_eff = 1, so the decoded
/// score is +1 or -1).
Netlist compile_layer(const LayerSpec& layer, const ActShape& in, std::span<const std::uint8_t> nonzero,
                      std::span<const std::int32_t> thresholds);

}  // namespace tgc
