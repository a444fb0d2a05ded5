#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tgc {

enum class GateKind : std::uint8_t { kXor = 0, kXnor = 1, kNot = 2, kAnd = 3, kOr = 4 };

std::string_view to_string(GateKind kind);
GateKind parse_gate_kind(std::string_view text);

/// XOR, XNOR and NOT cost nothing to garble.
constexpr bool is_free(GateKind kind) {
  return kind == GateKind::kXor || kind == GateKind::kXnor || kind == GateKind::kNot;
}
constexpr int gate_arity(GateKind kind) { return kind == GateKind::kNot ? 1 : 2; }

using WireId = std::uint32_t;
inline constexpr WireId kNoWire = std::numeric_limits<WireId>::max();

struct Gate {
  GateKind kind;
  WireId in0;
  WireId in1;  // kNoWire for NOT
  WireId out;

  friend bool operator==(const Gate&, const Gate&) = default;
};

/// Output bits of one unsigned value, least significant first. The decoded
/// score is 2 * value - n_eff, which turns a popcount over n_eff agreements
/// back into a signed dot product. A single activation bit uses n_eff = 1.
struct OutputGroup {
  std::int32_t n_eff = 0;
  std::vector<WireId> bits;

  friend bool operator==(const OutputGroup&, const OutputGroup&) = default;
};

/// Boolean circuit over {XOR, XNOR, NOT, AND, OR}. Gates are stored in
/// topological order and every wire has exactly one driver: either one of
/// the input groups or a gate output. Two dedicated garbler-owned inputs
/// carry the constants 0 and 1.
struct Netlist {
  std::uint32_t wire_count = 0;
  WireId const0 = kNoWire;
  WireId const1 = kNoWire;
  std::vector<WireId> client_inputs;  // image bits, garbler side
  std::vector<WireId> server_inputs;  // weight sign bits, evaluator side
  std::vector<Gate> gates;
  std::vector<OutputGroup> outputs;

  /// const0, const1, client inputs, server inputs.
  std::vector<WireId> input_wires() const;
  std::size_t input_count() const { return 2 + client_inputs.size() + server_inputs.size(); }
  /// Every output group's bits, concatenated.
  std::vector<WireId> output_wires() const;
  std::size_t output_bit_count() const;

  /// Throws FormatError on unknown wires, multiple drivers, or a gate that
  /// reads a wire before it is driven.
  void validate() const;

  /// SHA-256 over a canonical binary encoding of the whole circuit.
  std::array<std::uint8_t, 32> hash() const;

  friend bool operator==(const Netlist&, const Netlist&) = default;
};

struct GateStats {
  std::size_t non_xor = 0;  // AND + OR
  std::size_t free = 0;     // XOR + XNOR + NOT
  std::size_t total = 0;
  std::size_t and_gates = 0;
  std::size_t or_gates = 0;
};

GateStats count_gates(const Netlist& netlist);

/// Bytes the garbler uploads for a netlist: four label-sized rows per
/// non-XOR gate, one label per garbler-owned input (the two constants plus
/// the client inputs), and kGarbledFramingBytes of fixed framing.
struct CommunicationEstimate {
  std::size_t table_bytes = 0;
  std::size_t input_label_bytes = 0;
  std::size_t framing_bytes = 0;

  std::size_t total() const { return table_bytes + input_label_bytes + framing_bytes; }
};

/// Two 5-byte frame headers, the 44-byte garbled-circuit header (version,
/// circuit hash, gate count) and the 4-byte label count.
inline constexpr std::size_t kGarbledFramingBytes = 2 * 5 + 44 + 4;

CommunicationEstimate estimate_communication(const Netlist& netlist, std::size_t label_bytes = 16);

/// Text form:
///   tgc-netlist 1
///   wires <count>
///   const <const0> <const1>
///   client <n> <ids...>
///   server <n> <ids...>
///   outputs <groups>
///   out <n_eff> <nbits> <ids...>        (one line per group)
///   gates <count>
///   <KIND> <in1> [in2] <out>            (one line per gate)
void emit_netlist(const Netlist& netlist, std::ostream& sink);
Netlist parse_netlist(std::istream& source);
std::string netlist_to_string(const Netlist& netlist);
Netlist netlist_from_string(std::string_view text);

/// Plaintext evaluation; returns the bits of output_wires().
std::vector<std::uint8_t> evaluate_plain(const Netlist& netlist,
                                         std::span<const std::uint8_t> client_bits,
                                         std::span<const std::uint8_t> server_bits);

/// Decodes output bits (in output_wires() order) into per-group scores.
std::vector<std::int32_t> output_scores(const Netlist& netlist,
                                        std::span<const std::uint8_t> output_bits);

}  // namespace tgc
