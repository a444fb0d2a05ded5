#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "tgc/block.hpp"
#include "tgc/netlist.hpp"

namespace tgc {

/// Version of the garbling scheme (hash, row layout, label size). Both
/// parties must agree on it.
inline constexpr std::uint32_t kGarbleVersion = 1;
inline constexpr std::size_t kTableBytes = 4 * kLabelBytes;
/// u32 version, 32-byte circuit hash, u64 table count.
inline constexpr std::size_t kGarbledHeaderBytes = 4 + 32 + 8;

/// Zero labels of the circuit inputs in Netlist::input_wires() order; the
/// one label of every wire is its zero label xor delta.
struct InputEncoding {
  Block delta;
  std::vector<Block> zero_labels;

  Block label(std::size_t input_index, bool bit) const {
    return bit ? zero_labels.at(input_index) ^ delta : zero_labels.at(input_index);
  }
};

/// Zero labels of the output wires in Netlist::output_wires() order.
struct OutputDecoding {
  Block delta;
  std::vector<Block> zero_labels;
};

/// Four rows per AND/OR gate, in gate order. Row 2*pa + pb belongs to the
/// input labels whose permute bits are pa and pb.
struct GarbledCircuit {
  std::array<std::uint8_t, 32> circuit_hash{};
  std::vector<Block> tables;

  std::size_t table_count() const { return tables.size() / 4; }
  std::size_t table_bytes() const { return tables.size() * kLabelBytes; }
  friend bool operator==(const GarbledCircuit&, const GarbledCircuit&) = default;
};

struct Garbling {
  GarbledCircuit circuit;
  InputEncoding input;
  OutputDecoding output;
};

using TableSink = std::function<void(std::span<const std::uint8_t>)>;
using TableSource = std::function<void(std::span<std::uint8_t>)>;

/// Garbles gate by gate, handing table bytes to a sink in chunks so a large
/// circuit can be written to a socket without ever being held in memory.
/// Delta and the input labels are drawn from the seed on construction.
class Garbler {
 public:
  Garbler(const Netlist& netlist, const Block& seed);

  const InputEncoding& encoding() const { return input_; }
  /// Streams all tables (non_xor * 64 bytes) and returns the output decoding.
  OutputDecoding garble(const TableSink& sink, std::size_t chunk_bytes = 1 << 16);

 private:
  const Netlist& netlist_;
  Prg prg_;
  InputEncoding input_;
};

/// Deterministic for a fixed seed. The circuit hash is filled in.
Garbling garble(const Netlist& netlist, const Block& seed);
Garbling garble(const Netlist& netlist, std::uint64_t seed);

/// Labels for `bits` on the given inputs (indices into input_wires()).
std::vector<Block> encode_inputs(const InputEncoding& encoding, std::span<const std::uint8_t> bits,
                                 std::span<const std::size_t> input_indices);
/// Labels for every input in input_wires() order.
std::vector<Block> encode_all_inputs(const InputEncoding& encoding, const Netlist& netlist,
                                     std::span<const std::uint8_t> client_bits,
                                     std::span<const std::uint8_t> server_bits);

/// Throws IntegrityError if a label is neither the zero nor the one label.
std::vector<std::uint8_t> decode_outputs(const OutputDecoding& decoding, std::span<const Block> labels);

/// Evaluates with one label per input (input_wires() order) and returns the
/// output labels in output_wires() order.
std::vector<Block> evaluate(const GarbledCircuit& garbled, const Netlist& netlist,
                            std::span<const Block> input_labels);
/// Same, pulling table bytes from `source` as gates need them.
std::vector<Block> evaluate_stream(const Netlist& netlist, std::span<const Block> input_labels,
                                   const TableSource& source, std::size_t chunk_bytes = 1 << 16);
/// Evaluation that returns the label of every wire, for inspection in tests.
std::vector<Block> evaluate_all_wires(const GarbledCircuit& garbled, const Netlist& netlist,
                                      std::span<const Block> input_labels);

/// Header { u32 version, 32-byte circuit hash, u64 table count } followed by
/// one 64-byte block per AND/OR gate in gate order.
std::vector<std::uint8_t> serialize_garbled(const GarbledCircuit& garbled);
GarbledCircuit deserialize_garbled(std::span<const std::uint8_t> bytes);

}  // namespace tgc
