#include "tgc/garble.hpp"

#include <cstring>

#include "tgc/bytes.hpp"
#include "tgc/errors.hpp"

namespace tgc {

namespace {

void put_row(std::vector<std::uint8_t>& buf, std::size_t offset, const Block& b) {
  b.to_bytes(buf.data() + offset);
}

// Fills the zero label of each gate output, emitting tables through `emit`.
template <typename Emit>
void garble_gates(const Netlist& n, const Block& delta, Prg& prg, std::vector<Block>& l0, Emit&& emit) {
  Block rows[4];
  for (std::size_t gid = 0; gid < n.gates.size(); ++gid) {
    const Gate& g = n.gates[gid];
    switch (g.kind) {
      case GateKind::kXor: l0[g.out] = l0[g.in0] ^ l0[g.in1]; continue;
      case GateKind::kXnor: l0[g.out] = l0[g.in0] ^ l0[g.in1] ^ delta; continue;
      case GateKind::kNot: l0[g.out] = l0[g.in0] ^ delta; continue;
      case GateKind::kAnd:
      case GateKind::kOr: break;
    }
    const Block c0 = prg.next();
    const Block a0 = l0[g.in0];
    const Block b0 = l0[g.in1];
    const bool is_and = g.kind == GateKind::kAnd;
    for (int va = 0; va < 2; ++va) {
      const Block a = va ? a0 ^ delta : a0;
      for (int vb = 0; vb < 2; ++vb) {
        const Block b = vb ? b0 ^ delta : b0;
        const bool v = is_and ? (va & vb) : (va | vb);
        const int row = 2 * a.permute_bit() + b.permute_bit();
        rows[row] = gate_hash(a, b, gid) ^ (v ? c0 ^ delta : c0);
      }
    }
    l0[g.out] = c0;
    emit(rows);
  }
}

template <typename Next>
std::vector<Block> eval_gates(const Netlist& n, std::span<const Block> input_labels, Next&& next_table) {
  if (input_labels.size() != n.input_count()) {
    throw InvalidArgument("evaluate: expected " + std::to_string(n.input_count()) + " input labels, got " +
                          std::to_string(input_labels.size()));
  }
  std::vector<Block> lab(n.wire_count);
  const auto inputs = n.input_wires();
  for (std::size_t i = 0; i < inputs.size(); ++i) lab[inputs[i]] = input_labels[i];
  for (std::size_t gid = 0; gid < n.gates.size(); ++gid) {
    const Gate& g = n.gates[gid];
    switch (g.kind) {
      case GateKind::kXor:
      case GateKind::kXnor: lab[g.out] = lab[g.in0] ^ lab[g.in1]; continue;
      case GateKind::kNot: lab[g.out] = lab[g.in0]; continue;
      case GateKind::kAnd:
      case GateKind::kOr: break;
    }
    const Block& a = lab[g.in0];
    const Block& b = lab[g.in1];
    const int row = 2 * a.permute_bit() + b.permute_bit();
    lab[g.out] = next_table(row) ^ gate_hash(a, b, gid);
  }
  return lab;
}

std::vector<Block> collect_outputs(const Netlist& n, const std::vector<Block>& lab) {
  std::vector<Block> out;
  out.reserve(n.output_bit_count());
  for (const auto& grp : n.outputs) {
    for (auto w : grp.bits) out.push_back(lab[w]);
  }
  return out;
}

class TableCursor {
 public:
  TableCursor(const GarbledCircuit& gc) : tables_(gc.tables) {}
  Block operator()(int row) {
    if (pos_ + 4 > tables_.size()) throw FormatError("garbled circuit has too few tables");
    const Block r = tables_[pos_ + static_cast<std::size_t>(row)];
    pos_ += 4;
    return r;
  }
  void finish() const {
    if (pos_ != tables_.size()) throw FormatError("garbled circuit has too many tables");
  }

 private:
  const std::vector<Block>& tables_;
  std::size_t pos_ = 0;
};

}  // namespace

Garbler::Garbler(const Netlist& netlist, const Block& seed) : netlist_(netlist), prg_(seed) {
  input_.delta = prg_.next();
  input_.delta.lo |= 1u;
  input_.zero_labels.resize(netlist.input_count());
  prg_.fill(input_.zero_labels.data(), input_.zero_labels.size());
}

OutputDecoding Garbler::garble(const TableSink& sink, std::size_t chunk_bytes) {
  chunk_bytes = std::max<std::size_t>(kTableBytes, chunk_bytes - chunk_bytes % kTableBytes);
  std::vector<Block> l0(netlist_.wire_count);
  const auto inputs = netlist_.input_wires();
  for (std::size_t i = 0; i < inputs.size(); ++i) l0[inputs[i]] = input_.zero_labels[i];

  std::vector<std::uint8_t> buf(chunk_bytes);
  std::size_t used = 0;
  garble_gates(netlist_, input_.delta, prg_, l0, [&](const Block* rows) {
    for (int r = 0; r < 4; ++r) put_row(buf, used + static_cast<std::size_t>(r) * kLabelBytes, rows[r]);
    used += kTableBytes;
    if (used == buf.size()) {
      sink(std::span<const std::uint8_t>(buf.data(), used));
      used = 0;
    }
  });
  if (used > 0) sink(std::span<const std::uint8_t>(buf.data(), used));

  OutputDecoding dec;
  dec.delta = input_.delta;
  dec.zero_labels = collect_outputs(netlist_, l0);
  return dec;
}

Garbling garble(const Netlist& netlist, const Block& seed) {
  Garbling g;
  Garbler garbler(netlist, seed);
  g.input = garbler.encoding();
  g.circuit.tables.reserve(4 * count_gates(netlist).non_xor);
  g.output = garbler.garble([&](std::span<const std::uint8_t> chunk) {
    for (std::size_t off = 0; off < chunk.size(); off += kLabelBytes) {
      g.circuit.tables.push_back(Block::from_bytes(chunk.data() + off));
    }
  });
  g.circuit.circuit_hash = netlist.hash();
  return g;
}

Garbling garble(const Netlist& netlist, std::uint64_t seed) { return garble(netlist, Prg(seed).next()); }

std::vector<Block> encode_inputs(const InputEncoding& enc, std::span<const std::uint8_t> bits,
                                 std::span<const std::size_t> idx) {
  if (bits.size() != idx.size()) throw InvalidArgument("encode_inputs: bit count does not match wire subset");
  std::vector<Block> out(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (idx[i] >= enc.zero_labels.size()) throw InvalidArgument("encode_inputs: input index out of range");
    out[i] = enc.label(idx[i], bits[i] & 1u);
  }
  return out;
}

std::vector<Block> encode_all_inputs(const InputEncoding& enc, const Netlist& n,
                                     std::span<const std::uint8_t> client_bits,
                                     std::span<const std::uint8_t> server_bits) {
  if (client_bits.size() != n.client_inputs.size() || server_bits.size() != n.server_inputs.size()) {
    throw InvalidArgument("encode_all_inputs: input bit counts do not match the netlist");
  }
  if (enc.zero_labels.size() != n.input_count()) throw InvalidArgument("encoding does not match the netlist");
  std::vector<Block> out;
  out.reserve(n.input_count());
  out.push_back(enc.label(0, false));
  out.push_back(enc.label(1, true));
  std::size_t k = 2;
  for (auto b : client_bits) out.push_back(enc.label(k++, b & 1u));
  for (auto b : server_bits) out.push_back(enc.label(k++, b & 1u));
  return out;
}

std::vector<std::uint8_t> decode_outputs(const OutputDecoding& dec, std::span<const Block> labels) {
  if (labels.size() != dec.zero_labels.size()) {
    throw InvalidArgument("decode_outputs: expected " + std::to_string(dec.zero_labels.size()) + " labels, got " +
                          std::to_string(labels.size()));
  }
  std::vector<std::uint8_t> bits(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const Block& z = dec.zero_labels[i];
    // The permute bit picks the candidate; the full label must then match.
    const bool bit = labels[i].permute_bit() != z.permute_bit();
    const Block expect = bit ? z ^ dec.delta : z;
    if (!(labels[i] == expect)) throw IntegrityError("output label " + std::to_string(i) + " is not a valid label");
    bits[i] = bit ? 1 : 0;
  }
  return bits;
}

std::vector<Block> evaluate(const GarbledCircuit& gc, const Netlist& n, std::span<const Block> input_labels) {
  return collect_outputs(n, evaluate_all_wires(gc, n, input_labels));
}

std::vector<Block> evaluate_all_wires(const GarbledCircuit& gc, const Netlist& n,
                                      std::span<const Block> input_labels) {
  if (gc.tables.size() % 4 != 0) throw FormatError("garbled circuit table rows not a multiple of 4");
  TableCursor cursor(gc);
  auto lab = eval_gates(n, input_labels, [&](int row) { return cursor(row); });
  cursor.finish();
  return lab;
}

std::vector<Block> evaluate_stream(const Netlist& n, std::span<const Block> input_labels, const TableSource& source,
                                   std::size_t chunk_bytes) {
  chunk_bytes = std::max<std::size_t>(kTableBytes, chunk_bytes - chunk_bytes % kTableBytes);
  std::size_t remaining = count_gates(n).non_xor * kTableBytes;
  std::vector<std::uint8_t> buf;
  std::size_t pos = 0;
  auto lab = eval_gates(n, input_labels, [&](int row) {
    if (pos == buf.size()) {
      if (remaining == 0) throw FormatError("garbled table stream ended early");
      buf.resize(std::min(chunk_bytes, remaining));
      source(buf);
      remaining -= buf.size();
      pos = 0;
    }
    const Block r = Block::from_bytes(buf.data() + pos + static_cast<std::size_t>(row) * kLabelBytes);
    pos += kTableBytes;
    return r;
  });
  return collect_outputs(n, lab);
}

std::vector<std::uint8_t> serialize_garbled(const GarbledCircuit& gc) {
  ByteWriter w;
  w.buffer().reserve(kGarbledHeaderBytes + gc.table_bytes());
  w.u32(kGarbleVersion);
  w.raw(gc.circuit_hash.data(), gc.circuit_hash.size());
  w.u64(gc.table_count());
  std::uint8_t tmp[kLabelBytes];
  for (const auto& b : gc.tables) {
    b.to_bytes(tmp);
    w.raw(tmp, sizeof tmp);
  }
  return w.take();
}

GarbledCircuit deserialize_garbled(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "garbled circuit");
  const auto version = r.u32();
  if (version != kGarbleVersion) throw FormatError("garbled circuit: unsupported version " + std::to_string(version));
  GarbledCircuit gc;
  r.raw(gc.circuit_hash.data(), gc.circuit_hash.size());
  const auto count = r.u64();
  if (count > r.remaining() / kTableBytes) throw FormatError("garbled circuit: truncated tables");
  gc.tables.resize(count * 4);
  for (auto& b : gc.tables) b = Block::from_bytes(r.bytes(kLabelBytes).data());
  r.expect_done();
  return gc;
}

}  // namespace tgc
