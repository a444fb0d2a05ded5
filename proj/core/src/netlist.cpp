#include "tgc/netlist.hpp"

#include <sodium.h>

#include <istream>
#include <ostream>
#include <sstream>

#include "tgc/bytes.hpp"
#include "tgc/errors.hpp"

namespace tgc {

namespace {

constexpr std::string_view kNetlistMagic = "tgc-netlist";
constexpr int kNetlistTextVersion = 1;

struct Names {
  GateKind kind;
  std::string_view name;
};
constexpr Names kGateNames[] = {
    {GateKind::kXor, "XOR"}, {GateKind::kXnor, "XNOR"}, {GateKind::kNot, "NOT"},
    {GateKind::kAnd, "AND"}, {GateKind::kOr, "OR"},
};

// Driver bookkeeping shared by validate() and the parser.
class DriverMap {
 public:
  explicit DriverMap(std::uint32_t wires) : driven_(wires, 0) {}

  void drive(WireId w, const std::string& where) {
    check(w, where);
    if (driven_[w]) throw FormatError(where + ": wire " + std::to_string(w) + " has more than one driver");
    driven_[w] = 1;
  }
  void read(WireId w, const std::string& where) const {
    check(w, where);
    if (!driven_[w]) {
      throw FormatError(where + ": wire " + std::to_string(w) +
                        " is read before it is driven (cycle or misordered gate)");
    }
  }

 private:
  void check(WireId w, const std::string& where) const {
    if (w >= driven_.size()) throw FormatError(where + ": wire " + std::to_string(w) + " out of range");
  }
  std::vector<std::uint8_t> driven_;
};

void drive_inputs(const Netlist& n, DriverMap& d) {
  d.drive(n.const0, "const0");
  d.drive(n.const1, "const1");
  for (auto w : n.client_inputs) d.drive(w, "client input");
  for (auto w : n.server_inputs) d.drive(w, "server input");
}

void check_gate(const Gate& g, DriverMap& d, const std::string& where) {
  if (static_cast<unsigned>(g.kind) > static_cast<unsigned>(GateKind::kOr)) {
    throw FormatError(where + ": unknown gate kind");
  }
  d.read(g.in0, where);
  if (gate_arity(g.kind) == 2) {
    d.read(g.in1, where);
  } else if (g.in1 != kNoWire) {
    throw FormatError(where + ": NOT gate with a second input");
  }
  d.drive(g.out, where);
}

}  // namespace

std::string_view to_string(GateKind kind) {
  for (const auto& n : kGateNames) {
    if (n.kind == kind) return n.name;
  }
  throw InvalidArgument("unknown gate kind");
}

GateKind parse_gate_kind(std::string_view text) {
  for (const auto& n : kGateNames) {
    if (n.name == text) return n.kind;
  }
  throw FormatError("unknown gate kind '" + std::string(text) + "'");
}

std::vector<WireId> Netlist::input_wires() const {
  std::vector<WireId> out;
  out.reserve(input_count());
  out.push_back(const0);
  out.push_back(const1);
  out.insert(out.end(), client_inputs.begin(), client_inputs.end());
  out.insert(out.end(), server_inputs.begin(), server_inputs.end());
  return out;
}

std::vector<WireId> Netlist::output_wires() const {
  std::vector<WireId> out;
  out.reserve(output_bit_count());
  for (const auto& g : outputs) out.insert(out.end(), g.bits.begin(), g.bits.end());
  return out;
}

std::size_t Netlist::output_bit_count() const {
  std::size_t n = 0;
  for (const auto& g : outputs) n += g.bits.size();
  return n;
}

void Netlist::validate() const {
  DriverMap d(wire_count);
  drive_inputs(*this, d);
  for (std::size_t i = 0; i < gates.size(); ++i) check_gate(gates[i], d, "gate " + std::to_string(i));
  for (const auto& g : outputs) {
    for (auto w : g.bits) d.read(w, "output");
  }
}

std::array<std::uint8_t, 32> Netlist::hash() const {
  if (sodium_init() < 0) throw Error("libsodium initialisation failed");
  crypto_hash_sha256_state st;
  crypto_hash_sha256_init(&st);
  ByteWriter w;
  auto flush = [&](bool force) {
    if (force || w.size() >= (1u << 16)) {
      crypto_hash_sha256_update(&st, w.buffer().data(), w.size());
      w.buffer().clear();
    }
  };
  w.raw("tgc-netlist-v1", 14);
  w.u32(wire_count);
  w.u32(const0);
  w.u32(const1);
  w.u64(client_inputs.size());
  for (auto x : client_inputs) w.u32(x);
  flush(false);
  w.u64(server_inputs.size());
  for (auto x : server_inputs) {
    w.u32(x);
    flush(false);
  }
  w.u64(outputs.size());
  for (const auto& g : outputs) {
    w.i32(g.n_eff);
    w.u64(g.bits.size());
    for (auto x : g.bits) w.u32(x);
    flush(false);
  }
  w.u64(gates.size());
  for (const auto& g : gates) {
    w.u8(static_cast<std::uint8_t>(g.kind));
    w.u32(g.in0);
    w.u32(g.in1);
    w.u32(g.out);
    flush(false);
  }
  flush(true);
  std::array<std::uint8_t, 32> out{};
  crypto_hash_sha256_final(&st, out.data());
  return out;
}

GateStats count_gates(const Netlist& netlist) {
  GateStats s;
  for (const auto& g : netlist.gates) {
    if (is_free(g.kind)) {
      ++s.free;
    } else {
      ++s.non_xor;
      if (g.kind == GateKind::kAnd) ++s.and_gates;
      else ++s.or_gates;
    }
  }
  s.total = netlist.gates.size();
  return s;
}

CommunicationEstimate estimate_communication(const Netlist& netlist, std::size_t label_bytes) {
  CommunicationEstimate e;
  e.table_bytes = count_gates(netlist).non_xor * 4 * label_bytes;
  e.input_label_bytes = (netlist.client_inputs.size() + 2) * label_bytes;
  e.framing_bytes = kGarbledFramingBytes;
  return e;
}

void emit_netlist(const Netlist& n, std::ostream& out) {
  out << kNetlistMagic << ' ' << kNetlistTextVersion << '\n';
  out << "wires " << n.wire_count << '\n';
  out << "const " << n.const0 << ' ' << n.const1 << '\n';
  out << "client " << n.client_inputs.size();
  for (auto w : n.client_inputs) out << ' ' << w;
  out << "\nserver " << n.server_inputs.size();
  for (auto w : n.server_inputs) out << ' ' << w;
  out << "\noutputs " << n.outputs.size() << '\n';
  for (const auto& g : n.outputs) {
    out << "out " << g.n_eff << ' ' << g.bits.size();
    for (auto w : g.bits) out << ' ' << w;
    out << '\n';
  }
  out << "gates " << n.gates.size() << '\n';
  for (const auto& g : n.gates) {
    out << to_string(g.kind) << ' ' << g.in0;
    if (gate_arity(g.kind) == 2) out << ' ' << g.in1;
    out << ' ' << g.out << '\n';
  }
}

namespace {

class LineParser {
 public:
  explicit LineParser(std::istream& in) : in_(in) {}

  // Reads the next non-blank line, skipping '#' comments.
  std::istringstream next(std::string_view expect) {
    std::string line;
    while (std::getline(in_, line)) {
      ++lineno_;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") != std::string::npos) return std::istringstream(line);
    }
    fail("unexpected end of input, expected " + std::string(expect));
  }

  std::istringstream keyed(std::string_view key) {
    auto ss = next(key);
    std::string k;
    ss >> k;
    if (k != key) fail("expected '" + std::string(key) + "', found '" + k + "'");
    return ss;
  }

  template <typename T>
  T num(std::istringstream& ss, std::string_view what) {
    T v;
    if (!(ss >> v)) fail("expected " + std::string(what));
    return v;
  }

  void end(std::istringstream& ss) {
    std::string rest;
    if (ss >> rest) fail("unexpected token '" + rest + "'");
  }

  bool has_more() {
    std::string line;
    auto pos = in_.tellg();
    while (std::getline(in_, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        in_.clear();
        in_.seekg(pos);
        return true;
      }
    }
    return false;
  }

  std::string where() const { return "line " + std::to_string(lineno_); }
  [[noreturn]] void fail(const std::string& msg) const { throw FormatError("netlist " + where() + ": " + msg); }

 private:
  std::istream& in_;
  std::size_t lineno_ = 0;
};

std::vector<WireId> read_ids(LineParser& p, std::istringstream& ss, std::size_t n) {
  std::vector<WireId> ids(n);
  for (auto& id : ids) id = p.num<WireId>(ss, "wire id");
  return ids;
}

}  // namespace

Netlist parse_netlist(std::istream& in) {
  LineParser p(in);
  Netlist n;
  {
    auto ss = p.keyed(kNetlistMagic);
    const int version = p.num<int>(ss, "format version");
    if (version != kNetlistTextVersion) p.fail("unsupported netlist version " + std::to_string(version));
    p.end(ss);
  }
  {
    auto ss = p.keyed("wires");
    n.wire_count = p.num<std::uint32_t>(ss, "wire count");
    p.end(ss);
  }
  DriverMap d(n.wire_count);
  auto drive = [&](WireId w) {
    try {
      d.drive(w, "input");
    } catch (const FormatError& e) {
      p.fail(e.what());
    }
  };
  {
    auto ss = p.keyed("const");
    n.const0 = p.num<WireId>(ss, "const0 wire");
    n.const1 = p.num<WireId>(ss, "const1 wire");
    p.end(ss);
    drive(n.const0);
    drive(n.const1);
  }
  for (auto [key, dst] : {std::pair{"client", &n.client_inputs}, std::pair{"server", &n.server_inputs}}) {
    auto ss = p.keyed(key);
    const auto count = p.num<std::size_t>(ss, "input count");
    if (count > n.wire_count) p.fail("input count exceeds wire count");
    *dst = read_ids(p, ss, count);
    p.end(ss);
    for (auto w : *dst) drive(w);
  }
  std::size_t groups;
  {
    auto ss = p.keyed("outputs");
    groups = p.num<std::size_t>(ss, "output group count");
    if (groups > n.wire_count) p.fail("output group count exceeds wire count");
    p.end(ss);
  }
  for (std::size_t i = 0; i < groups; ++i) {
    auto ss = p.keyed("out");
    OutputGroup g;
    g.n_eff = p.num<std::int32_t>(ss, "n_eff");
    const auto bits = p.num<std::size_t>(ss, "bit count");
    if (bits > 64) p.fail("output group wider than 64 bits");
    g.bits = read_ids(p, ss, bits);
    p.end(ss);
    for (auto w : g.bits) {
      if (w >= n.wire_count) p.fail("output wire " + std::to_string(w) + " out of range");
    }
    n.outputs.push_back(std::move(g));
  }
  std::size_t gate_count;
  {
    auto ss = p.keyed("gates");
    gate_count = p.num<std::size_t>(ss, "gate count");
    if (gate_count > n.wire_count) p.fail("more gates than wires");
    p.end(ss);
  }
  n.gates.reserve(gate_count);
  for (std::size_t i = 0; i < gate_count; ++i) {
    auto ss = p.next("gate");
    std::string kind_text;
    ss >> kind_text;
    Gate g{};
    try {
      g.kind = parse_gate_kind(kind_text);
    } catch (const FormatError& e) {
      p.fail(e.what());
    }
    g.in0 = p.num<WireId>(ss, "input wire");
    g.in1 = gate_arity(g.kind) == 2 ? p.num<WireId>(ss, "second input wire") : kNoWire;
    g.out = p.num<WireId>(ss, "output wire");
    p.end(ss);
    try {
      check_gate(g, d, "gate " + std::to_string(i));
    } catch (const FormatError& e) {
      p.fail(e.what());
    }
    n.gates.push_back(g);
  }
  if (p.has_more()) p.fail("trailing content after the declared gates");
  for (const auto& g : n.outputs) {
    for (auto w : g.bits) {
      try {
        d.read(w, "output");
      } catch (const FormatError& e) {
        p.fail(e.what());
      }
    }
  }
  return n;
}

std::string netlist_to_string(const Netlist& netlist) {
  std::ostringstream out;
  emit_netlist(netlist, out);
  return out.str();
}

Netlist netlist_from_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_netlist(in);
}

std::vector<std::uint8_t> evaluate_plain(const Netlist& n, std::span<const std::uint8_t> client_bits,
                                         std::span<const std::uint8_t> server_bits) {
  if (client_bits.size() != n.client_inputs.size()) {
    throw InvalidArgument("expected " + std::to_string(n.client_inputs.size()) + " client bits, got " +
                          std::to_string(client_bits.size()));
  }
  if (server_bits.size() != n.server_inputs.size()) {
    throw InvalidArgument("expected " + std::to_string(n.server_inputs.size()) + " server bits, got " +
                          std::to_string(server_bits.size()));
  }
  std::vector<std::uint8_t> v(n.wire_count, 0);
  v[n.const0] = 0;
  v[n.const1] = 1;
  for (std::size_t i = 0; i < client_bits.size(); ++i) v[n.client_inputs[i]] = client_bits[i] & 1u;
  for (std::size_t i = 0; i < server_bits.size(); ++i) v[n.server_inputs[i]] = server_bits[i] & 1u;
  for (const auto& g : n.gates) {
    const std::uint8_t a = v[g.in0];
    switch (g.kind) {
      case GateKind::kXor: v[g.out] = a ^ v[g.in1]; break;
      case GateKind::kXnor: v[g.out] = (a ^ v[g.in1]) ^ 1u; break;
      case GateKind::kNot: v[g.out] = a ^ 1u; break;
      case GateKind::kAnd: v[g.out] = a & v[g.in1]; break;
      case GateKind::kOr: v[g.out] = a | v[g.in1]; break;
    }
  }
  std::vector<std::uint8_t> out;
  out.reserve(n.output_bit_count());
  for (const auto& g : n.outputs) {
    for (auto w : g.bits) out.push_back(v[w]);
  }
  return out;
}

std::vector<std::int32_t> output_scores(const Netlist& n, std::span<const std::uint8_t> bits) {
  if (bits.size() != n.output_bit_count()) throw InvalidArgument("output bit count mismatch");
  std::vector<std::int32_t> scores;
  scores.reserve(n.outputs.size());
  std::size_t pos = 0;
  for (const auto& g : n.outputs) {
    std::int64_t value = 0;
    for (std::size_t i = 0; i < g.bits.size(); ++i) value |= static_cast<std::int64_t>(bits[pos++] & 1u) << i;
    scores.push_back(static_cast<std::int32_t>(2 * value - g.n_eff));
  }
  return scores;
}

}  // namespace tgc
