#include "tgc/cost_model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "tgc/compiler.hpp"
#include "tgc/errors.hpp"
#include "tgc/garble.hpp"
#include "tgc/transport.hpp"

namespace tgc {

namespace {

// One garble/evaluate run across a loopback socket; returns seconds.
double loopback_run(const Netlist& n, std::span<const std::uint8_t> client_bits,
                    std::span<const std::uint8_t> server_bits, std::uint64_t seed, std::size_t& table_bytes) {
  TcpListener listener("127.0.0.1:0");
  const std::string addr = "127.0.0.1:" + std::to_string(listener.port());
  const auto t0 = std::chrono::steady_clock::now();
  std::exception_ptr garbler_error;
  std::thread garbler([&] {
    try {
      auto s = listener.accept();
      Garbler g(n, Block{seed, 0x636f73742d6d6f64});
      const auto labels = encode_all_inputs(g.encoding(), n, client_bits, server_bits);
      std::vector<std::uint8_t> buf(labels.size() * kLabelBytes);
      for (std::size_t i = 0; i < labels.size(); ++i) labels[i].to_bytes(buf.data() + i * kLabelBytes);
      s->write_all(buf);
      g.garble([&](std::span<const std::uint8_t> chunk) { s->write_all(chunk); });
      s->close();
    } catch (...) {
      garbler_error = std::current_exception();
    }
  });
  std::size_t received = 0;
  try {
    auto s = tcp_connect(addr);
    std::vector<std::uint8_t> buf(n.input_count() * kLabelBytes);
    s->read_exact(buf);
    std::vector<Block> labels(n.input_count());
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = Block::from_bytes(buf.data() + i * kLabelBytes);
    evaluate_stream(n, labels, [&](std::span<std::uint8_t> out) {
      s->read_exact(out);
      received += out.size();
    });
  } catch (...) {
    garbler.join();
    throw;
  }
  garbler.join();
  if (garbler_error) std::rethrow_exception(garbler_error);
  table_bytes = received;
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

const OpCost& CostTable::at(LayerKind op) const {
  for (const auto& c : ops) {
    if (c.op == op) return c;
  }
  throw InvalidArgument("cost table has no entry for " + std::string(to_string(op)));
}

std::vector<double> CostTable::gammas() const {
  std::vector<double> g;
  for (const auto& c : ops) g.push_back(c.gamma);
  return g;
}

std::vector<LayerKind> search_ops() {
  return {LayerKind::kConv5x5, LayerKind::kConv3x3, LayerKind::kMaxPool2x2, LayerKind::kIdentity};
}

LayerSpec op_layer(LayerKind op, int kernels) {
  switch (op) {
    case LayerKind::kConv5x5: return LayerSpec::conv(op, kernels, 2);
    case LayerKind::kConv3x3: return LayerSpec::conv(op, kernels, 1);
    case LayerKind::kConv1x1: return LayerSpec::conv(op, kernels, 0);
    case LayerKind::kMaxPool2x2: return LayerSpec::maxpool();
    case LayerKind::kIdentity: return LayerSpec::identity();
    case LayerKind::kFc: break;
  }
  throw InvalidArgument("not a cell operation: " + std::string(to_string(op)));
}

CostTable measure_op_costs(std::span<const LayerKind> ops, const ActShape& shape, int kernels, int repeats,
                           std::uint64_t seed) {
  if (repeats < 1) throw InvalidArgument("repeats must be at least 1");
  if (kernels < 1 || shape.size() == 0) throw InvalidArgument("reference shape and kernel count must be positive");
  CostTable table;
  table.shape = shape;
  table.kernels = kernels;
  std::mt19937_64 rng(seed);
  for (auto op : ops) {
    const auto layer = op_layer(op, kernels);
    const auto ws = layer_weight_shape(layer, shape);
    const std::vector<std::uint8_t> mask(shape_size(ws), 1);
    const std::vector<std::int32_t> thresholds(has_weights(op) ? static_cast<std::size_t>(kernels) : 0, 0);
    const Netlist n = compile_layer(layer, shape, mask, thresholds);
    std::vector<std::uint8_t> client(n.client_inputs.size()), server(n.server_inputs.size());
    for (auto& b : client) b = static_cast<std::uint8_t>(rng() & 1);
    for (auto& b : server) b = static_cast<std::uint8_t>(rng() & 1);

    OpCost c;
    c.op = op;
    c.non_xor = count_gates(n).non_xor;
    double best = INFINITY;
    for (int r = 0; r < repeats; ++r) {
      std::size_t bytes = 0;
      best = std::min(best, loopback_run(n, client, server, seed + static_cast<std::uint64_t>(r), bytes));
      c.table_bytes = bytes;
    }
    // An op without gates costs nothing; socket setup is not part of it.
    c.runtime_ms = c.non_xor == 0 && n.gates.empty() ? 0.0 : best * 1e3;
    c.comm_kb = static_cast<double>(c.table_bytes) / 1000.0;
    table.ops.push_back(c);
  }
  apply_penalties(table);
  return table;
}

std::vector<double> penalty_factors(std::span<const double> runtime, std::span<const double> comm) {
  if (runtime.size() != comm.size()) throw InvalidArgument("runtime and communication columns differ in length");
  double max_rt = 0, max_comm = 0;
  for (std::size_t i = 0; i < runtime.size(); ++i) {
    if (runtime[i] < 0 || comm[i] < 0 || !std::isfinite(runtime[i]) || !std::isfinite(comm[i])) {
      throw InvalidArgument("costs must be finite and non-negative");
    }
    max_rt = std::max(max_rt, runtime[i]);
    max_comm = std::max(max_comm, comm[i]);
  }
  if (max_rt == 0 && max_comm == 0) throw InvalidArgument("penalty factors need at least one op with a positive cost");
  std::vector<double> g(runtime.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = max_rt > 0 ? runtime[i] / max_rt : 0.0;
    const double m = max_comm > 0 ? comm[i] / max_comm : 0.0;
    g[i] = 0.5 * (r + m);
  }
  return g;
}

void apply_penalties(CostTable& table) {
  std::vector<double> rt, comm;
  for (const auto& c : table.ops) {
    rt.push_back(c.runtime_ms);
    comm.push_back(c.comm_kb);
  }
  const auto g = penalty_factors(rt, comm);
  for (std::size_t i = 0; i < g.size(); ++i) table.ops[i].gamma = g[i];
}

CostTable reference_cost_table() {
  CostTable t;
  t.ops = {{LayerKind::kConv5x5, 55.40, 7942, 0, 0, 0},
           {LayerKind::kConv3x3, 23.10, 3190, 0, 0, 0},
           {LayerKind::kMaxPool2x2, 3.23, 145, 0, 0, 0},
           {LayerKind::kIdentity, 0.0, 0.0, 0, 0, 0}};
  apply_penalties(t);
  return t;
}

RegularizedScores regularized_scores(std::span<const double> alpha, double lambda, std::span<const double> gamma) {
  if (alpha.size() != gamma.size()) throw InvalidArgument("score and penalty vectors differ in length");
  if (!(lambda >= 0 && lambda <= 1)) throw InvalidArgument("lambda must lie in [0, 1]");
  RegularizedScores r;
  r.adjusted.resize(alpha.size());
  r.probs.resize(alpha.size());
  if (alpha.empty()) return r;
  for (std::size_t i = 0; i < alpha.size(); ++i) r.adjusted[i] = alpha[i] * (1.0 - lambda * gamma[i]);
  const double mx = *std::max_element(r.adjusted.begin(), r.adjusted.end());
  double z = 0;
  for (std::size_t i = 0; i < alpha.size(); ++i) z += (r.probs[i] = std::exp(r.adjusted[i] - mx));
  for (auto& p : r.probs) p /= z;
  return r;
}

void write_cost_table(std::ostream& out, const CostTable& table) {
  out << "# shape " << table.shape.h << ' ' << table.shape.w << ' ' << table.shape.c << " kernels " << table.kernels
      << '\n';
  out << "op\truntime_ms\tcomm_kb\tnon_xor\ttable_bytes\tgamma\n";
  for (const auto& c : table.ops) {
    std::ostringstream line;
    line.precision(6);
    line << std::fixed << to_string(c.op) << '\t' << c.runtime_ms << '\t' << c.comm_kb << '\t' << c.non_xor << '\t'
         << c.table_bytes << '\t' << c.gamma;
    out << line.str() << '\n';
  }
}

CostTable read_cost_table(std::istream& in) {
  CostTable t;
  std::string line;
  bool header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string word, k;
      if (ls >> word && word == "shape") ls >> t.shape.h >> t.shape.w >> t.shape.c >> k >> t.kernels;
      continue;
    }
    if (!header) {
      header = true;
      if (line.rfind("op\t", 0) == 0) continue;
    }
    std::istringstream ls(line);
    std::string op;
    OpCost c;
    if (!(ls >> op >> c.runtime_ms >> c.comm_kb >> c.non_xor >> c.table_bytes)) {
      throw FormatError("cost table line " + std::to_string(lineno) + ": expected op, runtime, comm, non_xor, bytes");
    }
    c.op = parse_layer_kind(op);
    t.ops.push_back(c);
  }
  if (t.ops.empty()) throw FormatError("cost table is empty");
  // Penalties are always recomputed from the raw columns.
  apply_penalties(t);
  return t;
}

}  // namespace tgc
