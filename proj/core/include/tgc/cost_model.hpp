#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "tgc/architecture.hpp"

namespace tgc {

struct OpCost {
  LayerKind op = LayerKind::kIdentity;
  double runtime_ms = 0;  // garble + transfer + evaluate
  double comm_kb = 0;     // garbled table bytes / 1000
  std::size_t non_xor = 0;
  std::size_t table_bytes = 0;
  double gamma = 0;
};

struct CostTable {
  ActShape shape;   // input volume each op was measured on
  int kernels = 0;  // output channels of the conv ops
  std::vector<OpCost> ops;

  const OpCost& at(LayerKind op) const;
  std::vector<double> gammas() const;
};

/// The candidate operations of the search, most expensive first.
std::vector<LayerKind> search_ops();

/// Builds the layer an op stands for: CONV5x5 pad 2 and CONV3x3 pad 1 with
/// `kernels` outputs, MAXPOOL2x2, IDENTITY.
LayerSpec op_layer(LayerKind op, int kernels);

/// Compiles each op as a dense single layer over `shape` (every weight
/// nonzero, thresholds 0), then garbles it on one end of a loopback TCP
/// connection and evaluates it on the other. Runtime is the best of
/// `repeats` runs; byte counts are exact. Penalties are filled in.
CostTable measure_op_costs(std::span<const LayerKind> ops, const ActShape& shape = {32, 32, 16}, int kernels = 16,
                           int repeats = 1, std::uint64_t seed = 1);

/// gamma(o) = (runtime(o) / max runtime + comm(o) / max comm) / 2. An axis
/// whose maximum is 0 contributes 0. Throws InvalidArgument when every
/// cost is zero or the spans differ in length.
std::vector<double> penalty_factors(std::span<const double> runtime, std::span<const double> comm);
void apply_penalties(CostTable& table);

/// Fixed costs: 55.40 ms / 7942 KB, 23.10 / 3190, 3.23 / 145, 0 / 0 for
/// CONV5x5, CONV3x3, MAXPOOL2x2, IDENTITY.
CostTable reference_cost_table();

struct RegularizedScores {
  std::vector<double> adjusted;  // alpha * (1 - lambda * gamma)
  std::vector<double> probs;     // softmax of adjusted
};

RegularizedScores regularized_scores(std::span<const double> alpha, double lambda, std::span<const double> gamma);

/// TSV: op, runtime_ms, comm_kb, non_xor, table_bytes, gamma, with a
/// header line and "# shape h w c kernels k" comment.
void write_cost_table(std::ostream& out, const CostTable& table);
CostTable read_cost_table(std::istream& in);

}  // namespace tgc
