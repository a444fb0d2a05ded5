#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "tgc/architecture.hpp"
#include "tgc/cost_model.hpp"
#include "tgc/dataset.hpp"

namespace tgc {

struct SearchEpochLog {
  std::size_t epoch = 0;
  double train_loss = 0;
  double val_loss = 0;
  double val_acc = 0;  // of the mixed network
  double seconds = 0;
};

struct SearchConfig {
  DatasetId dataset = DatasetId::kMnist;
  int cells = 1;
  int positions = 4;  // sequential operations per cell
  double lambda = 0;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  double scale = 1.0;  // channel multiplier during the search
  std::size_t batch_size = 100;
  double weight_lr = 1e-3;
  double arch_lr = 3e-3;
  std::size_t train_limit = 10000;  // 0 = every training example
  std::size_t validation = 5000;    // tail of the training set, used for the scores
  double max_seconds = 0;           // 0 = no wall-clock limit
  std::function<void(const SearchEpochLog&)> on_epoch;
};

struct SearchPosition {
  int cell = 0;
  LayerKind op = LayerKind::kIdentity;
  std::vector<LayerKind> ops;   // candidates, search_ops() order
  std::vector<double> alpha;    // softplus(raw) >= 0
  std::vector<double> adjusted; // alpha * (1 - lambda * gamma)
  std::vector<double> probs;
};

struct SearchResult {
  Architecture arch;  // discretized, at the search scale
  double lambda = 0;
  std::vector<double> gamma;
  std::vector<SearchPosition> positions;
  std::vector<SearchEpochLog> log;
  double penalty_sum = 0;  // sum of gamma over the chosen ops
  std::size_t params = 0;  // count_params(arch)
  bool budget_exhausted = false;
  std::string warning;
};

/// Kernels per conv in cell `cell`: 16 for MNIST; 16, 32, 64, ... for
/// CIFAR10; times `scale`.
int cell_channels(DatasetId dataset, int cell, double scale);

/// Index of the best adjusted score; ties go to the lower penalty, then
/// the earlier candidate.
std::size_t select_op(std::span<const double> adjusted, std::span<const double> gamma);

/// Architecture from chosen ops (cells * positions entries). Maxpool uses
/// stride 2; one applied to a map narrower than 2 is replaced by identity.
/// MNIST adds an FC(100 * scale) layer before the FC(10) classifier.
Architecture discretize(DatasetId dataset, const std::vector<LayerKind>& ops, int positions, double scale,
                        const std::string& name);

/// Differentiable search over sequential cells. Weights are updated on
/// `train_set` batches and scores on `val_set` batches, alternately.
SearchResult search(const SearchConfig& cfg, const CostTable& costs, const Dataset& train_set, const Dataset& val_set);

/// Splits cfg.validation off the end of `full`, applies train_limit.
SearchResult search(const SearchConfig& cfg, const CostTable& costs, const Dataset& full);

/// Text report: one line per position with the scores, then totals.
void write_search_report(std::ostream& out, const SearchResult& r);

}  // namespace tgc
