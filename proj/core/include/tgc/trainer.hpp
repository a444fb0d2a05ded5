#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "tgc/architecture.hpp"
#include "tgc/dataset.hpp"
#include "tgc/model.hpp"

namespace tgc {

enum class OptimizerKind { kAdam, kSgd };

OptimizerKind parse_optimizer(const std::string& name);
std::string to_string(OptimizerKind kind);

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double loss = 0;        // mean training loss
  double val_acc = 0;
  double sparsity = 0;
  double seconds = 0;
};

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 100;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  std::uint64_t seed = 1;
  DatasetId dataset = DatasetId::kMnist;
  double scale = 1.0;
  std::size_t validation = 5000;  // tail of the training set held out
  std::size_t train_limit = 0;    // 0 = use every remaining example
  bool learn_thresholds = false;  // otherwise every threshold stays 0
  bool cosine_lr = false;         // decay the rate to 0 over the epochs, once per epoch
  double max_seconds = 0;         // 0 = no wall-clock limit
  std::function<void(const EpochLog&)> on_epoch;
};

/// Throws InvalidArgument unless all numeric fields are usable.
void validate_config(const TrainConfig& cfg);

struct TrainResult {
  ModelParams params;  // from the best validation epoch
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;  // 0 when no epoch ran
  double best_val_acc = 0;
  bool stopped_early = false;  // max_seconds reached
};

/// Trains `arch` with ternarized weights and sign activations; latent
/// weights receive straight-through gradients. With epochs == 0 the
/// ternarized random initialization is returned.
TrainResult train(const Architecture& arch, const TrainConfig& cfg, const Dataset& train_set,
                  const Dataset& val_set);

/// Splits cfg.validation examples off the end of `full`, then applies
/// cfg.train_limit, and trains.
TrainResult train(const Architecture& arch, const TrainConfig& cfg, const Dataset& full);

/// Fraction of examples whose predicted label matches.
double evaluate(const Architecture& arch, const ModelParams& params, const Dataset& data);

/// count(w == 0) / count(w) over every weighted layer.
double sparsity(const ModelParams& params);

/// One JSON object per line: {"epoch":..,"loss":..,"val_acc":..,"sparsity":..,"seconds":..}.
void write_log_line(std::ostream& out, const EpochLog& e);

}  // namespace tgc
