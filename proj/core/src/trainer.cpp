#include "tgc/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>
#include <thread>

#include <nlohmann/json.hpp>

#include "nn.hpp"
#include "tgc/errors.hpp"

namespace tgc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Accuracy of the float graph; equal to evaluate() on the exported params
// because every hidden pre-activation is an integer.
double graph_accuracy(nn::Network& net, const Dataset& data) {
  if (data.size() == 0) return 0;
  constexpr std::size_t kChunk = 500;
  std::size_t correct = 0;
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < data.size(); start += kChunk) {
    const std::size_t end = std::min(data.size(), start + kChunk);
    rows.resize(end - start);
    for (std::size_t i = start; i < end; ++i) rows[i - start] = i;
    const auto x = nn::to_signed_batch(data.bits, rows, data.shape.size());
    const auto& s = net.forward(x);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (nn::argmax_lowest_row(s, static_cast<Eigen::Index>(r)) == data.labels[start + r]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd") return OptimizerKind::kSgd;
  throw InvalidArgument("unknown optimizer '" + name + "' (expected adam or sgd)");
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::kAdam ? "adam" : "sgd"; }

void validate_config(const TrainConfig& cfg) {
  if (cfg.batch_size == 0) throw InvalidArgument("batch size must be positive");
  if (!(cfg.learning_rate > 0) || !std::isfinite(cfg.learning_rate)) throw InvalidArgument("learning rate must be positive");
  if (!(cfg.scale > 0)) throw InvalidArgument("scaling factor must be positive");
  if (cfg.max_seconds < 0) throw InvalidArgument("max_seconds must not be negative");
}

TrainResult train(const Architecture& arch, const TrainConfig& cfg, const Dataset& train_set, const Dataset& val_set) {
  validate_config(cfg);
  validate_architecture(arch);
  if (train_set.shape != arch.input) throw ShapeError("training images do not match the architecture input");
  if (val_set.size() > 0 && val_set.shape != arch.input) throw ShapeError("validation images do not match the architecture input");
  if (cfg.epochs > 0 && train_set.size() == 0) throw InvalidArgument("training set is empty");

  nn::Rng rng(cfg.seed);
  nn::Network net(arch, cfg.learn_thresholds, rng);
  std::unique_ptr<nn::Optimizer> opt;
  const auto lr = static_cast<float>(cfg.learning_rate);
  if (cfg.optimizer == OptimizerKind::kAdam) opt = std::make_unique<nn::Adam>(net.params(), lr);
  else opt = std::make_unique<nn::Sgd>(net.params(), lr);

  TrainResult result;
  result.params = net.export_params();
  if (cfg.epochs == 0) return result;

  const auto t_start = Clock::now();
  const std::size_t width = train_set.shape.size();
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<std::uint8_t> labels;
  std::vector<std::size_t> rows;
  bool have_best = false;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t_epoch = Clock::now();
    if (cfg.cosine_lr) {
      const double frac = static_cast<double>(epoch - 1) / static_cast<double>(cfg.epochs);
      opt->set_lr(static_cast<float>(cfg.learning_rate * 0.5 * (1 + std::cos(std::numbers::pi * frac))));
    }
    nn::shuffle(order, rng);
    double loss_sum = 0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      rows.assign(order.begin() + static_cast<long>(start), order.begin() + static_cast<long>(end));
      labels.resize(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = train_set.labels[rows[i]];
      const auto x = nn::to_signed_batch(train_set.bits, rows, width);
      opt->zero_grad();
      net.forward(x);
      const double loss = net.backward(x, labels);
      if (!std::isfinite(loss)) throw Error("training diverged in epoch " + std::to_string(epoch) + " (loss is not finite)");
      opt->step();
      loss_sum += loss;
      ++batches;
    }
    for (const auto& p : net.params()) {
      if (!p.value->allFinite()) {
        throw Error("training diverged in epoch " + std::to_string(epoch) + " (a parameter is not finite)");
      }
    }
    EpochLog e;
    e.epoch = epoch;
    e.loss = loss_sum / static_cast<double>(batches);
    e.val_acc = graph_accuracy(net, val_set);
    auto params = net.export_params();
    e.sparsity = sparsity(params);
    e.seconds = seconds_since(t_epoch);
    result.log.push_back(e);
    if (cfg.on_epoch) cfg.on_epoch(e);
    // Without a validation split the latest epoch wins.
    if (!have_best || e.val_acc > result.best_val_acc || val_set.size() == 0) {
      have_best = true;
      result.best_val_acc = e.val_acc;
      result.best_epoch = epoch;
      result.params = std::move(params);
    }
    if (cfg.max_seconds > 0 && seconds_since(t_start) >= cfg.max_seconds && epoch < cfg.epochs) {
      result.stopped_early = true;
      break;
    }
  }
  return result;
}

TrainResult train(const Architecture& arch, const TrainConfig& cfg, const Dataset& full) {
  const std::size_t hold = std::min(cfg.validation, full.size() / 2);
  auto [tr, val] = split_tail(full, hold);
  if (cfg.train_limit > 0) tr = take_first(tr, cfg.train_limit);
  return train(arch, cfg, tr, val);
}

double evaluate(const Architecture& arch, const ModelParams& params, const Dataset& data) {
  validate_params(arch, params);
  if (data.size() == 0) return 0;
  if (data.shape != arch.input) throw ShapeError("dataset images do not match the architecture input");
  // predict is pure, so examples are split across threads; the count does
  // not depend on the split.
  const std::size_t threads = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 16);
  std::atomic<std::size_t> correct{0};
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    std::size_t mine = 0;
    for (std::size_t i; (i = next.fetch_add(1)) < data.size();) {
      if (predict(arch, params, data.tensor(i)).label == data.labels[i]) ++mine;
    }
    correct += mine;
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return static_cast<double>(correct.load()) / static_cast<double>(data.size());
}

double sparsity(const ModelParams& params) {
  std::size_t zeros = 0, total = 0;
  for (const auto& l : params.layers) {
    for (auto w : l.weights.values()) zeros += w == 0 ? 1 : 0;
    total += l.weights.size();
  }
  return total == 0 ? 0.0 : static_cast<double>(zeros) / static_cast<double>(total);
}

void write_log_line(std::ostream& out, const EpochLog& e) {
  nlohmann::ordered_json j;
  j["epoch"] = e.epoch;
  j["loss"] = e.loss;
  j["val_acc"] = e.val_acc;
  j["sparsity"] = e.sparsity;
  j["seconds"] = e.seconds;
  out << j.dump() << '\n';
}

}  // namespace tgc
