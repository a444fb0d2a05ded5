#include "tgc/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "nn.hpp"
#include "tgc/errors.hpp"

namespace tgc {

namespace {

using Clock = std::chrono::steady_clock;

// Candidates share one output shape: convs keep the spatial size ("same"
// padding), maxpool pools at stride 2 and copies each result back over its
// window (so the search sees the resolution it loses), and pool/identity
// tile channels up to the cell width.
std::unique_ptr<nn::Layer> make_candidate(LayerKind op, const ActShape& in, int channels, nn::Rng& rng) {
  switch (op) {
    case LayerKind::kConv5x5:
    case LayerKind::kConv3x3:
      return std::make_unique<nn::TernaryLayer>(op_layer(op, channels), in, true, false, rng);
    case LayerKind::kMaxPool2x2: {
      auto s = std::make_unique<nn::Sequential>(in);
      // Discretization turns a pool on a map narrower than 2 into identity.
      if (in.h >= 2 && in.w >= 2) {
        auto pool = std::make_unique<nn::MaxPool>(in, 2);
        const auto pooled = pool->out_shape();
        s->add(std::move(pool));
        s->add(std::make_unique<nn::BlockUpsample>(pooled, in));
      }
      s->add(std::make_unique<nn::ChannelTile>(in, static_cast<std::size_t>(channels)));
      return s;
    }
    case LayerKind::kIdentity:
      return std::make_unique<nn::ChannelTile>(in, static_cast<std::size_t>(channels));
    default:
      throw InvalidArgument("unsupported search op " + std::string(to_string(op)));
  }
}

class SuperNet {
 public:
  SuperNet(const SearchConfig& cfg, const ActShape& input, std::span<const double> gamma, nn::Rng& rng)
      : graph_(input) {
    const auto ops = search_ops();
    std::vector<float> g(gamma.begin(), gamma.end());
    ActShape shape = input;
    for (int c = 0; c < cfg.cells; ++c) {
      const int ch = cell_channels(cfg.dataset, c, cfg.scale);
      for (int p = 0; p < cfg.positions; ++p) {
        std::vector<std::unique_ptr<nn::Layer>> cands;
        for (auto op : ops) cands.push_back(make_candidate(op, shape, ch, rng));
        auto m = std::make_unique<nn::MixedOp>(std::move(cands), g, static_cast<float>(cfg.lambda));
        mixed_.push_back(m.get());
        shape = m->out_shape();
        graph_.add(std::move(m));
      }
    }
    if (cfg.dataset == DatasetId::kMnist) {
      const LayerSpec hidden = LayerSpec::fc(scale_units(100, cfg.scale));
      auto l = std::make_unique<nn::TernaryLayer>(hidden, shape, true, false, rng);
      shape = l->out_shape();
      graph_.add(std::move(l));
    }
    auto head = std::make_unique<nn::TernaryLayer>(LayerSpec::fc(10), shape, false, false, rng);
    log_scale_ = nn::Mat::Constant(1, 1, static_cast<float>(-0.5 * std::log(static_cast<double>(shape.size()))));
    glog_scale_ = nn::Mat::Zero(1, 1);
    graph_.add(std::move(head));
  }

  const nn::Mat& forward(const nn::Mat& x) {
    graph_.forward(x, scores_);
    return scores_;
  }

  double backward(const nn::Mat& x, std::span<const std::uint8_t> labels) {
    nn::Mat ds;
    float dls = 0;
    const double loss = nn::softmax_xent(scores_, labels, log_scale_(0, 0), ds, dls);
    glog_scale_(0, 0) += dls;
    graph_.backward(x, ds, nullptr);
    return loss;
  }

  std::vector<nn::Param> weight_params() {
    auto p = graph_.params();
    p.push_back({&log_scale_, &glog_scale_, false});
    return p;
  }

  std::vector<nn::Param> arch_params() {
    std::vector<nn::Param> p;
    for (auto* m : mixed_) p.push_back(m->arch_param());
    return p;
  }

  const std::vector<nn::MixedOp*>& mixed() const { return mixed_; }

 private:
  nn::Sequential graph_;
  std::vector<nn::MixedOp*> mixed_;
  nn::Mat scores_;
  nn::Mat log_scale_, glog_scale_;
};

void fill_batch(const Dataset& d, std::span<const std::size_t> rows, std::vector<std::uint8_t>& labels) {
  labels.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = d.labels[rows[i]];
}

}  // namespace

int cell_channels(DatasetId dataset, int cell, double scale) {
  const int base = dataset == DatasetId::kMnist ? 16 : 16 << std::min(cell, 8);
  return scale_units(base, scale);
}

std::size_t select_op(std::span<const double> adjusted, std::span<const double> gamma) {
  if (adjusted.empty() || adjusted.size() != gamma.size()) throw InvalidArgument("select_op: misaligned vectors");
  std::size_t best = 0;
  for (std::size_t i = 1; i < adjusted.size(); ++i) {
    if (adjusted[i] > adjusted[best] || (adjusted[i] == adjusted[best] && gamma[i] < gamma[best])) best = i;
  }
  return best;
}

Architecture discretize(DatasetId dataset, const std::vector<LayerKind>& ops, int positions, double scale,
                        const std::string& name) {
  if (positions < 1 || ops.size() % static_cast<std::size_t>(positions) != 0) {
    throw InvalidArgument("op count is not a whole number of cells");
  }
  Architecture a;
  a.name = name;
  a.input = dataset_input_shape(dataset);
  a.scaling_factor = 1.0;
  ActShape shape = a.input;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const int cell = static_cast<int>(i / static_cast<std::size_t>(positions));
    LayerSpec l = op_layer(ops[i], cell_channels(dataset, cell, scale));
    if (l.kind == LayerKind::kMaxPool2x2 && (shape.h < 2 || shape.w < 2)) l = LayerSpec::identity();
    shape = layer_output_shape(l, shape);
    a.layers.push_back(l);
  }
  if (dataset == DatasetId::kMnist) a.layers.push_back(LayerSpec::fc(scale_units(100, scale)));
  a.layers.push_back(LayerSpec::fc(10));
  validate_architecture(a);
  return a;
}

SearchResult search(const SearchConfig& cfg, const CostTable& costs, const Dataset& train_set, const Dataset& val_set) {
  if (!(cfg.lambda >= 0 && cfg.lambda <= 1)) throw InvalidArgument("lambda must lie in [0, 1]");
  if (cfg.cells < 1 || cfg.positions < 1) throw InvalidArgument("need at least one cell and one position");
  if (cfg.batch_size == 0 || !(cfg.scale > 0)) throw InvalidArgument("batch size and scale must be positive");
  const ActShape input = dataset_input_shape(cfg.dataset);
  if (train_set.shape != input || val_set.shape != input) throw ShapeError("dataset does not match the search input");
  if (train_set.size() == 0 || val_set.size() == 0) throw InvalidArgument("search needs training and validation examples");

  const auto ops = search_ops();
  std::vector<double> gamma;
  for (auto op : ops) gamma.push_back(costs.at(op).gamma);

  nn::Rng rng(cfg.seed);
  SuperNet net(cfg, input, gamma, rng);
  nn::Adam wopt(net.weight_params(), static_cast<float>(cfg.weight_lr));
  nn::Adam aopt(net.arch_params(), static_cast<float>(cfg.arch_lr), 0.5f, 0.999f);

  SearchResult r;
  r.lambda = cfg.lambda;
  r.gamma = gamma;
  const auto t_start = Clock::now();
  const std::size_t width = input.size();
  std::vector<std::size_t> order(train_set.size()), vorder(val_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = 0; i < vorder.size(); ++i) vorder[i] = i;
  std::vector<std::size_t> rows, vrows;
  std::vector<std::uint8_t> labels, vlabels;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t_epoch = Clock::now();
    nn::shuffle(order, rng);
    nn::shuffle(vorder, rng);
    double tl = 0, vl = 0;
    std::size_t steps = 0, vpos = 0, vcorrect = 0, vseen = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      rows.assign(order.begin() + static_cast<long>(start),
                  order.begin() + static_cast<long>(std::min(order.size(), start + cfg.batch_size)));
      fill_batch(train_set, rows, labels);
      const auto x = nn::to_signed_batch(train_set.bits, rows, width);
      wopt.zero_grad();
      net.forward(x);
      const double loss = net.backward(x, labels);
      if (!std::isfinite(loss)) throw Error("search diverged in epoch " + std::to_string(epoch));
      wopt.step();
      tl += loss;

      // Score step on the next validation batch (cycling).
      if (vpos >= vorder.size()) vpos = 0;
      vrows.assign(vorder.begin() + static_cast<long>(vpos),
                   vorder.begin() + static_cast<long>(std::min(vorder.size(), vpos + cfg.batch_size)));
      vpos += vrows.size();
      fill_batch(val_set, vrows, vlabels);
      const auto vx = nn::to_signed_batch(val_set.bits, vrows, width);
      aopt.zero_grad();
      const auto& s = net.forward(vx);
      for (std::size_t i = 0; i < vrows.size(); ++i) {
        if (nn::argmax_lowest_row(s, static_cast<Eigen::Index>(i)) == vlabels[i]) ++vcorrect;
      }
      vseen += vrows.size();
      vl += net.backward(vx, vlabels);
      aopt.step();
      ++steps;
    }
    SearchEpochLog e;
    e.epoch = epoch;
    e.train_loss = tl / static_cast<double>(steps);
    e.val_loss = vl / static_cast<double>(steps);
    e.val_acc = static_cast<double>(vcorrect) / static_cast<double>(vseen);
    e.seconds = std::chrono::duration<double>(Clock::now() - t_epoch).count();
    r.log.push_back(e);
    if (cfg.on_epoch) cfg.on_epoch(e);
    if (cfg.max_seconds > 0 && epoch < cfg.epochs &&
        std::chrono::duration<double>(Clock::now() - t_start).count() >= cfg.max_seconds) {
      r.budget_exhausted = true;
      r.warning = "time budget exhausted after " + std::to_string(epoch) + " of " + std::to_string(cfg.epochs) +
                  " epochs; returning the scores reached so far";
      break;
    }
  }

  std::vector<LayerKind> chosen;
  for (std::size_t i = 0; i < net.mixed().size(); ++i) {
    const auto* m = net.mixed()[i];
    SearchPosition p;
    p.cell = static_cast<int>(i / static_cast<std::size_t>(cfg.positions));
    p.ops = ops;
    const auto sc = m->scores();
    const auto pr = m->probabilities();
    const auto al = m->alphas();
    p.alpha.assign(al.begin(), al.end());
    p.adjusted.assign(sc.begin(), sc.end());
    p.probs.assign(pr.begin(), pr.end());
    p.op = ops[select_op(p.adjusted, gamma)];
    chosen.push_back(p.op);
    r.positions.push_back(std::move(p));
  }
  std::ostringstream name;
  name << "search-" << to_string(cfg.dataset) << "-l" << cfg.lambda;
  r.arch = discretize(cfg.dataset, chosen, cfg.positions, cfg.scale, name.str());
  for (auto op : chosen) r.penalty_sum += costs.at(op).gamma;
  r.params = count_params(r.arch);
  return r;
}

SearchResult search(const SearchConfig& cfg, const CostTable& costs, const Dataset& full) {
  const std::size_t hold = std::min(cfg.validation, full.size() / 2);
  auto [tr, val] = split_tail(full, hold);
  if (cfg.train_limit > 0) tr = take_first(tr, cfg.train_limit);
  return search(cfg, costs, tr, val);
}

void write_search_report(std::ostream& out, const SearchResult& r) {
  out << std::fixed << std::setprecision(4);
  out << "lambda\t" << r.lambda << '\n';
  out << "gamma";
  for (std::size_t k = 0; k < r.gamma.size(); ++k) {
    out << '\t' << (r.positions.empty() ? "?" : std::string(to_string(r.positions[0].ops[k]))) << '=' << r.gamma[k];
  }
  out << '\n';
  for (const auto& e : r.log) {
    out << "epoch\t" << e.epoch << "\ttrain_loss\t" << e.train_loss << "\tval_loss\t" << e.val_loss << "\tval_acc\t"
        << e.val_acc << "\tseconds\t" << e.seconds << '\n';
  }
  for (std::size_t i = 0; i < r.positions.size(); ++i) {
    const auto& p = r.positions[i];
    out << "position\t" << i << "\tcell\t" << p.cell << "\tselected\t" << to_string(p.op);
    for (std::size_t k = 0; k < p.ops.size(); ++k) {
      out << '\t' << to_string(p.ops[k]) << '=' << p.adjusted[k] << '/' << p.probs[k];
    }
    out << '\n';
  }
  out << "penalty_sum\t" << r.penalty_sum << '\n';
  out << "params\t" << r.params << '\n';
  if (r.budget_exhausted) out << "warning\t" << r.warning << '\n';
}

}  // namespace tgc
