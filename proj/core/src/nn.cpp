#include "nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "tgc/errors.hpp"

namespace tgc::nn {

namespace {

float softplus(float x) { return x > 20 ? x : std::log1p(std::exp(x)); }
float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

}  // namespace

// ---------------------------------------------------------------- ternary

TernaryLayer::TernaryLayer(const LayerSpec& spec, const ActShape& in, bool hidden, bool learn_thresholds, Rng& rng)
    : spec_(spec), in_(in), out_(layer_output_shape(spec, in)), hidden_(hidden), learn_thresholds_(learn_thresholds) {
  if (!has_weights(spec.kind)) throw InvalidArgument("TernaryLayer needs a CONV or FC layer");
  const auto units = static_cast<std::size_t>(spec.units);
  patch_ = spec.kind == LayerKind::kFc ? in.size() : static_cast<std::size_t>(kernel_size(spec.kind) * kernel_size(spec.kind)) * in.c;
  inv_sqrt_fan_ = 1.0f / std::sqrt(static_cast<float>(patch_));
  // Uniform over the whole clip range.
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  w_.resize(static_cast<Eigen::Index>(units), static_cast<Eigen::Index>(patch_));
  for (Eigen::Index i = 0; i < w_.size(); ++i) w_.data()[i] = u(rng);
  gw_ = Mat::Zero(w_.rows(), w_.cols());
  theta_ = Mat::Zero(1, static_cast<Eigen::Index>(units));
  gtheta_ = Mat::Zero(1, static_cast<Eigen::Index>(units));
}

void TernaryLayer::quantize() {
  // Same rule and precision as tgc::ternarize, so exported params match.
  const double delta = ternary_threshold(std::span<const float>(w_.data(), static_cast<std::size_t>(w_.size())));
  wq_.resize(w_.rows(), w_.cols());
  for (Eigen::Index i = 0; i < w_.size(); ++i) {
    const double w = w_.data()[i];
    wq_.data()[i] = w > delta ? 1.0f : (w < -delta ? -1.0f : 0.0f);
  }
}

void TernaryLayer::im2col(const float* x, Mat& cols) const {
  const long k = kernel_size(spec_.kind);
  const long pad = spec_.padding;
  const std::size_t c = in_.c;
  cols.resize(static_cast<Eigen::Index>(out_.h * out_.w), static_cast<Eigen::Index>(patch_));
  for (std::size_t oy = 0; oy < out_.h; ++oy) {
    for (std::size_t ox = 0; ox < out_.w; ++ox) {
      float* row = cols.data() + (oy * out_.w + ox) * patch_;
      for (long ky = 0; ky < k; ++ky) {
        const long iy = static_cast<long>(oy) + ky - pad;
        for (long kx = 0; kx < k; ++kx, row += c) {
          const long ix = static_cast<long>(ox) + kx - pad;
          if (iy < 0 || ix < 0 || iy >= static_cast<long>(in_.h) || ix >= static_cast<long>(in_.w)) {
            std::memset(row, 0, c * sizeof(float));
          } else {
            std::memcpy(row, x + (static_cast<std::size_t>(iy) * in_.w + static_cast<std::size_t>(ix)) * c,
                        c * sizeof(float));
          }
        }
      }
    }
  }
}

void TernaryLayer::col2im(const Mat& cols, float* dx) const {
  const long k = kernel_size(spec_.kind);
  const long pad = spec_.padding;
  const std::size_t c = in_.c;
  for (std::size_t oy = 0; oy < out_.h; ++oy) {
    for (std::size_t ox = 0; ox < out_.w; ++ox) {
      const float* row = cols.data() + (oy * out_.w + ox) * patch_;
      for (long ky = 0; ky < k; ++ky) {
        const long iy = static_cast<long>(oy) + ky - pad;
        for (long kx = 0; kx < k; ++kx, row += c) {
          const long ix = static_cast<long>(ox) + kx - pad;
          if (iy < 0 || ix < 0 || iy >= static_cast<long>(in_.h) || ix >= static_cast<long>(in_.w)) continue;
          float* dst = dx + (static_cast<std::size_t>(iy) * in_.w + static_cast<std::size_t>(ix)) * c;
          for (std::size_t j = 0; j < c; ++j) dst[j] += row[j];
        }
      }
    }
  }
}

void TernaryLayer::forward(const Mat& x, Mat& y) {
  quantize();
  const auto units = static_cast<Eigen::Index>(spec_.units);
  const Eigen::Index batch = x.rows();
  if (spec_.kind == LayerKind::kFc) {
    pre_.noalias() = x * wq_.transpose();
  } else {
    const auto positions = static_cast<Eigen::Index>(out_.h * out_.w);
    pre_.resize(batch, positions * units);
    Mat cols;
    for (Eigen::Index b = 0; b < batch; ++b) {
      im2col(x.row(b).data(), cols);
      Eigen::Map<Mat> out(pre_.row(b).data(), positions, units);
      out.noalias() = cols * wq_.transpose();
    }
  }
  if (!hidden_) {
    y = pre_;
    return;
  }
  y.resize(pre_.rows(), pre_.cols());
  const std::size_t per_row = static_cast<std::size_t>(pre_.cols());
  for (Eigen::Index b = 0; b < batch; ++b) {
    const float* p = pre_.row(b).data();
    float* o = y.row(b).data();
    for (std::size_t i = 0; i < per_row; ++i) o[i] = p[i] - theta_(0, static_cast<Eigen::Index>(i % spec_.units)) >= 0 ? 1.0f : -1.0f;
  }
}

void TernaryLayer::backward(const Mat& x, const Mat& dy, Mat* dx) {
  const auto units = static_cast<Eigen::Index>(spec_.units);
  const Eigen::Index batch = x.rows();
  Mat d;
  if (hidden_) {
    // Sign STE: pass the gradient where |(a - theta) / sqrt(fan_in)| <= 1.
    d.resize(dy.rows(), dy.cols());
    const std::size_t per_row = static_cast<std::size_t>(dy.cols());
    for (Eigen::Index b = 0; b < batch; ++b) {
      const float* p = pre_.row(b).data();
      const float* g = dy.row(b).data();
      float* o = d.row(b).data();
      for (std::size_t i = 0; i < per_row; ++i) {
        const auto u = static_cast<Eigen::Index>(i % spec_.units);
        const float z = (p[i] - theta_(0, u)) * inv_sqrt_fan_;
        o[i] = std::fabs(z) <= 1.0f ? g[i] * inv_sqrt_fan_ : 0.0f;
        if (learn_thresholds_) gtheta_(0, u) -= o[i];
      }
    }
  }
  const Mat& dpre = hidden_ ? d : dy;
  if (spec_.kind == LayerKind::kFc) {
    gw_.noalias() += dpre.transpose() * x;
    if (dx) dx->noalias() = dpre * wq_;
    return;
  }
  const auto positions = static_cast<Eigen::Index>(out_.h * out_.w);
  if (dx) *dx = Mat::Zero(batch, x.cols());
  Mat cols, dcols;
  for (Eigen::Index b = 0; b < batch; ++b) {
    im2col(x.row(b).data(), cols);
    Eigen::Map<const Mat> g(dpre.row(b).data(), positions, units);
    gw_.noalias() += g.transpose() * cols;
    if (dx) {
      dcols.noalias() = g * wq_;
      col2im(dcols, dx->row(b).data());
    }
  }
}

std::vector<Param> TernaryLayer::params() {
  std::vector<Param> p{{&w_, &gw_, true}};
  if (hidden_ && learn_thresholds_) p.push_back({&theta_, &gtheta_, false});
  return p;
}

LayerParams TernaryLayer::export_params() const {
  LayerParams p;
  std::vector<float> latent(w_.data(), w_.data() + w_.size());
  p.weights = ternarize(latent, layer_weight_shape(spec_, in_));
  if (hidden_) {
    p.thresholds.resize(static_cast<std::size_t>(spec_.units));
    // a - theta >= 0 over integers a is a >= ceil(theta).
    for (std::size_t i = 0; i < p.thresholds.size(); ++i) {
      p.thresholds[i] = static_cast<std::int32_t>(std::ceil(theta_(0, static_cast<Eigen::Index>(i))));
    }
  }
  return p;
}

void TernaryLayer::import_params(const LayerParams& p) {
  const auto v = p.weights.values();
  if (v.size() != static_cast<std::size_t>(w_.size())) throw ShapeError("imported weights have the wrong size");
  // Latent weights that ternarize back to the same values: with every
  // nonzero at magnitude 1, delta = 0.7 * density < 1.
  for (std::size_t i = 0; i < v.size(); ++i) w_.data()[i] = static_cast<float>(v[i]);
  if (hidden_) {
    for (std::size_t i = 0; i < p.thresholds.size(); ++i) theta_(0, static_cast<Eigen::Index>(i)) = static_cast<float>(p.thresholds[i]);
  }
}

// ---------------------------------------------------------------- pooling

MaxPool::MaxPool(const ActShape& in, int stride) : in_(in), stride_(stride) {
  if (stride != 1 && stride != 2) throw InvalidArgument("maxpool stride must be 1 or 2");
  out_ = stride == 2 ? ActShape{in.h / 2, in.w / 2, in.c} : in;
}

void MaxPool::forward(const Mat& x, Mat& y) {
  const std::size_t osz = out_.size();
  y.resize(x.rows(), static_cast<Eigen::Index>(osz));
  argmax_.resize(static_cast<std::size_t>(x.rows()) * osz);
  for (Eigen::Index b = 0; b < x.rows(); ++b) {
    const float* xi = x.row(b).data();
    float* yo = y.row(b).data();
    std::uint32_t* am = argmax_.data() + static_cast<std::size_t>(b) * osz;
    for (std::size_t oy = 0; oy < out_.h; ++oy) {
      for (std::size_t ox = 0; ox < out_.w; ++ox) {
        const std::size_t y0 = oy * static_cast<std::size_t>(stride_);
        const std::size_t x0 = ox * static_cast<std::size_t>(stride_);
        const std::size_t y1 = std::min(y0 + 1, in_.h - 1);
        const std::size_t x1 = std::min(x0 + 1, in_.w - 1);
        for (std::size_t c = 0; c < in_.c; ++c) {
          std::size_t best = (y0 * in_.w + x0) * in_.c + c;
          for (std::size_t yy = y0; yy <= y1; ++yy) {
            for (std::size_t xx = x0; xx <= x1; ++xx) {
              const std::size_t idx = (yy * in_.w + xx) * in_.c + c;
              if (xi[idx] > xi[best]) best = idx;
            }
          }
          const std::size_t o = (oy * out_.w + ox) * in_.c + c;
          yo[o] = xi[best];
          am[o] = static_cast<std::uint32_t>(best);
        }
      }
    }
  }
}

void MaxPool::backward(const Mat& x, const Mat& dy, Mat* dx) {
  if (!dx) return;
  *dx = Mat::Zero(x.rows(), x.cols());
  const std::size_t osz = out_.size();
  for (Eigen::Index b = 0; b < x.rows(); ++b) {
    const float* g = dy.row(b).data();
    float* d = dx->row(b).data();
    const std::uint32_t* am = argmax_.data() + static_cast<std::size_t>(b) * osz;
    for (std::size_t o = 0; o < osz; ++o) d[am[o]] += g[o];
  }
}

BlockUpsample::BlockUpsample(const ActShape& in, const ActShape& out) : in_(in), out_(out) {
  if (out.c != in.c || out.h < 2 * in.h || out.w < 2 * in.w) throw InvalidArgument("BlockUpsample shapes do not fit");
}

void BlockUpsample::forward(const Mat& x, Mat& y) {
  y = Mat::Zero(x.rows(), static_cast<Eigen::Index>(out_.size()));
  for (Eigen::Index b = 0; b < x.rows(); ++b) {
    const float* xi = x.row(b).data();
    float* yo = y.row(b).data();
    for (std::size_t oy = 0; oy < 2 * in_.h; ++oy) {
      for (std::size_t ox = 0; ox < 2 * in_.w; ++ox) {
        const float* src = xi + ((oy / 2) * in_.w + ox / 2) * in_.c;
        std::copy_n(src, in_.c, yo + (oy * out_.w + ox) * out_.c);
      }
    }
  }
}

void BlockUpsample::backward(const Mat& x, const Mat& dy, Mat* dx) {
  if (!dx) return;
  *dx = Mat::Zero(x.rows(), x.cols());
  for (Eigen::Index b = 0; b < x.rows(); ++b) {
    const float* g = dy.row(b).data();
    float* d = dx->row(b).data();
    for (std::size_t oy = 0; oy < 2 * in_.h; ++oy) {
      for (std::size_t ox = 0; ox < 2 * in_.w; ++ox) {
        const float* src = g + (oy * out_.w + ox) * out_.c;
        float* dst = d + ((oy / 2) * in_.w + ox / 2) * in_.c;
        for (std::size_t c = 0; c < in_.c; ++c) dst[c] += src[c];
      }
    }
  }
}

ChannelTile::ChannelTile(const ActShape& in, std::size_t channels) : in_(in), out_{in.h, in.w, channels} {}

void ChannelTile::forward(const Mat& x, Mat& y) {
  if (out_.c == in_.c) {
    y = x;
    return;
  }
  y.resize(x.rows(), static_cast<Eigen::Index>(out_.size()));
  for (Eigen::Index b = 0; b < x.rows(); ++b) {
    const float* xi = x.row(b).data();
    float* yo = y.row(b).data();
    for (std::size_t p = 0; p < in_.h * in_.w; ++p) {
      for (std::size_t c = 0; c < out_.c; ++c) yo[p * out_.c + c] = xi[p * in_.c + c % in_.c];
    }
  }
}

void ChannelTile::backward(const Mat& x, const Mat& dy, Mat* dx) {
  if (!dx) return;
  if (out_.c == in_.c) {
    *dx = dy;
    return;
  }
  *dx = Mat::Zero(x.rows(), x.cols());
  for (Eigen::Index b = 0; b < x.rows(); ++b) {
    const float* g = dy.row(b).data();
    float* d = dx->row(b).data();
    for (std::size_t p = 0; p < in_.h * in_.w; ++p) {
      for (std::size_t c = 0; c < out_.c; ++c) d[p * in_.c + c % in_.c] += g[p * out_.c + c];
    }
  }
}

// ------------------------------------------------------------- composites

void Sequential::add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

void Sequential::forward(const Mat& x, Mat& y) {
  acts_.resize(layers_.size());
  const Mat* in = &x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->forward(*in, acts_[i]);
    in = &acts_[i];
  }
  y = *in;
}

void Sequential::backward(const Mat& x, const Mat& dy, Mat* dx) {
  Mat grad = dy, next;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const Mat& in = i == 0 ? x : acts_[i - 1];
    const bool need = i > 0 || dx != nullptr;
    layers_[i]->backward(in, grad, need ? &next : nullptr);
    if (need) std::swap(grad, next);
  }
  if (dx) *dx = std::move(grad);
}

std::vector<Param> Sequential::params() {
  std::vector<Param> out;
  for (auto& l : layers_) {
    auto p = l->params();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

MixedOp::MixedOp(std::vector<std::unique_ptr<Layer>> candidates, std::vector<float> gamma, float lambda)
    : candidates_(std::move(candidates)), gamma_(std::move(gamma)), lambda_(lambda) {
  if (candidates_.empty() || gamma_.size() != candidates_.size()) throw InvalidArgument("mixed op needs one gamma per candidate");
  for (auto& c : candidates_) {
    if (!(c->out_shape() == candidates_.front()->out_shape())) throw ShapeError("mixed op candidates disagree on shape");
  }
  // Equal raw scores: a uniform mixture before any update.
  raw_ = Mat::Zero(1, static_cast<Eigen::Index>(candidates_.size()));
  graw_ = Mat::Zero(1, raw_.cols());
}

std::vector<float> MixedOp::alphas() const {
  std::vector<float> a(candidates_.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = softplus(raw_(0, static_cast<Eigen::Index>(i)));
  return a;
}

std::vector<float> MixedOp::scores() const {
  std::vector<float> s(candidates_.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = softplus(raw_(0, static_cast<Eigen::Index>(i))) * (1.0f - lambda_ * gamma_[i]);
  }
  return s;
}

std::vector<float> MixedOp::probabilities() const {
  auto s = scores();
  const float mx = *std::max_element(s.begin(), s.end());
  float z = 0;
  for (auto& v : s) z += (v = std::exp(v - mx));
  for (auto& v : s) v /= z;
  return s;
}

void MixedOp::forward(const Mat& x, Mat& y) {
  probs_ = probabilities();
  outs_.resize(candidates_.size());
  for (std::size_t i = 0; i < candidates_.size(); ++i) candidates_[i]->forward(x, outs_[i]);
  y = probs_[0] * outs_[0];
  for (std::size_t i = 1; i < candidates_.size(); ++i) y += probs_[i] * outs_[i];
}

void MixedOp::backward(const Mat& x, const Mat& dy, Mat* dx) {
  const std::size_t n = candidates_.size();
  std::vector<float> dp(n);
  for (std::size_t i = 0; i < n; ++i) dp[i] = dy.cwiseProduct(outs_[i]).sum();
  float dot = 0;
  for (std::size_t i = 0; i < n; ++i) dot += probs_[i] * dp[i];
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const float dscore = probs_[i] * (dp[i] - dot);
    graw_(0, ii) += dscore * sigmoid(raw_(0, ii)) * (1.0f - lambda_ * gamma_[i]);
  }
  if (dx) *dx = Mat::Zero(x.rows(), x.cols());
  Mat g, dxi;
  for (std::size_t i = 0; i < n; ++i) {
    g = probs_[i] * dy;
    candidates_[i]->backward(x, g, dx ? &dxi : nullptr);
    if (dx) *dx += dxi;
  }
}

std::vector<Param> MixedOp::params() {
  std::vector<Param> out;
  for (auto& c : candidates_) {
    auto p = c->params();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

// -------------------------------------------------------------- optimizer

Adam::Adam(std::vector<Param> params, float lr, float beta1, float beta2, float eps)
    : params_(std::move(params)), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
  for (auto& p : params_) {
    m_.push_back(Mat::Zero(p.value->rows(), p.value->cols()));
    v_.push_back(Mat::Zero(p.value->rows(), p.value->cols()));
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.grad->setZero();
}

void Adam::step() {
  ++t_;
  const float c1 = 1.0f - std::pow(b1_, static_cast<float>(t_));
  const float c2 = 1.0f - std::pow(b2_, static_cast<float>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = params_[k];
    float* w = p.value->data();
    const float* g = p.grad->data();
    float* m = m_[k].data();
    float* v = v_[k].data();
    const Eigen::Index n = p.value->size();
    for (Eigen::Index i = 0; i < n; ++i) {
      m[i] = b1_ * m[i] + (1 - b1_) * g[i];
      v[i] = b2_ * v[i] + (1 - b2_) * g[i] * g[i];
      w[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
      if (p.clip) w[i] = std::clamp(w[i], -1.0f, 1.0f);
    }
  }
}

Sgd::Sgd(std::vector<Param> params, float lr, float momentum) : params_(std::move(params)), lr_(lr), momentum_(momentum) {
  for (auto& p : params_) v_.push_back(Mat::Zero(p.value->rows(), p.value->cols()));
}

void Sgd::zero_grad() {
  for (auto& p : params_) p.grad->setZero();
}

void Sgd::step() {
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = params_[k];
    v_[k] = momentum_ * v_[k] + *p.grad;
    *p.value -= lr_ * v_[k];
    if (p.clip) *p.value = p.value->cwiseMax(-1.0f).cwiseMin(1.0f);
  }
}

double softmax_xent(const Mat& scores, std::span<const std::uint8_t> labels, float log_scale, Mat& dscores,
                    float& dlog_scale) {
  const float s = std::exp(log_scale);
  const Eigen::Index batch = scores.rows();
  const Eigen::Index k = scores.cols();
  dscores.resize(batch, k);
  double loss = 0;
  double dls = 0;
  std::vector<float> p(static_cast<std::size_t>(k));
  for (Eigen::Index b = 0; b < batch; ++b) {
    float mx = -INFINITY;
    for (Eigen::Index j = 0; j < k; ++j) mx = std::max(mx, s * scores(b, j));
    double z = 0;
    for (Eigen::Index j = 0; j < k; ++j) z += (p[static_cast<std::size_t>(j)] = std::exp(s * scores(b, j) - mx));
    const auto y = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(b)]);
    loss += -(s * scores(b, y) - mx - std::log(z));
    for (Eigen::Index j = 0; j < k; ++j) {
      const double g = p[static_cast<std::size_t>(j)] / z - (j == y ? 1.0 : 0.0);
      dscores(b, j) = static_cast<float>(g * s / static_cast<double>(batch));
      dls += g * s * scores(b, j);
    }
  }
  dlog_scale = static_cast<float>(dls / static_cast<double>(batch));
  return loss / static_cast<double>(batch);
}

// ---------------------------------------------------------------- network

Network::Network(const Architecture& arch, bool learn_thresholds, Rng& rng) : arch_(arch), graph_(arch.input) {
  const auto shapes = validate_architecture(arch);
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const auto& spec = arch.layers[i];
    const bool last = i + 1 == arch.layers.size();
    switch (spec.kind) {
      case LayerKind::kMaxPool2x2:
        graph_.add(std::make_unique<MaxPool>(shapes[i], 2));
        weighted_.push_back(nullptr);
        break;
      case LayerKind::kIdentity:
        graph_.add(std::make_unique<ChannelTile>(shapes[i], shapes[i].c));
        weighted_.push_back(nullptr);
        break;
      default: {
        auto l = std::make_unique<TernaryLayer>(spec, shapes[i], !last, learn_thresholds, rng);
        weighted_.push_back(l.get());
        graph_.add(std::move(l));
      }
    }
  }
  const auto& last = arch.layers.back();
  const double fan = static_cast<double>(shapes[arch.layers.size() - 1].size());
  (void)last;
  log_scale_ = Mat::Constant(1, 1, static_cast<float>(-0.5 * std::log(fan)));
  glog_scale_ = Mat::Zero(1, 1);
}

const Mat& Network::forward(const Mat& x) {
  graph_.forward(x, scores_);
  return scores_;
}

double Network::backward(const Mat& x, std::span<const std::uint8_t> labels) {
  Mat dscores;
  float dls = 0;
  const double loss = softmax_xent(scores_, labels, log_scale_(0, 0), dscores, dls);
  glog_scale_(0, 0) += dls;
  graph_.backward(x, dscores, nullptr);
  return loss;
}

std::vector<Param> Network::params() {
  auto p = graph_.params();
  p.push_back({&log_scale_, &glog_scale_, false});
  return p;
}

ModelParams Network::export_params() const {
  ModelParams mp;
  for (auto* l : weighted_) mp.layers.push_back(l ? l->export_params() : LayerParams{});
  return mp;
}

void Network::import_params(const ModelParams& p) {
  validate_params(arch_, p);
  for (std::size_t i = 0; i < weighted_.size(); ++i) {
    if (weighted_[i]) weighted_[i]->import_params(p.layers[i]);
  }
}

Mat to_signed_batch(std::span<const std::uint8_t> bits, std::span<const std::size_t> rows, std::size_t width) {
  Mat x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::uint8_t* src = bits.data() + rows[r] * width;
    float* dst = x.row(static_cast<Eigen::Index>(r)).data();
    for (std::size_t j = 0; j < width; ++j) dst[j] = src[j] ? 1.0f : -1.0f;
  }
  return x;
}

std::size_t argmax_lowest_row(const Mat& scores, Eigen::Index row) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < scores.cols(); ++j) {
    if (scores(row, j) > scores(row, best)) best = j;
  }
  return static_cast<std::size_t>(best);
}

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace tgc::nn
