#pragma once

// Float training graph for ternary-weight, binary-activation networks.
// Activations are batches of HWC rows; weights live as clipped latent
// floats and are ternarized on every forward pass.

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "tgc/architecture.hpp"
#include "tgc/model.hpp"

namespace tgc::nn {

using Mat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Rng = std::mt19937_64;

struct Param {
  Mat* value;
  Mat* grad;
  bool clip;  // latent weights stay in [-1, 1]
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual ActShape out_shape() const = 0;
  virtual void forward(const Mat& x, Mat& y) = 0;
  /// Accumulates parameter gradients; writes dx when non-null.
  virtual void backward(const Mat& x, const Mat& dy, Mat* dx) = 0;
  virtual std::vector<Param> params() { return {}; }
};

/// Ternary FC or convolution. Hidden layers apply the threshold and sign
/// activation; the final layer returns raw dot products.
class TernaryLayer final : public Layer {
 public:
  TernaryLayer(const LayerSpec& spec, const ActShape& in, bool hidden, bool learn_thresholds, Rng& rng);

  ActShape out_shape() const override { return out_; }
  void forward(const Mat& x, Mat& y) override;
  void backward(const Mat& x, const Mat& dy, Mat* dx) override;
  std::vector<Param> params() override;

  LayerParams export_params() const;
  void import_params(const LayerParams& p);
  const Mat& latent() const { return w_; }
  Mat& latent() { return w_; }

 private:
  void quantize();
  void im2col(const float* x, Mat& cols) const;
  void col2im(const Mat& cols, float* dx) const;

  LayerSpec spec_;
  ActShape in_, out_;
  bool hidden_;
  bool learn_thresholds_;
  std::size_t patch_;  // inputs per neuron
  float inv_sqrt_fan_;
  Mat w_, gw_;          // units x patch
  Mat theta_, gtheta_;  // 1 x units
  Mat wq_;              // ternarized weights of the current step
  Mat pre_;             // pre-activations of the current batch
};

/// 2x2 max over {-1,+1} values, equal to OR over bits. Stride 2 halves the
/// map; stride 1 keeps its size (windows clipped at the border).
class MaxPool final : public Layer {
 public:
  MaxPool(const ActShape& in, int stride);
  ActShape out_shape() const override { return out_; }
  void forward(const Mat& x, Mat& y) override;
  void backward(const Mat& x, const Mat& dy, Mat* dx) override;

 private:
  ActShape in_, out_;
  int stride_;
  std::vector<std::uint32_t> argmax_;
};

/// Nearest-neighbour 2x upsampling back to `out`: each input value covers a
/// 2x2 block; rows and columns beyond 2 * in (odd sizes) are 0.
class BlockUpsample final : public Layer {
 public:
  BlockUpsample(const ActShape& in, const ActShape& out);
  ActShape out_shape() const override { return out_; }
  void forward(const Mat& x, Mat& y) override;
  void backward(const Mat& x, const Mat& dy, Mat* dx) override;

 private:
  ActShape in_, out_;
};

/// Copies channels cyclically to `channels` outputs (a plain identity when
/// the counts agree).
class ChannelTile final : public Layer {
 public:
  ChannelTile(const ActShape& in, std::size_t channels);
  ActShape out_shape() const override { return out_; }
  void forward(const Mat& x, Mat& y) override;
  void backward(const Mat& x, const Mat& dy, Mat* dx) override;

 private:
  ActShape in_, out_;
};

class Sequential final : public Layer {
 public:
  explicit Sequential(ActShape in) : in_(in) {}
  void add(std::unique_ptr<Layer> layer);
  ActShape out_shape() const override { return layers_.empty() ? in_ : layers_.back()->out_shape(); }
  void forward(const Mat& x, Mat& y) override;
  void backward(const Mat& x, const Mat& dy, Mat* dx) override;
  std::vector<Param> params() override;
  std::vector<std::unique_ptr<Layer>>& layers() { return layers_; }

 private:
  ActShape in_;
  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<Mat> acts_;
};

/// Softmax-weighted sum of candidate operations. Mixing weights come from
/// the scores alpha~ = softplus(raw) * (1 - lambda * gamma).
class MixedOp final : public Layer {
 public:
  MixedOp(std::vector<std::unique_ptr<Layer>> candidates, std::vector<float> gamma, float lambda);
  ActShape out_shape() const override { return candidates_.front()->out_shape(); }
  void forward(const Mat& x, Mat& y) override;
  void backward(const Mat& x, const Mat& dy, Mat* dx) override;
  /// Candidate weights only; the scores are exposed through arch_param().
  std::vector<Param> params() override;
  Param arch_param() { return {&raw_, &graw_, false}; }

  std::vector<float> alphas() const;         // softplus(raw)
  std::vector<float> scores() const;         // alpha~
  std::vector<float> probabilities() const;  // softmax(alpha~)
  std::size_t size() const { return candidates_.size(); }

 private:
  std::vector<std::unique_ptr<Layer>> candidates_;
  std::vector<float> gamma_;
  float lambda_;
  Mat raw_, graw_;  // 1 x candidates
  std::vector<Mat> outs_;
  std::vector<float> probs_;
};

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void zero_grad() = 0;
  virtual void step() = 0;
  virtual void set_lr(float lr) = 0;
};

/// Adam with bias correction; clipped parameters are projected back into
/// [-1, 1] after every step.
class Adam final : public Optimizer {
 public:
  explicit Adam(std::vector<Param> params, float lr = 1e-3f, float beta1 = 0.9f, float beta2 = 0.999f,
                float eps = 1e-8f);
  void zero_grad() override;
  void step() override;
  void set_lr(float lr) override { lr_ = lr; }

 private:
  std::vector<Param> params_;
  std::vector<Mat> m_, v_;
  float lr_, b1_, b2_, eps_;
  int t_ = 0;
};

/// Plain SGD with heavy-ball momentum, same clipping rule.
class Sgd final : public Optimizer {
 public:
  Sgd(std::vector<Param> params, float lr, float momentum = 0.9f);
  void zero_grad() override;
  void step() override;
  void set_lr(float lr) override { lr_ = lr; }

 private:
  std::vector<Param> params_;
  std::vector<Mat> v_;
  float lr_, momentum_;
};

/// Mean softmax cross-entropy of `scale * scores`; fills d(loss)/d(scores)
/// and d(loss)/d(log scale).
double softmax_xent(const Mat& scores, std::span<const std::uint8_t> labels, float log_scale, Mat& dscores,
                    float& dlog_scale);

/// Builds the training graph of an architecture. Layer i of the
/// architecture is graph().layers()[i].
class Network {
 public:
  Network(const Architecture& arch, bool learn_thresholds, Rng& rng);

  /// Scores (batch x classes) for a batch of {0,1} images.
  const Mat& forward(const Mat& x);
  /// Loss of the last forward pass; accumulates gradients.
  double backward(const Mat& x, std::span<const std::uint8_t> labels);
  std::vector<Param> params();

  ModelParams export_params() const;
  void import_params(const ModelParams& p);
  const Architecture& arch() const { return arch_; }

 private:
  Architecture arch_;
  Sequential graph_;
  Mat scores_;
  Mat log_scale_, glog_scale_;
  std::vector<TernaryLayer*> weighted_;  // nullptr for pool/identity
};

/// {0,1} bytes to a batch matrix of -1/+1 floats.
Mat to_signed_batch(std::span<const std::uint8_t> bits, std::span<const std::size_t> rows, std::size_t width);

std::size_t argmax_lowest_row(const Mat& scores, Eigen::Index row);

/// Fisher-Yates with a fixed reduction of the generator output, so the
/// order does not depend on the standard library's distributions.
void shuffle(std::vector<std::size_t>& v, Rng& rng);

}  // namespace tgc::nn
