#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "tgc/architecture.hpp"
#include "tgc/tensor.hpp"

namespace tgc {

/// Weights and per-neuron integer thresholds of one layer. A hidden neuron
/// fires when its signed dot product is >= its threshold. The final
/// classifier carries no thresholds; pooling and identity layers carry
/// nothing at all.
struct LayerParams {
  TernaryTensor weights;
  std::vector<std::int32_t> thresholds;

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

struct ModelParams {
  std::vector<LayerParams> layers;

  std::size_t total_weights() const;
  std::size_t zero_weights() const;
  std::size_t nonzero_weights() const { return total_weights() - zero_weights(); }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Throws ShapeError unless `params` matches `arch` layer for layer.
void validate_params(const Architecture& arch, const ModelParams& params);

/// All-zero weights and zero thresholds shaped for `arch`.
ModelParams zero_params(const Architecture& arch);

/// Random ternary weights: each weight is 0 with probability
/// `zero_fraction`, otherwise +1 or -1 with equal odds. Thresholds are 0.
ModelParams random_params(const Architecture& arch, double zero_fraction, std::uint64_t seed);

/// Delta = 0.7 / n * sum |w|.
double ternary_threshold(std::span<const float> weights);

/// +1 above Delta, -1 below -Delta, 0 otherwise.
TernaryTensor ternarize(std::span<const float> weights, Shape shape);
TernaryTensor ternarize(std::span<const float> weights);

/// bit = 1 iff value >= 0; zero maps to +1.
BinaryTensor binarize(const IntTensor& pre_activations);

/// Signed dot product sum_j (2x_j - 1) * w_j over the nonzero weights,
/// computed as 2 * popcount(xnor(x', w')) - N_eff.
std::int32_t xnor_popcount_dot(std::span<const std::uint8_t> x_bits,
                               std::span<const std::int8_t> weights);

/// Signed dot products of a weighted layer (before thresholding). Padded
/// taps contribute nothing, exactly like a zero weight.
IntTensor layer_preactivations(const LayerSpec& layer, const ActShape& in_shape,
                               const TernaryTensor& weights, const BinaryTensor& input);

using LayerOutput = std::variant<BinaryTensor, IntTensor>;

/// One layer of plaintext inference. Hidden CONV/FC layers threshold their
/// dot products into bits, MAXPOOL2x2 ORs each window, and the final layer
/// (`is_final`) returns raw integer scores.
LayerOutput forward_layer(const LayerSpec& layer, const ActShape& in_shape,
                          const LayerParams& params, const BinaryTensor& input, bool is_final);

struct Prediction {
  std::size_t label = 0;
  std::vector<std::int32_t> scores;
};

/// Full forward pass; argmax ties resolve to the lowest class index.
Prediction predict(const Architecture& arch, const ModelParams& params,
                   const BinaryTensor& image);

std::size_t argmax_lowest(std::span<const std::int32_t> scores);

/// The part of a model both parties know: the architecture, which weights
/// are nonzero, and the thresholds. Weight signs stay with the server.
struct ModelStructure {
  Architecture arch;
  std::vector<std::vector<std::uint8_t>> nonzero;  // per layer, one flag per weight
  std::vector<std::vector<std::int32_t>> thresholds;

  std::size_t nonzero_count() const;
  friend bool operator==(const ModelStructure&, const ModelStructure&) = default;
};

ModelStructure public_structure(const Architecture& arch, const ModelParams& params);

}  // namespace tgc
