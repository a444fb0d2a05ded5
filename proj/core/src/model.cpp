#include "tgc/model.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "tgc/errors.hpp"

namespace tgc {

namespace {

std::int32_t dot_i8(const std::int8_t* a, const std::int8_t* b, std::size_t n) {
  std::int32_t acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += static_cast<std::int32_t>(a[i]) * b[i];
  return acc;
}

std::vector<std::int8_t> to_signed(const BinaryTensor& t) {
  std::vector<std::int8_t> out(t.size());
  const auto bits = t.bits();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = bits[i] ? 1 : -1;
  return out;
}

Shape act_dims(const ActShape& s) { return {s.h, s.w, s.c}; }

BinaryTensor maxpool(const ActShape& in, const BinaryTensor& input) {
  const ActShape out{in.h / 2, in.w / 2, in.c};
  std::vector<std::uint8_t> bits(out.size());
  const auto x = input.bits();
  for (std::size_t y = 0; y < out.h; ++y) {
    for (std::size_t xx = 0; xx < out.w; ++xx) {
      for (std::size_t c = 0; c < in.c; ++c) {
        auto at = [&](std::size_t yy, std::size_t xc) { return x[(yy * in.w + xc) * in.c + c]; };
        bits[(y * out.w + xx) * out.c + c] = at(2 * y, 2 * xx) | at(2 * y, 2 * xx + 1) |
                                             at(2 * y + 1, 2 * xx) | at(2 * y + 1, 2 * xx + 1);
      }
    }
  }
  return BinaryTensor(act_dims(out), std::move(bits));
}

}  // namespace

std::size_t ModelParams::total_weights() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size();
  return n;
}

std::size_t ModelParams::zero_weights() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.count_zero();
  return n;
}

void validate_params(const Architecture& arch, const ModelParams& params) {
  const auto shapes = validate_architecture(arch);
  if (params.layers.size() != arch.layers.size()) {
    throw ShapeError("model has " + std::to_string(params.layers.size()) +
                     " parameter layers, architecture has " + std::to_string(arch.layers.size()));
  }
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const auto& spec = arch.layers[i];
    const auto& lp = params.layers[i];
    const auto expected = layer_weight_shape(spec, shapes[i]);
    if (lp.weights.shape() != expected) {
      throw ShapeError("layer " + std::to_string(i) + ": weight shape " +
                       shape_to_string(lp.weights.shape()) + ", expected " +
                       shape_to_string(expected));
    }
    const bool is_final = i + 1 == arch.layers.size();
    const std::size_t want_thresholds =
        (has_weights(spec.kind) && !is_final) ? static_cast<std::size_t>(spec.units) : 0;
    if (lp.thresholds.size() != want_thresholds) {
      throw ShapeError("layer " + std::to_string(i) + ": " + std::to_string(lp.thresholds.size()) +
                       " thresholds, expected " + std::to_string(want_thresholds));
    }
  }
}

ModelParams zero_params(const Architecture& arch) {
  const auto shapes = validate_architecture(arch);
  ModelParams params;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const auto& spec = arch.layers[i];
    LayerParams lp;
    auto ws = layer_weight_shape(spec, shapes[i]);
    if (!ws.empty()) lp.weights = TernaryTensor::zeros(ws);
    if (has_weights(spec.kind) && i + 1 < arch.layers.size()) {
      lp.thresholds.assign(static_cast<std::size_t>(spec.units), 0);
    }
    params.layers.push_back(std::move(lp));
  }
  return params;
}

ModelParams random_params(const Architecture& arch, double zero_fraction, std::uint64_t seed) {
  if (!(zero_fraction >= 0 && zero_fraction <= 1)) throw InvalidArgument("zero fraction must lie in [0, 1]");
  auto params = zero_params(arch);
  std::mt19937_64 rng(seed);
  // 53-bit uniform from the raw generator output keeps draws portable.
  auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  for (auto& lp : params.layers) {
    if (lp.weights.size() == 0) continue;
    std::vector<std::int8_t> v(lp.weights.size());
    for (auto& w : v) w = uniform() < zero_fraction ? 0 : ((rng() & 1) ? 1 : -1);
    lp.weights = TernaryTensor(lp.weights.shape(), std::move(v));
  }
  return params;
}

double ternary_threshold(std::span<const float> weights) {
  if (weights.empty()) throw InvalidArgument("ternarize: empty tensor");
  double sum = 0;
  for (float w : weights) sum += std::fabs(static_cast<double>(w));
  return 0.7 / static_cast<double>(weights.size()) * sum;
}

TernaryTensor ternarize(std::span<const float> weights, Shape shape) {
  const double delta = ternary_threshold(weights);
  std::vector<std::int8_t> out(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double w = weights[i];
    out[i] = w > delta ? 1 : (w < -delta ? -1 : 0);
  }
  return TernaryTensor(std::move(shape), std::move(out));
}

TernaryTensor ternarize(std::span<const float> weights) {
  return ternarize(weights, Shape{weights.size()});
}

BinaryTensor binarize(const IntTensor& pre) {
  std::vector<std::uint8_t> bits(pre.values.size());
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = pre.values[i] >= 0 ? 1 : 0;
  return BinaryTensor(pre.shape, std::move(bits));
}

std::int32_t xnor_popcount_dot(std::span<const std::uint8_t> x_bits,
                               std::span<const std::int8_t> weights) {
  if (x_bits.size() != weights.size()) {
    throw ShapeError("xnor_popcount_dot: " + std::to_string(x_bits.size()) + " inputs vs " +
                     std::to_string(weights.size()) + " weights");
  }
  std::int32_t n_eff = 0;
  std::int32_t popcount = 0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (weights[j] == 0) continue;
    const std::uint8_t w_bit = weights[j] > 0 ? 1 : 0;
    popcount += (x_bits[j] ^ w_bit ^ 1u) & 1u;
    ++n_eff;
  }
  return 2 * popcount - n_eff;
}

IntTensor layer_preactivations(const LayerSpec& layer, const ActShape& in,
                               const TernaryTensor& weights, const BinaryTensor& input) {
  if (input.size() != in.size()) {
    throw ShapeError("layer input has " + std::to_string(input.size()) + " bits, expected " +
                     std::to_string(in.size()));
  }
  const auto expected = layer_weight_shape(layer, in);
  if (expected.empty()) throw ShapeError("layer has no weights");
  if (weights.shape() != expected) {
    throw ShapeError("weight shape " + shape_to_string(weights.shape()) + ", expected " +
                     shape_to_string(expected));
  }
  const auto xs = to_signed(input);
  const auto w = weights.values();
  const auto units = static_cast<std::size_t>(layer.units);

  if (layer.kind == LayerKind::kFc) {
    IntTensor out{{units}, std::vector<std::int32_t>(units)};
    const std::size_t n = in.size();
    for (std::size_t o = 0; o < units; ++o) out.values[o] = dot_i8(xs.data(), w.data() + o * n, n);
    return out;
  }

  const auto out_shape = layer_output_shape(layer, in);
  const long k = kernel_size(layer.kind);
  const long pad = layer.padding;
  const std::size_t patch = static_cast<std::size_t>(k * k) * in.c;
  std::vector<std::int8_t> cols(patch);
  IntTensor out{act_dims(out_shape), std::vector<std::int32_t>(out_shape.size())};
  for (std::size_t oy = 0; oy < out_shape.h; ++oy) {
    for (std::size_t ox = 0; ox < out_shape.w; ++ox) {
      std::size_t p = 0;
      for (long ky = 0; ky < k; ++ky) {
        const long iy = static_cast<long>(oy) + ky - pad;
        for (long kx = 0; kx < k; ++kx) {
          const long ix = static_cast<long>(ox) + kx - pad;
          const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<long>(in.h) &&
                              ix < static_cast<long>(in.w);
          for (std::size_t c = 0; c < in.c; ++c, ++p) {
            cols[p] = inside ? xs[(static_cast<std::size_t>(iy) * in.w +
                                   static_cast<std::size_t>(ix)) * in.c + c]
                             : 0;
          }
        }
      }
      std::int32_t* dst = out.values.data() + (oy * out_shape.w + ox) * units;
      for (std::size_t o = 0; o < units; ++o) dst[o] = dot_i8(cols.data(), w.data() + o * patch, patch);
    }
  }
  return out;
}

LayerOutput forward_layer(const LayerSpec& layer, const ActShape& in, const LayerParams& params,
                          const BinaryTensor& input, bool is_final) {
  if (input.size() != in.size()) {
    throw ShapeError("layer input has " + std::to_string(input.size()) + " bits, expected " +
                     std::to_string(in.size()));
  }
  switch (layer.kind) {
    case LayerKind::kIdentity:
      if (is_final) throw ShapeError("final layer must produce scores");
      return input;
    case LayerKind::kMaxPool2x2:
      if (is_final) throw ShapeError("final layer must produce scores");
      return maxpool(in, input);
    default:
      break;
  }
  IntTensor pre = layer_preactivations(layer, in, params.weights, input);
  if (is_final) return pre;

  const auto units = static_cast<std::size_t>(layer.units);
  if (params.thresholds.size() != units) {
    throw ShapeError("layer needs " + std::to_string(units) + " thresholds");
  }
  for (std::size_t i = 0; i < pre.values.size(); ++i) pre.values[i] -= params.thresholds[i % units];
  auto bits = binarize(pre);
  return BinaryTensor(act_dims(layer_output_shape(layer, in)),
                      std::vector<std::uint8_t>(bits.bits().begin(), bits.bits().end()));
}

std::size_t argmax_lowest(std::span<const std::int32_t> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

Prediction predict(const Architecture& arch, const ModelParams& params,
                   const BinaryTensor& image) {
  const auto shapes = validate_architecture(arch);
  if (params.layers.size() != arch.layers.size()) throw ShapeError("params do not match architecture");
  BinaryTensor act = image;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const bool is_final = i + 1 == arch.layers.size();
    auto out = forward_layer(arch.layers[i], shapes[i], params.layers[i], act, is_final);
    if (is_final) {
      Prediction p;
      p.scores = std::get<IntTensor>(std::move(out)).values;
      p.label = argmax_lowest(p.scores);
      return p;
    }
    act = std::get<BinaryTensor>(std::move(out));
  }
  throw ShapeError("architecture has no layers");
}

std::size_t ModelStructure::nonzero_count() const {
  std::size_t n = 0;
  for (const auto& mask : nonzero) n += static_cast<std::size_t>(std::accumulate(mask.begin(), mask.end(), 0L));
  return n;
}

ModelStructure public_structure(const Architecture& arch, const ModelParams& params) {
  validate_params(arch, params);
  ModelStructure s;
  s.arch = arch;
  for (const auto& lp : params.layers) {
    std::vector<std::uint8_t> mask(lp.weights.size());
    const auto w = lp.weights.values();
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = w[i] != 0 ? 1 : 0;
    s.nonzero.push_back(std::move(mask));
    s.thresholds.push_back(lp.thresholds);
  }
  return s;
}

}  // namespace tgc
