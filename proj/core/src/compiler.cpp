#include "tgc/compiler.hpp"

#include <bit>
#include <deque>

#include "tgc/errors.hpp"

namespace tgc {

NetlistBuilder::NetlistBuilder(std::size_t client_inputs, std::size_t server_inputs) {
  const std::size_t inputs = 2 + client_inputs + server_inputs;
  if (inputs >= kNoWire) throw InvalidArgument("too many circuit inputs");
  n_.const0 = 0;
  n_.const1 = 1;
  n_.client_inputs.resize(client_inputs);
  n_.server_inputs.resize(server_inputs);
  WireId next = 2;
  for (auto& w : n_.client_inputs) w = next++;
  for (auto& w : n_.server_inputs) w = next++;
  n_.wire_count = next;
}

WireId NetlistBuilder::gate(GateKind kind, WireId a, WireId b) {
  if (a >= n_.wire_count || (gate_arity(kind) == 2 && b >= n_.wire_count)) {
    throw InvalidArgument("gate input refers to an undefined wire");
  }
  if (n_.wire_count == kNoWire - 1) throw InvalidArgument("wire id space exhausted");
  const WireId out = n_.wire_count++;
  n_.gates.push_back(Gate{kind, a, gate_arity(kind) == 2 ? b : kNoWire, out});
  return out;
}

Netlist NetlistBuilder::build() && { return std::move(n_); }

std::vector<WireId> compile_popcount(NetlistBuilder& b, std::span<const WireId> bits) {
  if (bits.empty()) return {};
  // Column i holds wires of weight 2^i. Sums go back into their own column
  // and carries into the next, FIFO, so each column reduces as a balanced
  // tree rather than a ripple chain.
  std::vector<std::deque<WireId>> cols(1);
  cols[0].assign(bits.begin(), bits.end());
  std::vector<WireId> out;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    while (cols[i].size() >= 2) {
      if (cols.size() == i + 1) cols.emplace_back();
      if (cols[i].size() >= 3) {
        const WireId a = cols[i].front(); cols[i].pop_front();
        const WireId x = cols[i].front(); cols[i].pop_front();
        const WireId c = cols[i].front(); cols[i].pop_front();
        const WireId t1 = b.xor_(a, x);
        const WireId t2 = b.xor_(a, c);
        cols[i].push_back(b.xor_(t1, c));
        cols[i + 1].push_back(b.xor_(a, b.and_(t1, t2)));
      } else {
        const WireId a = cols[i].front(); cols[i].pop_front();
        const WireId x = cols[i].front(); cols[i].pop_front();
        cols[i].push_back(b.xor_(a, x));
        cols[i + 1].push_back(b.and_(a, x));
      }
    }
    out.push_back(cols[i].front());
  }
  return out;
}

WireId compile_threshold(NetlistBuilder& b, std::span<const WireId> sum, std::int64_t max_value,
                         std::int64_t t) {
  if (t <= 0) return b.const1();
  if (t > max_value) return b.const0();
  if (sum.size() < 64 && (t >> sum.size()) != 0) {
    throw InvalidArgument("threshold wider than the popcount it is compared against");
  }
  // LSB-first ripple: g_i = [sum mod 2^(i+1) >= t mod 2^(i+1)].
  // t_i = 0: g_i = s_i | g_{i-1};  t_i = 1: g_i = s_i & g_{i-1}; g_{-1} = 1.
  bool g_is_one = true;
  WireId g = kNoWire;
  for (std::size_t i = 0; i < sum.size(); ++i) {
    const bool ti = (t >> i) & 1;
    if (g_is_one) {
      if (ti) {
        g = sum[i];
        g_is_one = false;
      }
      continue;
    }
    g = ti ? b.and_(sum[i], g) : b.or_(sum[i], g);
  }
  return g_is_one ? b.const1() : g;
}

std::int64_t popcount_threshold(std::int64_t n_eff, std::int64_t theta) {
  const std::int64_t a = n_eff + theta;
  return a <= 0 ? 0 : (a + 1) / 2;
}

namespace {

// One weighted layer's neurons. `weight_wire` maps each weight in storage
// order to its server input wire, or kNoWire for a zero weight.
template <typename Emit>
void for_each_neuron(const LayerSpec& layer, const ActShape& in, std::span<const WireId> act,
                     std::span<const WireId> weight_wire, NetlistBuilder& b, Emit&& emit) {
  const auto units = static_cast<std::size_t>(layer.units);
  std::vector<WireId> taps;
  if (layer.kind == LayerKind::kFc) {
    const std::size_t n = in.size();
    for (std::size_t o = 0; o < units; ++o) {
      taps.clear();
      for (std::size_t j = 0; j < n; ++j) {
        const WireId w = weight_wire[o * n + j];
        if (w != kNoWire) taps.push_back(b.xnor_(act[j], w));
      }
      emit(o, taps);
    }
    return;
  }
  const auto out = layer_output_shape(layer, in);
  const long k = kernel_size(layer.kind);
  const long pad = layer.padding;
  const std::size_t patch = static_cast<std::size_t>(k * k) * in.c;
  for (std::size_t oy = 0; oy < out.h; ++oy) {
    for (std::size_t ox = 0; ox < out.w; ++ox) {
      for (std::size_t o = 0; o < units; ++o) {
        taps.clear();
        for (long ky = 0; ky < k; ++ky) {
          const long iy = static_cast<long>(oy) + ky - pad;
          if (iy < 0 || iy >= static_cast<long>(in.h)) continue;
          for (long kx = 0; kx < k; ++kx) {
            const long ix = static_cast<long>(ox) + kx - pad;
            if (ix < 0 || ix >= static_cast<long>(in.w)) continue;
            const std::size_t wbase = o * patch + static_cast<std::size_t>(ky * k + kx) * in.c;
            const std::size_t abase = (static_cast<std::size_t>(iy) * in.w + static_cast<std::size_t>(ix)) * in.c;
            for (std::size_t c = 0; c < in.c; ++c) {
              const WireId w = weight_wire[wbase + c];
              if (w != kNoWire) taps.push_back(b.xnor_(act[abase + c], w));
            }
          }
        }
        emit((oy * out.w + ox) * units + o, taps);
      }
    }
  }
}

std::vector<WireId> compile_maxpool(const ActShape& in, std::span<const WireId> act, NetlistBuilder& b) {
  const ActShape out{in.h / 2, in.w / 2, in.c};
  std::vector<WireId> res(out.size());
  for (std::size_t y = 0; y < out.h; ++y) {
    for (std::size_t x = 0; x < out.w; ++x) {
      for (std::size_t c = 0; c < in.c; ++c) {
        auto at = [&](std::size_t yy, std::size_t xx) { return act[(yy * in.w + xx) * in.c + c]; };
        const WireId top = b.or_(at(2 * y, 2 * x), at(2 * y, 2 * x + 1));
        const WireId bottom = b.or_(at(2 * y + 1, 2 * x), at(2 * y + 1, 2 * x + 1));
        res[(y * out.w + x) * in.c + c] = b.or_(top, bottom);
      }
    }
  }
  return res;
}

std::vector<WireId> compile_hidden(const LayerSpec& layer, const ActShape& in, std::span<const WireId> act,
                                   std::span<const WireId> weight_wire, std::span<const std::int32_t> thresholds,
                                   NetlistBuilder& b) {
  switch (layer.kind) {
    case LayerKind::kIdentity:
      return {act.begin(), act.end()};
    case LayerKind::kMaxPool2x2:
      return compile_maxpool(in, act, b);
    case LayerKind::kConv3x3:
    case LayerKind::kConv5x5:
    case LayerKind::kConv1x1:
    case LayerKind::kFc:
      break;
  }
  const auto units = static_cast<std::size_t>(layer.units);
  if (thresholds.size() != units) throw ShapeError("hidden layer needs one threshold per unit");
  std::vector<WireId> res(layer_output_shape(layer, in).size());
  for_each_neuron(layer, in, act, weight_wire, b, [&](std::size_t idx, const std::vector<WireId>& taps) {
    const auto sum = compile_popcount(b, taps);
    const auto n = static_cast<std::int64_t>(taps.size());
    res[idx] = compile_threshold(b, sum, n, popcount_threshold(n, thresholds[idx % units]));
  });
  return res;
}

std::vector<WireId> assign_weight_wires(std::span<const std::uint8_t> mask, NetlistBuilder& b,
                                        std::size_t& next_server) {
  std::vector<WireId> ww(mask.size(), kNoWire);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) ww[i] = b.server_input(next_server++);
  }
  return ww;
}

}  // namespace

Netlist compile_model(const ModelStructure& s) {
  const auto shapes = validate_architecture(s.arch);
  if (s.nonzero.size() != s.arch.layers.size() || s.thresholds.size() != s.arch.layers.size()) {
    throw ShapeError("model structure does not match its architecture");
  }
  for (std::size_t i = 0; i < s.arch.layers.size(); ++i) {
    if (s.nonzero[i].size() != shape_size(layer_weight_shape(s.arch.layers[i], shapes[i]))) {
      throw ShapeError("layer " + std::to_string(i) + ": nonzero mask has the wrong length");
    }
  }
  NetlistBuilder b(s.arch.input.size(), s.nonzero_count());
  std::vector<WireId> act(s.arch.input.size());
  for (std::size_t i = 0; i < act.size(); ++i) act[i] = b.client_input(i);

  std::size_t next_server = 0;
  const std::size_t last = s.arch.layers.size() - 1;
  for (std::size_t i = 0; i < last; ++i) {
    const auto ww = assign_weight_wires(s.nonzero[i], b, next_server);
    act = compile_hidden(s.arch.layers[i], shapes[i], act, ww, s.thresholds[i], b);
  }
  const auto& final_layer = s.arch.layers[last];
  if (!has_weights(final_layer.kind)) throw ShapeError("final layer must have weights");
  const auto ww = assign_weight_wires(s.nonzero[last], b, next_server);
  std::vector<OutputGroup> groups(layer_output_shape(final_layer, shapes[last]).size());
  for_each_neuron(final_layer, shapes[last], act, ww, b, [&](std::size_t idx, const std::vector<WireId>& taps) {
    groups[idx].n_eff = static_cast<std::int32_t>(taps.size());
    groups[idx].bits = compile_popcount(b, taps);
  });
  for (auto& g : groups) b.add_output(std::move(g));
  return std::move(b).build();
}

std::vector<std::uint8_t> weight_sign_bits(const ModelParams& params) {
  std::vector<std::uint8_t> bits;
  bits.reserve(params.nonzero_weights());
  for (const auto& lp : params.layers) {
    for (auto w : lp.weights.values()) {
      if (w != 0) bits.push_back(w > 0 ? 1 : 0);
    }
  }
  return bits;
}

Netlist compile_layer(const LayerSpec& layer, const ActShape& in, std::span<const std::uint8_t> nonzero,
                      std::span<const std::int32_t> thresholds) {
  const auto ws = layer_weight_shape(layer, in);
  if (nonzero.size() != shape_size(ws)) throw ShapeError("nonzero mask has the wrong length");
  std::size_t nnz = 0;
  for (auto m : nonzero) nnz += m ? 1 : 0;
  NetlistBuilder b(in.size(), nnz);
  std::vector<WireId> act(in.size());
  for (std::size_t i = 0; i < act.size(); ++i) act[i] = b.client_input(i);
  std::size_t next_server = 0;
  const auto ww = assign_weight_wires(nonzero, b, next_server);
  const auto out = compile_hidden(layer, in, act, ww, thresholds, b);
  for (auto w : out) b.add_output(OutputGroup{1, {w}});
  return std::move(b).build();
}

}  // namespace tgc
