#include "tgc/architecture.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "tgc/errors.hpp"

namespace tgc {

namespace {

struct KindName {
  LayerKind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {LayerKind::kConv3x3, "CONV3x3"},     {LayerKind::kConv5x5, "CONV5x5"},
    {LayerKind::kConv1x1, "CONV1x1"},     {LayerKind::kFc, "FC"},
    {LayerKind::kMaxPool2x2, "MAXPOOL2x2"}, {LayerKind::kIdentity, "IDENTITY"},
};

std::string layer_where(std::size_t i) { return "layer " + std::to_string(i) + ": "; }

}  // namespace

std::string_view to_string(LayerKind kind) {
  for (const auto& kn : kKindNames) {
    if (kn.kind == kind) return kn.name;
  }
  return "UNKNOWN";
}

LayerKind parse_layer_kind(std::string_view text) {
  for (const auto& kn : kKindNames) {
    if (kn.name == text) return kn.kind;
  }
  throw FormatError("unknown layer kind '" + std::string(text) + "'");
}

bool is_conv(LayerKind kind) {
  return kind == LayerKind::kConv3x3 || kind == LayerKind::kConv5x5 ||
         kind == LayerKind::kConv1x1;
}

bool has_weights(LayerKind kind) { return is_conv(kind) || kind == LayerKind::kFc; }

int kernel_size(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv3x3: return 3;
    case LayerKind::kConv5x5: return 5;
    case LayerKind::kConv1x1: return 1;
    default: return 0;
  }
}

LayerSpec LayerSpec::conv(LayerKind kind, int kernels, int padding) {
  return LayerSpec{kind, kernels, padding};
}
LayerSpec LayerSpec::fc(int nodes) { return LayerSpec{LayerKind::kFc, nodes, 0}; }
LayerSpec LayerSpec::maxpool() { return LayerSpec{LayerKind::kMaxPool2x2, 0, 0}; }
LayerSpec LayerSpec::identity() { return LayerSpec{LayerKind::kIdentity, 0, 0}; }

std::size_t Architecture::num_classes() const {
  if (layers.empty()) return 0;
  return static_cast<std::size_t>(layers.back().units);
}

ActShape layer_output_shape(const LayerSpec& layer, const ActShape& in) {
  switch (layer.kind) {
    case LayerKind::kConv3x3:
    case LayerKind::kConv5x5:
    case LayerKind::kConv1x1: {
      const long k = kernel_size(layer.kind);
      const long h = static_cast<long>(in.h) + 2L * layer.padding - k + 1;
      const long w = static_cast<long>(in.w) + 2L * layer.padding - k + 1;
      if (h < 1 || w < 1) {
        throw ShapeError(std::string(to_string(layer.kind)) + " does not fit input " +
                         std::to_string(in.h) + "x" + std::to_string(in.w));
      }
      return {static_cast<std::size_t>(h), static_cast<std::size_t>(w),
              static_cast<std::size_t>(layer.units)};
    }
    case LayerKind::kFc:
      return {1, 1, static_cast<std::size_t>(layer.units)};
    case LayerKind::kMaxPool2x2:
      if (in.h < 2 || in.w < 2) throw ShapeError("MAXPOOL2x2 needs at least a 2x2 input");
      return {in.h / 2, in.w / 2, in.c};
    case LayerKind::kIdentity:
      return in;
  }
  throw ShapeError("unsupported layer kind");
}

std::vector<std::size_t> layer_weight_shape(const LayerSpec& layer, const ActShape& in) {
  const auto units = static_cast<std::size_t>(layer.units);
  if (layer.kind == LayerKind::kFc) return {units, in.size()};
  if (is_conv(layer.kind)) {
    const auto k = static_cast<std::size_t>(kernel_size(layer.kind));
    return {units, k, k, in.c};
  }
  return {};
}

std::vector<ActShape> validate_architecture(const Architecture& arch) {
  if (arch.input.size() == 0) throw ShapeError("architecture '" + arch.name + "': empty input");
  if (arch.layers.empty()) throw ShapeError("architecture '" + arch.name + "': no layers");
  if (!(arch.scaling_factor > 0)) throw InvalidArgument("scaling factor must be positive");

  std::vector<ActShape> shapes{arch.input};
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const auto& l = arch.layers[i];
    if (has_weights(l.kind)) {
      if (l.units < 1) throw ShapeError(layer_where(i) + "needs a positive kernel/node count");
    } else if (l.units != 0) {
      throw ShapeError(layer_where(i) + std::string(to_string(l.kind)) + " takes no units");
    }
    if (!is_conv(l.kind) && l.padding != 0) {
      throw ShapeError(layer_where(i) + "padding only applies to convolutions");
    }
    if (l.padding < 0) throw ShapeError(layer_where(i) + "negative padding");
    shapes.push_back(layer_output_shape(l, shapes.back()));
  }
  if (arch.layers.back().kind != LayerKind::kFc) {
    throw ShapeError("architecture '" + arch.name + "': last layer must be FC");
  }
  return shapes;
}

int scale_units(int units, double factor) {
  if (!(factor > 0)) throw InvalidArgument("scaling factor must be positive");
  const double scaled = std::floor(static_cast<double>(units) * factor + 0.5);
  return std::max(1, static_cast<int>(scaled));
}

Architecture scale_architecture(const Architecture& arch, double factor) {
  if (!(factor > 0)) throw InvalidArgument("scaling factor must be positive");
  Architecture out = arch;
  out.scaling_factor = arch.scaling_factor * factor;
  for (std::size_t i = 0; i + 1 < out.layers.size(); ++i) {
    auto& l = out.layers[i];
    if (has_weights(l.kind)) l.units = scale_units(l.units, factor);
  }
  return out;
}

std::size_t count_params(const Architecture& arch) {
  const auto shapes = validate_architecture(arch);
  std::size_t total = 0;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const auto ws = layer_weight_shape(arch.layers[i], shapes[i]);
    if (!ws.empty()) {
      std::size_t n = 1;
      for (auto d : ws) n *= d;
      total += n;
    }
  }
  return total;
}

namespace {

LayerSpec c3(int k) { return LayerSpec::conv(LayerKind::kConv3x3, k, 1); }
LayerSpec c5(int k, int pad) { return LayerSpec::conv(LayerKind::kConv5x5, k, pad); }
LayerSpec c1(int k) { return LayerSpec::conv(LayerKind::kConv1x1, k, 0); }
LayerSpec fc(int n) { return LayerSpec::fc(n); }
LayerSpec mp() { return LayerSpec::maxpool(); }

constexpr ActShape kMnist{28, 28, 1};
constexpr ActShape kCifar{32, 32, 3};

const std::map<std::string, Architecture, std::less<>>& zoo() {
  static const std::map<std::string, Architecture, std::less<>> table = {
      {"m1", {"m1", kMnist, {fc(128), fc(128), fc(10)}, 1.0}},
      {"m2", {"m2", kMnist, {c5(5, 0), fc(100), fc(10)}, 1.0}},
      {"m3", {"m3", kMnist, {c5(16, 0), mp(), c5(16, 0), mp(), fc(100), fc(10)}, 1.0}},
      {"m4",
       {"m4", kCifar,
        {c3(64), c3(64), mp(), c3(64), c3(64), mp(), c3(64), c1(64), c1(16), fc(10)}, 1.0}},
      {"m5",
       {"m5", kCifar,
        {c3(16), c3(16), c3(16), mp(), c3(32), c3(32), c3(32), mp(), c3(48), c3(48), c3(64),
         mp(), fc(10)},
        1.0}},
      {"m6",
       {"m6", kCifar,
        {c3(16), c3(32), c3(32), mp(), c3(48), c3(64), c3(80), mp(), c3(96), c3(96), c3(128),
         mp(), fc(10)},
        1.0}},
      {"mnist-l0", {"mnist-l0", kMnist, {c5(16, 2), c5(16, 2), c5(16, 2), c5(16, 2), fc(100), fc(10)}, 1.0}},
      {"mnist-l06", {"mnist-l06", kMnist, {c3(16), c3(16), mp(), c5(16, 2), fc(100), fc(10)}, 1.0}},
      {"cifar-l0",
       {"cifar-l0", kCifar,
        {c5(16, 2), mp(), c5(16, 2), c5(16, 2), c5(32, 2), mp(), c5(32, 2), c5(32, 2),
         c5(64, 2), mp(), c5(64, 2), c5(64, 2), fc(10)},
        1.0}},
      {"cifar-l06",
       {"cifar-l06", kCifar,
        {c3(16), c3(16), c3(16), mp(), c3(32), c3(32), c3(32), mp(), c3(64), c3(64), c3(64),
         mp(), fc(10)},
        1.0}},
  };
  return table;
}

}  // namespace

Architecture zoo_architecture(std::string_view id) {
  const auto& table = zoo();
  auto it = table.find(id);
  if (it == table.end()) throw InvalidArgument("unknown architecture id '" + std::string(id) + "'");
  return it->second;
}

std::vector<std::string> zoo_ids() {
  std::vector<std::string> ids;
  for (const auto& [id, _] : zoo()) ids.push_back(id);
  return ids;
}

bool is_zoo_id(std::string_view id) { return zoo().contains(id); }

void write_architecture(std::ostream& out, const Architecture& arch) {
  out << "arch " << arch.name << "\n";
  out << "input " << arch.input.h << " " << arch.input.w << " " << arch.input.c << "\n";
  out.precision(17);
  out << "scale " << arch.scaling_factor << "\n";
  for (const auto& l : arch.layers) {
    out << "layer " << to_string(l.kind);
    if (has_weights(l.kind)) out << " " << l.units;
    if (is_conv(l.kind)) out << " pad " << l.padding;
    out << "\n";
  }
}

Architecture read_architecture(std::istream& in) {
  Architecture arch;
  std::string line;
  int lineno = 0;
  bool have_input = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    auto fail = [&](const std::string& what) {
      throw FormatError("architecture line " + std::to_string(lineno) + ": " + what);
    };
    if (key == "arch") {
      if (!(ls >> arch.name)) fail("missing name");
    } else if (key == "input") {
      if (!(ls >> arch.input.h >> arch.input.w >> arch.input.c)) fail("expected <h> <w> <c>");
      have_input = true;
    } else if (key == "scale") {
      if (!(ls >> arch.scaling_factor)) fail("expected a number");
    } else if (key == "layer") {
      std::string kind_text;
      if (!(ls >> kind_text)) fail("missing layer kind");
      LayerSpec l;
      try {
        l.kind = parse_layer_kind(kind_text);
      } catch (const FormatError& e) {
        fail(e.what());
      }
      if (has_weights(l.kind) && !(ls >> l.units)) fail("missing kernel/node count");
      std::string word;
      while (ls >> word) {
        if (word == "pad" && (ls >> l.padding)) continue;
        fail("unexpected token '" + word + "'");
      }
      arch.layers.push_back(l);
    } else {
      fail("unknown directive '" + key + "'");
    }
  }
  if (!have_input) throw FormatError("architecture: missing input line");
  validate_architecture(arch);
  return arch;
}

Architecture load_architecture_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open architecture file " + path);
  return read_architecture(in);
}

void save_architecture_file(const std::string& path, const Architecture& arch) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write architecture file " + path);
  write_architecture(out, arch);
}

Architecture resolve_architecture(const std::string& id_or_path, double factor) {
  Architecture base =
      is_zoo_id(id_or_path) ? zoo_architecture(id_or_path) : load_architecture_file(id_or_path);
  return factor == 1.0 ? base : scale_architecture(base, factor);
}

}  // namespace tgc
