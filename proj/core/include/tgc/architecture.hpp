#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace tgc {

enum class LayerKind : std::uint8_t {
  kConv3x3 = 0,
  kConv5x5 = 1,
  kConv1x1 = 2,
  kFc = 3,
  kMaxPool2x2 = 4,
  kIdentity = 5,
};

std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view text);

bool is_conv(LayerKind kind);
bool has_weights(LayerKind kind);
int kernel_size(LayerKind kind);  // 0 for non-conv layers

struct LayerSpec {
  LayerKind kind = LayerKind::kIdentity;
  int units = 0;    // kernels (conv) or nodes (fc); 0 for pool/identity
  int padding = 0;  // conv only

  static LayerSpec conv(LayerKind kind, int kernels, int padding);
  static LayerSpec fc(int nodes);
  static LayerSpec maxpool();
  static LayerSpec identity();

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Activation volume in height x width x channels order. Fully connected
/// outputs are 1 x 1 x nodes.
struct ActShape {
  std::size_t h = 0;
  std::size_t w = 0;
  std::size_t c = 0;

  std::size_t size() const { return h * w * c; }
  friend bool operator==(const ActShape&, const ActShape&) = default;
};

struct Architecture {
  std::string name;
  ActShape input;
  std::vector<LayerSpec> layers;
  double scaling_factor = 1.0;

  std::size_t num_classes() const;
  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// Checks kind-specific fields and shape compatibility, and that the last
/// layer is a fully connected classifier. Returns the activation shape
/// entering each layer followed by the output shape (layers.size() + 1 entries).
std::vector<ActShape> validate_architecture(const Architecture& arch);

ActShape layer_output_shape(const LayerSpec& layer, const ActShape& in);

/// Weight tensor shape of a layer: {out, in} for FC, {out, k, k, in} for conv,
/// empty for layers without weights.
std::vector<std::size_t> layer_weight_shape(const LayerSpec& layer, const ActShape& in);

/// Multiplies every kernel/node count except the final classifier by
/// `factor`, rounding half up with a floor of 1.
Architecture scale_architecture(const Architecture& arch, double factor);

int scale_units(int units, double factor);

/// Number of weights; thresholds and biases are not counted.
std::size_t count_params(const Architecture& arch);

/// Built-in architectures at scaling factor 1: m1..m6 plus the searched
/// cell architectures mnist-l0, mnist-l06, cifar-l0, cifar-l06.
Architecture zoo_architecture(std::string_view id);
std::vector<std::string> zoo_ids();
bool is_zoo_id(std::string_view id);

/// Plain-text architecture description, one directive per line:
///   arch <name>
///   input <h> <w> <c>
///   scale <factor>
///   layer <KIND> [<units>] [pad <p>]
void write_architecture(std::ostream& out, const Architecture& arch);
Architecture read_architecture(std::istream& in);
Architecture load_architecture_file(const std::string& path);
void save_architecture_file(const std::string& path, const Architecture& arch);

/// Resolves a zoo id or an architecture file path, then applies `factor`.
Architecture resolve_architecture(const std::string& id_or_path, double factor);

}  // namespace tgc
