#include "tgc/model_io.hpp"

#include <fstream>
#include <iterator>

#include "tgc/errors.hpp"

namespace tgc {

namespace {

constexpr char kMagic[4] = {'T', 'G', 'C', 'M'};

// Upper bounds that keep a corrupt header from requesting absurd allocations.
constexpr std::uint32_t kMaxLayers = 4096;
constexpr std::uint32_t kMaxRank = 8;

void write_thresholds(ByteWriter& w, const std::vector<std::int32_t>& t) {
  w.u32(static_cast<std::uint32_t>(t.size()));
  for (auto v : t) w.i32(v);
}

std::vector<std::int32_t> read_thresholds(ByteReader& r) {
  const auto n = r.u32();
  if (n > r.remaining() / 4) throw FormatError("threshold count exceeds data");
  std::vector<std::int32_t> t(n);
  for (auto& v : t) v = r.i32();
  return t;
}

}  // namespace

std::vector<std::uint8_t> pack_ternary(std::span<const std::int8_t> values) {
  std::vector<std::uint8_t> out((values.size() + 3) / 4, 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint8_t code = values[i] == 0 ? 0 : (values[i] > 0 ? 1 : 2);
    out[i / 4] |= static_cast<std::uint8_t>(code << (2 * (i % 4)));
  }
  return out;
}

std::vector<std::int8_t> unpack_ternary(std::span<const std::uint8_t> packed, std::size_t count) {
  if (packed.size() != (count + 3) / 4) throw FormatError("packed ternary size mismatch");
  std::vector<std::int8_t> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto code = (packed[i / 4] >> (2 * (i % 4))) & 3u;
    if (code == 3) throw FormatError("invalid ternary code 11 at weight " + std::to_string(i));
    out[i] = code == 0 ? 0 : (code == 1 ? 1 : -1);
  }
  return out;
}

void write_architecture_header(ByteWriter& w, const Architecture& arch) {
  w.str(arch.name);
  w.f64(arch.scaling_factor);
  w.u32(static_cast<std::uint32_t>(arch.input.h));
  w.u32(static_cast<std::uint32_t>(arch.input.w));
  w.u32(static_cast<std::uint32_t>(arch.input.c));
  w.u32(static_cast<std::uint32_t>(arch.layers.size()));
  for (const auto& l : arch.layers) {
    w.u8(static_cast<std::uint8_t>(l.kind));
    w.u32(static_cast<std::uint32_t>(l.units));
    w.u32(static_cast<std::uint32_t>(l.padding));
  }
}

Architecture read_architecture_header(ByteReader& r) {
  Architecture arch;
  arch.name = r.str();
  arch.scaling_factor = r.f64();
  arch.input.h = r.u32();
  arch.input.w = r.u32();
  arch.input.c = r.u32();
  const auto n = r.u32();
  if (n > kMaxLayers) throw FormatError("implausible layer count " + std::to_string(n));
  for (std::uint32_t i = 0; i < n; ++i) {
    LayerSpec l;
    const auto kind = r.u8();
    if (kind > static_cast<std::uint8_t>(LayerKind::kIdentity)) {
      throw FormatError("unknown layer kind code " + std::to_string(kind));
    }
    l.kind = static_cast<LayerKind>(kind);
    l.units = static_cast<int>(r.u32());
    l.padding = static_cast<int>(r.u32());
    arch.layers.push_back(l);
  }
  try {
    validate_architecture(arch);
  } catch (const Error& e) {
    throw FormatError(std::string("invalid architecture: ") + e.what());
  }
  return arch;
}

std::vector<std::uint8_t> serialize_model(const Model& model) {
  validate_params(model.arch, model.params);
  ByteWriter w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kModelFormatVersion);
  write_architecture_header(w, model.arch);
  for (const auto& lp : model.params.layers) {
    const auto& shape = lp.weights.shape();
    w.u32(static_cast<std::uint32_t>(shape.size()));
    for (auto d : shape) w.u32(static_cast<std::uint32_t>(d));
    w.bytes(pack_ternary(lp.weights.values()));
    write_thresholds(w, lp.thresholds);
  }
  return w.take();
}

Model deserialize_model(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "model file");
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("model file: bad magic");
  const auto version = r.u32();
  if (version != kModelFormatVersion) {
    throw FormatError("model file: unsupported format version " + std::to_string(version));
  }
  Model m;
  m.arch = read_architecture_header(r);
  for (std::size_t i = 0; i < m.arch.layers.size(); ++i) {
    LayerParams lp;
    const auto rank = r.u32();
    if (rank > kMaxRank) throw FormatError("model file: implausible weight rank");
    Shape shape(rank);
    for (auto& d : shape) d = r.u32();
    if (rank > 0) {
      const auto n = shape_size(shape);
      if ((n + 3) / 4 > r.remaining()) throw FormatError("model file: truncated weights");
      auto packed = r.bytes((n + 3) / 4);
      lp.weights = TernaryTensor(shape, unpack_ternary(packed, n));
    }
    lp.thresholds = read_thresholds(r);
    m.params.layers.push_back(std::move(lp));
  }
  r.expect_done();
  try {
    validate_params(m.arch, m.params);
  } catch (const ShapeError& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
  return m;
}

void save_model(const std::string& path, const Model& model) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write model file " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing model file " + path);
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model file " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

void write_structure(ByteWriter& w, const ModelStructure& s) {
  write_architecture_header(w, s.arch);
  for (std::size_t i = 0; i < s.arch.layers.size(); ++i) {
    const auto& mask = s.nonzero.at(i);
    w.u64(mask.size());
    std::vector<std::uint8_t> packed((mask.size() + 7) / 8, 0);
    for (std::size_t j = 0; j < mask.size(); ++j) {
      if (mask[j]) packed[j / 8] |= static_cast<std::uint8_t>(1u << (j % 8));
    }
    w.bytes(packed);
    write_thresholds(w, s.thresholds.at(i));
  }
}

ModelStructure read_structure(ByteReader& r) {
  ModelStructure s;
  s.arch = read_architecture_header(r);
  const auto shapes = validate_architecture(s.arch);
  for (std::size_t i = 0; i < s.arch.layers.size(); ++i) {
    const auto n = r.u64();
    const auto ws = layer_weight_shape(s.arch.layers[i], shapes[i]);
    if (n != shape_size(ws)) throw FormatError("structure: weight count mismatch at layer " + std::to_string(i));
    auto packed = r.bytes((n + 7) / 8);
    std::vector<std::uint8_t> mask(n);
    for (std::size_t j = 0; j < n; ++j) mask[j] = (packed[j / 8] >> (j % 8)) & 1u;
    s.nonzero.push_back(std::move(mask));
    s.thresholds.push_back(read_thresholds(r));
  }
  return s;
}

std::size_t structure_encoded_size(const ModelStructure& s) {
  ByteWriter w;
  write_structure(w, s);
  return w.size();
}

}  // namespace tgc
