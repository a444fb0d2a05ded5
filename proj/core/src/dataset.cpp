#include "tgc/dataset.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "tgc/errors.hpp"

#ifndef TGC_DEFAULT_DATA_ROOT
#define TGC_DEFAULT_DATA_ROOT "data"
#endif

namespace tgc {

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

void put_be32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                     static_cast<char>(v)};
  out.write(b, 4);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  return out;
}

}  // namespace

BinaryTensor Dataset::tensor(std::size_t i) const {
  const auto img = image(i);
  return BinaryTensor({shape.h, shape.w, shape.c}, std::vector<std::uint8_t>(img.begin(), img.end()));
}

void Dataset::append(std::span<const std::uint8_t> image_bits, std::uint8_t label) {
  if (image_bits.size() != shape.size()) throw ShapeError("image does not match dataset shape");
  bits.insert(bits.end(), image_bits.begin(), image_bits.end());
  labels.push_back(label);
}

DatasetId parse_dataset_id(const std::string& name) {
  if (name == "mnist") return DatasetId::kMnist;
  if (name == "cifar10" || name == "cifar") return DatasetId::kCifar10;
  throw InvalidArgument("unknown dataset '" + name + "' (expected mnist or cifar10)");
}

std::string to_string(DatasetId id) { return id == DatasetId::kMnist ? "mnist" : "cifar10"; }

ActShape dataset_input_shape(DatasetId id) {
  return id == DatasetId::kMnist ? ActShape{28, 28, 1} : ActShape{32, 32, 3};
}

Dataset load_mnist(const std::string& dir, bool train) {
  const std::string prefix = dir + "/" + (train ? "train" : "t10k");
  const auto img = read_file(prefix + "-images-idx3-ubyte");
  const auto lab = read_file(prefix + "-labels-idx1-ubyte");
  if (img.size() < 16 || be32(img.data()) != 0x00000803) throw FormatError(prefix + "-images-idx3-ubyte: bad header");
  if (lab.size() < 8 || be32(lab.data()) != 0x00000801) throw FormatError(prefix + "-labels-idx1-ubyte: bad header");
  const std::size_t n = be32(img.data() + 4);
  const std::size_t rows = be32(img.data() + 8);
  const std::size_t cols = be32(img.data() + 12);
  if (be32(lab.data() + 4) != n) throw FormatError(prefix + ": image and label counts differ");
  if (img.size() != 16 + n * rows * cols || lab.size() != 8 + n) throw FormatError(prefix + ": truncated IDX file");
  Dataset d;
  d.shape = {rows, cols, 1};
  d.bits.resize(n * rows * cols);
  for (std::size_t i = 0; i < d.bits.size(); ++i) d.bits[i] = binarize_pixel(img[16 + i]);
  d.labels.assign(lab.begin() + 8, lab.end());
  for (auto l : d.labels) {
    if (l > 9) throw FormatError(prefix + ": label out of range");
  }
  return d;
}

Dataset load_cifar10(const std::string& dir, bool train) {
  std::vector<std::string> files;
  if (train) {
    for (int i = 1; i <= 5; ++i) files.push_back(dir + "/data_batch_" + std::to_string(i) + ".bin");
  } else {
    files.push_back(dir + "/test_batch.bin");
  }
  constexpr std::size_t kPix = 32 * 32;
  constexpr std::size_t kRecord = 1 + 3 * kPix;
  Dataset d;
  d.shape = {32, 32, 3};
  for (const auto& f : files) {
    const auto raw = read_file(f);
    if (raw.empty() || raw.size() % kRecord != 0) throw FormatError(f + ": not a CIFAR-10 batch file");
    const std::size_t n = raw.size() / kRecord;
    const std::size_t base = d.bits.size();
    d.bits.resize(base + n * 3 * kPix);
    for (std::size_t r = 0; r < n; ++r) {
      const std::uint8_t* rec = raw.data() + r * kRecord;
      if (rec[0] > 9) throw FormatError(f + ": label out of range");
      d.labels.push_back(rec[0]);
      // Records are channel-major; images are stored HWC.
      std::uint8_t* dst = d.bits.data() + base + r * 3 * kPix;
      for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t p = 0; p < kPix; ++p) dst[p * 3 + c] = binarize_pixel(rec[1 + c * kPix + p]);
      }
    }
  }
  return d;
}

std::string dataset_dir(DatasetId id, const std::string& root) {
  return root + (id == DatasetId::kMnist ? "/mnist" : "/cifar-10-batches-bin");
}

Dataset load_dataset(DatasetId id, const std::string& root, bool train) {
  const auto dir = dataset_dir(id, root);
  return id == DatasetId::kMnist ? load_mnist(dir, train) : load_cifar10(dir, train);
}

std::string default_data_root() {
  if (const char* env = std::getenv("TGC_DATA_ROOT"); env && *env) return env;
  return TGC_DEFAULT_DATA_ROOT;
}

std::pair<Dataset, Dataset> split_tail(Dataset data, std::size_t n) {
  if (n > data.size()) throw InvalidArgument("cannot split off more examples than the dataset holds");
  const std::size_t keep = data.size() - n;
  Dataset tail;
  tail.shape = data.shape;
  tail.num_classes = data.num_classes;
  tail.bits.assign(data.bits.begin() + static_cast<long>(keep * data.shape.size()), data.bits.end());
  tail.labels.assign(data.labels.begin() + static_cast<long>(keep), data.labels.end());
  data.bits.resize(keep * data.shape.size());
  data.labels.resize(keep);
  return {std::move(data), std::move(tail)};
}

Dataset take_first(const Dataset& data, std::size_t n) {
  n = std::min(n, data.size());
  Dataset d;
  d.shape = data.shape;
  d.num_classes = data.num_classes;
  d.bits.assign(data.bits.begin(), data.bits.begin() + static_cast<long>(n * data.shape.size()));
  d.labels.assign(data.labels.begin(), data.labels.begin() + static_cast<long>(n));
  return d;
}

void write_idx_images(const std::string& path, std::size_t rows, std::size_t cols,
                      std::span<const std::uint8_t> pixels) {
  if (rows * cols == 0 || pixels.size() % (rows * cols) != 0) throw InvalidArgument("pixel count not a whole number of images");
  auto out = open_out(path);
  put_be32(out, 0x00000803);
  put_be32(out, static_cast<std::uint32_t>(pixels.size() / (rows * cols)));
  put_be32(out, static_cast<std::uint32_t>(rows));
  put_be32(out, static_cast<std::uint32_t>(cols));
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

void write_idx_labels(const std::string& path, std::span<const std::uint8_t> labels) {
  auto out = open_out(path);
  put_be32(out, 0x00000801);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

void write_cifar_batch(const std::string& path, std::span<const std::uint8_t> chw, std::span<const std::uint8_t> labels) {
  constexpr std::size_t kImg = 3 * 32 * 32;
  if (chw.size() != labels.size() * kImg) throw InvalidArgument("pixel count does not match label count");
  auto out = open_out(path);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out.put(static_cast<char>(labels[i]));
    out.write(reinterpret_cast<const char*>(chw.data() + i * kImg), kImg);
  }
}

std::vector<std::uint8_t> load_image_bits(const std::string& path, const ActShape& expect) {
  const auto raw = read_file(path);
  if (raw.size() >= 2 && raw[0] == 'P' && (raw[1] == '5' || raw[1] == '6')) {
    const std::size_t channels = raw[1] == '5' ? 1 : 3;
    // Header: magic, width, height, maxval, each separated by whitespace
    // (comments allowed), then exactly one whitespace byte.
    std::size_t pos = 2;
    std::size_t fields[3];
    for (auto& f : fields) {
      for (;;) {
        while (pos < raw.size() && std::isspace(raw[pos])) ++pos;
        if (pos < raw.size() && raw[pos] == '#') {
          while (pos < raw.size() && raw[pos] != '\n') ++pos;
          continue;
        }
        break;
      }
      std::size_t v = 0;
      const std::size_t start = pos;
      while (pos < raw.size() && std::isdigit(raw[pos])) v = v * 10 + (raw[pos++] - '0');
      if (pos == start) throw FormatError(path + ": malformed PNM header");
      f = v;
    }
    ++pos;
    const std::size_t w = fields[0], h = fields[1], maxval = fields[2];
    if (maxval == 0 || maxval > 255) throw FormatError(path + ": only 8-bit PNM images are supported");
    if (h != expect.h || w != expect.w || channels != expect.c) {
      throw ShapeError(path + ": image is " + std::to_string(h) + "x" + std::to_string(w) + "x" +
                       std::to_string(channels) + ", model expects " + std::to_string(expect.h) + "x" +
                       std::to_string(expect.w) + "x" + std::to_string(expect.c));
    }
    if (raw.size() < pos + h * w * channels) throw FormatError(path + ": truncated pixel data");
    std::vector<std::uint8_t> bits(h * w * channels);
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = raw[pos + i] * 2 >= maxval + 1 ? 1 : 0;
    return bits;
  }
  std::vector<std::uint8_t> bits;
  for (auto ch : raw) {
    if (ch == '0' || ch == '1') bits.push_back(static_cast<std::uint8_t>(ch - '0'));
    else if (!std::isspace(ch)) throw FormatError(path + ": expected a PGM/PPM image or a text file of 0/1 digits");
  }
  if (bits.size() != expect.size()) {
    throw ShapeError(path + ": " + std::to_string(bits.size()) + " bits, model expects " + std::to_string(expect.size()));
  }
  return bits;
}

void save_image_bits(const std::string& path, const ActShape& shape, std::span<const std::uint8_t> bits) {
  if (shape.c != 1 && shape.c != 3) throw InvalidArgument("PNM output needs 1 or 3 channels");
  if (bits.size() != shape.size()) throw ShapeError("bit count does not match image shape");
  auto out = open_out(path);
  out << (shape.c == 1 ? "P5" : "P6") << '\n' << shape.w << ' ' << shape.h << "\n255\n";
  for (auto b : bits) out.put(b ? static_cast<char>(255) : 0);
}

}  // namespace tgc
