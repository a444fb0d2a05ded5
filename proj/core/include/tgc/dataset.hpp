#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tgc/architecture.hpp"
#include "tgc/tensor.hpp"

namespace tgc {

/// Binarized images (HWC, one byte per bit) with their labels.
struct Dataset {
  ActShape shape;
  std::size_t num_classes = 10;
  std::vector<std::uint8_t> bits;
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const std::uint8_t> image(std::size_t i) const {
    return std::span<const std::uint8_t>(bits).subspan(i * shape.size(), shape.size());
  }
  BinaryTensor tensor(std::size_t i) const;
  void append(std::span<const std::uint8_t> image_bits, std::uint8_t label);
};

enum class DatasetId { kMnist, kCifar10 };

DatasetId parse_dataset_id(const std::string& name);
std::string to_string(DatasetId id);
ActShape dataset_input_shape(DatasetId id);

/// A pixel becomes bit 1 when it is at least half the maximum intensity;
/// colour images are thresholded per channel.
inline std::uint8_t binarize_pixel(std::uint8_t v) { return v >= 128 ? 1 : 0; }

/// Standard IDX files: <dir>/{train,t10k}-{images-idx3,labels-idx1}-ubyte.
Dataset load_mnist(const std::string& dir, bool train);
/// Standard binary batches: <dir>/data_batch_{1..5}.bin or test_batch.bin.
Dataset load_cifar10(const std::string& dir, bool train);
/// Resolves <root>/mnist or <root>/cifar-10-batches-bin.
Dataset load_dataset(DatasetId id, const std::string& root, bool train);
std::string dataset_dir(DatasetId id, const std::string& root);

/// $TGC_DATA_ROOT if set, else the root configured at build time.
std::string default_data_root();

/// Splits off the last `n` examples.
std::pair<Dataset, Dataset> split_tail(Dataset data, std::size_t n);
Dataset take_first(const Dataset& data, std::size_t n);

/// Writers for the same formats, used to build test fixtures.
void write_idx_images(const std::string& path, std::size_t rows, std::size_t cols,
                      std::span<const std::uint8_t> pixels);
void write_idx_labels(const std::string& path, std::span<const std::uint8_t> labels);
void write_cifar_batch(const std::string& path, std::span<const std::uint8_t> chw_pixels,
                       std::span<const std::uint8_t> labels);

/// Reads one image as circuit input bits: binary PGM (P5) or PPM (P6),
/// or a text file of 0/1 digits in HWC order. Throws unless the image has
/// the expected shape.
std::vector<std::uint8_t> load_image_bits(const std::string& path, const ActShape& expect);
/// Writes bits as a binary PGM (1 channel) or PPM (3 channels), 0 or 255.
void save_image_bits(const std::string& path, const ActShape& shape, std::span<const std::uint8_t> bits);

}  // namespace tgc
