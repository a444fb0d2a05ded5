#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tgc/architecture.hpp"
#include "tgc/bytes.hpp"
#include "tgc/model.hpp"

namespace tgc {

/// A trained model as stored on disk: the (already scaled) architecture and
/// its parameters.
struct Model {
  Architecture arch;
  ModelParams params;

  friend bool operator==(const Model&, const Model&) = default;
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Model parameter file, little-endian throughout:
///
///   "TGCM"                      magic
///   u32                         format version (1)
///   u16 + bytes                 architecture name
///   f64                         scaling factor
///   u32 u32 u32                 input h, w, c
///   u32                         layer count L
///   L x { u8 kind, u32 units, u32 padding }
///   L x {
///     u32 rank, rank x u32      weight shape (rank 0 for pool/identity)
///     ceil(n/4) bytes           2-bit weights, element i in bits 2*(i%4)..+1
///                               of byte i/4: 00 = 0, 01 = +1, 10 = -1
///     u32 count, count x i32    thresholds
///   }
std::vector<std::uint8_t> serialize_model(const Model& model);
Model deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

/// 2-bit packing used by the parameter file.
std::vector<std::uint8_t> pack_ternary(std::span<const std::int8_t> values);
std::vector<std::int8_t> unpack_ternary(std::span<const std::uint8_t> packed, std::size_t count);

void write_architecture_header(ByteWriter& w, const Architecture& arch);
Architecture read_architecture_header(ByteReader& r);

/// Public model structure as sent in the protocol handshake: the
/// architecture header, then per layer a u64 weight count, a 1-bit-per-weight
/// nonzero mask (LSB first), and the thresholds as in the parameter file.
void write_structure(ByteWriter& w, const ModelStructure& s);
ModelStructure read_structure(ByteReader& r);
std::size_t structure_encoded_size(const ModelStructure& s);

}  // namespace tgc
