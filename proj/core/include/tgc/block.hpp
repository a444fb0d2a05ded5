#pragma once

#include <array>
#include <cstdint>
#include <cstring>

namespace tgc {

/// 128-bit wire label. Bit 0 of byte 0 is the point-and-permute bit.
struct Block {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;

  bool permute_bit() const { return lo & 1u; }
  Block operator^(const Block& o) const { return {lo ^ o.lo, hi ^ o.hi}; }
  Block& operator^=(const Block& o) {
    lo ^= o.lo;
    hi ^= o.hi;
    return *this;
  }
  friend bool operator==(const Block&, const Block&) = default;

  void to_bytes(std::uint8_t* out) const {
    std::memcpy(out, &lo, 8);
    std::memcpy(out + 8, &hi, 8);
  }
  static Block from_bytes(const std::uint8_t* in) {
    Block b;
    std::memcpy(&b.lo, in, 8);
    std::memcpy(&b.hi, in + 8, 8);
    return b;
  }
};

inline constexpr std::size_t kLabelBytes = 16;

/// Doubling in GF(2^128) with the x^128 + x^7 + x^2 + x + 1 polynomial.
inline Block gf_double(const Block& b) {
  const std::uint64_t carry = b.hi >> 63;
  return {(b.lo << 1) ^ (carry * 0x87u), (b.hi << 1) | (b.lo >> 63)};
}

/// Garbling hash H(A, B, gid) = pi(K) xor K with K = 2A xor 4B xor gid,
/// where pi is AES-128 under a fixed public key (AES-NI).
Block gate_hash(const Block& a, const Block& b, std::uint64_t gate_id);

/// Single-input variant (B = 0), used to derive keys from labels.
inline Block gate_hash(const Block& a, std::uint64_t gate_id) { return gate_hash(a, Block{}, gate_id); }

/// AES-128 in counter mode keyed by a 128-bit seed.
class Prg {
 public:
  explicit Prg(const Block& seed);
  explicit Prg(std::uint64_t seed) : Prg(Block{seed, 0x7467632d70726721ull}) {}

  Block next();
  void fill(Block* out, std::size_t n);

 private:
  alignas(16) std::array<std::uint8_t, 176> round_keys_;
  std::uint64_t counter_ = 0;
};

/// 128 bits from the operating system's CSPRNG.
Block random_block();

}  // namespace tgc
