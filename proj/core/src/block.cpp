#include "tgc/block.hpp"

#include <sodium.h>
#include <wmmintrin.h>
#include <smmintrin.h>

#include "tgc/errors.hpp"

namespace tgc {

namespace {

template <int Rcon>
__m128i expand_step(__m128i key) {
  __m128i t = _mm_aeskeygenassist_si128(key, Rcon);
  t = _mm_shuffle_epi32(t, 0xff);
  key = _mm_xor_si128(key, _mm_slli_si128(key, 4));
  key = _mm_xor_si128(key, _mm_slli_si128(key, 4));
  key = _mm_xor_si128(key, _mm_slli_si128(key, 4));
  return _mm_xor_si128(key, t);
}

void expand_key(__m128i key, __m128i* rk) {
  rk[0] = key;
  rk[1] = expand_step<0x01>(rk[0]);
  rk[2] = expand_step<0x02>(rk[1]);
  rk[3] = expand_step<0x04>(rk[2]);
  rk[4] = expand_step<0x08>(rk[3]);
  rk[5] = expand_step<0x10>(rk[4]);
  rk[6] = expand_step<0x20>(rk[5]);
  rk[7] = expand_step<0x40>(rk[6]);
  rk[8] = expand_step<0x80>(rk[7]);
  rk[9] = expand_step<0x1b>(rk[8]);
  rk[10] = expand_step<0x36>(rk[9]);
}

inline __m128i aes_encrypt(const __m128i* rk, __m128i x) {
  x = _mm_xor_si128(x, rk[0]);
  for (int i = 1; i < 10; ++i) x = _mm_aesenc_si128(x, rk[i]);
  return _mm_aesenclast_si128(x, rk[10]);
}

inline __m128i load(const Block& b) { return _mm_set_epi64x(static_cast<long long>(b.hi), static_cast<long long>(b.lo)); }
inline Block store(__m128i v) {
  return {static_cast<std::uint64_t>(_mm_cvtsi128_si64(v)), static_cast<std::uint64_t>(_mm_extract_epi64(v, 1))};
}

// Nothing-up-my-sleeve key: the first 16 bytes of pi's hex expansion.
struct FixedKey {
  alignas(16) __m128i rk[11];
  FixedKey() { expand_key(_mm_set_epi64x(0x13198a2e03707344ll, 0x243f6a8885a308d3ll), rk); }
};

const FixedKey& fixed_key() {
  static const FixedKey k;
  return k;
}

}  // namespace

Block gate_hash(const Block& a, const Block& b, std::uint64_t gate_id) {
  const Block k = gf_double(a) ^ gf_double(gf_double(b)) ^ Block{gate_id, 0};
  const __m128i kv = load(k);
  return store(_mm_xor_si128(aes_encrypt(fixed_key().rk, kv), kv));
}

Prg::Prg(const Block& seed) {
  expand_key(load(seed), reinterpret_cast<__m128i*>(round_keys_.data()));
}

Block Prg::next() {
  const auto* rk = reinterpret_cast<const __m128i*>(round_keys_.data());
  return store(aes_encrypt(rk, _mm_set_epi64x(0, static_cast<long long>(counter_++))));
}

void Prg::fill(Block* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = next();
}

Block random_block() {
  if (sodium_init() < 0) throw Error("libsodium initialisation failed");
  std::uint8_t buf[16];
  randombytes_buf(buf, sizeof buf);
  return Block::from_bytes(buf);
}

}  // namespace tgc
