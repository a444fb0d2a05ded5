#include "tgc/ot.hpp"

#include <sodium.h>

#include "tgc/bytes.hpp"

namespace tgc {

namespace {

void init_sodium() {
  if (sodium_init() < 0) throw Error("libsodium initialisation failed");
}

OtKey derive_key(const Point& shared, const Point& a_point, const Point& b_point, std::uint32_t instance) {
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, 32);
  static constexpr char kDomain[] = "tgc-ot-key-v1";
  crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(kDomain), sizeof kDomain - 1);
  crypto_generichash_update(&st, shared.data(), shared.size());
  crypto_generichash_update(&st, a_point.data(), a_point.size());
  crypto_generichash_update(&st, b_point.data(), b_point.size());
  std::uint8_t idx[4];
  std::memcpy(idx, &instance, 4);
  crypto_generichash_update(&st, idx, 4);
  OtKey k;
  crypto_generichash_final(&st, k.data(), k.size());
  return k;
}

std::array<std::uint8_t, crypto_aead_chacha20poly1305_ietf_NPUBBYTES> nonce_for(std::uint32_t instance, int which) {
  std::array<std::uint8_t, crypto_aead_chacha20poly1305_ietf_NPUBBYTES> n{};
  std::memcpy(n.data(), &instance, 4);
  n[4] = static_cast<std::uint8_t>(which);
  return n;
}

void seal(const OtKey& key, std::uint32_t instance, int which, const Block& msg, std::uint8_t* out) {
  std::uint8_t plain[kLabelBytes];
  msg.to_bytes(plain);
  const auto nonce = nonce_for(instance, which);
  unsigned long long clen = 0;
  crypto_aead_chacha20poly1305_ietf_encrypt(out, &clen, plain, sizeof plain, nullptr, 0, nullptr, nonce.data(),
                                            key.data());
}

std::uint32_t read_count(ByteReader& r, std::size_t expected, const char* what) {
  const auto n = r.u32();
  if (n != expected) {
    throw OtError(std::string(what) + ": " + std::to_string(n) + " instances, expected " + std::to_string(expected));
  }
  return n;
}

}  // namespace

std::string_view to_string(OtMode mode) {
  switch (mode) {
    case OtMode::kGroup: return "group";
    case OtMode::kSimulated: return "simulated";
  }
  return "unknown";
}

std::size_t ot_request_bytes(OtMode mode, std::size_t n) {
  return 4 + n * (mode == OtMode::kGroup ? kPointBytes : 1);
}

std::size_t ot_response_bytes(OtMode mode, std::size_t n) {
  return 4 + n * (mode == OtMode::kGroup ? 2 * kOtCiphertextBytes : kLabelBytes);
}

OtSender ot_sender_setup() {
  init_sodium();
  OtSender s;
  crypto_core_ristretto255_scalar_random(s.a.data());
  if (crypto_scalarmult_ristretto255_base(s.A.data(), s.a.data()) != 0 ||
      crypto_scalarmult_ristretto255(s.aA.data(), s.a.data(), s.A.data()) != 0) {
    throw OtError("sender setup produced the identity element");
  }
  return s;
}

OtReceiverRound ot_receiver_round(OtMode mode, std::span<const std::uint8_t> choices, const Point& sender_point) {
  init_sodium();
  for (auto c : choices) {
    if (c > 1) throw OtError("choice bits must be 0 or 1");
  }
  OtReceiverRound round;
  round.state.mode = mode;
  round.state.sender_point = sender_point;
  ByteWriter w;
  w.buffer().reserve(ot_request_bytes(mode, choices.size()));
  w.u32(static_cast<std::uint32_t>(choices.size()));
  if (mode == OtMode::kSimulated) {
    for (auto c : choices) w.u8(c);
    round.request = w.take();
    return round;
  }
  if (!crypto_core_ristretto255_is_valid_point(sender_point.data())) throw OtError("invalid sender point");
  round.state.keys.resize(choices.size());
  std::uint8_t b[crypto_core_ristretto255_SCALARBYTES];
  Point bg, B, shared;
  for (std::size_t i = 0; i < choices.size(); ++i) {
    crypto_core_ristretto255_scalar_random(b);
    if (crypto_scalarmult_ristretto255_base(bg.data(), b) != 0) throw OtError("receiver scalar is zero");
    if (choices[i] & 1u) {
      crypto_core_ristretto255_add(B.data(), sender_point.data(), bg.data());
    } else {
      B = bg;
    }
    if (crypto_scalarmult_ristretto255(shared.data(), b, sender_point.data()) != 0) {
      throw OtError("degenerate shared point");
    }
    round.state.keys[i] = derive_key(shared, sender_point, B, static_cast<std::uint32_t>(i));
    w.raw(B.data(), B.size());
  }
  sodium_memzero(b, sizeof b);
  round.request = w.take();
  return round;
}

std::vector<std::uint8_t> ot_sender_round(OtMode mode, const OtSender& sender,
                                          std::span<const std::pair<Block, Block>> messages,
                                          std::span<const std::uint8_t> request) {
  init_sodium();
  ByteReader r(request, "OT request");
  ByteWriter w;
  w.buffer().reserve(ot_response_bytes(mode, messages.size()));
  try {
    const auto n = read_count(r, messages.size(), "OT request");
    w.u32(n);
    if (mode == OtMode::kSimulated) {
      std::uint8_t buf[kLabelBytes];
      for (std::uint32_t i = 0; i < n; ++i) {
        const auto c = r.u8();
        if (c > 1) throw OtError("OT request: choice byte out of range");
        (c ? messages[i].second : messages[i].first).to_bytes(buf);
        w.raw(buf, sizeof buf);
      }
      r.expect_done();
      return w.take();
    }
    Point B, aB, aB_minus_aA;
    std::uint8_t ct[kOtCiphertextBytes];
    for (std::uint32_t i = 0; i < n; ++i) {
      r.raw(B.data(), B.size());
      if (!crypto_core_ristretto255_is_valid_point(B.data())) {
        throw OtError("OT request: malformed group element at instance " + std::to_string(i));
      }
      if (crypto_scalarmult_ristretto255(aB.data(), sender.a.data(), B.data()) != 0) {
        throw OtError("OT request: identity element at instance " + std::to_string(i));
      }
      crypto_core_ristretto255_sub(aB_minus_aA.data(), aB.data(), sender.aA.data());
      seal(derive_key(aB, sender.A, B, i), i, 0, messages[i].first, ct);
      w.raw(ct, sizeof ct);
      seal(derive_key(aB_minus_aA, sender.A, B, i), i, 1, messages[i].second, ct);
      w.raw(ct, sizeof ct);
    }
    r.expect_done();
  } catch (const OtError&) {
    throw;
  } catch (const FormatError& e) {
    throw OtError(e.what());
  }
  return w.take();
}

bool ot_open(const OtKey& key, std::uint32_t instance, int which, std::span<const std::uint8_t> ct, Block& out) {
  if (ct.size() != kOtCiphertextBytes) return false;
  std::uint8_t plain[kLabelBytes];
  unsigned long long plen = 0;
  const auto nonce = nonce_for(instance, which);
  if (crypto_aead_chacha20poly1305_ietf_decrypt(plain, &plen, nullptr, ct.data(), ct.size(), nullptr, 0,
                                                nonce.data(), key.data()) != 0) {
    return false;
  }
  out = Block::from_bytes(plain);
  return true;
}

std::vector<Block> ot_receiver_finish(OtMode mode, std::span<const std::uint8_t> response,
                                      const OtReceiverState& state, std::span<const std::uint8_t> choices) {
  ByteReader r(response, "OT response");
  std::vector<Block> out(choices.size());
  try {
    const auto n = read_count(r, choices.size(), "OT response");
    if (mode == OtMode::kSimulated) {
      for (std::uint32_t i = 0; i < n; ++i) out[i] = Block::from_bytes(r.bytes(kLabelBytes).data());
      r.expect_done();
      return out;
    }
    if (state.keys.size() != n) throw OtError("OT receiver state does not match the response");
    for (std::uint32_t i = 0; i < n; ++i) {
      const auto ct0 = r.bytes(kOtCiphertextBytes);
      const auto ct1 = r.bytes(kOtCiphertextBytes);
      const int c = choices[i] & 1;
      if (!ot_open(state.keys[i], i, c, c ? ct1 : ct0, out[i])) {
        throw OtError("OT response: authentication failed at instance " + std::to_string(i));
      }
    }
    r.expect_done();
  } catch (const OtError&) {
    throw;
  } catch (const FormatError& e) {
    throw OtError(e.what());
  }
  return out;
}

}  // namespace tgc
