#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "tgc/block.hpp"
#include "tgc/errors.hpp"

namespace tgc {

/// Batched 1-out-of-2 OT on 16-byte messages.
///
/// kGroup is the simplest-OT construction over ristretto255: the sender
/// publishes A = aG; for choice c the receiver sends B = bG (c = 0) or
/// A + bG (c = 1) and keeps k = H(bA); the sender derives k0 = H(aB) and
/// k1 = H(aB - aA) and returns both messages under authenticated encryption.
/// kSimulated sends the choice bits in the clear and exists only for tests.
enum class OtMode : std::uint8_t { kGroup = 1, kSimulated = 2 };

std::string_view to_string(OtMode mode);

inline constexpr std::size_t kPointBytes = 32;
inline constexpr std::size_t kOtCiphertextBytes = kLabelBytes + 16;  // message + tag

using Point = std::array<std::uint8_t, kPointBytes>;
using OtKey = std::array<std::uint8_t, 32>;

class OtError : public Error {
 public:
  using Error::Error;
};

struct OtSender {
  std::array<std::uint8_t, 32> a{};  // secret scalar
  Point A{};                         // published point
  Point aA{};
};

/// Fresh sender secret. Run once per session.
OtSender ot_sender_setup();

struct OtReceiverState {
  OtMode mode = OtMode::kGroup;
  Point sender_point{};
  std::vector<OtKey> keys;
};

/// Request bytes: u32 count, then one point per instance (group mode) or
/// one choice byte per instance (simulated mode).
struct OtReceiverRound {
  std::vector<std::uint8_t> request;
  OtReceiverState state;
};

OtReceiverRound ot_receiver_round(OtMode mode, std::span<const std::uint8_t> choices, const Point& sender_point);

/// Response bytes: u32 count, then per instance two ciphertexts (group mode)
/// or the chosen message in the clear (simulated mode). Throws OtError on a
/// malformed point or a count mismatch.
std::vector<std::uint8_t> ot_sender_round(OtMode mode, const OtSender& sender,
                                          std::span<const std::pair<Block, Block>> messages,
                                          std::span<const std::uint8_t> request);

/// Throws OtError if the response is malformed or fails authentication.
std::vector<Block> ot_receiver_finish(OtMode mode, std::span<const std::uint8_t> response,
                                      const OtReceiverState& state, std::span<const std::uint8_t> choices);

std::size_t ot_request_bytes(OtMode mode, std::size_t instances);
std::size_t ot_response_bytes(OtMode mode, std::size_t instances);

/// Exposed for negative tests: tries to open one ciphertext of instance i
/// under `key`; false when authentication fails.
bool ot_open(const OtKey& key, std::uint32_t instance, int which, std::span<const std::uint8_t> ciphertext,
             Block& out);

}  // namespace tgc
