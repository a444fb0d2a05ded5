#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "tgc/transport.hpp"

namespace tgc {

/// Message types of wire protocol v1.
enum class MsgType : std::uint8_t {
  kHello = 0x01,
  kHelloAck = 0x02,
  kGarbledCircuit = 0x10,
  kClientInputLabels = 0x11,
  kOtReceiver = 0x20,
  kOtSender = 0x21,
  kOutputLabels = 0x30,
  kAbort = 0x7F,
};

std::string_view to_string(MsgType type);
bool is_known_type(std::uint8_t code);

/// 4-byte big-endian payload length, then the 1-byte type.
inline constexpr std::size_t kFrameHeaderBytes = 5;

struct Frame {
  MsgType type;
  std::vector<std::uint8_t> payload;
};

struct FrameHeader {
  MsgType type;
  std::uint32_t length;
};

/// Length-prefixed frames over a byte stream. Bodies may be written and
/// read in pieces so large payloads can be streamed.
class FrameChannel {
 public:
  explicit FrameChannel(ByteStream& stream, std::uint32_t max_frame = 0xFFFFFFFFu)
      : stream_(stream), max_frame_(max_frame) {}

  void send(MsgType type, std::span<const std::uint8_t> payload);
  void begin(MsgType type, std::uint32_t length);
  void write_body(std::span<const std::uint8_t> chunk);

  /// Throws FormatError on an unknown type or an oversized frame.
  FrameHeader read_header();
  void read_body(std::span<std::uint8_t> out);
  Frame receive();

  std::uint64_t bytes_sent() const { return stream_.bytes_written(); }
  std::uint64_t bytes_received() const { return stream_.bytes_read(); }
  ByteStream& stream() { return stream_; }

 private:
  ByteStream& stream_;
  std::uint32_t max_frame_;
  std::uint64_t body_left_out_ = 0;
  std::uint64_t body_left_in_ = 0;
};

}  // namespace tgc
