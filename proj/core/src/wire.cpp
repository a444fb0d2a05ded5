#include "tgc/wire.hpp"

#include <cstdio>
#include <string>

namespace tgc {

std::string_view to_string(MsgType type) {
  switch (type) {
    case MsgType::kHello: return "HELLO";
    case MsgType::kHelloAck: return "HELLO_ACK";
    case MsgType::kGarbledCircuit: return "GARBLED_CIRCUIT";
    case MsgType::kClientInputLabels: return "CLIENT_INPUT_LABELS";
    case MsgType::kOtReceiver: return "OT_RECEIVER";
    case MsgType::kOtSender: return "OT_SENDER";
    case MsgType::kOutputLabels: return "OUTPUT_LABELS";
    case MsgType::kAbort: return "ABORT";
  }
  return "UNKNOWN";
}

bool is_known_type(std::uint8_t code) {
  switch (code) {
    case 0x01: case 0x02: case 0x10: case 0x11: case 0x20: case 0x21: case 0x30: case 0x7F:
      return true;
    default:
      return false;
  }
}

void FrameChannel::send(MsgType type, std::span<const std::uint8_t> payload) {
  if (payload.size() > 0xFFFFFFFFu) throw InvalidArgument("frame payload too large");
  begin(type, static_cast<std::uint32_t>(payload.size()));
  write_body(payload);
}

void FrameChannel::begin(MsgType type, std::uint32_t length) {
  if (body_left_out_ != 0) throw InvalidArgument("previous frame body not finished");
  const std::uint8_t hdr[kFrameHeaderBytes] = {
      static_cast<std::uint8_t>(length >> 24), static_cast<std::uint8_t>(length >> 16),
      static_cast<std::uint8_t>(length >> 8), static_cast<std::uint8_t>(length), static_cast<std::uint8_t>(type)};
  stream_.write_all(hdr);
  body_left_out_ = length;
}

void FrameChannel::write_body(std::span<const std::uint8_t> chunk) {
  if (chunk.size() > body_left_out_) throw InvalidArgument("frame body longer than announced");
  stream_.write_all(chunk);
  body_left_out_ -= chunk.size();
}

FrameHeader FrameChannel::read_header() {
  if (body_left_in_ != 0) throw InvalidArgument("previous frame body not consumed");
  std::uint8_t hdr[kFrameHeaderBytes];
  stream_.read_exact(hdr);
  const std::uint32_t len = (std::uint32_t{hdr[0]} << 24) | (std::uint32_t{hdr[1]} << 16) |
                            (std::uint32_t{hdr[2]} << 8) | std::uint32_t{hdr[3]};
  if (!is_known_type(hdr[4])) {
    char code[8];
    std::snprintf(code, sizeof code, "0x%02X", hdr[4]);
    throw FormatError(std::string("unknown message type ") + code);
  }
  if (len > max_frame_) throw FormatError("frame of " + std::to_string(len) + " bytes exceeds the limit");
  body_left_in_ = len;
  return {static_cast<MsgType>(hdr[4]), len};
}

void FrameChannel::read_body(std::span<std::uint8_t> out) {
  if (out.size() > body_left_in_) throw FormatError("read past the end of a frame");
  stream_.read_exact(out);
  body_left_in_ -= out.size();
}

Frame FrameChannel::receive() {
  const auto h = read_header();
  Frame f{h.type, std::vector<std::uint8_t>(h.length)};
  read_body(f.payload);
  return f;
}

}  // namespace tgc
