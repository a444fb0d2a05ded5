#include "tgc/protocol.hpp"

#include <sodium.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>

#include "tgc/bytes.hpp"
#include "tgc/compiler.hpp"
#include "tgc/garble.hpp"

namespace tgc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data) {
  if (sodium_init() < 0) throw Error("libsodium initialisation failed");
  std::array<std::uint8_t, 32> out;
  crypto_hash_sha256(out.data(), data.data(), data.size());
  return out;
}

std::vector<std::uint8_t> encode_labels(std::span<const Block> labels) {
  ByteWriter w;
  w.buffer().reserve(4 + labels.size() * kLabelBytes);
  w.u32(static_cast<std::uint32_t>(labels.size()));
  std::uint8_t tmp[kLabelBytes];
  for (const auto& b : labels) {
    b.to_bytes(tmp);
    w.raw(tmp, sizeof tmp);
  }
  return w.take();
}

std::vector<Block> decode_labels(std::span<const std::uint8_t> payload, std::size_t expected, const char* what) {
  ByteReader r(payload, what);
  const auto n = r.u32();
  if (n != expected) {
    throw ProtocolError(AbortCode::kMalformed,
                        std::string(what) + ": " + std::to_string(n) + " labels, expected " + std::to_string(expected),
                        false);
  }
  std::vector<Block> out(n);
  for (auto& b : out) b = Block::from_bytes(r.bytes(kLabelBytes).data());
  r.expect_done();
  return out;
}

std::vector<std::uint8_t> encode_abort(AbortCode code, const std::string& reason) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(code));
  w.str(reason.substr(0, 1024));
  return w.take();
}

[[noreturn]] void throw_remote_abort(const Frame& f) {
  ByteReader r(f.payload, "ABORT");
  AbortCode code = AbortCode::kInternal;
  std::string reason = "(no reason)";
  try {
    const auto c = r.u8();
    if (c >= 1 && c <= static_cast<std::uint8_t>(AbortCode::kInternal)) code = static_cast<AbortCode>(c);
    reason = r.str();
  } catch (const FormatError&) {
  }
  throw ProtocolError(code, reason, true);
}

// Counts frames and turns an unexpected ABORT or message type into a
// ProtocolError.
class Session {
 public:
  Session(ByteStream& stream) : ch_(stream) {}

  void send(MsgType type, std::span<const std::uint8_t> payload) {
    ch_.send(type, payload);
    ++frames_sent_;
    ++sent_by_type_[static_cast<std::uint8_t>(type)];
  }

  Frame expect(MsgType want) {
    Frame f = ch_.receive();
    ++frames_received_;
    ++received_by_type_[static_cast<std::uint8_t>(f.type)];
    check(f.type, want, &f);
    return f;
  }

  FrameHeader expect_header(MsgType want) {
    const auto h = ch_.read_header();
    ++frames_received_;
    ++received_by_type_[static_cast<std::uint8_t>(h.type)];
    if (h.type == MsgType::kAbort) {
      Frame f{h.type, std::vector<std::uint8_t>(h.length)};
      ch_.read_body(f.payload);
      throw_remote_abort(f);
    }
    check(h.type, want, nullptr);
    return h;
  }

  // Best effort; the peer may already be gone.
  void abort(AbortCode code, const std::string& reason) {
    if (aborted_) return;
    aborted_ = true;
    try {
      send(MsgType::kAbort, encode_abort(code, reason));
    } catch (const Error&) {
    }
  }

  FrameChannel& channel() { return ch_; }
  std::size_t frames_sent() const { return frames_sent_; }
  std::size_t frames_received() const { return frames_received_; }
  std::size_t sent(MsgType t) const { return sent_by_type_[static_cast<std::uint8_t>(t)]; }
  std::size_t received(MsgType t) const { return received_by_type_[static_cast<std::uint8_t>(t)]; }
  void count_sent(MsgType t) {
    ++frames_sent_;
    ++sent_by_type_[static_cast<std::uint8_t>(t)];
  }

 private:
  void check(MsgType got, MsgType want, const Frame* f) {
    if (got == want) return;
    if (got == MsgType::kAbort && f) throw_remote_abort(*f);
    throw ProtocolError(AbortCode::kMalformed,
                        "expected " + std::string(to_string(want)) + ", received " + std::string(to_string(got)),
                        false);
  }

  FrameChannel ch_;
  std::size_t frames_sent_ = 0;
  std::size_t frames_received_ = 0;
  std::array<std::size_t, 256> sent_by_type_{};
  std::array<std::size_t, 256> received_by_type_{};
  bool aborted_ = false;
};

struct Hello {
  std::uint32_t version = 0;
  std::uint32_t garble_version = 0;
  OtMode ot_mode = OtMode::kGroup;
  std::string expect_arch;
  double expect_scale = 0;
  Point sender_point{};
};

std::vector<std::uint8_t> encode_hello(const Hello& h) {
  ByteWriter w;
  w.u32(h.version);
  w.u32(h.garble_version);
  w.u8(static_cast<std::uint8_t>(h.ot_mode));
  w.str(h.expect_arch);
  w.f64(h.expect_scale);
  w.raw(h.sender_point.data(), h.sender_point.size());
  return w.take();
}

Hello decode_hello(std::span<const std::uint8_t> payload) {
  ByteReader r(payload, "HELLO");
  Hello h;
  h.version = r.u32();
  // Later fields may change with the version; check it before parsing on.
  if (h.version != kProtocolVersion) return h;
  h.garble_version = r.u32();
  const auto mode = r.u8();
  if (mode != static_cast<std::uint8_t>(OtMode::kGroup) && mode != static_cast<std::uint8_t>(OtMode::kSimulated)) {
    throw ProtocolError(AbortCode::kMalformed, "HELLO: unknown OT mode " + std::to_string(mode), false);
  }
  h.ot_mode = static_cast<OtMode>(mode);
  h.expect_arch = r.str();
  h.expect_scale = r.f64();
  r.raw(h.sender_point.data(), h.sender_point.size());
  r.expect_done();
  return h;
}

bool same_scale(double a, double b) { return std::fabs(a - b) <= 1e-9 * std::max(1.0, std::fabs(b)); }

std::string hex_prefix(const std::array<std::uint8_t, 32>& h) { return hash_to_hex(h).substr(0, 16); }

}  // namespace

std::string_view to_string(AbortCode code) {
  switch (code) {
    case AbortCode::kVersionMismatch: return "version-mismatch";
    case AbortCode::kArchMismatch: return "architecture-mismatch";
    case AbortCode::kHashMismatch: return "circuit-hash-mismatch";
    case AbortCode::kOtModeRefused: return "ot-mode-refused";
    case AbortCode::kMalformed: return "malformed-message";
    case AbortCode::kOtFailure: return "ot-failure";
    case AbortCode::kIntegrity: return "integrity-failure";
    case AbortCode::kInternal: return "internal-error";
  }
  return "unknown";
}

ProtocolError::ProtocolError(AbortCode code, const std::string& reason, bool remote)
    : Error(std::string(remote ? "peer aborted" : "session aborted") + " (" + std::string(to_string(code)) +
            "): " + reason),
      code_(code),
      reason_(reason),
      remote_(remote) {}

std::shared_ptr<const CompiledCircuit> compile_circuit(const ModelStructure& structure) {
  auto c = std::make_shared<CompiledCircuit>();
  c->netlist = compile_model(structure);
  c->hash = c->netlist.hash();
  c->stats = count_gates(c->netlist);
  return c;
}

std::shared_ptr<const CompiledCircuit> CircuitCache::get(const ModelStructure& structure) {
  ByteWriter w;
  write_structure(w, structure);
  const auto key = sha256(w.buffer());
  {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it != entries_.end()) return it->second;
  }
  auto compiled = compile_circuit(structure);
  std::lock_guard lock(mu_);
  return entries_.emplace(key, std::move(compiled)).first->second;
}

std::size_t CircuitCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::size_t hello_payload_bytes(const std::string& expect_arch) {
  return 4 + 4 + 1 + 2 + expect_arch.size() + 8 + kPointBytes;
}

SessionEstimate estimate_session(const Netlist& netlist, const ModelStructure& structure, OtMode mode,
                                 const std::string& expect_arch) {
  const std::size_t ot_n = netlist.server_inputs.size();
  SessionEstimate e;
  e.offline_bytes = kFrameHeaderBytes + hello_payload_bytes(expect_arch) +
                    kFrameHeaderBytes + 4 + structure_encoded_size(structure) + 32 + 8 +
                    kFrameHeaderBytes + ot_request_bytes(mode, ot_n) +
                    estimate_communication(netlist).total() +
                    kFrameHeaderBytes + ot_response_bytes(mode, ot_n);
  e.online_bytes = kFrameHeaderBytes + 4 + netlist.output_bit_count() * kLabelBytes;
  return e;
}

InferenceResult run_client(const ClientConfig& config, std::span<const std::uint8_t> image_bits) {
  if (config.ot_mode == OtMode::kSimulated && !config.allow_insecure_ot) {
    throw InvalidArgument("simulated OT sends weight choices in the clear; pass --allow-insecure-ot to allow it");
  }
  auto stream = tcp_connect(config.connect);
  stream->set_timeout(config.timeout_seconds);
  return run_client(*stream, config, image_bits);
}

InferenceResult run_client(ByteStream& stream, const ClientConfig& config, std::span<const std::uint8_t> image_bits) {
  if (config.ot_mode == OtMode::kSimulated && !config.allow_insecure_ot) {
    throw InvalidArgument("simulated OT sends weight choices in the clear; pass --allow-insecure-ot to allow it");
  }
  const auto t0 = Clock::now();
  const auto sent0 = stream.bytes_written();
  const auto recv0 = stream.bytes_read();
  Session s(stream);

  const OtSender ot = config.ot_mode == OtMode::kGroup ? ot_sender_setup() : OtSender{};
  Hello hello;
  hello.version = config.protocol_version;
  hello.garble_version = kGarbleVersion;
  hello.ot_mode = config.ot_mode;
  hello.expect_arch = config.expect_arch;
  hello.expect_scale = config.expect_scale;
  hello.sender_point = ot.A;
  s.send(MsgType::kHello, encode_hello(hello));

  // Handshake: the server answers with the public structure and its hash.
  const Frame ack = s.expect(MsgType::kHelloAck);
  ModelStructure structure;
  std::array<std::uint8_t, 32> server_hash{};
  std::uint64_t ot_count = 0;
  try {
    ByteReader r(ack.payload, "HELLO_ACK");
    const auto version = r.u32();
    if (version != kProtocolVersion) {
      throw ProtocolError(AbortCode::kVersionMismatch, "server speaks version " + std::to_string(version), false);
    }
    structure = read_structure(r);
    r.raw(server_hash.data(), server_hash.size());
    ot_count = r.u64();
    r.expect_done();
  } catch (const ProtocolError& e) {
    s.abort(e.code(), e.reason());
    throw;
  } catch (const FormatError& e) {
    s.abort(AbortCode::kMalformed, e.what());
    throw ProtocolError(AbortCode::kMalformed, e.what(), false);
  }

  auto fail = [&](AbortCode code, const std::string& reason) {
    s.abort(code, reason);
    throw ProtocolError(code, reason, false);
  };
  if (!config.expect_arch.empty() && structure.arch.name != config.expect_arch) {
    fail(AbortCode::kArchMismatch, "server runs '" + structure.arch.name + "', expected '" + config.expect_arch + "'");
  }
  if (config.expect_scale != 0 && !same_scale(structure.arch.scaling_factor, config.expect_scale)) {
    fail(AbortCode::kArchMismatch, "server scaling factor " + std::to_string(structure.arch.scaling_factor) +
                                       ", expected " + std::to_string(config.expect_scale));
  }
  std::shared_ptr<const CompiledCircuit> circuit;
  try {
    circuit = config.cache ? config.cache->get(structure) : compile_circuit(structure);
  } catch (const Error& e) {
    fail(AbortCode::kMalformed, std::string("cannot compile advertised structure: ") + e.what());
  }
  if (circuit->hash != server_hash) {
    fail(AbortCode::kHashMismatch, "circuit hash " + hex_prefix(circuit->hash) + " differs from server's " +
                                       hex_prefix(server_hash));
  }
  if (config.expect_hash && *config.expect_hash != circuit->hash) {
    fail(AbortCode::kHashMismatch, "server circuit " + hex_prefix(circuit->hash) + " is not the pinned circuit " +
                                       hex_prefix(*config.expect_hash));
  }
  const Netlist& net = circuit->netlist;
  if (ot_count != net.server_inputs.size()) fail(AbortCode::kMalformed, "OT instance count does not match circuit");
  if (image_bits.size() != net.client_inputs.size()) {
    fail(AbortCode::kInternal, "image has " + std::to_string(image_bits.size()) + " bits, circuit expects " +
                                   std::to_string(net.client_inputs.size()));
  }

  const Frame ot_request = s.expect(MsgType::kOtReceiver);

  // Fresh seed per session: a garbling is never reused.
  Garbler garbler(net, random_block());
  const auto& enc = garbler.encoding();
  std::vector<Block> own(2 + net.client_inputs.size());
  own[0] = enc.label(0, false);
  own[1] = enc.label(1, true);
  for (std::size_t i = 0; i < image_bits.size(); ++i) own[2 + i] = enc.label(2 + i, image_bits[i] & 1u);

  std::vector<std::pair<Block, Block>> messages(net.server_inputs.size());
  const std::size_t base = 2 + net.client_inputs.size();
  for (std::size_t j = 0; j < messages.size(); ++j) {
    messages[j] = {enc.label(base + j, false), enc.label(base + j, true)};
  }
  std::vector<std::uint8_t> ot_response;
  try {
    ot_response = ot_sender_round(config.ot_mode, ot, messages, ot_request.payload);
  } catch (const OtError& e) {
    fail(AbortCode::kOtFailure, e.what());
  }
  messages.clear();
  messages.shrink_to_fit();

  s.send(MsgType::kClientInputLabels, encode_labels(own));
  s.send(MsgType::kOtSender, ot_response);

  const std::uint64_t tables = circuit->stats.non_xor;
  const std::uint64_t gc_len = kGarbledHeaderBytes + tables * kTableBytes;
  if (gc_len > 0xFFFFFFFFull) fail(AbortCode::kInternal, "garbled circuit exceeds the 4 GiB frame limit");
  auto& ch = s.channel();
  ch.begin(MsgType::kGarbledCircuit, static_cast<std::uint32_t>(gc_len));
  s.count_sent(MsgType::kGarbledCircuit);
  {
    ByteWriter hdr;
    hdr.u32(kGarbleVersion);
    hdr.raw(circuit->hash.data(), circuit->hash.size());
    hdr.u64(tables);
    ch.write_body(hdr.buffer());
  }
  const OutputDecoding dec = garbler.garble([&](std::span<const std::uint8_t> chunk) { ch.write_body(chunk); });
  const auto t_offline = Clock::now();
  const auto offline_bytes = (stream.bytes_written() - sent0) + (stream.bytes_read() - recv0);

  const Frame out = s.expect(MsgType::kOutputLabels);
  std::vector<std::uint8_t> bits;
  try {
    const auto labels = decode_labels(out.payload, net.output_bit_count(), "OUTPUT_LABELS");
    bits = decode_outputs(dec, labels);
  } catch (const IntegrityError& e) {
    throw ProtocolError(AbortCode::kIntegrity, e.what(), false);
  } catch (const FormatError& e) {
    throw ProtocolError(AbortCode::kMalformed, e.what(), false);
  }

  InferenceResult res;
  res.scores = output_scores(net, bits);
  res.label = argmax_lowest(res.scores);
  res.circuit_hash = circuit->hash;
  auto& m = res.metrics;
  m.total_seconds = seconds_since(t0);
  m.offline_seconds = std::chrono::duration<double>(t_offline - t0).count();
  m.online_seconds = m.total_seconds - m.offline_seconds;
  m.bytes_sent = stream.bytes_written() - sent0;
  m.bytes_received = stream.bytes_read() - recv0;
  m.offline_bytes = offline_bytes;
  m.online_bytes = m.total_bytes() - offline_bytes;
  m.table_bytes = tables * kTableBytes;
  m.ot_instances = net.server_inputs.size();
  m.non_xor = tables;
  m.frames_sent = s.frames_sent();
  m.frames_received = s.frames_received();
  // One request answered by one response is one round trip.
  m.ot_round_trips = std::min(s.received(MsgType::kOtReceiver), s.sent(MsgType::kOtSender));
  return res;
}

Server::Server(Model model, ServerConfig config) : model_(std::move(model)), config_(std::move(config)) {
  structure_ = public_structure(model_.arch, model_.params);
  ByteWriter w;
  write_structure(w, structure_);
  structure_bytes_ = w.take();
  circuit_ = config_.cache ? config_.cache->get(structure_) : compile_circuit(structure_);
  weight_bits_ = weight_sign_bits(model_.params);
  if (weight_bits_.size() != circuit_->netlist.server_inputs.size()) {
    throw ShapeError("weight bits do not match the compiled circuit");
  }
}

SessionLog Server::serve(ByteStream& stream) {
  SessionLog log;
  const auto t0 = Clock::now();
  const auto sent0 = stream.bytes_written();
  const auto recv0 = stream.bytes_read();
  if (auto* tcp = dynamic_cast<TcpStream*>(&stream)) {
    log.peer = tcp->peer();
    tcp->set_timeout(config_.timeout_seconds);
  }
  Session s(stream);
  const Netlist& net = circuit_->netlist;
  auto fail = [&](AbortCode code, const std::string& reason) {
    s.abort(code, reason);
    throw ProtocolError(code, reason, false);
  };

  try {
    Hello hello;
    try {
      hello = decode_hello(s.expect(MsgType::kHello).payload);
    } catch (const FormatError& e) {
      fail(AbortCode::kMalformed, e.what());
    }
    if (hello.version != kProtocolVersion) {
      fail(AbortCode::kVersionMismatch, "client speaks protocol version " + std::to_string(hello.version) +
                                            ", server speaks " + std::to_string(kProtocolVersion));
    }
    if (hello.garble_version != kGarbleVersion) {
      fail(AbortCode::kVersionMismatch, "client garbling scheme " + std::to_string(hello.garble_version) +
                                            " is not supported");
    }
    if (hello.ot_mode == OtMode::kSimulated && !config_.allow_insecure_ot) {
      fail(AbortCode::kOtModeRefused, "simulated OT refused; start the server with --allow-insecure-ot to allow it");
    }
    if (!hello.expect_arch.empty() && hello.expect_arch != model_.arch.name) {
      fail(AbortCode::kArchMismatch, "client expects '" + hello.expect_arch + "', server runs '" +
                                         model_.arch.name + "'");
    }
    if (hello.expect_scale != 0 && !same_scale(hello.expect_scale, model_.arch.scaling_factor)) {
      fail(AbortCode::kArchMismatch, "client expects scaling factor " + std::to_string(hello.expect_scale) +
                                         ", server runs " + std::to_string(model_.arch.scaling_factor));
    }

    ByteWriter ack;
    ack.u32(kProtocolVersion);
    ack.raw(structure_bytes_.data(), structure_bytes_.size());
    ack.raw(circuit_->hash.data(), circuit_->hash.size());
    ack.u64(weight_bits_.size());
    s.send(MsgType::kHelloAck, ack.buffer());

    OtReceiverRound ot;
    try {
      ot = ot_receiver_round(hello.ot_mode, weight_bits_, hello.sender_point);
    } catch (const OtError& e) {
      fail(AbortCode::kOtFailure, e.what());
    }
    s.send(MsgType::kOtReceiver, ot.request);
    log.ot_instances = weight_bits_.size();

    const Frame own = s.expect(MsgType::kClientInputLabels);
    std::vector<Block> labels;
    try {
      labels = decode_labels(own.payload, 2 + net.client_inputs.size(), "CLIENT_INPUT_LABELS");
    } catch (const FormatError& e) {
      fail(AbortCode::kMalformed, e.what());
    }
    crypto_generichash(log.label_digest.data(), log.label_digest.size(), own.payload.data(), own.payload.size(),
                       nullptr, 0);

    const Frame ot_resp = s.expect(MsgType::kOtSender);
    std::vector<Block> weight_labels;
    try {
      weight_labels = ot_receiver_finish(hello.ot_mode, ot_resp.payload, ot.state, weight_bits_);
    } catch (const OtError& e) {
      fail(AbortCode::kOtFailure, e.what());
    }
    labels.insert(labels.end(), weight_labels.begin(), weight_labels.end());

    const auto h = s.expect_header(MsgType::kGarbledCircuit);
    auto& ch = s.channel();
    std::uint8_t hdr[kGarbledHeaderBytes];
    if (h.length < kGarbledHeaderBytes) fail(AbortCode::kMalformed, "GARBLED_CIRCUIT shorter than its header");
    ch.read_body(hdr);
    ByteReader hr(hdr, "GARBLED_CIRCUIT header");
    const auto gver = hr.u32();
    std::array<std::uint8_t, 32> ghash;
    hr.raw(ghash.data(), ghash.size());
    const auto count = hr.u64();
    if (gver != kGarbleVersion) fail(AbortCode::kVersionMismatch, "garbled circuit version " + std::to_string(gver));
    if (ghash != circuit_->hash) fail(AbortCode::kHashMismatch, "garbled circuit is bound to a different netlist");
    if (count != circuit_->stats.non_xor || h.length != kGarbledHeaderBytes + count * kTableBytes) {
      fail(AbortCode::kMalformed, "garbled circuit table count does not match the netlist");
    }
    log.table_bytes = count * kTableBytes;

    std::vector<Block> out;
    if (config_.stream_tables) {
      out = evaluate_stream(net, labels, [&](std::span<std::uint8_t> dst) { ch.read_body(dst); });
    } else {
      std::vector<std::uint8_t> body(count * kTableBytes);
      ch.read_body(body);
      GarbledCircuit gc;
      gc.circuit_hash = ghash;
      gc.tables.resize(count * 4);
      for (std::size_t i = 0; i < gc.tables.size(); ++i) gc.tables[i] = Block::from_bytes(body.data() + i * kLabelBytes);
      body.clear();
      body.shrink_to_fit();
      out = evaluate(gc, net, labels);
    }
    s.send(MsgType::kOutputLabels, encode_labels(out));
    log.ok = true;
  } catch (const ProtocolError& e) {
    if (!e.remote()) s.abort(e.code(), e.reason());
    log.error = e.what();
    log.abort = e.code();
  } catch (const FormatError& e) {
    s.abort(AbortCode::kMalformed, e.what());
    log.error = e.what();
    log.abort = AbortCode::kMalformed;
  } catch (const TransportError& e) {
    log.error = e.what();
  } catch (const std::exception& e) {
    s.abort(AbortCode::kInternal, e.what());
    log.error = e.what();
    log.abort = AbortCode::kInternal;
  }
  log.bytes_sent = stream.bytes_written() - sent0;
  log.bytes_received = stream.bytes_read() - recv0;
  log.seconds = seconds_since(t0);
  return log;
}

void Server::run(TcpListener& listener, std::size_t max_sessions,
                 const std::function<void(const SessionLog&)>& on_session) {
  for (std::size_t n = 0; max_sessions == 0 || n < max_sessions; ++n) {
    auto conn = listener.accept();
    const auto log = serve(*conn);
    conn->close();
    if (on_session) on_session(log);
  }
}

std::string hash_to_hex(const std::array<std::uint8_t, 32>& h) {
  char buf[65];
  sodium_bin2hex(buf, sizeof buf, h.data(), h.size());
  return buf;
}

std::array<std::uint8_t, 32> hash_from_hex(const std::string& hex) {
  std::array<std::uint8_t, 32> h{};
  std::size_t len = 0;
  const char* end = nullptr;
  if (hex.size() != 64 || sodium_hex2bin(h.data(), h.size(), hex.data(), hex.size(), nullptr, &len, &end) != 0 ||
      len != h.size()) {
    throw InvalidArgument("circuit hash must be 64 hex digits");
  }
  return h;
}

}  // namespace tgc
