#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "tgc/errors.hpp"
#include "tgc/model_io.hpp"
#include "tgc/netlist.hpp"
#include "tgc/ot.hpp"
#include "tgc/transport.hpp"
#include "tgc/wire.hpp"

namespace tgc {

inline constexpr std::uint32_t kProtocolVersion = 1;

enum class AbortCode : std::uint8_t {
  kVersionMismatch = 1,
  kArchMismatch = 2,
  kHashMismatch = 3,
  kOtModeRefused = 4,
  kMalformed = 5,
  kOtFailure = 6,
  kIntegrity = 7,
  kInternal = 8,
};

std::string_view to_string(AbortCode code);

/// A session that ended in an ABORT, sent or received. `remote` is true
/// when the peer aborted.
class ProtocolError : public Error {
 public:
  ProtocolError(AbortCode code, const std::string& reason, bool remote);
  AbortCode code() const { return code_; }
  bool remote() const { return remote_; }
  const std::string& reason() const { return reason_; }

 private:
  AbortCode code_;
  std::string reason_;
  bool remote_;
};

/// A compiled circuit with its hash, shared between sessions that see the
/// same public model structure.
struct CompiledCircuit {
  Netlist netlist;
  std::array<std::uint8_t, 32> hash{};
  GateStats stats;
};

/// Memoizes compile_model by the encoded model structure. Thread-safe.
class CircuitCache {
 public:
  std::shared_ptr<const CompiledCircuit> get(const ModelStructure& structure);
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::array<std::uint8_t, 32>, std::shared_ptr<const CompiledCircuit>> entries_;
};

std::shared_ptr<const CompiledCircuit> compile_circuit(const ModelStructure& structure);

/// Lowercase hex of a circuit hash, and its inverse (throws InvalidArgument).
std::string hash_to_hex(const std::array<std::uint8_t, 32>& h);
std::array<std::uint8_t, 32> hash_from_hex(const std::string& hex);

/// Bytes on the wire, split the way the offline/online phases split.
struct SessionMetrics {
  double offline_seconds = 0;  // handshake, garbling, OT, circuit and label upload
  double online_seconds = 0;   // evaluation and output return, as seen by the client
  double total_seconds = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
  std::uint64_t offline_bytes = 0;
  std::uint64_t online_bytes = 0;
  std::uint64_t table_bytes = 0;
  std::uint64_t ot_instances = 0;
  std::uint64_t non_xor = 0;
  std::size_t frames_sent = 0;
  std::size_t frames_received = 0;
  std::size_t ot_round_trips = 0;

  std::uint64_t total_bytes() const { return bytes_sent + bytes_received; }
};

struct ClientConfig {
  std::string connect;                 // host:port for run_client(config, image)
  std::string expect_arch;             // empty accepts whatever the server runs
  double expect_scale = 0;             // 0 accepts any scaling factor
  std::optional<std::array<std::uint8_t, 32>> expect_hash;  // pin the circuit
  OtMode ot_mode = OtMode::kGroup;
  bool allow_insecure_ot = false;      // required for OtMode::kSimulated
  std::uint32_t protocol_version = kProtocolVersion;
  std::shared_ptr<CircuitCache> cache;
  double timeout_seconds = 600;
};

struct InferenceResult {
  std::size_t label = 0;
  std::vector<std::int32_t> scores;
  SessionMetrics metrics;
  std::array<std::uint8_t, 32> circuit_hash{};
};

/// Garbler side of one private inference over an established stream.
InferenceResult run_client(ByteStream& stream, const ClientConfig& config, std::span<const std::uint8_t> image_bits);
InferenceResult run_client(const ClientConfig& config, std::span<const std::uint8_t> image_bits);

struct ServerConfig {
  std::string listen;
  bool allow_insecure_ot = false;
  /// Evaluate while the tables arrive instead of buffering the whole
  /// circuit; bounds memory on large models at the cost of folding
  /// evaluation time into the transfer.
  bool stream_tables = false;
  std::shared_ptr<CircuitCache> cache;
  double timeout_seconds = 600;
};

struct SessionLog {
  bool ok = false;
  std::string error;
  std::optional<AbortCode> abort;
  std::string peer;
  std::uint64_t ot_instances = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
  std::uint64_t table_bytes = 0;
  double seconds = 0;
  /// Digest of the garbler's input labels, to show that sessions never
  /// reuse a garbling.
  std::array<std::uint8_t, 16> label_digest{};
};

/// Evaluator side. Holds the model; the circuit is compiled once.
class Server {
 public:
  Server(Model model, ServerConfig config);

  SessionLog serve(ByteStream& stream);
  /// Accepts and serves sessions one after another; `max_sessions` = 0
  /// means forever. Calls `on_session` after each.
  void run(TcpListener& listener, std::size_t max_sessions,
           const std::function<void(const SessionLog&)>& on_session = {});

  const ModelStructure& structure() const { return structure_; }
  const CompiledCircuit& circuit() const { return *circuit_; }

 private:
  Model model_;
  ServerConfig config_;
  ModelStructure structure_;
  std::vector<std::uint8_t> structure_bytes_;
  std::shared_ptr<const CompiledCircuit> circuit_;
  std::vector<std::uint8_t> weight_bits_;
};

/// Exact byte count of a session, from the circuit alone.
struct SessionEstimate {
  std::uint64_t offline_bytes = 0;
  std::uint64_t online_bytes = 0;
  std::uint64_t total() const { return offline_bytes + online_bytes; }
};

std::size_t hello_payload_bytes(const std::string& expect_arch);
SessionEstimate estimate_session(const Netlist& netlist, const ModelStructure& structure, OtMode mode,
                                 const std::string& expect_arch);

}  // namespace tgc
