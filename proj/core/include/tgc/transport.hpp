#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>

#include "tgc/errors.hpp"

namespace tgc {

class TransportError : public Error {
 public:
  using Error::Error;
};

/// Reliable byte stream with traffic counters.
class ByteStream {
 public:
  virtual ~ByteStream() = default;
  virtual void write_all(std::span<const std::uint8_t> data) = 0;
  /// Fills `out` completely or throws TransportError (including on EOF).
  virtual void read_exact(std::span<std::uint8_t> out) = 0;
  virtual void close() = 0;

  std::uint64_t bytes_written() const { return written_; }
  std::uint64_t bytes_read() const { return read_; }

 protected:
  std::uint64_t written_ = 0;
  std::uint64_t read_ = 0;
};

/// A connected TCP socket.
class TcpStream final : public ByteStream {
 public:
  explicit TcpStream(int fd);
  ~TcpStream() override;
  TcpStream(const TcpStream&) = delete;
  TcpStream& operator=(const TcpStream&) = delete;

  void write_all(std::span<const std::uint8_t> data) override;
  void read_exact(std::span<std::uint8_t> out) override;
  void close() override;
  /// Seconds; 0 disables the timeout.
  void set_timeout(double seconds);
  std::string peer() const;

 private:
  int fd_;
};

/// Splits "host:port"; the host may be empty (all interfaces).
std::pair<std::string, std::uint16_t> parse_address(const std::string& address);

class TcpListener {
 public:
  /// Port 0 picks a free port; see port().
  explicit TcpListener(const std::string& address);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::unique_ptr<TcpStream> accept();
  std::uint16_t port() const { return port_; }
  void close();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

/// Connects, retrying for up to `retry_seconds` while the peer is not yet
/// listening.
std::unique_ptr<TcpStream> tcp_connect(const std::string& address, double retry_seconds = 5.0);

}  // namespace tgc
