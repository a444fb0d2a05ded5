#include "tgc/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>

namespace tgc {

namespace {

std::string sys_error(const std::string& what) { return what + ": " + std::strerror(errno); }

struct AddrInfo {
  addrinfo* head = nullptr;
  ~AddrInfo() {
    if (head) freeaddrinfo(head);
  }
};

void resolve(const std::string& host, std::uint16_t port, bool passive, AddrInfo& out) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  const std::string port_s = std::to_string(port);
  const int rc = getaddrinfo(host.empty() ? nullptr : host.c_str(), port_s.c_str(), &hints, &out.head);
  if (rc != 0) throw TransportError("cannot resolve '" + host + "': " + gai_strerror(rc));
}

}  // namespace

std::pair<std::string, std::uint16_t> parse_address(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) throw InvalidArgument("address '" + address + "' is not host:port");
  std::string host = address.substr(0, colon);
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  const std::string port_s = address.substr(colon + 1);
  char* end = nullptr;
  const long port = std::strtol(port_s.c_str(), &end, 10);
  if (port_s.empty() || *end != '\0' || port < 0 || port > 65535) {
    throw InvalidArgument("address '" + address + "' has an invalid port");
  }
  return {host, static_cast<std::uint16_t>(port)};
}

TcpStream::TcpStream(int fd) : fd_(fd) {
  int one = 1;
  setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

TcpStream::~TcpStream() { close(); }

void TcpStream::close() {
  if (fd_ >= 0) {
    // Half-close and drain what the peer still sends: closing with unread
    // bytes makes the kernel reset the connection, and the reset can
    // discard a final ABORT frame the peer has not read yet.
    ::shutdown(fd_, SHUT_WR);
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(2);
    std::uint8_t sink[4096];
    for (;;) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) break;
      pollfd p{fd_, POLLIN, 0};
      const int r = ::poll(&p, 1, static_cast<int>(left.count()));
      if (r < 0 && errno == EINTR) continue;
      if (r <= 0) break;
      const ssize_t n = ::recv(fd_, sink, sizeof sink, 0);
      if (n <= 0 && !(n < 0 && errno == EINTR)) break;
    }
    ::close(fd_);
    fd_ = -1;
  }
}

void TcpStream::set_timeout(double seconds) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(seconds);
  tv.tv_usec = static_cast<suseconds_t>((seconds - static_cast<double>(tv.tv_sec)) * 1e6);
  setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
}

std::string TcpStream::peer() const {
  sockaddr_storage ss{};
  socklen_t len = sizeof ss;
  if (getpeername(fd_, reinterpret_cast<sockaddr*>(&ss), &len) != 0) return "?";
  char host[NI_MAXHOST], serv[NI_MAXSERV];
  if (getnameinfo(reinterpret_cast<sockaddr*>(&ss), len, host, sizeof host, serv, sizeof serv,
                  NI_NUMERICHOST | NI_NUMERICSERV) != 0) {
    return "?";
  }
  return std::string(host) + ":" + serv;
}

void TcpStream::write_all(std::span<const std::uint8_t> data) {
  if (fd_ < 0) throw TransportError("write on a closed connection");
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(sys_error("send failed"));
    }
    off += static_cast<std::size_t>(n);
  }
  written_ += data.size();
}

void TcpStream::read_exact(std::span<std::uint8_t> out) {
  if (fd_ < 0) throw TransportError("read on a closed connection");
  std::size_t off = 0;
  while (off < out.size()) {
    const ssize_t n = ::recv(fd_, out.data() + off, out.size() - off, 0);
    if (n == 0) throw TransportError("connection closed by peer");
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) throw TransportError("receive timed out");
      throw TransportError(sys_error("recv failed"));
    }
    off += static_cast<std::size_t>(n);
  }
  read_ += out.size();
}

TcpListener::TcpListener(const std::string& address) {
  const auto [host, port] = parse_address(address);
  AddrInfo ai;
  resolve(host, port, true, ai);
  std::string last = "no usable address";
  for (addrinfo* p = ai.head; p; p = p->ai_next) {
    const int fd = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, p->ai_addr, p->ai_addrlen) == 0 && ::listen(fd, 16) == 0) {
      fd_ = fd;
      break;
    }
    last = sys_error("bind/listen failed");
    ::close(fd);
  }
  if (fd_ < 0) throw TransportError("cannot listen on " + address + ": " + last);
  sockaddr_storage ss{};
  socklen_t len = sizeof ss;
  getsockname(fd_, reinterpret_cast<sockaddr*>(&ss), &len);
  port_ = ss.ss_family == AF_INET6 ? ntohs(reinterpret_cast<sockaddr_in6*>(&ss)->sin6_port)
                                   : ntohs(reinterpret_cast<sockaddr_in*>(&ss)->sin_port);
}

TcpListener::~TcpListener() { close(); }

void TcpListener::close() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

std::unique_ptr<TcpStream> TcpListener::accept() {
  for (;;) {
    if (fd_ < 0) throw TransportError("listener closed");
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd >= 0) return std::make_unique<TcpStream>(fd);
    if (errno == EINTR) continue;
    throw TransportError(sys_error("accept failed"));
  }
}

std::unique_ptr<TcpStream> tcp_connect(const std::string& address, double retry_seconds) {
  const auto [host, port] = parse_address(address);
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(retry_seconds);
  for (;;) {
    AddrInfo ai;
    resolve(host.empty() ? "localhost" : host, port, false, ai);
    std::string last = "no usable address";
    for (addrinfo* p = ai.head; p; p = p->ai_next) {
      const int fd = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, p->ai_addr, p->ai_addrlen) == 0) return std::make_unique<TcpStream>(fd);
      last = sys_error("connect failed");
      ::close(fd);
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      throw TransportError("cannot connect to " + address + ": " + last);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

}  // namespace tgc
