#pragma once

// Line transports (TCP, child-process stdio), the remote victim client, and a
// small TCP server that exposes any VictimOracle over the wire protocol.

#include <atomic>
#include <cerrno>
#include <csignal>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "nodeinj/error.hpp"
#include "nodeinj/victim.hpp"
#include "nodeinj/wire.hpp"

namespace nodeinj {

/// Owning file descriptor.
class UniqueFd {
 public:
  UniqueFd() = default;
  explicit UniqueFd(int fd) : fd_(fd) {}
  UniqueFd(UniqueFd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  UniqueFd& operator=(UniqueFd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  UniqueFd(const UniqueFd&) = delete;
  UniqueFd& operator=(const UniqueFd&) = delete;
  ~UniqueFd() { reset(); }

  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }
  [[nodiscard]] int get() const noexcept { return fd_; }
  [[nodiscard]] bool valid() const noexcept { return fd_ >= 0; }

 private:
  int fd_ = -1;
};

namespace remote_detail {

inline void write_all(int fd, std::string_view data, bool socket) {
  while (!data.empty()) {
    const ssize_t n = socket ? ::send(fd, data.data(), data.size(), MSG_NOSIGNAL)
                             : ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(std::string("write failed: ") + std::strerror(errno));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

/// Buffered reader returning one line at a time without the trailing '\n'.
class LineReader {
 public:
  explicit LineReader(int fd) : fd_(fd) {}

  [[nodiscard]] bool has_buffered_line() const { return buf_.find('\n') != std::string::npos; }

  /// Returns false on clean EOF before any byte of a new line.
  bool read_line(std::string& out) {
    while (true) {
      if (const auto pos = buf_.find('\n'); pos != std::string::npos) {
        out.assign(buf_, 0, pos);
        buf_.erase(0, pos + 1);
        if (!out.empty() && out.back() == '\r') out.pop_back();
        return true;
      }
      char chunk[4096];
      const ssize_t n = ::read(fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw ProtocolError(std::string("read failed: ") + std::strerror(errno));
      }
      if (n == 0) {
        if (buf_.empty()) return false;
        out = std::move(buf_);
        buf_.clear();
        return true;
      }
      buf_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int fd_;
  std::string buf_;
};

}  // namespace remote_detail

/// Bidirectional line-oriented byte stream.
class LineTransport {
 public:
  virtual ~LineTransport() = default;
  virtual void send_line(const std::string& line) = 0;
  virtual std::string recv_line() = 0;
};

class TcpTransport final : public LineTransport {
 public:
  TcpTransport(const std::string& host, std::uint16_t port) : reader_(-1) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const auto port_str = std::to_string(port);
    if (int rc = ::getaddrinfo(host.c_str(), port_str.c_str(), &hints, &res); rc != 0) {
      throw ProtocolError("cannot resolve " + host + ": " + ::gai_strerror(rc));
    }
    std::string last_error = "no addresses";
    for (auto* ai = res; ai; ai = ai->ai_next) {
      UniqueFd fd(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
      if (!fd.valid()) continue;
      if (::connect(fd.get(), ai->ai_addr, ai->ai_addrlen) == 0) {
        int one = 1;
        ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        fd_ = std::move(fd);
        break;
      }
      last_error = std::strerror(errno);
    }
    ::freeaddrinfo(res);
    if (!fd_.valid()) throw ProtocolError("cannot connect to " + host + ":" + port_str + ": " + last_error);
    reader_ = remote_detail::LineReader(fd_.get());
  }

  void send_line(const std::string& line) override { remote_detail::write_all(fd_.get(), line + "\n", true); }

  std::string recv_line() override {
    std::string line;
    if (!reader_.read_line(line)) throw ProtocolError("connection closed by remote victim");
    return line;
  }

 private:
  UniqueFd fd_;
  remote_detail::LineReader reader_;
};

/// Runs `/bin/sh -c command` and talks to it over its stdin/stdout.
class ProcessTransport final : public LineTransport {
 public:
  explicit ProcessTransport(const std::string& command) : reader_(-1) {
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) {
      throw ProtocolError(std::string("pipe failed: ") + std::strerror(errno));
    }
    pid_ = ::fork();
    if (pid_ < 0) throw ProtocolError(std::string("fork failed: ") + std::strerror(errno));
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = UniqueFd(to_child[1]);
    read_fd_ = UniqueFd(from_child[0]);
    reader_ = remote_detail::LineReader(read_fd_.get());
    std::signal(SIGPIPE, SIG_IGN);
  }

  ~ProcessTransport() override {
    write_fd_.reset();
    read_fd_.reset();
    if (pid_ > 0) {
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
  }

  void send_line(const std::string& line) override { remote_detail::write_all(write_fd_.get(), line + "\n", false); }

  std::string recv_line() override {
    std::string line;
    if (!reader_.read_line(line)) throw ProtocolError("remote victim process closed its output");
    return line;
  }

 private:
  pid_t pid_ = -1;
  UniqueFd write_fd_;
  UniqueFd read_fd_;
  remote_detail::LineReader reader_;
};

/// Client side of the wire protocol. Calls are serialized over one transport.
class RemoteVictim final : public VictimOracle {
 public:
  explicit RemoteVictim(std::unique_ptr<LineTransport> transport) : transport_(std::move(transport)) {
    transport_->send_line(wire::info_request(0));
    const auto r = wire::parse_response(transport_->recv_line());
    if (r.id != 0) throw ProtocolError("info response id mismatch");
    if (r.error) throw ProtocolError("remote victim error: " + *r.error);
    if (!r.num_classes || !r.input_dim) throw ProtocolError("info response lacks num_classes/input_dim");
    num_classes_ = *r.num_classes;
    input_dim_ = *r.input_dim;
  }

  Label predict(const Graph& g) override {
    std::lock_guard lock(mu_);
    const std::uint64_t id = next_id_++;
    transport_->send_line(wire::predict_request(id, g));
    const auto r = wire::parse_response(transport_->recv_line());
    if (r.id != id) {
      throw ProtocolError("response id " + std::to_string(r.id) + " does not match request id " + std::to_string(id));
    }
    if (r.error) throw ProtocolError("remote victim error: " + *r.error);
    if (!r.label) throw ProtocolError("predict response lacks a label");
    if (*r.label < 0 || static_cast<std::size_t>(*r.label) >= num_classes_) {
      throw ProtocolError("remote label " + std::to_string(*r.label) + " outside [0, num_classes)");
    }
    return *r.label;
  }

  [[nodiscard]] std::size_t num_classes() const override { return num_classes_; }
  [[nodiscard]] std::size_t input_dim() const noexcept { return input_dim_; }

 private:
  std::unique_ptr<LineTransport> transport_;
  std::mutex mu_;
  std::uint64_t next_id_ = 1;
  std::size_t num_classes_ = 0;
  std::size_t input_dim_ = 0;
};

/// Parses "host:port" (the last colon separates the port).
inline std::pair<std::string, std::uint16_t> split_host_port(const std::string& endpoint) {
  const auto pos = endpoint.rfind(':');
  if (pos == std::string::npos || pos == 0 || pos + 1 == endpoint.size()) {
    throw InvalidArgument("endpoint must be host:port, got '" + endpoint + "'");
  }
  int port = -1;
  try {
    std::size_t used = 0;
    port = std::stoi(endpoint.substr(pos + 1), &used);
    if (used != endpoint.size() - pos - 1) port = -1;
  } catch (const std::exception&) {
    port = -1;
  }
  if (port < 1 || port > 65535) throw InvalidArgument("invalid port in endpoint '" + endpoint + "'");
  return {endpoint.substr(0, pos), static_cast<std::uint16_t>(port)};
}

inline std::unique_ptr<RemoteVictim> remote_victim(const std::string& endpoint) {
  auto [host, port] = split_host_port(endpoint);
  return std::make_unique<RemoteVictim>(std::make_unique<TcpTransport>(host, port));
}

/// Serves the wire protocol for one oracle. Each connection gets its own
/// thread and is processed sequentially. Binding port 0 picks a free port.
class TcpServer {
 public:
  TcpServer(VictimOracle& oracle, std::size_t input_dim, const std::string& host = "127.0.0.1",
            std::uint16_t port = 0)
      : oracle_(oracle), input_dim_(input_dim) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    if (int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res); rc != 0) {
      throw ProtocolError("cannot resolve " + host + ": " + ::gai_strerror(rc));
    }
    listen_fd_ = UniqueFd(::socket(res->ai_family, res->ai_socktype, res->ai_protocol));
    int one = 1;
    ::setsockopt(listen_fd_.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    const bool ok = listen_fd_.valid() && ::bind(listen_fd_.get(), res->ai_addr, res->ai_addrlen) == 0 &&
                    ::listen(listen_fd_.get(), 16) == 0;
    ::freeaddrinfo(res);
    if (!ok) throw ProtocolError(std::string("cannot listen: ") + std::strerror(errno));
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_.get(), reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }

  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;
  ~TcpServer() { stop(); }

  [[nodiscard]] std::uint16_t port() const noexcept { return port_; }

  /// Starts accepting on a background thread.
  void start() {
    acceptor_ = std::thread([this] { run(); });
  }

  /// Accept loop; returns after stop().
  void run() {
    while (!stopping_) {
      pollfd pfd{listen_fd_.get(), POLLIN, 0};
      if (::poll(&pfd, 1, 50) <= 0) continue;
      const int c = ::accept(listen_fd_.get(), nullptr, nullptr);
      if (c < 0) continue;
      std::lock_guard lock(mu_);
      clients_.emplace_back([this, fd = UniqueFd(c)]() mutable { serve_connection(std::move(fd)); });
    }
  }

  void stop() {
    stopping_ = true;
    if (acceptor_.joinable()) acceptor_.join();
    std::vector<std::thread> clients;
    {
      std::lock_guard lock(mu_);
      clients.swap(clients_);
    }
    for (auto& t : clients) {
      if (t.joinable()) t.join();
    }
  }

 private:
  void serve_connection(UniqueFd fd) {
    remote_detail::LineReader reader(fd.get());
    std::string line;
    while (!stopping_) {
      if (!reader.has_buffered_line()) {
        pollfd pfd{fd.get(), POLLIN, 0};
        if (::poll(&pfd, 1, 50) <= 0) continue;
      }
      try {
        if (!reader.read_line(line)) return;
        remote_detail::write_all(fd.get(), wire::handle_request(oracle_, input_dim_, line) + "\n", true);
      } catch (const ProtocolError&) {
        return;
      }
    }
  }

  VictimOracle& oracle_;
  std::size_t input_dim_;
  UniqueFd listen_fd_;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex mu_;
  std::vector<std::thread> clients_;
};

}  // namespace nodeinj
