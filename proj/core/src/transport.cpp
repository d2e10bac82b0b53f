#include "rtpos/transport.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <stdexcept>

namespace rtpos::transport {

namespace {

bool fill_sockaddr(const config::Endpoint& ep, sockaddr_in& addr) {
  std::memset(&addr, 0, sizeof(addr));
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  return ::inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) == 1;
}

bool write_all(int fd, const std::uint8_t* data, std::size_t len) {
  std::size_t off = 0;
  while (off < len) {
    const ssize_t n = ::send(fd, data + off, len - off, MSG_NOSIGNAL);
    if (n <= 0) return false;
    off += static_cast<std::size_t>(n);
  }
  return true;
}

bool read_all(int fd, std::uint8_t* data, std::size_t len) {
  std::size_t off = 0;
  while (off < len) {
    const ssize_t n = ::recv(fd, data + off, len - off, 0);
    if (n <= 0) return false;
    off += static_cast<std::size_t>(n);
  }
  return true;
}

constexpr std::uint32_t kMaxFrameBytes = 8 * 1024 * 1024;

}  // namespace

PeerTransport::PeerTransport(std::string self_id, config::Endpoint listen,
                             std::vector<config::PeerAddress> peers,
                             Handler on_message)
    : self_id_(std::move(self_id)),
      listen_(std::move(listen)),
      on_message_(std::move(on_message)) {
  for (auto& p : peers) peers_.emplace(p.node_id, p.endpoint);
}

PeerTransport::~PeerTransport() { stop(); }

void PeerTransport::start() {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error("peer transport: socket() failed");
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

  sockaddr_in addr{};
  if (!fill_sockaddr(listen_, addr)) {
    throw std::runtime_error("peer transport: bad listen address " + listen_.host);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listen_fd_, 16) != 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw std::runtime_error("peer transport: cannot listen on " + listen_.host +
                             ":" + std::to_string(listen_.port));
  }
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);

  running_ = true;
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void PeerTransport::stop() {
  if (!running_.exchange(false)) {
    if (listen_fd_ >= 0) {
      ::close(listen_fd_);
      listen_fd_ = -1;
    }
    return;
  }
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  listen_fd_ = -1;
  if (accept_thread_.joinable()) accept_thread_.join();

  {
    std::lock_guard lock(readers_mu_);
    for (const int fd : reader_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  std::vector<std::thread> readers;
  {
    std::lock_guard lock(readers_mu_);
    readers.swap(reader_threads_);
  }
  for (auto& t : readers) {
    if (t.joinable()) t.join();
  }
  {
    std::lock_guard lock(readers_mu_);
    for (const int fd : reader_fds_) ::close(fd);
    reader_fds_.clear();
  }
  std::lock_guard lock(send_mu_);
  for (auto& [id, fd] : out_fds_) ::close(fd);
  out_fds_.clear();
}

void PeerTransport::accept_loop() {
  while (running_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (!running_) break;
      continue;
    }
    std::lock_guard lock(readers_mu_);
    if (!running_) {
      ::close(fd);
      break;
    }
    reader_fds_.push_back(fd);
    reader_threads_.emplace_back([this, fd] { reader_loop(fd); });
  }
}

void PeerTransport::reader_loop(int fd) {
  std::vector<std::uint8_t> body;
  while (running_) {
    std::uint8_t len_buf[4];
    if (!read_all(fd, len_buf, 4)) break;
    const std::uint32_t len = (static_cast<std::uint32_t>(len_buf[0]) << 24) |
                              (static_cast<std::uint32_t>(len_buf[1]) << 16) |
                              (static_cast<std::uint32_t>(len_buf[2]) << 8) |
                              len_buf[3];
    if (len == 0 || len > kMaxFrameBytes) break;
    body.resize(len);
    if (!read_all(fd, body.data(), len)) break;
    auto decoded = raft_wire::decode_body(body);
    if (!decoded) break;  // protocol desync, drop the connection
    if (on_message_) on_message_(std::move(*decoded));
  }
}

int PeerTransport::connect_to(const config::Endpoint& endpoint) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return -1;

  sockaddr_in addr{};
  if (!fill_sockaddr(endpoint, addr)) {
    ::close(fd);
    return -1;
  }
  // Non-blocking connect with a short deadline; a dead peer must not stall
  // the consensus loop.
  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
  const int rc = ::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  if (rc != 0 && errno != EINPROGRESS) {
    ::close(fd);
    return -1;
  }
  if (rc != 0) {
    pollfd pfd{fd, POLLOUT, 0};
    if (::poll(&pfd, 1, 200) <= 0) {
      ::close(fd);
      return -1;
    }
    int err = 0;
    socklen_t len = sizeof(err);
    ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) {
      ::close(fd);
      return -1;
    }
  }
  ::fcntl(fd, F_SETFL, flags);
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return fd;
}

bool PeerTransport::send(const std::string& peer_id, const raft::Message& message) {
  const auto it = peers_.find(peer_id);
  if (it == peers_.end()) return false;
  const auto frame = raft_wire::encode_frame(self_id_, message);

  std::lock_guard lock(send_mu_);
  auto fd_it = out_fds_.find(peer_id);
  if (fd_it == out_fds_.end()) {
    const auto now = std::chrono::steady_clock::now();
    const auto backoff = connect_backoff_.find(peer_id);
    if (backoff != connect_backoff_.end() && now < backoff->second) return false;
    const int fd = connect_to(it->second);
    if (fd < 0) {
      connect_backoff_[peer_id] = now + std::chrono::milliseconds(500);
      return false;
    }
    connect_backoff_.erase(peer_id);
    fd_it = out_fds_.emplace(peer_id, fd).first;
  }
  if (!write_all(fd_it->second, frame.data(), frame.size())) {
    ::close(fd_it->second);
    out_fds_.erase(fd_it);
    return false;
  }
  return true;
}

}  // namespace rtpos::transport
