#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "rtpos/config.hpp"
#include "rtpos/raft_wire.hpp"

namespace rtpos::transport {

// Stream transport for the peer protocol in live deployments: one listener
// for inbound frames, one lazily connected outbound stream per peer. Loss is
// tolerated (consensus retries); sends are best-effort and never block the
// caller for long.
class PeerTransport {
 public:
  using Handler = std::function<void(raft_wire::WireMessage)>;

  PeerTransport(std::string self_id, config::Endpoint listen,
                std::vector<config::PeerAddress> peers, Handler on_message);
  ~PeerTransport();

  PeerTransport(const PeerTransport&) = delete;
  PeerTransport& operator=(const PeerTransport&) = delete;

  void start();  // throws std::runtime_error when the listener cannot bind
  void stop();

  std::uint16_t port() const { return port_; }

  // Frames and sends one message; returns false when the peer is unknown or
  // the connection cannot be established/written right now.
  bool send(const std::string& peer_id, const raft::Message& message);

 private:
  void accept_loop();
  void reader_loop(int fd);
  int connect_to(const config::Endpoint& endpoint);

  std::string self_id_;
  config::Endpoint listen_;
  std::map<std::string, config::Endpoint> peers_;
  Handler on_message_;

  std::atomic<bool> running_{false};
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::thread accept_thread_;

  std::mutex readers_mu_;
  std::vector<std::thread> reader_threads_;
  std::vector<int> reader_fds_;

  std::mutex send_mu_;
  std::map<std::string, int> out_fds_;
  // Down peers are retried with a backoff so heartbeats to them cannot stall
  // the consensus loop on repeated connect timeouts.
  std::map<std::string, std::chrono::steady_clock::time_point> connect_backoff_;
};

}  // namespace rtpos::transport
