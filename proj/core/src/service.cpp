#include "rtpos/service.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <sstream>
#include <stdexcept>

#include <httplib.h>

#include "rtpos/raft_wire.hpp"
#include "rtpos/replication.hpp"
#include "rtpos/transport.hpp"

namespace rtpos::service {

namespace {

constexpr std::uint32_t kEvictIntervalMs = 1000;
constexpr std::uint32_t kRaftTickMs = 10;

}  // namespace

std::uint64_t now_unix() {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());
}

struct Service::HttpImpl {
  httplib::Server server;
};

// Consensus context, owned and driven exclusively by the analysis thread.
struct Service::ReplicationState {
  std::unique_ptr<raft::Storage> storage;
  std::unique_ptr<raft::RaftNode> node;
  std::unique_ptr<transport::PeerTransport> transport;
  BoundedQueue<raft_wire::WireMessage> inbox{8192};
  replication::ApplyStats apply_stats;
  std::uint64_t next_tick_ms = 0;
};

Service::Service(const config::ServiceConfig& config) : config_(config) {
  config::validate(config_);

  // Preprocessing: all shared structures are ready before any thread starts.
  gtfs_ = gtfs::load_gtfs(config_.gtfs_path);
  vehicles_ = std::make_shared<const matcher::VehicleMap>(
      matcher::load_vehicle_map(config_.vehicle_map_path));
  trip_tree_ = indexes::TripIntervalTree::build(gtfs_.trips);
  reference_latitude_ = gtfs_.mean_stop_latitude();

  feed::FeedSnapshot initial;
  initial.header_timestamp = now_unix();
  feed_.reset(std::move(initial));

  // UDP ingest socket.
  udp_fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (udp_fd_ < 0) throw std::runtime_error("service: cannot create UDP socket");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(config_.udp_bind.port);
  if (::inet_pton(AF_INET, config_.udp_bind.host.c_str(), &addr.sin_addr) != 1) {
    throw std::runtime_error("service: bad udp_bind host " + config_.udp_bind.host);
  }
  if (::bind(udp_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    throw std::runtime_error("service: cannot bind UDP " + config_.udp_bind.host +
                             ":" + std::to_string(config_.udp_bind.port));
  }
  sockaddr_in bound{};
  socklen_t blen = sizeof(bound);
  ::getsockname(udp_fd_, reinterpret_cast<sockaddr*>(&bound), &blen);
  udp_port_ = ntohs(bound.sin_port);
  timeval tv{0, 100000};  // 100 ms, keeps the loop responsive to stop()
  ::setsockopt(udp_fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));

  try {
    init_replication_and_http();
  } catch (...) {
    ::close(udp_fd_);
    udp_fd_ = -1;
    throw;
  }

  running_ = true;
  udp_thread_ = std::thread([this] { udp_loop(); });
  analysis_thread_ = std::thread([this] { analysis_loop(); });
}

void Service::init_replication_and_http() {
  if (config_.replication_enabled) {
    repl_ = std::make_unique<ReplicationState>();
    if (config_.raft_log_path.empty()) {
      repl_->storage = std::make_unique<raft::MemoryStorage>();
    } else {
      repl_->storage = std::make_unique<raft::FileStorage>(config_.raft_log_path);
    }
    raft::RaftOptions opt;
    opt.self = config_.node_id;
    for (const auto& peer : config_.peers) opt.peers.push_back(peer.node_id);
    opt.seed = std::hash<std::string>{}(config_.node_id) ^ now_unix();
    repl_->node = std::make_unique<raft::RaftNode>(opt, *repl_->storage);
    repl_->transport = std::make_unique<transport::PeerTransport>(
        config_.node_id, config_.raft_bind, config_.peers,
        [this](raft_wire::WireMessage m) { repl_->inbox.push(std::move(m)); });
    repl_->transport->start();
  }
  start_http();
}

Service::~Service() { stop(); }

void Service::stop() {
  if (!running_.exchange(false)) return;
  queue_.close();
  if (repl_) repl_->inbox.close();
  if (udp_fd_ >= 0) ::shutdown(udp_fd_, SHUT_RDWR);
  if (http_) http_->server.stop();
  if (udp_thread_.joinable()) udp_thread_.join();
  if (analysis_thread_.joinable()) analysis_thread_.join();
  if (http_thread_.joinable()) http_thread_.join();
  if (repl_ && repl_->transport) repl_->transport->stop();
  if (udp_fd_ >= 0) {
    ::close(udp_fd_);
    udp_fd_ = -1;
  }
}

std::uint16_t Service::raft_port() const {
  return repl_ && repl_->transport ? repl_->transport->port() : 0;
}

raft::Role Service::replication_role() const {
  // Read of a single enum owned by the analysis thread; benign for status
  // endpoints and tests.
  return repl_ && repl_->node ? repl_->node->role() : raft::Role::Follower;
}

std::shared_ptr<const matcher::VehicleMap> Service::vehicle_map() const {
  std::lock_guard lock(vehicles_mu_);
  return vehicles_;
}

matcher::MatchContext Service::match_context() const {
  return matcher::MatchContext{&gtfs_, &trip_tree_, reference_latitude_,
                               config_.agency_utc_offset};
}

bool Service::reload_vehicle_map(const std::string& path) {
  try {
    auto fresh = std::make_shared<const matcher::VehicleMap>(
        matcher::load_vehicle_map(path));
    std::lock_guard lock(vehicles_mu_);
    vehicles_ = std::move(fresh);
    return true;
  } catch (const std::exception&) {
    return false;  // old map stays in effect
  }
}

void Service::udp_loop() {
  std::uint8_t buf[2048];
  while (running_) {
    const ssize_t n = ::recv(udp_fd_, buf, sizeof(buf), 0);
    if (n < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) continue;
      if (!running_) break;
      continue;  // transient socket error; the loop must outlive it
    }
    counters_.datagrams_received.fetch_add(1, std::memory_order_relaxed);

    const auto decoded =
        wire::decode_packet({buf, static_cast<std::size_t>(n)});
    if (!decoded.ok()) {
      if (decoded.status == wire::DecodeStatus::WrongLength) {
        counters_.rejected_wrong_length.fetch_add(1, std::memory_order_relaxed);
      } else {
        counters_.rejected_invalid_field.fetch_add(1, std::memory_order_relaxed);
      }
      continue;
    }
    const auto verdict = wire::validate_report(decoded.report, now_unix());
    if (!verdict.accepted) {
      switch (verdict.reason) {
        case wire::RejectReason::StaleTimestamp:
          counters_.rejected_stale.fetch_add(1, std::memory_order_relaxed);
          break;
        case wire::RejectReason::FutureTimestamp:
          counters_.rejected_future.fetch_add(1, std::memory_order_relaxed);
          break;
        case wire::RejectReason::ImplausibleSpeed:
          counters_.rejected_speed.fetch_add(1, std::memory_order_relaxed);
          break;
      }
      continue;
    }
    counters_.accepted.fetch_add(1, std::memory_order_relaxed);
    counters_.queue_dropped.fetch_add(queue_.push(decoded.report),
                                      std::memory_order_relaxed);
  }
}

void Service::maybe_evict() {
  const auto now_ms = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - epoch_)
          .count());
  if (now_ms - last_evict_ms_ < kEvictIntervalMs) return;
  last_evict_ms_ = now_ms;
  counters_.entities_evicted.fetch_add(feed_.evict(now_unix(), config_.feed_ttl),
                                       std::memory_order_relaxed);
}

void Service::analysis_step_standalone(const wire::PositionReport& report) {
  const auto vehicles = vehicle_map();
  const auto record = matcher::match_position(report, *vehicles, match_context());
  feed_.apply(record, now_unix());
  counters_.records_applied.fetch_add(1, std::memory_order_relaxed);
}

void Service::analysis_loop() {
  if (repl_) {
    replication_loop();
    return;
  }
  while (running_) {
    if (auto report = queue_.pop(std::chrono::milliseconds(100))) {
      analysis_step_standalone(*report);
    }
    maybe_evict();
  }
  // Drain what ingest accepted before shutdown.
  while (auto report = queue_.pop(std::chrono::milliseconds(0))) {
    analysis_step_standalone(*report);
  }
}

void Service::handle_ingested(ReplicationState& repl,
                              const wire::PositionReport& report,
                              std::uint64_t now_ms) {
  const auto bytes = wire::encode_packet(report);
  const std::vector<std::uint8_t> command(bytes->begin(), bytes->end());
  handle_forward_command(repl, command, now_ms);
}

void Service::handle_forward_command(ReplicationState& repl,
                                     const std::vector<std::uint8_t>& command,
                                     std::uint64_t now_ms) {
  const auto result = repl.node->propose(command, now_ms);
  if (result.accepted) {
    counters_.proposals.fetch_add(1, std::memory_order_relaxed);
    return;
  }
  if (result.leader_hint && *result.leader_hint != config_.node_id) {
    repl.transport->send(*result.leader_hint, raft::ForwardReport{command});
    counters_.forwards.fetch_add(1, std::memory_order_relaxed);
  } else {
    counters_.forward_drops.fetch_add(1, std::memory_order_relaxed);
  }
}

void Service::pump_raft(ReplicationState& repl) {
  for (auto& env : repl.node->take_outbox()) {
    repl.transport->send(env.to, env.message);
  }
  if (repl.node->commit_index() > repl.node->last_applied()) {
    const auto vehicles = vehicle_map();
    const auto ctx = match_context();
    const auto entries = repl.node->drain_committed();
    for (const auto& entry : entries) {
      const auto decoded = wire::decode_packet(entry.command);
      if (!decoded.ok()) {
        counters_.raft_decode_failures.fetch_add(1, std::memory_order_relaxed);
        continue;
      }
      const auto record = matcher::match_position(decoded.report, *vehicles, ctx);
      // Log time, not wall time: replicas must build identical feeds.
      feed_.apply(record, decoded.report.timestamp);
      counters_.records_applied.fetch_add(1, std::memory_order_relaxed);
    }
  }
}

void Service::replication_loop() {
  ReplicationState& repl = *repl_;
  while (running_) {
    const auto now_ms = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - epoch_)
            .count());

    if (now_ms >= repl.next_tick_ms) {
      repl.node->on_tick(now_ms);
      repl.next_tick_ms = now_ms + kRaftTickMs;
    }

    while (auto msg = repl.inbox.pop(std::chrono::milliseconds(0))) {
      if (const auto* fwd = std::get_if<raft::ForwardReport>(&msg->message)) {
        handle_forward_command(repl, fwd->command, now_ms);
      } else {
        repl.node->handle(msg->sender, msg->message, now_ms);
      }
    }
    if (auto report = queue_.pop(std::chrono::milliseconds(2))) {
      handle_ingested(repl, *report, now_ms);
    }

    pump_raft(repl);
    maybe_evict();
  }
}

void Service::start_http() {
  http_ = std::make_unique<HttpImpl>();
  auto& server = http_->server;

  server.Get("/gtfs-rt/vehicle-positions",
             [this](const httplib::Request&, httplib::Response& res) {
               const auto snapshot = feed_.snapshot();
               const auto bytes = feed::encode_feed(*snapshot);
               res.set_content(std::string(bytes.begin(), bytes.end()),
                               "application/x-protobuf");
             });
  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });
  server.Get("/debug/feed", [this](const httplib::Request&, httplib::Response& res) {
    const auto snapshot = feed_.snapshot();
    std::ostringstream out;
    out << feed::render_feed_text(*snapshot);
    out << "datagrams_received=" << counters_.datagrams_received.load()
        << " accepted=" << counters_.accepted.load()
        << " rejected_wrong_length=" << counters_.rejected_wrong_length.load()
        << " rejected_invalid_field=" << counters_.rejected_invalid_field.load()
        << " rejected_stale=" << counters_.rejected_stale.load()
        << " rejected_future=" << counters_.rejected_future.load()
        << " rejected_speed=" << counters_.rejected_speed.load()
        << " queue_dropped=" << counters_.queue_dropped.load()
        << " records_applied=" << counters_.records_applied.load() << "\n";
    if (repl_) {
      out << "replication role=" << raft::role_name(replication_role())
          << " commit_index=" << repl_->node->commit_index() << "\n";
    }
    res.set_content(out.str(), "text/plain");
  });

  if (config_.http_bind.port == 0) {
    const int port = server.bind_to_any_port(config_.http_bind.host);
    if (port <= 0) {
      throw std::runtime_error("service: cannot bind HTTP on " +
                               config_.http_bind.host);
    }
    http_port_ = static_cast<std::uint16_t>(port);
  } else {
    if (!server.bind_to_port(config_.http_bind.host, config_.http_bind.port)) {
      throw std::runtime_error("service: cannot bind HTTP " +
                               config_.http_bind.host + ":" +
                               std::to_string(config_.http_bind.port));
    }
    http_port_ = config_.http_bind.port;
  }
  http_thread_ = std::thread([this] { http_->server.listen_after_bind(); });
}

}  // namespace rtpos::service
