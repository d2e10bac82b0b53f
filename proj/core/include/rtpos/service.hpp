#pragma once

#include <atomic>
#include <condition_variable>
#include <chrono>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "rtpos/config.hpp"
#include "rtpos/feed.hpp"
#include "rtpos/gtfs.hpp"
#include "rtpos/interval_tree.hpp"
#include "rtpos/matcher.hpp"
#include "rtpos/raft.hpp"
#include "rtpos/wire.hpp"

namespace rtpos::service {

// FIFO between the ingest and analysis threads; drops the oldest element
// when full so floods shed load instead of growing memory.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

  // Returns the number of elements dropped to make room (0 or 1).
  std::size_t push(T item) {
    std::size_t dropped = 0;
    {
      std::lock_guard lock(mu_);
      if (closed_) return 0;
      if (items_.size() >= capacity_) {
        items_.pop_front();
        dropped = 1;
      }
      items_.push_back(std::move(item));
    }
    cv_.notify_one();
    return dropped;
  }

  std::optional<T> pop(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [this] { return !items_.empty() || closed_; });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    return item;
  }

  void close() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return items_.size();
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<T> items_;
  std::size_t capacity_;
  bool closed_ = false;
};

inline constexpr std::size_t kDefaultQueueCapacity = 4096;

struct ServiceCounters {
  std::atomic<std::uint64_t> datagrams_received{0};
  std::atomic<std::uint64_t> accepted{0};
  std::atomic<std::uint64_t> rejected_wrong_length{0};
  std::atomic<std::uint64_t> rejected_invalid_field{0};
  std::atomic<std::uint64_t> rejected_stale{0};
  std::atomic<std::uint64_t> rejected_future{0};
  std::atomic<std::uint64_t> rejected_speed{0};
  std::atomic<std::uint64_t> queue_dropped{0};
  std::atomic<std::uint64_t> records_applied{0};
  std::atomic<std::uint64_t> entities_evicted{0};
  std::atomic<std::uint64_t> proposals{0};
  std::atomic<std::uint64_t> forwards{0};
  std::atomic<std::uint64_t> forward_drops{0};
  std::atomic<std::uint64_t> raft_decode_failures{0};

  std::uint64_t rejected_total() const {
    return rejected_wrong_length + rejected_invalid_field + rejected_stale +
           rejected_future + rejected_speed;
  }
};

// The running server: a UDP ingest thread feeding a bounded queue, one
// analysis thread (the only feed writer, and the consensus context when
// replication is enabled) and an HTTP thread serving the encoded feed.
class Service {
 public:
  // Loads GTFS data and the vehicle map, builds the trip index, initializes
  // the feed header, then starts the threads. Throws std::runtime_error
  // (or gtfs::GtfsError) naming the failing file on any load error.
  explicit Service(const config::ServiceConfig& config);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  void stop();

  std::uint16_t udp_port() const { return udp_port_; }
  std::uint16_t http_port() const { return http_port_; }
  std::uint16_t raft_port() const;

  const ServiceCounters& counters() const { return counters_; }
  std::shared_ptr<const feed::FeedSnapshot> feed_snapshot() const {
    return feed_.snapshot();
  }
  const gtfs::GtfsData& gtfs_data() const { return gtfs_; }

  // Administrative: swaps in a fresh vehicle map; on parse failure the old
  // map stays untouched and false is returned.
  bool reload_vehicle_map(const std::string& path);

  raft::Role replication_role() const;

 private:
  struct ReplicationState;

  void init_replication_and_http();
  void udp_loop();
  void analysis_loop();
  void analysis_step_standalone(const wire::PositionReport& report);
  void replication_loop();
  void handle_ingested(ReplicationState& repl, const wire::PositionReport& report,
                       std::uint64_t now_ms);
  void handle_forward_command(ReplicationState& repl,
                              const std::vector<std::uint8_t>& command,
                              std::uint64_t now_ms);
  void pump_raft(ReplicationState& repl);
  std::shared_ptr<const matcher::VehicleMap> vehicle_map() const;
  matcher::MatchContext match_context() const;
  void start_http();
  void maybe_evict();

  config::ServiceConfig config_;
  gtfs::GtfsData gtfs_;
  indexes::TripIntervalTree trip_tree_;
  double reference_latitude_ = 0.0;

  mutable std::mutex vehicles_mu_;
  std::shared_ptr<const matcher::VehicleMap> vehicles_;

  feed::FeedStore feed_;
  ServiceCounters counters_;

  BoundedQueue<wire::PositionReport> queue_{kDefaultQueueCapacity};

  std::atomic<bool> running_{false};
  int udp_fd_ = -1;
  std::uint16_t udp_port_ = 0;
  std::uint16_t http_port_ = 0;

  std::thread udp_thread_;
  std::thread analysis_thread_;
  std::thread http_thread_;

  struct HttpImpl;
  std::unique_ptr<HttpImpl> http_;

  std::unique_ptr<ReplicationState> repl_;
  std::chrono::steady_clock::time_point epoch_ = std::chrono::steady_clock::now();
  std::uint64_t last_evict_ms_ = 0;
};

// Wall-clock Unix seconds.
std::uint64_t now_unix();

}  // namespace rtpos::service
