#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "rtpos/matcher.hpp"

namespace rtpos::feed {

// Serve-ready feed state: header plus one entity per vehicle, keyed (and
// therefore encoded) in ascending vehicle id order.
struct FeedSnapshot {
  std::uint64_t header_timestamp = 0;
  std::map<std::uint32_t, matcher::VehiclePositionRecord> entities;

  bool operator==(const FeedSnapshot&) const = default;
};

inline constexpr std::uint32_t kDefaultFeedTtlSeconds = 900;

// Replaces the vehicle's entity unless the record is older than what the
// feed already holds (UDP reordering); returns whether it was applied.
// header_timestamp is set to `now` either way.
bool apply_record(FeedSnapshot& snapshot, const matcher::VehiclePositionRecord& record,
                  std::uint64_t now);

// Removes entities older than `ttl` seconds; an entity aged exactly `ttl`
// is retained. Returns the number evicted.
std::size_t evict_stale(FeedSnapshot& snapshot, std::uint64_t now, std::uint32_t ttl);

// Encodes the snapshot as a GTFS-realtime FeedMessage (binary protobuf,
// gtfs_realtime_version "2.0", FULL_DATASET). Output bytes are a pure
// function of snapshot content.
std::vector<std::uint8_t> encode_feed(const FeedSnapshot& snapshot);

// Human-readable rendering for the debug endpoint.
std::string render_feed_text(const FeedSnapshot& snapshot);

// Copy-on-write holder: one writer mutates through fresh copies, any number
// of readers hold consistent immutable snapshots.
class FeedStore {
 public:
  FeedStore() : current_(std::make_shared<const FeedSnapshot>()) {}

  std::shared_ptr<const FeedSnapshot> snapshot() const {
    std::lock_guard lock(mu_);
    return current_;
  }

  bool apply(const matcher::VehiclePositionRecord& record, std::uint64_t now) {
    std::lock_guard lock(mu_);
    auto next = std::make_shared<FeedSnapshot>(*current_);
    const bool applied = apply_record(*next, record, now);
    if (!applied) ++stale_drops_;
    current_ = std::move(next);
    return applied;
  }

  std::size_t evict(std::uint64_t now, std::uint32_t ttl) {
    std::lock_guard lock(mu_);
    auto next = std::make_shared<FeedSnapshot>(*current_);
    const std::size_t n = evict_stale(*next, now, ttl);
    if (n > 0) current_ = std::move(next);
    return n;
  }

  void reset(FeedSnapshot initial) {
    std::lock_guard lock(mu_);
    current_ = std::make_shared<const FeedSnapshot>(std::move(initial));
  }

  std::uint64_t stale_drops() const {
    std::lock_guard lock(mu_);
    return stale_drops_;
  }

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const FeedSnapshot> current_;
  std::uint64_t stale_drops_ = 0;
};

}  // namespace rtpos::feed
