#pragma once

#include "rtpos/feed.hpp"
#include "rtpos/matcher.hpp"
#include "rtpos/raft.hpp"

namespace rtpos::replication {

struct ApplyStats {
  std::uint64_t applied = 0;
  std::uint64_t decode_failures = 0;
};

// Applies one committed log command (a 28-byte wire report) to the feed:
// decode, match, apply. A command that fails to decode is a counted no-op;
// the state machine never halts. The feed header time is taken from the
// report timestamp so identical logs yield identical feeds on every node.
void apply_entry(const raft::LogEntry& entry, const matcher::VehicleMap& vehicles,
                 const matcher::MatchContext& ctx, feed::FeedSnapshot& feed,
                 ApplyStats& stats);

// Drains and applies everything committed but not yet applied, in log order.
// Returns the number of entries processed (including decode-failure no-ops).
std::size_t apply_committed(raft::RaftNode& node, const matcher::VehicleMap& vehicles,
                            const matcher::MatchContext& ctx, feed::FeedSnapshot& feed,
                            ApplyStats& stats);

}  // namespace rtpos::replication
