#include "rtpos/replication.hpp"

namespace rtpos::replication {

void apply_entry(const raft::LogEntry& entry, const matcher::VehicleMap& vehicles,
                 const matcher::MatchContext& ctx, feed::FeedSnapshot& feed,
                 ApplyStats& stats) {
  const auto decoded = wire::decode_packet(entry.command);
  if (!decoded.ok()) {
    ++stats.decode_failures;
    return;
  }
  const auto record = matcher::match_position(decoded.report, vehicles, ctx);
  feed::apply_record(feed, record, decoded.report.timestamp);
  ++stats.applied;
}

std::size_t apply_committed(raft::RaftNode& node, const matcher::VehicleMap& vehicles,
                            const matcher::MatchContext& ctx, feed::FeedSnapshot& feed,
                            ApplyStats& stats) {
  const auto entries = node.drain_committed();
  for (const auto& entry : entries) {
    apply_entry(entry, vehicles, ctx, feed, stats);
  }
  return entries.size();
}

}  // namespace rtpos::replication
