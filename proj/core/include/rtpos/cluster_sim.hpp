#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "rtpos/gtfs.hpp"
#include "rtpos/matcher.hpp"

namespace rtpos::sim {

enum class EventKind : std::uint8_t {
  Propose,    // node, value = proposal key
  Crash,      // node
  Restart,    // node
  Partition,  // groups
  Heal,
  DropLink,   // from, to (one direction)
  UndropLink,
  DelayLink,  // from, to, value = extra one-way delay ms
  End,
};

struct SimEvent {
  std::uint64_t at_ms = 0;
  EventKind kind = EventKind::End;
  std::string node;
  std::string from, to;
  std::uint64_t value = 0;
  std::vector<std::vector<std::string>> groups;
};

// Line-oriented scenario script: `<virtual-time-ms> <event> <args>`.
//   propose <node> <key>      crash <node>        restart <node>
//   partition a,b|c           heal                end
//   drop <from> <to>          undrop <from> <to>  delay <from> <to> <ms>
// Blank lines and lines starting with '#' are ignored. Throws
// std::runtime_error naming the offending line on malformed input.
struct Scenario {
  std::vector<SimEvent> events;

  static Scenario parse(std::string_view text);
};

struct SimOptions {
  std::vector<std::string> nodes;
  std::uint64_t seed = 1;
  std::uint64_t max_ms = 30000;
  std::uint32_t election_timeout_min_ms = 150;
  std::uint32_t election_timeout_max_ms = 300;
  std::uint32_t heartbeat_interval_ms = 50;
  std::uint32_t link_delay_ms = 1;
  std::uint32_t link_jitter_ms = 4;
  // Static data for the replicated state machine; empty dataset when null.
  const gtfs::GtfsData* gtfs = nullptr;
  const matcher::VehicleMap* vehicles = nullptr;
  std::int32_t utc_offset_minutes = 0;
};

struct TraceEvent {
  std::uint64_t at_ms = 0;
  std::string node;
  std::string kind;
  std::string detail;
};

struct SimResult {
  std::vector<TraceEvent> trace;
  // Safety-property violations observed anywhere in the run; empty means
  // election safety, log matching, leader completeness and state-machine
  // safety all held.
  std::vector<std::string> violations;
  std::map<std::string, std::vector<std::uint8_t>> live_feeds;  // encode_feed at end
  std::map<std::string, std::uint64_t> commit_index;
  std::uint64_t proposals_made = 0;
  std::uint64_t proposals_committed = 0;  // proposals whose command got committed
  std::uint64_t messages_delivered = 0;
  std::uint64_t messages_dropped = 0;
};

// Runs the scenario on a virtual clock. Fully deterministic for a given
// (scenario, options) pair: seeded election jitter and link jitter, no real
// sockets or wall time. Node references in the scenario are validated before
// execution.
SimResult simulate_cluster(const Scenario& scenario, const SimOptions& options);

std::string render_trace(const SimResult& result);

}  // namespace rtpos::sim
