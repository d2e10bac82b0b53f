#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rtpos/gtfs.hpp"
#include "rtpos/wire.hpp"

namespace rtpos::vsim {

enum class SpeedProfile : std::uint8_t { Scheduled, Constant, StopAndGo };

struct SimPlan {
  std::uint32_t vehicle_id = 0;
  std::string trip_id;
  std::int32_t start_offset_s = 0;  // from the trip's span start
  std::uint32_t cadence_ms = 500;   // firmware loop cadence
  SpeedProfile profile = SpeedProfile::Scheduled;
  double constant_speed_kmh = 0.0;  // used by SpeedProfile::Constant
  double jitter_m = 0.0;            // Gaussian position noise, sigma in meters
  std::uint64_t seed = 0;
};

struct TimedReport {
  std::uint64_t schedule_ms = 0;  // milliseconds since local midnight
  wire::PositionReport report;
};

// Positions interpolate linearly between consecutive stops according to the
// schedule; within a dwell window the vehicle sits at the stop with speed
// exactly 0. Deterministic for a fixed seed. base_epoch is the Unix time of
// schedule second 0 (local midnight of the service day).
// Throws std::runtime_error for an unknown trip or invalid plan.
std::vector<TimedReport> generate_trace(const SimPlan& plan,
                                        const gtfs::GtfsData& gtfs,
                                        std::int64_t base_epoch);

// Unix time of the most recent local midnight in the given fixed-offset zone.
std::int64_t local_midnight_epoch(std::uint64_t now, std::int32_t utc_offset_minutes);

struct EmitOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  double time_scale = 1.0;  // 0 sends as fast as possible
};

struct EmitResult {
  std::size_t sent = 0;
  std::size_t socket_errors = 0;
};

// Encodes and sends each report as one UDP datagram, pacing gaps by schedule
// delta times time_scale. Transient send errors are counted, not fatal.
EmitResult emit(const std::vector<TimedReport>& trace, const EmitOptions& options);

// Merges traces into one send order (by schedule time, stable).
std::vector<TimedReport> merge_traces(std::vector<std::vector<TimedReport>> traces);

// Plan file: header line, then
// vehicle_id,trip_id,start_offset,cadence_ms,speed_profile,jitter_m,seed
// with speed_profile one of "scheduled", "constant:<kmh>", "stop-and-go".
std::vector<SimPlan> parse_plan_file(const std::string& path);

}  // namespace rtpos::vsim
