#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "rtpos/gtfs.hpp"
#include "rtpos/interval_tree.hpp"
#include "rtpos/stop_tree.hpp"
#include "rtpos/wire.hpp"

namespace rtpos::matcher {

enum class Wheelchair : std::uint8_t { Unknown = 0, No = 1, Yes = 2 };

struct VehicleDescriptor {
  std::uint32_t vehicle_id = 0;
  std::string label;
  std::string license_plate;
  Wheelchair wheelchair = Wheelchair::Unknown;
  std::optional<std::string> route_id;

  bool operator==(const VehicleDescriptor&) const = default;
};

struct VehicleMap {
  std::unordered_map<std::uint32_t, VehicleDescriptor> by_id;

  const VehicleDescriptor* find(std::uint32_t vehicle_id) const {
    const auto it = by_id.find(vehicle_id);
    return it == by_id.end() ? nullptr : &it->second;
  }
};

// Loads the preset vehicle map: header line, then
// vehicle_id,route_id,label,license_plate,wheelchair_accessible rows
// (route_id may be empty; wheelchair 0/1/2 = unknown/no/yes).
// Throws std::runtime_error naming the file and line on malformed input.
VehicleMap load_vehicle_map(const std::string& path);

enum class StopStatus : std::uint8_t { StoppedAt = 1, InTransitTo = 2, Unknown = 0 };

struct VehiclePositionRecord {
  std::optional<std::string> trip_id;
  std::optional<std::string> route_id;
  std::optional<std::string> stop_id;
  std::optional<std::uint32_t> current_stop_sequence;
  StopStatus current_status = StopStatus::Unknown;
  float latitude = 0.0f;
  float longitude = 0.0f;
  float bearing = 0.0f;
  double speed_mps = 0.0;  // converted from the wire km/h value
  VehicleDescriptor vehicle;
  std::uint64_t timestamp = 0;

  bool operator==(const VehiclePositionRecord&) const = default;
};

// A vehicle counts as being at a stop when within this haversine distance.
inline constexpr double kStopAttachRadiusMeters = 20.0;

struct MatchContext {
  const gtfs::GtfsData* gtfs = nullptr;
  const indexes::TripIntervalTree* trip_tree = nullptr;
  double reference_latitude = 0.0;     // mean stop latitude of the dataset
  std::int32_t utc_offset_minutes = 0;
};

// The contiguous slice of a trip's stops around schedule time t: from the
// latest stop already reached (arrival <= t) through the earliest stop not
// yet left (departure >= t). Clamps to the first/last stop when t falls
// outside the trip span.
std::vector<indexes::StopOccurrence> stops_between(const gtfs::TripSchedule& trip,
                                                   std::int32_t t,
                                                   const gtfs::GtfsData& gtfs);

// Resolves one validated report into a feed record: descriptor lookup, trip
// candidates from the interval tree restricted to the vehicle's route,
// per-candidate nearest-stop disambiguation, then stop attachment within
// 20 m (StoppedAt only when also stationary).
VehiclePositionRecord match_position(const wire::PositionReport& report,
                                     const VehicleMap& vehicles,
                                     const MatchContext& ctx);

}  // namespace rtpos::matcher
