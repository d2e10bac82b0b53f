#include "rtpos/feed.hpp"

#include <cstdio>
#include <string>

#include "rtpos/pbwire.hpp"

namespace rtpos::feed {

namespace {

// Field numbers from the published GTFS-realtime schema.
namespace fm {  // FeedMessage
constexpr std::uint32_t kHeader = 1;
constexpr std::uint32_t kEntity = 2;
}  // namespace fm
namespace fh {  // FeedHeader
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kIncrementality = 2;
constexpr std::uint32_t kTimestamp = 3;
}  // namespace fh
namespace fe {  // FeedEntity
constexpr std::uint32_t kId = 1;
constexpr std::uint32_t kVehicle = 4;
}  // namespace fe
namespace vp {  // VehiclePosition
constexpr std::uint32_t kTrip = 1;
constexpr std::uint32_t kPosition = 2;
constexpr std::uint32_t kCurrentStopSequence = 3;
constexpr std::uint32_t kCurrentStatus = 4;
constexpr std::uint32_t kTimestamp = 5;
constexpr std::uint32_t kStopId = 7;
constexpr std::uint32_t kVehicleDesc = 8;
}  // namespace vp
namespace pos {  // Position
constexpr std::uint32_t kLatitude = 1;
constexpr std::uint32_t kLongitude = 2;
constexpr std::uint32_t kBearing = 3;
constexpr std::uint32_t kSpeed = 5;
}  // namespace pos
namespace td {  // TripDescriptor
constexpr std::uint32_t kTripId = 1;
constexpr std::uint32_t kRouteId = 5;
}  // namespace td
namespace vd {  // VehicleDescriptor
constexpr std::uint32_t kId = 1;
constexpr std::uint32_t kLabel = 2;
constexpr std::uint32_t kLicensePlate = 3;
}  // namespace vd

constexpr std::uint64_t kIncrementalityFullDataset = 0;

std::vector<std::uint8_t> encode_entity(std::uint32_t vehicle_id,
                                        const matcher::VehiclePositionRecord& r) {
  using namespace pbwire;

  std::vector<std::uint8_t> trip;
  if (r.trip_id) put_string(trip, td::kTripId, *r.trip_id);
  if (r.route_id) put_string(trip, td::kRouteId, *r.route_id);

  std::vector<std::uint8_t> position;
  put_float(position, pos::kLatitude, r.latitude);
  put_float(position, pos::kLongitude, r.longitude);
  put_float(position, pos::kBearing, r.bearing);
  put_float(position, pos::kSpeed, static_cast<float>(r.speed_mps));

  std::vector<std::uint8_t> vdesc;
  put_string(vdesc, vd::kId, std::to_string(r.vehicle.vehicle_id));
  if (!r.vehicle.label.empty()) put_string(vdesc, vd::kLabel, r.vehicle.label);
  if (!r.vehicle.license_plate.empty()) {
    put_string(vdesc, vd::kLicensePlate, r.vehicle.license_plate);
  }

  std::vector<std::uint8_t> vehicle;
  if (!trip.empty()) put_message(vehicle, vp::kTrip, trip);
  put_message(vehicle, vp::kPosition, position);
  if (r.current_stop_sequence) {
    put_uint(vehicle, vp::kCurrentStopSequence, *r.current_stop_sequence);
  }
  if (r.current_status != matcher::StopStatus::Unknown) {
    put_uint(vehicle, vp::kCurrentStatus,
             static_cast<std::uint64_t>(r.current_status));
  }
  put_uint(vehicle, vp::kTimestamp, r.timestamp);
  if (r.stop_id) put_string(vehicle, vp::kStopId, *r.stop_id);
  put_message(vehicle, vp::kVehicleDesc, vdesc);

  std::vector<std::uint8_t> entity;
  put_string(entity, fe::kId, std::to_string(vehicle_id));
  put_message(entity, fe::kVehicle, vehicle);
  return entity;
}

const char* status_name(matcher::StopStatus s) {
  switch (s) {
    case matcher::StopStatus::StoppedAt: return "STOPPED_AT";
    case matcher::StopStatus::InTransitTo: return "IN_TRANSIT_TO";
    case matcher::StopStatus::Unknown: return "UNKNOWN";
  }
  return "?";
}

}  // namespace

bool apply_record(FeedSnapshot& snapshot, const matcher::VehiclePositionRecord& record,
                  std::uint64_t now) {
  snapshot.header_timestamp = now;
  const auto it = snapshot.entities.find(record.vehicle.vehicle_id);
  if (it != snapshot.entities.end() && record.timestamp < it->second.timestamp) {
    return false;
  }
  snapshot.entities.insert_or_assign(record.vehicle.vehicle_id, record);
  return true;
}

std::size_t evict_stale(FeedSnapshot& snapshot, std::uint64_t now, std::uint32_t ttl) {
  std::size_t evicted = 0;
  for (auto it = snapshot.entities.begin(); it != snapshot.entities.end();) {
    if (it->second.timestamp + ttl < now) {
      it = snapshot.entities.erase(it);
      ++evicted;
    } else {
      ++it;
    }
  }
  return evicted;
}

std::vector<std::uint8_t> encode_feed(const FeedSnapshot& snapshot) {
  using namespace pbwire;

  std::vector<std::uint8_t> header;
  put_string(header, fh::kVersion, "2.0");
  put_uint(header, fh::kIncrementality, kIncrementalityFullDataset);
  put_uint(header, fh::kTimestamp, snapshot.header_timestamp);

  std::vector<std::uint8_t> out;
  put_message(out, fm::kHeader, header);
  for (const auto& [vehicle_id, record] : snapshot.entities) {
    put_message(out, fm::kEntity, encode_entity(vehicle_id, record));
  }
  return out;
}

std::string render_feed_text(const FeedSnapshot& snapshot) {
  std::string out = "header_timestamp=" + std::to_string(snapshot.header_timestamp) +
                    " entities=" + std::to_string(snapshot.entities.size()) + "\n";
  char line[256];
  for (const auto& [id, r] : snapshot.entities) {
    std::snprintf(line, sizeof(line),
                  "vehicle=%u trip=%s route=%s stop=%s seq=%s status=%s "
                  "lat=%.6f lon=%.6f bearing=%.1f speed_mps=%.3f ts=%llu\n",
                  id, r.trip_id ? r.trip_id->c_str() : "-",
                  r.route_id ? r.route_id->c_str() : "-",
                  r.stop_id ? r.stop_id->c_str() : "-",
                  r.current_stop_sequence
                      ? std::to_string(*r.current_stop_sequence).c_str()
                      : "-",
                  status_name(r.current_status), r.latitude, r.longitude,
                  r.bearing, r.speed_mps,
                  static_cast<unsigned long long>(r.timestamp));
    out += line;
  }
  return out;
}

}  // namespace rtpos::feed
