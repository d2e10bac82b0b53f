#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rtpos::gtfs {

struct Stop {
  std::string stop_id;
  std::string name;
  double latitude = 0.0;
  double longitude = 0.0;
};

// Times are seconds since midnight of the service day and may exceed 86400
// for after-midnight service (GTFS "25:10:00" convention).
struct StopTime {
  std::uint32_t stop_index = 0;  // index into GtfsData::stops
  std::int32_t arrival = 0;
  std::int32_t departure = 0;
  std::uint32_t stop_sequence = 0;
};

struct TripSchedule {
  std::string trip_id;
  std::string route_id;
  std::vector<StopTime> stop_times;  // sorted by stop_sequence

  std::int32_t span_start() const { return stop_times.front().departure; }
  std::int32_t span_end() const { return stop_times.back().arrival; }
};

struct GtfsData {
  std::vector<Stop> stops;           // sorted by stop_id
  std::vector<TripSchedule> trips;   // sorted by trip_id
  std::uint32_t dropped_trips = 0;   // trips with fewer than two stop times

  const Stop* find_stop(std::string_view stop_id) const;
  const TripSchedule* find_trip(std::string_view trip_id) const;

  // Reference latitude for planar projections: mean stop latitude.
  double mean_stop_latitude() const;
};

enum class LoadErrorKind : std::uint8_t {
  MissingFile,
  ParseError,
  DanglingReference,
};

class GtfsError : public std::runtime_error {
 public:
  GtfsError(LoadErrorKind kind, std::string file, std::size_t line,
            const std::string& message);

  LoadErrorKind kind() const { return kind_; }
  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }  // 0 when not line-specific

 private:
  LoadErrorKind kind_;
  std::string file_;
  std::size_t line_;
};

// Loads stops.txt, trips.txt and stop_times.txt (plus routes.txt when present,
// used only to validate route references) from a directory or a .zip archive.
// Throws GtfsError on missing tables, malformed rows, or dangling references.
GtfsData load_gtfs(const std::string& source);

// Parses "HH:MM:SS" (HH may exceed 23, and may be a single digit) into seconds
// since midnight. Returns -1 on malformed input.
std::int32_t parse_gtfs_time(std::string_view text);

// Civil seconds-since-midnight of a Unix timestamp in a fixed-offset zone.
// Result is always in [0, 86400).
std::int32_t seconds_since_midnight(std::uint64_t timestamp,
                                    std::int32_t utc_offset_minutes);

}  // namespace rtpos::gtfs
