#include "rtpos/gtfs.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <unordered_set>

#include "csv.hpp"
#include "zip_reader.hpp"

namespace rtpos::gtfs {

namespace fs = std::filesystem;
using detail::csv_column;
using detail::for_each_csv_row;

namespace {

constexpr std::int32_t kSecondsPerDay = 86400;

std::string describe(LoadErrorKind kind, const std::string& file,
                     std::size_t line, const std::string& message) {
  std::string out;
  switch (kind) {
    case LoadErrorKind::MissingFile: out = "missing file: "; break;
    case LoadErrorKind::ParseError: out = "parse error: "; break;
    case LoadErrorKind::DanglingReference: out = "dangling reference: "; break;
  }
  out += file;
  if (line > 0) out += ":" + std::to_string(line);
  out += ": " + message;
  return out;
}

bool parse_double(std::string_view text, double& out) {
  if (text.empty()) return false;
  std::string buf(text);
  char* end = nullptr;
  errno = 0;
  out = std::strtod(buf.c_str(), &end);
  return errno == 0 && end == buf.c_str() + buf.size();
}

bool parse_u32(std::string_view text, std::uint32_t& out) {
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && p == text.data() + text.size();
}

std::string_view trimmed(std::string_view v) {
  while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.remove_prefix(1);
  while (!v.empty() && (v.back() == ' ' || v.back() == '\t')) v.remove_suffix(1);
  return v;
}

// Reads the named table from either a directory or a zip archive.
class TableSource {
 public:
  explicit TableSource(const std::string& source) {
    if (fs::is_directory(source)) {
      dir_ = source;
    } else if (detail::is_zip_file(source)) {
      zip_.emplace(source);
    } else {
      throw GtfsError(LoadErrorKind::MissingFile, source, 0,
                      "not a directory or zip archive");
    }
  }

  std::optional<std::string> read(const std::string& table) const {
    if (zip_) return zip_->read_entry(table);
    const fs::path p = fs::path(dir_) / table;
    std::ifstream in(p, std::ios::binary);
    if (!in) return std::nullopt;
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  }

 private:
  std::string dir_;
  std::optional<detail::ZipReader> zip_;
};

int require_column(const std::vector<std::string>& header, std::string_view name,
                   const std::string& file) {
  const int idx = csv_column(header, name);
  if (idx < 0) {
    throw GtfsError(LoadErrorKind::ParseError, file, 1,
                    "missing required column '" + std::string(name) + "'");
  }
  return idx;
}

}  // namespace

GtfsError::GtfsError(LoadErrorKind kind, std::string file, std::size_t line,
                     const std::string& message)
    : std::runtime_error(describe(kind, file, line, message)),
      kind_(kind),
      file_(std::move(file)),
      line_(line) {}

std::int32_t parse_gtfs_time(std::string_view text) {
  text = trimmed(text);
  const auto c1 = text.find(':');
  if (c1 == std::string_view::npos) return -1;
  const auto c2 = text.find(':', c1 + 1);
  if (c2 == std::string_view::npos) return -1;

  std::uint32_t h = 0, m = 0, s = 0;
  if (!parse_u32(text.substr(0, c1), h)) return -1;
  if (!parse_u32(text.substr(c1 + 1, c2 - c1 - 1), m)) return -1;
  if (!parse_u32(text.substr(c2 + 1), s)) return -1;
  // Hours beyond 23 are after-midnight service, but hundreds of hours is
  // garbage (and would overflow the seconds arithmetic).
  if (h > 999 || m > 59 || s > 59) return -1;
  return static_cast<std::int32_t>(h * 3600 + m * 60 + s);
}

std::int32_t seconds_since_midnight(std::uint64_t timestamp,
                                    std::int32_t utc_offset_minutes) {
  const std::int64_t local = static_cast<std::int64_t>(timestamp) +
                             static_cast<std::int64_t>(utc_offset_minutes) * 60;
  std::int64_t s = local % kSecondsPerDay;
  if (s < 0) s += kSecondsPerDay;
  return static_cast<std::int32_t>(s);
}

const Stop* GtfsData::find_stop(std::string_view stop_id) const {
  const auto it = std::lower_bound(
      stops.begin(), stops.end(), stop_id,
      [](const Stop& s, std::string_view id) { return s.stop_id < id; });
  if (it == stops.end() || it->stop_id != stop_id) return nullptr;
  return &*it;
}

const TripSchedule* GtfsData::find_trip(std::string_view trip_id) const {
  const auto it = std::lower_bound(
      trips.begin(), trips.end(), trip_id,
      [](const TripSchedule& t, std::string_view id) { return t.trip_id < id; });
  if (it == trips.end() || it->trip_id != trip_id) return nullptr;
  return &*it;
}

double GtfsData::mean_stop_latitude() const {
  if (stops.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : stops) sum += s.latitude;
  return sum / static_cast<double>(stops.size());
}

GtfsData load_gtfs(const std::string& source) {
  const TableSource tables(source);

  const auto stops_txt = tables.read("stops.txt");
  if (!stops_txt) throw GtfsError(LoadErrorKind::MissingFile, "stops.txt", 0, "required table absent");
  const auto trips_txt = tables.read("trips.txt");
  if (!trips_txt) throw GtfsError(LoadErrorKind::MissingFile, "trips.txt", 0, "required table absent");
  const auto stop_times_txt = tables.read("stop_times.txt");
  if (!stop_times_txt) throw GtfsError(LoadErrorKind::MissingFile, "stop_times.txt", 0, "required table absent");
  const auto routes_txt = tables.read("routes.txt");  // optional

  GtfsData data;

  // stops.txt
  {
    std::vector<std::string> header = for_each_csv_row(*stops_txt, [](auto, const auto&) {});
    const int col_id = require_column(header, "stop_id", "stops.txt");
    const int col_name = csv_column(header, "stop_name");
    const int col_lat = require_column(header, "stop_lat", "stops.txt");
    const int col_lon = require_column(header, "stop_lon", "stops.txt");

    for_each_csv_row(*stops_txt, [&](std::size_t line, const auto& row) {
      const std::size_t need = static_cast<std::size_t>(
          std::max({col_id, col_name, col_lat, col_lon})) + 1;
      if (row.size() < need) {
        throw GtfsError(LoadErrorKind::ParseError, "stops.txt", line, "too few fields");
      }
      Stop s;
      s.stop_id = std::string(trimmed(row[col_id]));
      if (s.stop_id.empty()) {
        throw GtfsError(LoadErrorKind::ParseError, "stops.txt", line, "empty stop_id");
      }
      if (col_name >= 0) s.name = row[col_name];
      if (!parse_double(trimmed(row[col_lat]), s.latitude) ||
          !parse_double(trimmed(row[col_lon]), s.longitude)) {
        throw GtfsError(LoadErrorKind::ParseError, "stops.txt", line, "bad coordinate");
      }
      if (s.latitude < -90.0 || s.latitude > 90.0 || s.longitude < -180.0 ||
          s.longitude > 180.0) {
        throw GtfsError(LoadErrorKind::ParseError, "stops.txt", line, "coordinate out of range");
      }
      data.stops.push_back(std::move(s));
    });

    std::sort(data.stops.begin(), data.stops.end(),
              [](const Stop& a, const Stop& b) { return a.stop_id < b.stop_id; });
    for (std::size_t i = 1; i < data.stops.size(); ++i) {
      if (data.stops[i].stop_id == data.stops[i - 1].stop_id) {
        throw GtfsError(LoadErrorKind::ParseError, "stops.txt", 0,
                        "duplicate stop_id '" + data.stops[i].stop_id + "'");
      }
    }
  }

  // routes.txt (optional; ids only, for reference validation)
  std::unordered_set<std::string> route_ids;
  bool have_routes = false;
  if (routes_txt) {
    have_routes = true;
    std::vector<std::string> header = for_each_csv_row(*routes_txt, [](auto, const auto&) {});
    const int col_route = require_column(header, "route_id", "routes.txt");
    for_each_csv_row(*routes_txt, [&](std::size_t line, const auto& row) {
      if (row.size() <= static_cast<std::size_t>(col_route)) {
        throw GtfsError(LoadErrorKind::ParseError, "routes.txt", line, "too few fields");
      }
      route_ids.insert(std::string(trimmed(row[col_route])));
    });
  }

  // trips.txt
  struct TripRow {
    std::string trip_id;
    std::string route_id;
  };
  std::vector<TripRow> trip_rows;
  {
    std::vector<std::string> header = for_each_csv_row(*trips_txt, [](auto, const auto&) {});
    const int col_trip = require_column(header, "trip_id", "trips.txt");
    const int col_route = require_column(header, "route_id", "trips.txt");
    for_each_csv_row(*trips_txt, [&](std::size_t line, const auto& row) {
      const std::size_t need = static_cast<std::size_t>(std::max(col_trip, col_route)) + 1;
      if (row.size() < need) {
        throw GtfsError(LoadErrorKind::ParseError, "trips.txt", line, "too few fields");
      }
      TripRow t;
      t.trip_id = std::string(trimmed(row[col_trip]));
      t.route_id = std::string(trimmed(row[col_route]));
      if (t.trip_id.empty()) {
        throw GtfsError(LoadErrorKind::ParseError, "trips.txt", line, "empty trip_id");
      }
      if (have_routes && !route_ids.count(t.route_id)) {
        throw GtfsError(LoadErrorKind::DanglingReference, "trips.txt", line,
                        "unknown route_id '" + t.route_id + "'");
      }
      trip_rows.push_back(std::move(t));
    });
  }

  std::unordered_map<std::string, std::uint32_t> stop_index;
  stop_index.reserve(data.stops.size());
  for (std::uint32_t i = 0; i < data.stops.size(); ++i) {
    stop_index.emplace(data.stops[i].stop_id, i);
  }

  std::unordered_map<std::string, std::vector<StopTime>> by_trip;
  std::unordered_set<std::string> known_trips;
  for (const auto& t : trip_rows) {
    if (!known_trips.insert(t.trip_id).second) {
      throw GtfsError(LoadErrorKind::ParseError, "trips.txt", 0,
                      "duplicate trip_id '" + t.trip_id + "'");
    }
  }

  // stop_times.txt
  {
    std::vector<std::string> header = for_each_csv_row(*stop_times_txt, [](auto, const auto&) {});
    const int col_trip = require_column(header, "trip_id", "stop_times.txt");
    const int col_arr = require_column(header, "arrival_time", "stop_times.txt");
    const int col_dep = require_column(header, "departure_time", "stop_times.txt");
    const int col_stop = require_column(header, "stop_id", "stop_times.txt");
    const int col_seq = require_column(header, "stop_sequence", "stop_times.txt");

    for_each_csv_row(*stop_times_txt, [&](std::size_t line, const auto& row) {
      const std::size_t need = static_cast<std::size_t>(
          std::max({col_trip, col_arr, col_dep, col_stop, col_seq})) + 1;
      if (row.size() < need) {
        throw GtfsError(LoadErrorKind::ParseError, "stop_times.txt", line, "too few fields");
      }
      const std::string trip_id(trimmed(row[col_trip]));
      if (!known_trips.count(trip_id)) {
        throw GtfsError(LoadErrorKind::DanglingReference, "stop_times.txt", line,
                        "unknown trip_id '" + trip_id + "'");
      }
      const std::string stop_id(trimmed(row[col_stop]));
      const auto sit = stop_index.find(stop_id);
      if (sit == stop_index.end()) {
        throw GtfsError(LoadErrorKind::DanglingReference, "stop_times.txt", line,
                        "unknown stop_id '" + stop_id + "'");
      }
      StopTime st;
      st.stop_index = sit->second;
      st.arrival = parse_gtfs_time(row[col_arr]);
      st.departure = parse_gtfs_time(row[col_dep]);
      if (st.arrival < 0 || st.departure < 0) {
        throw GtfsError(LoadErrorKind::ParseError, "stop_times.txt", line, "bad time");
      }
      if (st.arrival > st.departure) {
        throw GtfsError(LoadErrorKind::ParseError, "stop_times.txt", line,
                        "arrival after departure");
      }
      if (!parse_u32(trimmed(row[col_seq]), st.stop_sequence)) {
        throw GtfsError(LoadErrorKind::ParseError, "stop_times.txt", line,
                        "bad stop_sequence");
      }
      by_trip[trip_id].push_back(st);
    });
  }

  for (auto& t : trip_rows) {
    auto it = by_trip.find(t.trip_id);
    if (it == by_trip.end() || it->second.size() < 2) {
      ++data.dropped_trips;
      continue;
    }
    TripSchedule trip;
    trip.trip_id = std::move(t.trip_id);
    trip.route_id = std::move(t.route_id);
    trip.stop_times = std::move(it->second);
    std::sort(trip.stop_times.begin(), trip.stop_times.end(),
              [](const StopTime& a, const StopTime& b) {
                return a.stop_sequence < b.stop_sequence;
              });
    for (std::size_t i = 1; i < trip.stop_times.size(); ++i) {
      if (trip.stop_times[i].stop_sequence == trip.stop_times[i - 1].stop_sequence) {
        throw GtfsError(LoadErrorKind::ParseError, "stop_times.txt", 0,
                        "duplicate stop_sequence in trip '" + trip.trip_id + "'");
      }
      if (trip.stop_times[i].arrival < trip.stop_times[i - 1].departure) {
        throw GtfsError(LoadErrorKind::ParseError, "stop_times.txt", 0,
                        "times not ordered along trip '" + trip.trip_id + "'");
      }
    }
    data.trips.push_back(std::move(trip));
  }

  std::sort(data.trips.begin(), data.trips.end(),
            [](const TripSchedule& a, const TripSchedule& b) {
              return a.trip_id < b.trip_id;
            });
  return data;
}

}  // namespace rtpos::gtfs
