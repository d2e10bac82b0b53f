#include "rtpos/simulate.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>
#include <thread>

#include "csv.hpp"
#include "rtpos/geo.hpp"

namespace rtpos::vsim {

namespace {

constexpr double kMetersPerDegree = geo::kEarthRadiusMeters * 3.14159265358979323846 / 180.0;

struct SegmentState {
  double lat = 0.0;
  double lon = 0.0;
  double bearing = 0.0;
  double speed_kmh = 0.0;
  bool dwell = false;
};

// Position along the trip at schedule time s (seconds, fractional).
SegmentState position_at(const gtfs::TripSchedule& trip, const gtfs::GtfsData& gtfs,
                         double s) {
  const auto& sts = trip.stop_times;
  const auto stop_of = [&](std::size_t i) -> const gtfs::Stop& {
    return gtfs.stops[sts[i].stop_index];
  };

  for (std::size_t k = 0; k < sts.size(); ++k) {
    if (s >= sts[k].arrival && s <= sts[k].departure) {
      SegmentState st;
      const auto& stop = stop_of(k);
      st.lat = stop.latitude;
      st.lon = stop.longitude;
      st.dwell = true;
      st.speed_kmh = 0.0;
      if (k + 1 < sts.size()) {
        const auto& next = stop_of(k + 1);
        st.bearing = geo::initial_bearing_deg(stop.latitude, stop.longitude,
                                              next.latitude, next.longitude);
      } else if (k > 0) {
        const auto& prev = stop_of(k - 1);
        st.bearing = geo::initial_bearing_deg(prev.latitude, prev.longitude,
                                              stop.latitude, stop.longitude);
      }
      return st;
    }
  }
  for (std::size_t k = 0; k + 1 < sts.size(); ++k) {
    const double dep = sts[k].departure;
    const double arr = sts[k + 1].arrival;
    if (s > dep && s < arr) {
      const auto& a = stop_of(k);
      const auto& b = stop_of(k + 1);
      const double f = (s - dep) / (arr - dep);
      SegmentState st;
      st.lat = a.latitude + (b.latitude - a.latitude) * f;
      st.lon = a.longitude + (b.longitude - a.longitude) * f;
      st.bearing = geo::initial_bearing_deg(a.latitude, a.longitude, b.latitude,
                                            b.longitude);
      const double meters = geo::haversine_m(a.latitude, a.longitude, b.latitude,
                                             b.longitude);
      st.speed_kmh = meters / (arr - dep) * 3.6;
      return st;
    }
  }
  // Outside the span (defensively clamp to the trip ends).
  SegmentState st;
  const auto& edge = s < sts.front().arrival ? stop_of(0) : stop_of(sts.size() - 1);
  st.lat = edge.latitude;
  st.lon = edge.longitude;
  st.dwell = true;
  return st;
}

float clampf(double v, double lo, double hi) {
  return static_cast<float>(std::min(hi, std::max(lo, v)));
}

}  // namespace

std::int64_t local_midnight_epoch(std::uint64_t now, std::int32_t utc_offset_minutes) {
  const std::int64_t local_seconds =
      gtfs::seconds_since_midnight(now, utc_offset_minutes);
  return static_cast<std::int64_t>(now) - local_seconds;
}

std::vector<TimedReport> generate_trace(const SimPlan& plan,
                                        const gtfs::GtfsData& gtfs,
                                        std::int64_t base_epoch) {
  if (plan.cadence_ms == 0) {
    throw std::runtime_error("simulate: cadence must be positive");
  }
  if (plan.jitter_m < 0.0) {
    throw std::runtime_error("simulate: jitter must be non-negative");
  }
  const gtfs::TripSchedule* trip = gtfs.find_trip(plan.trip_id);
  if (trip == nullptr) {
    throw std::runtime_error("simulate: unknown trip '" + plan.trip_id + "'");
  }

  std::mt19937_64 rng(plan.seed);
  std::normal_distribution<double> noise(0.0, plan.jitter_m > 0.0 ? plan.jitter_m : 1.0);

  const std::int64_t start_ms =
      (static_cast<std::int64_t>(trip->span_start()) + plan.start_offset_s) * 1000;
  const std::int64_t end_ms = static_cast<std::int64_t>(trip->span_end()) * 1000;

  std::vector<TimedReport> trace;
  std::size_t index = 0;
  for (std::int64_t ms = start_ms; ms <= end_ms; ms += plan.cadence_ms, ++index) {
    const double s = static_cast<double>(ms) / 1000.0;
    const SegmentState st = position_at(*trip, gtfs, s);

    double lat = st.lat;
    double lon = st.lon;
    if (plan.jitter_m > 0.0) {
      lat += noise(rng) / kMetersPerDegree;
      const double scale = std::cos(lat * 3.14159265358979323846 / 180.0);
      lon += noise(rng) / (kMetersPerDegree * (std::abs(scale) > 1e-9 ? scale : 1e-9));
    }

    double speed = st.speed_kmh;
    if (!st.dwell) {
      switch (plan.profile) {
        case SpeedProfile::Scheduled:
          break;
        case SpeedProfile::Constant:
          speed = plan.constant_speed_kmh;
          break;
        case SpeedProfile::StopAndGo:
          speed = index % 2 == 0 ? st.speed_kmh * 2.0 : 0.0;
          break;
      }
    }

    wire::PositionReport report;
    report.latitude = clampf(lat, -90.0, 90.0);
    report.longitude = clampf(lon, -180.0, 180.0);
    report.bearing = static_cast<float>(st.bearing);
    if (report.bearing >= 360.0f) report.bearing = 0.0f;
    report.speed = static_cast<float>(speed);
    report.vehicle_id = plan.vehicle_id;
    report.timestamp = static_cast<std::uint64_t>(base_epoch + ms / 1000);
    trace.push_back(TimedReport{static_cast<std::uint64_t>(ms), report});
  }
  return trace;
}

std::vector<TimedReport> merge_traces(std::vector<std::vector<TimedReport>> traces) {
  std::vector<TimedReport> merged;
  for (auto& t : traces) {
    merged.insert(merged.end(), t.begin(), t.end());
  }
  std::stable_sort(merged.begin(), merged.end(),
                   [](const TimedReport& a, const TimedReport& b) {
                     return a.schedule_ms < b.schedule_ms;
                   });
  return merged;
}

EmitResult emit(const std::vector<TimedReport>& trace, const EmitOptions& options) {
  EmitResult result;
  const int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd < 0) throw std::runtime_error("simulate: cannot create UDP socket");

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(options.port);
  if (::inet_pton(AF_INET, options.host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw std::runtime_error("simulate: bad target host " + options.host);
  }

  std::uint64_t prev_ms = trace.empty() ? 0 : trace.front().schedule_ms;
  for (const auto& timed : trace) {
    if (options.time_scale > 0.0 && timed.schedule_ms > prev_ms) {
      const double gap_ms =
          static_cast<double>(timed.schedule_ms - prev_ms) * options.time_scale;
      std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(gap_ms));
    }
    prev_ms = timed.schedule_ms;

    const auto bytes = wire::encode_packet(timed.report);
    if (!bytes) {
      ++result.socket_errors;
      continue;
    }
    const ssize_t n = ::sendto(fd, bytes->data(), bytes->size(), 0,
                               reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
    if (n == static_cast<ssize_t>(bytes->size())) {
      ++result.sent;
    } else {
      ++result.socket_errors;
    }
  }
  ::close(fd);
  return result;
}

std::vector<SimPlan> parse_plan_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("simulate: cannot open plan file " + path);
  const std::string content((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());

  const auto header = detail::for_each_csv_row(content, [](auto, const auto&) {});
  const auto col = [&](std::string_view name) {
    const int idx = detail::csv_column(header, name);
    if (idx < 0) {
      throw std::runtime_error("plan file: missing column '" + std::string(name) + "'");
    }
    return idx;
  };
  const int c_vid = col("vehicle_id");
  const int c_trip = col("trip_id");
  const int c_off = col("start_offset");
  const int c_cad = col("cadence_ms");
  const int c_prof = col("speed_profile");
  const int c_jit = col("jitter_m");
  const int c_seed = col("seed");

  std::vector<SimPlan> plans;
  detail::for_each_csv_row(content, [&](std::size_t line, const auto& row) {
    const auto bad = [&](const std::string& what) {
      return std::runtime_error("plan file " + path + ":" + std::to_string(line) +
                                ": " + what);
    };
    const std::size_t need = static_cast<std::size_t>(
        std::max({c_vid, c_trip, c_off, c_cad, c_prof, c_jit, c_seed})) + 1;
    if (row.size() < need) throw bad("too few fields");

    SimPlan plan;
    const auto num = [&](const std::string& text, auto& out) {
      const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
      if (ec != std::errc() || p != text.data() + text.size()) {
        throw bad("bad number '" + text + "'");
      }
    };
    num(row[c_vid], plan.vehicle_id);
    plan.trip_id = row[c_trip];
    num(row[c_off], plan.start_offset_s);
    num(row[c_cad], plan.cadence_ms);
    num(row[c_seed], plan.seed);
    plan.jitter_m = std::strtod(row[c_jit].c_str(), nullptr);

    const std::string& prof = row[c_prof];
    if (prof == "scheduled" || prof.empty()) {
      plan.profile = SpeedProfile::Scheduled;
    } else if (prof == "stop-and-go") {
      plan.profile = SpeedProfile::StopAndGo;
    } else if (prof.rfind("constant:", 0) == 0) {
      plan.profile = SpeedProfile::Constant;
      plan.constant_speed_kmh = std::strtod(prof.c_str() + 9, nullptr);
    } else {
      throw bad("unknown speed profile '" + prof + "'");
    }
    plans.push_back(std::move(plan));
  });
  return plans;
}

}  // namespace rtpos::vsim
