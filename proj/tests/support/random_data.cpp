#include "random_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace testsupport {

namespace {

std::string padded_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%04zu", prefix, i);
  return buf;
}

}  // namespace

rtpos::gtfs::GtfsData make_random_gtfs(const RandomGtfsParams& params) {
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> coord(-params.spread_deg, params.spread_deg);
  std::uniform_int_distribution<std::size_t> route_pick(0, params.routes - 1);

  rtpos::gtfs::GtfsData data;
  data.stops.reserve(params.stops);
  for (std::size_t i = 0; i < params.stops; ++i) {
    rtpos::gtfs::Stop stop;
    stop.stop_id = padded_id("S", i);  // id order equals index order
    stop.name = "Stop " + std::to_string(i);
    stop.latitude = params.center_lat + coord(rng);
    stop.longitude = params.center_lon + coord(rng);
    data.stops.push_back(std::move(stop));
  }

  std::uniform_int_distribution<std::size_t> stop_count(2, 8);
  std::uniform_int_distribution<std::uint32_t> stop_pick(
      0, static_cast<std::uint32_t>(params.stops - 1));
  std::uniform_int_distribution<std::int32_t> start_time(0, 79200);  // up to 22:00
  std::uniform_int_distribution<std::int32_t> late_start(84600, 93600);
  std::uniform_int_distribution<std::int32_t> travel(30, 600);
  std::uniform_int_distribution<std::int32_t> dwell(0, 90);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (std::size_t i = 0; i < params.trips; ++i) {
    rtpos::gtfs::TripSchedule trip;
    trip.trip_id = padded_id("T", i);
    trip.route_id = padded_id("R", route_pick(rng));

    const std::size_t n = stop_count(rng);
    std::int32_t clock = unit(rng) < params.after_midnight_fraction
                             ? late_start(rng)
                             : start_time(rng);
    for (std::size_t k = 0; k < n; ++k) {
      rtpos::gtfs::StopTime st;
      st.stop_index = stop_pick(rng);
      st.arrival = clock;
      st.departure = clock + (unit(rng) < 0.5 ? 0 : dwell(rng));
      st.stop_sequence = static_cast<std::uint32_t>(k + 1);
      clock = st.departure + (unit(rng) < 0.05 ? 0 : travel(rng));  // rare zero-length hops
      trip.stop_times.push_back(st);
    }
    data.trips.push_back(std::move(trip));
  }
  std::sort(data.trips.begin(), data.trips.end(),
            [](const auto& a, const auto& b) { return a.trip_id < b.trip_id; });
  return data;
}

rtpos::matcher::VehicleMap make_random_vehicle_map(const rtpos::gtfs::GtfsData& gtfs,
                                                   std::size_t count,
                                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::string> routes;
  for (const auto& trip : gtfs.trips) {
    if (std::find(routes.begin(), routes.end(), trip.route_id) == routes.end()) {
      routes.push_back(trip.route_id);
    }
  }
  std::sort(routes.begin(), routes.end());

  rtpos::matcher::VehicleMap map;
  for (std::size_t i = 1; i <= count; ++i) {
    rtpos::matcher::VehicleDescriptor d;
    d.vehicle_id = static_cast<std::uint32_t>(i);
    d.label = "Bus " + std::to_string(i);
    d.license_plate = "PLATE-" + std::to_string(i);
    d.wheelchair = static_cast<rtpos::matcher::Wheelchair>(i % 3);
    if (!routes.empty() && unit(rng) >= 1.0 / 6.0) {
      std::uniform_int_distribution<std::size_t> pick(0, routes.size() - 1);
      d.route_id = routes[pick(rng)];
    }
    map.by_id.emplace(d.vehicle_id, std::move(d));
  }
  return map;
}

rtpos::wire::PositionReport make_random_report(const rtpos::gtfs::GtfsData& gtfs,
                                               std::uint32_t max_vehicle_id,
                                               std::int32_t utc_offset_minutes,
                                               std::mt19937_64& rng) {
  std::uniform_int_distribution<std::uint32_t> vehicle(1, max_vehicle_id + 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  rtpos::wire::PositionReport report;
  report.vehicle_id = vehicle(rng);

  // Pick a civil second near a trip span so stab queries have work to do.
  std::int32_t civil = 43200;
  if (!gtfs.trips.empty()) {
    std::uniform_int_distribution<std::size_t> trip_pick(0, gtfs.trips.size() - 1);
    const auto& trip = gtfs.trips[trip_pick(rng)];
    std::uniform_int_distribution<std::int32_t> within(
        trip.span_start() - 120, trip.span_end() + 120);
    civil = within(rng) % 86400;
    if (civil < 0) civil += 86400;
  }
  const std::int64_t base_day = 19700;  // arbitrary service day
  report.timestamp = static_cast<std::uint64_t>(
      base_day * 86400 + civil - static_cast<std::int64_t>(utc_offset_minutes) * 60);

  double lat = 34.05, lon = -118.25;
  if (!gtfs.stops.empty()) {
    std::uniform_int_distribution<std::size_t> stop_pick(0, gtfs.stops.size() - 1);
    const auto& stop = gtfs.stops[stop_pick(rng)];
    lat = stop.latitude;
    lon = stop.longitude;
  }
  // Mostly close to a stop (attachment range), sometimes far away.
  const double radius_m = unit(rng) < 0.5 ? unit(rng) * 40.0 : unit(rng) * 3000.0;
  const double theta = unit(rng) * 6.28318530717958647692;
  lat += radius_m * std::cos(theta) / 111194.92664455873;
  lon += radius_m * std::sin(theta) / (111194.92664455873 * std::cos(lat * 0.0174532925199432957692));

  report.latitude = static_cast<float>(lat);
  report.longitude = static_cast<float>(lon);
  report.bearing = static_cast<float>(unit(rng) * 359.9);
  report.speed = unit(rng) < 0.3 ? 0.0f : static_cast<float>(unit(rng) * 80.0);
  return report;
}

rtpos::wire::PositionReport make_random_valid_report(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  rtpos::wire::PositionReport report;
  report.latitude = static_cast<float>(unit(rng) * 180.0 - 90.0);
  report.longitude = static_cast<float>(unit(rng) * 360.0 - 180.0);
  report.bearing = static_cast<float>(unit(rng) * 359.999);
  report.speed = static_cast<float>(unit(rng) * 200.0);
  report.vehicle_id = static_cast<std::uint32_t>(rng());
  report.timestamp = 1 + (rng() % 4102444800ull);
  return report;
}

}  // namespace testsupport
