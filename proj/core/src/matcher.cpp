#include "rtpos/matcher.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <stdexcept>

#include "csv.hpp"
#include "rtpos/geo.hpp"

namespace rtpos::matcher {

namespace {

bool parse_u32(std::string_view text, std::uint32_t& out) {
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && p == text.data() + text.size();
}

VehiclePositionRecord base_record(const wire::PositionReport& report) {
  VehiclePositionRecord rec;
  rec.latitude = report.latitude;
  rec.longitude = report.longitude;
  rec.bearing = report.bearing;
  rec.speed_mps = static_cast<double>(report.speed) / 3.6;
  rec.timestamp = report.timestamp;
  return rec;
}

// Schedule time to evaluate this trip at: t itself when the span covers it,
// otherwise the after-midnight alias t+86400.
std::int32_t query_time_for(const gtfs::TripSchedule& trip, std::int32_t t) {
  if (t >= trip.span_start() && t <= trip.span_end()) return t;
  return t + 86400;
}

}  // namespace

VehicleMap load_vehicle_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("vehicle map: cannot open " + path);
  const std::string content((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());

  VehicleMap map;
  const auto header = detail::for_each_csv_row(content, [](auto, const auto&) {});
  const auto col = [&](std::string_view name) {
    const int idx = detail::csv_column(header, name);
    if (idx < 0) {
      throw std::runtime_error("vehicle map: " + path + ": missing column '" +
                               std::string(name) + "'");
    }
    return idx;
  };
  const int c_id = col("vehicle_id");
  const int c_route = col("route_id");
  const int c_label = col("label");
  const int c_plate = col("license_plate");
  const int c_wheel = col("wheelchair_accessible");

  detail::for_each_csv_row(content, [&](std::size_t line, const auto& row) {
    const std::size_t need = static_cast<std::size_t>(
        std::max({c_id, c_route, c_label, c_plate, c_wheel})) + 1;
    if (row.size() < need) {
      throw std::runtime_error("vehicle map: " + path + ":" +
                               std::to_string(line) + ": too few fields");
    }
    VehicleDescriptor d;
    if (!parse_u32(row[c_id], d.vehicle_id)) {
      throw std::runtime_error("vehicle map: " + path + ":" +
                               std::to_string(line) + ": bad vehicle_id");
    }
    if (!row[c_route].empty()) d.route_id = row[c_route];
    d.label = row[c_label];
    d.license_plate = row[c_plate];
    std::uint32_t w = 0;
    if (!parse_u32(row[c_wheel], w) || w > 2) {
      throw std::runtime_error("vehicle map: " + path + ":" +
                               std::to_string(line) + ": bad wheelchair flag");
    }
    d.wheelchair = static_cast<Wheelchair>(w);
    if (!map.by_id.emplace(d.vehicle_id, std::move(d)).second) {
      throw std::runtime_error("vehicle map: " + path + ":" +
                               std::to_string(line) + ": duplicate vehicle_id");
    }
  });
  return map;
}

std::vector<indexes::StopOccurrence> stops_between(const gtfs::TripSchedule& trip,
                                                   std::int32_t t,
                                                   const gtfs::GtfsData& gtfs) {
  const auto& sts = trip.stop_times;
  const std::size_t n = sts.size();

  // Latest stop already reached, earliest stop not yet departed. Arrivals and
  // departures are non-decreasing along the trip.
  std::ptrdiff_t before = -1;
  for (std::size_t i = 0; i < n; ++i) {
    if (sts[i].arrival <= t) before = static_cast<std::ptrdiff_t>(i);
  }
  std::ptrdiff_t after = -1;
  for (std::size_t i = n; i-- > 0;) {
    if (sts[i].departure >= t) after = static_cast<std::ptrdiff_t>(i);
  }

  std::size_t lo, hi;
  if (before < 0) {
    lo = hi = static_cast<std::size_t>(after);
  } else if (after < 0) {
    lo = hi = static_cast<std::size_t>(before);
  } else {
    lo = static_cast<std::size_t>(std::min(before, after));
    hi = static_cast<std::size_t>(std::max(before, after));
  }

  std::vector<indexes::StopOccurrence> out;
  out.reserve(hi - lo + 1);
  for (std::size_t i = lo; i <= hi; ++i) {
    out.push_back({&gtfs.stops[sts[i].stop_index], sts[i].stop_sequence});
  }
  return out;
}

VehiclePositionRecord match_position(const wire::PositionReport& report,
                                     const VehicleMap& vehicles,
                                     const MatchContext& ctx) {
  VehiclePositionRecord rec = base_record(report);

  const VehicleDescriptor* desc = vehicles.find(report.vehicle_id);
  if (desc != nullptr) {
    rec.vehicle = *desc;
  } else {
    rec.vehicle.vehicle_id = report.vehicle_id;
  }
  if (desc == nullptr || !desc->route_id.has_value()) {
    return rec;  // minimal record, no trip info
  }
  rec.route_id = desc->route_id;

  const std::int32_t t =
      gtfs::seconds_since_midnight(report.timestamp, ctx.utc_offset_minutes);

  auto candidates = ctx.trip_tree->stab(t);
  std::erase_if(candidates, [&](const gtfs::TripSchedule* trip) {
    return trip->route_id != *desc->route_id;
  });
  if (candidates.empty()) {
    return rec;  // route known but no overlapping trip
  }

  const gtfs::TripSchedule* chosen = nullptr;
  const bool unanimous = std::all_of(
      candidates.begin(), candidates.end(), [&](const gtfs::TripSchedule* c) {
        return c->trip_id == candidates.front()->trip_id;
      });
  if (unanimous) {
    chosen = candidates.front();
  } else {
    double best_d2 = 0.0;
    for (const gtfs::TripSchedule* cand : candidates) {
      const auto slice = stops_between(*cand, query_time_for(*cand, t), *ctx.gtfs);
      const auto tree = indexes::StopNeighborTree::build(slice, ctx.reference_latitude);
      const auto hit = tree.nearest(report.latitude, report.longitude);
      if (chosen == nullptr || hit.distance_sq < best_d2 ||
          (hit.distance_sq == best_d2 && cand->trip_id < chosen->trip_id)) {
        chosen = cand;
        best_d2 = hit.distance_sq;
      }
    }
  }

  rec.trip_id = chosen->trip_id;
  const std::int32_t tq = query_time_for(*chosen, t);

  std::vector<indexes::StopOccurrence> all_stops;
  all_stops.reserve(chosen->stop_times.size());
  for (const auto& st : chosen->stop_times) {
    all_stops.push_back({&ctx.gtfs->stops[st.stop_index], st.stop_sequence});
  }
  const auto trip_tree = indexes::StopNeighborTree::build(all_stops, ctx.reference_latitude);
  const auto nearest = trip_tree.nearest(report.latitude, report.longitude);

  const double meters = geo::haversine_m(report.latitude, report.longitude,
                                         nearest.stop->latitude,
                                         nearest.stop->longitude);
  if (meters <= kStopAttachRadiusMeters) {
    rec.stop_id = nearest.stop->stop_id;
    rec.current_stop_sequence = nearest.stop_sequence;
    rec.current_status = report.speed == 0.0f ? StopStatus::StoppedAt
                                              : StopStatus::InTransitTo;
    return rec;
  }

  // Too far to be "at" any stop: in transit toward the spatially nearest stop
  // among those not yet reached (arrival >= tq); when the trip is already
  // past its last arrival, fall back to the nearest stop overall.
  const gtfs::Stop* target = nullptr;
  std::uint32_t target_seq = 0;
  double target_d2 = 0.0;
  const auto q = geo::project_equirectangular(report.latitude, report.longitude,
                                              ctx.reference_latitude);
  for (const auto& st : chosen->stop_times) {
    if (st.arrival < tq) continue;
    const gtfs::Stop& stop = ctx.gtfs->stops[st.stop_index];
    const auto p = geo::project_equirectangular(stop.latitude, stop.longitude,
                                                ctx.reference_latitude);
    const double dx = q.x - p.x;
    const double dy = q.y - p.y;
    const double d2 = dx * dx + dy * dy;
    const bool wins =
        target == nullptr || d2 < target_d2 ||
        (d2 == target_d2 &&
         (stop.stop_id < target->stop_id ||
          (stop.stop_id == target->stop_id && st.stop_sequence < target_seq)));
    if (wins) {
      target = &stop;
      target_seq = st.stop_sequence;
      target_d2 = d2;
    }
  }
  if (target == nullptr) {
    target = nearest.stop;
    target_seq = nearest.stop_sequence;
  }
  rec.stop_id = target->stop_id;
  rec.current_stop_sequence = target_seq;
  rec.current_status = StopStatus::InTransitTo;
  return rec;
}

}  // namespace rtpos::matcher
