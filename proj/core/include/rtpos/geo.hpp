#pragma once

namespace rtpos::geo {

inline constexpr double kEarthRadiusMeters = 6371000.0;

// Great-circle distance on a spherical Earth, in meters.
double haversine_m(double lat1, double lon1, double lat2, double lon2);

// Initial great-circle bearing from (lat1,lon1) toward (lat2,lon2),
// degrees clockwise from true north in [0, 360).
double initial_bearing_deg(double lat1, double lon1, double lat2, double lon2);

// Equirectangular projection used by the neighbor trees: x is longitude
// scaled by cos(reference latitude), y is latitude, both in degrees.
struct PlanarPoint {
  double x = 0.0;
  double y = 0.0;
};

PlanarPoint project_equirectangular(double lat, double lon, double reference_lat);

}  // namespace rtpos::geo
