#include "rtpos/geo.hpp"

#include <algorithm>
#include <cmath>

namespace rtpos::geo {

namespace {
constexpr double kPi = 3.14159265358979323846;
double rad(double deg) { return deg * kPi / 180.0; }
double deg(double r) { return r * 180.0 / kPi; }
}  // namespace

double haversine_m(double lat1, double lon1, double lat2, double lon2) {
  const double p1 = rad(lat1);
  const double p2 = rad(lat2);
  const double dp = rad(lat2 - lat1);
  const double dl = rad(lon2 - lon1);
  const double sp = std::sin(dp / 2.0);
  const double sl = std::sin(dl / 2.0);
  const double h = sp * sp + std::cos(p1) * std::cos(p2) * sl * sl;
  return 2.0 * kEarthRadiusMeters * std::asin(std::min(1.0, std::sqrt(h)));
}

double initial_bearing_deg(double lat1, double lon1, double lat2, double lon2) {
  const double p1 = rad(lat1);
  const double p2 = rad(lat2);
  const double dl = rad(lon2 - lon1);
  const double y = std::sin(dl) * std::cos(p2);
  const double x =
      std::cos(p1) * std::sin(p2) - std::sin(p1) * std::cos(p2) * std::cos(dl);
  double b = std::fmod(deg(std::atan2(y, x)) + 360.0, 360.0);
  if (b == 360.0) b = 0.0;
  return b;
}

PlanarPoint project_equirectangular(double lat, double lon, double reference_lat) {
  return {lon * std::cos(rad(reference_lat)), lat};
}

}  // namespace rtpos::geo
