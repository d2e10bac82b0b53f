#include "rtpos/wire.hpp"

#include <bit>
#include <cmath>
#include <cstring>

namespace rtpos::wire {

namespace {

void put_u32_be(std::uint8_t* dst, std::uint32_t v) {
  dst[0] = static_cast<std::uint8_t>(v >> 24);
  dst[1] = static_cast<std::uint8_t>(v >> 16);
  dst[2] = static_cast<std::uint8_t>(v >> 8);
  dst[3] = static_cast<std::uint8_t>(v);
}

void put_u64_be(std::uint8_t* dst, std::uint64_t v) {
  put_u32_be(dst, static_cast<std::uint32_t>(v >> 32));
  put_u32_be(dst + 4, static_cast<std::uint32_t>(v));
}

std::uint32_t get_u32_be(const std::uint8_t* src) {
  return (static_cast<std::uint32_t>(src[0]) << 24) |
         (static_cast<std::uint32_t>(src[1]) << 16) |
         (static_cast<std::uint32_t>(src[2]) << 8) |
         static_cast<std::uint32_t>(src[3]);
}

std::uint64_t get_u64_be(const std::uint8_t* src) {
  return (static_cast<std::uint64_t>(get_u32_be(src)) << 32) |
         get_u32_be(src + 4);
}

void put_f32_be(std::uint8_t* dst, float v) {
  put_u32_be(dst, std::bit_cast<std::uint32_t>(v));
}

float get_f32_be(const std::uint8_t* src) {
  return std::bit_cast<float>(get_u32_be(src));
}

bool finite(float v) { return std::isfinite(v); }

}  // namespace

std::string_view field_name(Field f) {
  switch (f) {
    case Field::Latitude: return "latitude";
    case Field::Longitude: return "longitude";
    case Field::Bearing: return "bearing";
    case Field::Speed: return "speed";
    case Field::VehicleId: return "vehicle_id";
    case Field::Timestamp: return "timestamp";
  }
  return "?";
}

std::string_view reject_reason_name(RejectReason r) {
  switch (r) {
    case RejectReason::StaleTimestamp: return "stale_timestamp";
    case RejectReason::FutureTimestamp: return "future_timestamp";
    case RejectReason::ImplausibleSpeed: return "implausible_speed";
  }
  return "?";
}

std::optional<Field> find_invalid_field(const PositionReport& r) {
  if (!finite(r.latitude) || r.latitude < -90.0f || r.latitude > 90.0f) {
    return Field::Latitude;
  }
  if (!finite(r.longitude) || r.longitude < -180.0f || r.longitude > 180.0f) {
    return Field::Longitude;
  }
  // 360.0 exactly is accepted and normalized to 0.0; some GNSS units emit it.
  if (!finite(r.bearing) || r.bearing < 0.0f || r.bearing > 360.0f) {
    return Field::Bearing;
  }
  if (!finite(r.speed) || r.speed < 0.0f) {
    return Field::Speed;
  }
  if (r.timestamp == 0) {
    return Field::Timestamp;
  }
  return std::nullopt;
}

std::optional<PacketBytes> encode_packet(const PositionReport& report,
                                         Field* bad_field) {
  if (auto bad = find_invalid_field(report)) {
    if (bad_field != nullptr) *bad_field = *bad;
    return std::nullopt;
  }
  const float bearing = report.bearing == 360.0f ? 0.0f : report.bearing;

  PacketBytes out{};
  put_f32_be(out.data() + 0, report.latitude);
  put_f32_be(out.data() + 4, report.longitude);
  put_f32_be(out.data() + 8, bearing);
  put_f32_be(out.data() + 12, report.speed);
  put_u32_be(out.data() + 16, report.vehicle_id);
  put_u64_be(out.data() + 20, report.timestamp);
  return out;
}

DecodeResult decode_packet(std::span<const std::uint8_t> bytes) {
  DecodeResult res;
  if (bytes.size() != kPacketSize) {
    res.status = DecodeStatus::WrongLength;
    return res;
  }
  PositionReport r;
  r.latitude = get_f32_be(bytes.data() + 0);
  r.longitude = get_f32_be(bytes.data() + 4);
  r.bearing = get_f32_be(bytes.data() + 8);
  r.speed = get_f32_be(bytes.data() + 12);
  r.vehicle_id = get_u32_be(bytes.data() + 16);
  r.timestamp = get_u64_be(bytes.data() + 20);

  if (auto bad = find_invalid_field(r)) {
    res.status = DecodeStatus::InvalidField;
    res.bad_field = *bad;
    return res;
  }
  if (r.bearing == 360.0f) r.bearing = 0.0f;
  res.report = r;
  return res;
}

ValidityVerdict validate_report(const PositionReport& report, std::uint64_t now) {
  // Future first: absurdly large timestamps must not wrap the stale check.
  if (report.timestamp > now + kMaxReportFutureSeconds) {
    return ValidityVerdict::reject(RejectReason::FutureTimestamp);
  }
  if (report.timestamp + kMaxReportAgeSeconds < now) {
    return ValidityVerdict::reject(RejectReason::StaleTimestamp);
  }
  if (report.speed > kMaxPlausibleSpeedKmh) {
    return ValidityVerdict::reject(RejectReason::ImplausibleSpeed);
  }
  return ValidityVerdict::accept();
}

}  // namespace rtpos::wire
