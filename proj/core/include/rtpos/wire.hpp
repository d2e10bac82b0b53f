#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace rtpos::wire {

// Fixed size of the application-layer telemetry packet carried as a full
// UDP datagram payload. Layout, all fields big-endian:
//   latitude(f32) | longitude(f32) | bearing(f32) | speed(f32)
//   | vehicle_id(u32) | timestamp(u64)
inline constexpr std::size_t kPacketSize = 28;

using PacketBytes = std::array<std::uint8_t, kPacketSize>;

struct PositionReport {
  float latitude = 0.0f;   // decimal degrees, WGS-84
  float longitude = 0.0f;  // decimal degrees, WGS-84
  float bearing = 0.0f;    // degrees clockwise from true north, [0, 360)
  float speed = 0.0f;      // km/h, >= 0
  std::uint32_t vehicle_id = 0;
  std::uint64_t timestamp = 0;  // Unix epoch seconds, > 0

  bool operator==(const PositionReport&) const = default;
};

enum class Field : std::uint8_t {
  Latitude,
  Longitude,
  Bearing,
  Speed,
  VehicleId,
  Timestamp,
};

std::string_view field_name(Field f);

// Returns the first field violating the report invariants, or nullopt if the
// report is well-formed. Bearing exactly 360.0 is treated as valid (it is
// normalized to 0.0 by the codec).
std::optional<Field> find_invalid_field(const PositionReport& report);

enum class DecodeStatus : std::uint8_t { Ok, WrongLength, InvalidField };

struct DecodeResult {
  DecodeStatus status = DecodeStatus::Ok;
  Field bad_field = Field::Latitude;  // meaningful only for InvalidField
  PositionReport report;              // meaningful only for Ok

  bool ok() const { return status == DecodeStatus::Ok; }
};

// Encodes a report into the 28-byte wire form. Returns nullopt (and sets
// *bad_field when given) if any report invariant fails.
std::optional<PacketBytes> encode_packet(const PositionReport& report,
                                         Field* bad_field = nullptr);

// Decodes arbitrary bytes. Length must be exactly 28; decoded fields must
// satisfy the report invariants. A bearing of exactly 360.0 decodes as 0.0.
DecodeResult decode_packet(std::span<const std::uint8_t> bytes);

enum class RejectReason : std::uint8_t {
  StaleTimestamp,
  FutureTimestamp,
  ImplausibleSpeed,
};

std::string_view reject_reason_name(RejectReason r);

struct ValidityVerdict {
  bool accepted = false;
  RejectReason reason = RejectReason::StaleTimestamp;  // meaningful if rejected

  static ValidityVerdict accept() { return {true, RejectReason::StaleTimestamp}; }
  static ValidityVerdict reject(RejectReason r) { return {false, r}; }
};

// Ingest gate: timestamps more than 300 s in the past or 30 s in the future
// (relative to `now`) are rejected, as are speeds above 300 km/h.
inline constexpr std::uint64_t kMaxReportAgeSeconds = 300;
inline constexpr std::uint64_t kMaxReportFutureSeconds = 30;
inline constexpr float kMaxPlausibleSpeedKmh = 300.0f;

ValidityVerdict validate_report(const PositionReport& report, std::uint64_t now);

}  // namespace rtpos::wire
