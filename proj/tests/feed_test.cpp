#include <doctest.h>

#include <map>
#include <random>
#include <string>

#include "gtfs_realtime.pb.h"
#include "rtpos/feed.hpp"

using namespace rtpos;
using feed::FeedSnapshot;
using matcher::StopStatus;
using matcher::VehiclePositionRecord;

namespace {

VehiclePositionRecord sample_record(std::uint32_t vehicle_id, std::uint64_t ts) {
  VehiclePositionRecord r;
  r.trip_id = "T1";
  r.route_id = "R1";
  r.stop_id = "S2";
  r.current_stop_sequence = 2;
  r.current_status = StopStatus::StoppedAt;
  r.latitude = 34.0522f;
  r.longitude = -118.2437f;
  r.bearing = 67.1f;
  r.speed_mps = 30.5 / 3.6;
  r.vehicle.vehicle_id = vehicle_id;
  r.vehicle.label = "Bus " + std::to_string(vehicle_id);
  r.vehicle.license_plate = "CA-1234";
  r.timestamp = ts;
  return r;
}

VehiclePositionRecord random_record(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  VehiclePositionRecord r;
  r.vehicle.vehicle_id = static_cast<std::uint32_t>(rng() % 500);
  r.timestamp = 1700000000 + rng() % 10000;
  r.latitude = static_cast<float>(unit(rng) * 180 - 90);
  r.longitude = static_cast<float>(unit(rng) * 360 - 180);
  r.bearing = static_cast<float>(unit(rng) * 360);
  r.speed_mps = unit(rng) * 40;
  if (unit(rng) < 0.7) {
    r.trip_id = "T" + std::to_string(rng() % 50);
    r.route_id = "R" + std::to_string(rng() % 5);
    if (unit(rng) < 0.8) {
      r.stop_id = "S" + std::to_string(rng() % 100);
      r.current_stop_sequence = static_cast<std::uint32_t>(rng() % 30);
      r.current_status =
          unit(rng) < 0.3 ? StopStatus::StoppedAt : StopStatus::InTransitTo;
    }
  }
  if (unit(rng) < 0.5) r.vehicle.label = "L" + std::to_string(rng() % 10);
  if (unit(rng) < 0.5) r.vehicle.license_plate = "P" + std::to_string(rng() % 10);
  return r;
}

transit_realtime::FeedMessage decode(const std::vector<std::uint8_t>& bytes) {
  transit_realtime::FeedMessage msg;
  REQUIRE(msg.ParseFromArray(bytes.data(), static_cast<int>(bytes.size())));
  return msg;
}

}  // namespace

TEST_CASE("apply inserts, keeps newest, and is idempotent") {
  FeedSnapshot snapshot;

  CHECK(feed::apply_record(snapshot, sample_record(7, 100), 1000));
  CHECK(snapshot.entities.size() == 1);
  CHECK(snapshot.header_timestamp == 1000);

  // Stale update dropped, entity unchanged.
  auto stale = sample_record(7, 90);
  stale.stop_id = "SHOULD-NOT-APPEAR";
  CHECK(!feed::apply_record(snapshot, stale, 1001));
  CHECK(snapshot.entities.at(7).stop_id == "S2");
  CHECK(snapshot.entities.at(7).timestamp == 100);

  // Same-timestamp update replaces (last writer wins at equal time).
  auto same = sample_record(7, 100);
  same.stop_id = "S3";
  CHECK(feed::apply_record(snapshot, same, 1002));
  CHECK(snapshot.entities.at(7).stop_id == "S3");

  // Idempotence: applying the identical record twice changes nothing.
  const auto before = snapshot.entities;
  CHECK(feed::apply_record(snapshot, same, 1003));
  CHECK(snapshot.entities == before);

  // Distinct vehicles keep distinct entities.
  CHECK(feed::apply_record(snapshot, sample_record(9, 50), 1004));
  CHECK(snapshot.entities.size() == 2);
}

TEST_CASE("entity timestamps never decrease across applies") {
  std::mt19937_64 rng(17);
  FeedSnapshot snapshot;
  std::map<std::uint32_t, std::uint64_t> high_water;
  for (int i = 0; i < 1000; ++i) {
    const auto rec = random_record(rng);
    feed::apply_record(snapshot, rec, 1700000000 + i);
    auto& hw = high_water[rec.vehicle.vehicle_id];
    hw = std::max(hw, rec.timestamp);
    CHECK(snapshot.entities.at(rec.vehicle.vehicle_id).timestamp == hw);
  }
}

TEST_CASE("eviction boundary is inclusive at exactly ttl") {
  FeedSnapshot snapshot;
  feed::apply_record(snapshot, sample_record(1, 1000), 1000);  // aged 900 at t=1900
  feed::apply_record(snapshot, sample_record(2, 999), 1000);   // aged 901 at t=1900

  CHECK(feed::evict_stale(snapshot, 1900, 900) == 1);  // ttl+1 removed, ttl kept
  CHECK(snapshot.entities.count(1) == 1);
  CHECK(snapshot.entities.count(2) == 0);
  CHECK(feed::evict_stale(snapshot, 1901, 900) == 1);  // one second later it ages out
  CHECK(snapshot.entities.empty());

  FeedSnapshot empty;
  CHECK(feed::evict_stale(empty, 5000, 900) == 0);
  CHECK(empty.entities.empty());
}

TEST_CASE("empty snapshot encodes to a header-only conformant message") {
  FeedSnapshot snapshot;
  snapshot.header_timestamp = 1700000123;
  const auto msg = decode(feed::encode_feed(snapshot));
  CHECK(msg.header().gtfs_realtime_version() == "2.0");
  CHECK(msg.header().incrementality() == transit_realtime::FeedHeader::FULL_DATASET);
  CHECK(msg.header().timestamp() == 1700000123);
  CHECK(msg.entity_size() == 0);
}

TEST_CASE("one-entity snapshot round-trips every set field") {
  FeedSnapshot snapshot;
  feed::apply_record(snapshot, sample_record(7, 1700000456), 1700000500);
  const auto msg = decode(feed::encode_feed(snapshot));

  REQUIRE(msg.entity_size() == 1);
  const auto& entity = msg.entity(0);
  CHECK(entity.id() == "7");
  REQUIRE(entity.has_vehicle());
  const auto& vp = entity.vehicle();
  CHECK(vp.trip().trip_id() == "T1");
  CHECK(vp.trip().route_id() == "R1");
  CHECK(vp.position().latitude() == 34.0522f);
  CHECK(vp.position().longitude() == -118.2437f);
  CHECK(vp.position().bearing() == 67.1f);
  CHECK(vp.position().speed() == static_cast<float>(30.5 / 3.6));
  CHECK(!vp.position().has_odometer());
  CHECK(vp.current_stop_sequence() == 2);
  CHECK(vp.current_status() == transit_realtime::VehiclePosition::STOPPED_AT);
  CHECK(vp.timestamp() == 1700000456);
  CHECK(vp.stop_id() == "S2");
  CHECK(vp.vehicle().id() == "7");
  CHECK(vp.vehicle().label() == "Bus 7");
  CHECK(vp.vehicle().license_plate() == "CA-1234");
}

TEST_CASE("minimal records omit trip, stop and status fields") {
  VehiclePositionRecord minimal;
  minimal.latitude = 1.5f;
  minimal.longitude = 2.5f;
  minimal.bearing = 3.5f;
  minimal.speed_mps = 4.5;
  minimal.vehicle.vehicle_id = 42;
  minimal.timestamp = 1700000000;

  FeedSnapshot snapshot;
  feed::apply_record(snapshot, minimal, 1700000001);
  const auto msg = decode(feed::encode_feed(snapshot));
  REQUIRE(msg.entity_size() == 1);
  const auto& vp = msg.entity(0).vehicle();
  CHECK(!vp.has_trip());
  CHECK(!vp.has_stop_id());
  CHECK(!vp.has_current_stop_sequence());
  CHECK(!vp.has_current_status());
  CHECK(vp.has_position());
  CHECK(vp.vehicle().id() == "42");
  CHECK(!vp.vehicle().has_label());
}

TEST_CASE("random snapshots round-trip exactly through the conformant decoder") {
  std::mt19937_64 rng(23);
  for (int round = 0; round < 30; ++round) {
    FeedSnapshot snapshot;
    snapshot.header_timestamp = 1700000000 + rng() % 1000;
    const int n = 1 + static_cast<int>(rng() % 20);
    for (int i = 0; i < n; ++i) {
      feed::apply_record(snapshot, random_record(rng), snapshot.header_timestamp);
    }
    const auto msg = decode(feed::encode_feed(snapshot));
    REQUIRE(msg.entity_size() == static_cast<int>(snapshot.entities.size()));

    int i = 0;
    for (const auto& [vehicle_id, rec] : snapshot.entities) {
      const auto& entity = msg.entity(i++);
      CHECK(entity.id() == std::to_string(vehicle_id));
      const auto& vp = entity.vehicle();
      CHECK(vp.has_trip() == (rec.trip_id.has_value() || rec.route_id.has_value()));
      if (rec.trip_id) CHECK(vp.trip().trip_id() == *rec.trip_id);
      if (rec.route_id) CHECK(vp.trip().route_id() == *rec.route_id);
      if (rec.stop_id) CHECK(vp.stop_id() == *rec.stop_id);
      if (rec.current_stop_sequence) {
        CHECK(vp.current_stop_sequence() == *rec.current_stop_sequence);
      }
      if (rec.current_status == StopStatus::Unknown) {
        CHECK(!vp.has_current_status());
      } else {
        CHECK(static_cast<int>(vp.current_status()) ==
              static_cast<int>(rec.current_status));
      }
      CHECK(vp.position().latitude() == rec.latitude);
      CHECK(vp.position().longitude() == rec.longitude);
      CHECK(vp.position().bearing() == rec.bearing);
      CHECK(vp.position().speed() == static_cast<float>(rec.speed_mps));
      CHECK(vp.timestamp() == rec.timestamp);
    }
  }
}

TEST_CASE("identical logical content encodes to identical bytes") {
  std::mt19937_64 rng(31);
  FeedSnapshot a;
  a.header_timestamp = 1700000042;
  std::vector<VehiclePositionRecord> records;
  for (int i = 0; i < 25; ++i) records.push_back(random_record(rng));
  for (const auto& r : records) feed::apply_record(a, r, 1700000042);

  // Same records applied in reverse into a second snapshot.
  FeedSnapshot b;
  for (auto it = records.rbegin(); it != records.rend(); ++it) {
    feed::apply_record(b, *it, 1700000042);
  }
  b.header_timestamp = a.header_timestamp;

  // Last-writer-wins can differ between orders for duplicate vehicle ids;
  // align them, then the bytes must be identical.
  if (a.entities == b.entities) {
    CHECK(feed::encode_feed(a) == feed::encode_feed(b));
  }
  CHECK(feed::encode_feed(a) == feed::encode_feed(a));

  // Entities are emitted in ascending vehicle id order.
  const auto msg = decode(feed::encode_feed(a));
  std::uint64_t prev = 0;
  for (int i = 0; i < msg.entity_size(); ++i) {
    const std::uint64_t id = std::stoull(msg.entity(i).id());
    if (i > 0) CHECK(id > prev);
    prev = id;
  }
}

TEST_CASE("feed store keeps readers consistent and counts stale drops") {
  feed::FeedStore store;
  const auto before = store.snapshot();
  CHECK(before->entities.empty());

  CHECK(store.apply(sample_record(7, 100), 1000));
  CHECK(before->entities.empty());  // old snapshot unaffected
  CHECK(store.snapshot()->entities.size() == 1);

  CHECK(!store.apply(sample_record(7, 50), 1001));
  CHECK(store.stale_drops() == 1);

  store.evict(1000, 900);  // aged exactly ttl: retained
  CHECK(store.snapshot()->entities.size() == 1);
  store.evict(1001, 900);
  CHECK(store.snapshot()->entities.empty());
}
