#include "fixtures.hpp"

#include <zlib.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace testsupport {

namespace {

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

}  // namespace

void write_store_zip(const std::string& path,
                     const std::vector<std::pair<std::string, std::string>>& entries) {
  std::string out;
  std::string central;
  std::vector<std::uint32_t> offsets;

  for (const auto& [name, content] : entries) {
    const std::uint32_t crc = static_cast<std::uint32_t>(
        ::crc32(0, reinterpret_cast<const Bytef*>(content.data()),
                static_cast<uInt>(content.size())));
    offsets.push_back(static_cast<std::uint32_t>(out.size()));

    put32(out, 0x04034b50);  // local header
    put16(out, 20);          // version needed
    put16(out, 0);           // flags
    put16(out, 0);           // method: stored
    put16(out, 0);           // mod time
    put16(out, 0);           // mod date
    put32(out, crc);
    put32(out, static_cast<std::uint32_t>(content.size()));
    put32(out, static_cast<std::uint32_t>(content.size()));
    put16(out, static_cast<std::uint16_t>(name.size()));
    put16(out, 0);  // extra len
    out += name;
    out += content;

    put32(central, 0x02014b50);  // central directory header
    put16(central, 20);
    put16(central, 20);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put32(central, crc);
    put32(central, static_cast<std::uint32_t>(content.size()));
    put32(central, static_cast<std::uint32_t>(content.size()));
    put16(central, static_cast<std::uint16_t>(name.size()));
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put32(central, 0);
    put32(central, offsets.back());
    central += name;
  }

  const std::uint32_t central_offset = static_cast<std::uint32_t>(out.size());
  out += central;
  put32(out, 0x06054b50);  // end of central directory
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, central_offset);
  put16(out, 0);  // comment length

  std::ofstream file(path, std::ios::binary);
  file << out;
}

namespace {

std::string gtfs_time(std::int32_t seconds) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d:%02d:%02d", seconds / 3600,
                (seconds % 3600) / 60, seconds % 60);
  return buf;
}

}  // namespace

LiveDataset write_live_dataset(const std::string& dir, std::uint64_t now) {
  namespace fs = std::filesystem;
  LiveDataset ds;
  ds.gtfs_dir = dir;
  fs::create_directories(dir);

  const std::int64_t midnight =
      static_cast<std::int64_t>(now) - static_cast<std::int64_t>(now % 86400);
  std::int32_t civil = static_cast<std::int32_t>(now % 86400);
  ds.base_epoch = midnight;
  if (civil < 300) {
    // Shortly after midnight: write the trip with after-midnight times on
    // the previous service day.
    civil += 86400;
    ds.base_epoch -= 86400;
  }

  const std::int32_t a0 = civil - 240, d0 = a0 + 15;
  const std::int32_t a1 = civil - 150, d1 = a1 + 15;
  const std::int32_t a2 = civil - 60, d2 = a2 + 15;
  ds.span_start = d0;
  ds.span_end = a2;

  {
    std::ofstream out(fs::path(dir) / "stops.txt");
    out << "stop_id,stop_name,stop_lat,stop_lon\n"
        << "L1,Live One,34.050000,-118.250000\n"
        << "L2,Live Two,34.060000,-118.240000\n"
        << "L3,Live Three,34.070000,-118.230000\n";
  }
  {
    std::ofstream out(fs::path(dir) / "trips.txt");
    out << "trip_id,route_id\n" << ds.trip_id << "," << ds.route_id << "\n";
  }
  {
    std::ofstream out(fs::path(dir) / "stop_times.txt");
    out << "trip_id,arrival_time,departure_time,stop_id,stop_sequence\n"
        << ds.trip_id << "," << gtfs_time(a0) << "," << gtfs_time(d0) << ",L1,1\n"
        << ds.trip_id << "," << gtfs_time(a1) << "," << gtfs_time(d1) << ",L2,2\n"
        << ds.trip_id << "," << gtfs_time(a2) << "," << gtfs_time(d2) << ",L3,3\n";
  }
  ds.vehicles_csv = (fs::path(dir) / "vehicles.csv").string();
  {
    std::ofstream out(ds.vehicles_csv);
    out << "vehicle_id,route_id,label,license_plate,wheelchair_accessible\n"
        << ds.vehicle_id << "," << ds.route_id << ",Live Bus,CA-LIVE,2\n";
  }
  return ds;
}

}  // namespace testsupport
