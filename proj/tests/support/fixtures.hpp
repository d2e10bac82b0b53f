#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#ifndef RTPOS_FIXTURE_DIR
#error "RTPOS_FIXTURE_DIR must be defined by the build"
#endif

namespace testsupport {

inline std::string fixture_path(const std::string& name) {
  return std::string(RTPOS_FIXTURE_DIR) + "/" + name;
}

// Writes a stored (uncompressed) zip archive; enough to exercise the
// archive loading path without an external zip tool.
void write_store_zip(const std::string& path,
                     const std::vector<std::pair<std::string, std::string>>& entries);

// A GTFS dataset whose single trip brackets the current wall-clock time, so
// live-ingest tests pass the staleness gate and match a real trip. The trip
// runs roughly [now-240, now-45] with three dwells; all reports the matching
// simulator trace emits are already in the past when sent.
struct LiveDataset {
  std::string gtfs_dir;
  std::string vehicles_csv;
  std::string trip_id = "TLIVE";
  std::string route_id = "RLIVE";
  std::uint32_t vehicle_id = 7;
  std::int64_t base_epoch = 0;   // Unix time of schedule second 0
  std::int32_t span_start = 0;   // schedule seconds
  std::int32_t span_end = 0;
};

LiveDataset write_live_dataset(const std::string& dir, std::uint64_t now);

}  // namespace testsupport
