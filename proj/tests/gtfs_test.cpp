#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "rtpos/gtfs.hpp"
#include "support/fixtures.hpp"

using namespace rtpos::gtfs;
namespace fs = std::filesystem;

namespace {

// Minimal throwaway dataset writer for error-path tests.
struct TempDataset {
  fs::path dir;

  TempDataset() {
    dir = fs::temp_directory_path() /
          ("rtpos_gtfs_" + std::to_string(::getpid()) + "_" +
           std::to_string(counter()++));
    fs::create_directories(dir);
  }
  ~TempDataset() { fs::remove_all(dir); }

  static int& counter() {
    static int c = 0;
    return c;
  }

  void write(const std::string& name, const std::string& content) const {
    std::ofstream out(dir / name, std::ios::binary);
    out << content;
  }

  void write_valid_minimum() const {
    write("stops.txt", "stop_id,stop_name,stop_lat,stop_lon\nA,Alpha,34.0,-118.0\nB,Beta,34.1,-118.1\n");
    write("trips.txt", "trip_id,route_id\nT,R\n");
    write("stop_times.txt",
          "trip_id,arrival_time,departure_time,stop_id,stop_sequence\n"
          "T,08:00:00,08:00:00,A,1\nT,08:30:00,08:30:00,B,2\n");
  }
};

}  // namespace

TEST_CASE("one trip with 08:00 and 08:30 stop times spans [28800, 30600]") {
  TempDataset ds;
  ds.write_valid_minimum();
  const auto data = load_gtfs(ds.dir.string());
  REQUIRE(data.trips.size() == 1);
  CHECK(data.trips[0].span_start() == 28800);
  CHECK(data.trips[0].span_end() == 30600);
}

TEST_CASE("after-midnight time strings convert past 86400") {
  CHECK(parse_gtfs_time("25:10:00") == 90600);
  CHECK(parse_gtfs_time("00:00:00") == 0);
  CHECK(parse_gtfs_time("8:05:30") == 29130);
  CHECK(parse_gtfs_time("23:59:59") == 86399);
  CHECK(parse_gtfs_time("24:00:00") == 86400);
  CHECK(parse_gtfs_time("bogus") == -1);
  CHECK(parse_gtfs_time("08:61:00") == -1);
  CHECK(parse_gtfs_time("08:00") == -1);
}

TEST_CASE("smallville fixture matches the hand-written expectation file") {
  const auto data = load_gtfs(testsupport::fixture_path("smallville"));

  std::ifstream expected(testsupport::fixture_path("smallville_expected.txt"));
  REQUIRE(expected.good());

  std::map<std::string, const Stop*> stops_by_id;
  for (const auto& s : data.stops) stops_by_id[s.stop_id] = &s;

  const TripSchedule* trip = nullptr;
  std::size_t st_index = 0;
  std::size_t stops_checked = 0, trips_checked = 0, stop_times_checked = 0;

  std::string line;
  while (std::getline(expected, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream in(line);
    std::string tag;
    in >> tag;
    if (tag == "stop") {
      std::string id;
      double lat, lon;
      in >> id >> lat >> lon;
      REQUIRE(stops_by_id.count(id) == 1);
      CHECK(stops_by_id[id]->latitude == doctest::Approx(lat).epsilon(1e-12));
      CHECK(stops_by_id[id]->longitude == doctest::Approx(lon).epsilon(1e-12));
      ++stops_checked;
    } else if (tag == "trip") {
      std::string id, route;
      std::int32_t span_start, span_end;
      in >> id >> route >> span_start >> span_end;
      trip = data.find_trip(id);
      REQUIRE(trip != nullptr);
      CHECK(trip->route_id == route);
      CHECK(trip->span_start() == span_start);
      CHECK(trip->span_end() == span_end);
      st_index = 0;
      ++trips_checked;
    } else if (tag == "st") {
      std::string stop_id;
      std::int32_t arrival, departure;
      std::uint32_t seq;
      in >> stop_id >> arrival >> departure >> seq;
      REQUIRE(trip != nullptr);
      REQUIRE(st_index < trip->stop_times.size());
      const auto& st = trip->stop_times[st_index++];
      CHECK(data.stops[st.stop_index].stop_id == stop_id);
      CHECK(st.arrival == arrival);
      CHECK(st.departure == departure);
      CHECK(st.stop_sequence == seq);
      ++stop_times_checked;
    }
  }
  CHECK(stops_checked == 5);
  CHECK(trips_checked == 3);
  CHECK(stop_times_checked == 8);
  CHECK(data.stops.size() == 5);
  CHECK(data.trips.size() == 3);
}

TEST_CASE("loading is deterministic") {
  const auto a = load_gtfs(testsupport::fixture_path("smallville"));
  const auto b = load_gtfs(testsupport::fixture_path("smallville"));
  REQUIRE(a.trips.size() == b.trips.size());
  for (std::size_t i = 0; i < a.trips.size(); ++i) {
    CHECK(a.trips[i].trip_id == b.trips[i].trip_id);
    REQUIRE(a.trips[i].stop_times.size() == b.trips[i].stop_times.size());
    for (std::size_t k = 0; k < a.trips[i].stop_times.size(); ++k) {
      CHECK(a.trips[i].stop_times[k].stop_index == b.trips[i].stop_times[k].stop_index);
      CHECK(a.trips[i].stop_times[k].arrival == b.trips[i].stop_times[k].arrival);
    }
  }
}

TEST_CASE("every stop_time resolves to a stop in the returned list") {
  const auto data = load_gtfs(testsupport::fixture_path("smallville"));
  for (const auto& trip : data.trips) {
    for (const auto& st : trip.stop_times) {
      REQUIRE(st.stop_index < data.stops.size());
    }
  }
}

TEST_CASE("zip archives load identically to directories") {
  const std::string dir = testsupport::fixture_path("smallville");
  const std::string zip =
      (fs::temp_directory_path() / "rtpos_smallville_test.zip").string();
  fs::remove(zip);

  std::vector<std::pair<std::string, std::string>> entries;
  for (const char* name : {"stops.txt", "trips.txt", "stop_times.txt", "routes.txt"}) {
    std::ifstream in(fs::path(dir) / name, std::ios::binary);
    REQUIRE(in.good());
    entries.emplace_back(name, std::string((std::istreambuf_iterator<char>(in)),
                                           std::istreambuf_iterator<char>()));
  }
  testsupport::write_store_zip(zip, entries);

  const auto from_dir = load_gtfs(dir);
  const auto from_zip = load_gtfs(zip);
  REQUIRE(from_zip.stops.size() == from_dir.stops.size());
  REQUIRE(from_zip.trips.size() == from_dir.trips.size());
  for (std::size_t i = 0; i < from_dir.trips.size(); ++i) {
    CHECK(from_zip.trips[i].trip_id == from_dir.trips[i].trip_id);
    CHECK(from_zip.trips[i].stop_times.size() == from_dir.trips[i].stop_times.size());
  }
  fs::remove(zip);
}

TEST_CASE("columns are matched by name, not position; quoting honored") {
  TempDataset ds;
  ds.write("stops.txt",
           "stop_lon,stop_id,extra,stop_name,stop_lat\n"
           "-118.0,A,x,\"Alpha, the \"\"first\"\" stop\",34.0\n"
           "-118.1,B,y,Beta,34.1\n");
  ds.write("trips.txt", "service_id,route_id,trip_id\nWK,R,T\n");
  ds.write("stop_times.txt",
           "stop_sequence,stop_id,departure_time,arrival_time,trip_id\n"
           "1,A,08:00:00,08:00:00,T\n2,B,08:30:00,08:30:00,T\n");
  const auto data = load_gtfs(ds.dir.string());
  REQUIRE(data.stops.size() == 2);
  CHECK(data.stops[0].name == "Alpha, the \"first\" stop");
  CHECK(data.stops[0].latitude == 34.0);
  REQUIRE(data.trips.size() == 1);
  CHECK(data.trips[0].span_start() == 28800);
}

TEST_CASE("missing required table reports MissingFile") {
  TempDataset ds;
  ds.write_valid_minimum();
  fs::remove(ds.dir / "stop_times.txt");
  try {
    load_gtfs(ds.dir.string());
    FAIL("expected GtfsError");
  } catch (const GtfsError& e) {
    CHECK(e.kind() == LoadErrorKind::MissingFile);
    CHECK(e.file() == "stop_times.txt");
  }
}

TEST_CASE("parse errors carry file and line") {
  TempDataset ds;
  ds.write_valid_minimum();
  ds.write("stops.txt",
           "stop_id,stop_name,stop_lat,stop_lon\nA,Alpha,34.0,-118.0\nB,Beta,notanumber,-118.1\n");
  try {
    load_gtfs(ds.dir.string());
    FAIL("expected GtfsError");
  } catch (const GtfsError& e) {
    CHECK(e.kind() == LoadErrorKind::ParseError);
    CHECK(e.file() == "stops.txt");
    CHECK(e.line() == 3);
  }
}

TEST_CASE("stop_times referencing unknown stops or trips are dangling") {
  TempDataset ds;
  ds.write_valid_minimum();
  ds.write("stop_times.txt",
           "trip_id,arrival_time,departure_time,stop_id,stop_sequence\n"
           "T,08:00:00,08:00:00,A,1\nT,08:30:00,08:30:00,NOPE,2\n");
  try {
    load_gtfs(ds.dir.string());
    FAIL("expected GtfsError");
  } catch (const GtfsError& e) {
    CHECK(e.kind() == LoadErrorKind::DanglingReference);
  }

  ds.write_valid_minimum();
  ds.write("stop_times.txt",
           "trip_id,arrival_time,departure_time,stop_id,stop_sequence\n"
           "GHOST,08:00:00,08:00:00,A,1\nGHOST,08:30:00,08:30:00,B,2\n");
  CHECK_THROWS_AS(load_gtfs(ds.dir.string()), GtfsError);
}

TEST_CASE("route references are validated when routes.txt is present") {
  TempDataset ds;
  ds.write_valid_minimum();
  ds.write("routes.txt", "route_id,route_type\nOTHER,3\n");
  try {
    load_gtfs(ds.dir.string());
    FAIL("expected GtfsError");
  } catch (const GtfsError& e) {
    CHECK(e.kind() == LoadErrorKind::DanglingReference);
    CHECK(e.file() == "trips.txt");
  }
}

TEST_CASE("arrival after departure is rejected") {
  TempDataset ds;
  ds.write_valid_minimum();
  ds.write("stop_times.txt",
           "trip_id,arrival_time,departure_time,stop_id,stop_sequence\n"
           "T,08:10:00,08:00:00,A,1\nT,08:30:00,08:30:00,B,2\n");
  CHECK_THROWS_AS(load_gtfs(ds.dir.string()), GtfsError);
}

TEST_CASE("seconds_since_midnight basics") {
  // 1700000000 is 22:13:20 UTC; at UTC-8 that is 14:13:20 local, checked
  // against an independent calendar conversion.
  CHECK(seconds_since_midnight(1700000000, -480) == 51200);
  CHECK(seconds_since_midnight(1700000000, 0) == 80000);

  // Exactly local midnight.
  CHECK(seconds_since_midnight(86400ull * 19700, 0) == 0);
  CHECK(seconds_since_midnight(86400ull * 19700 + 8 * 3600, -480) == 0);

  // Daily periodicity.
  for (const std::int32_t off : {-480, 0, 330, 840, -840}) {
    CHECK(seconds_since_midnight(1700000000 + 86400, off) ==
          seconds_since_midnight(1700000000, off));
  }

  // Always within [0, 86400).
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    const std::uint64_t ts = 1 + rng() % 4102444800ull;
    const std::int32_t off = static_cast<std::int32_t>(rng() % 1681) - 840;
    const auto s = seconds_since_midnight(ts, off);
    CHECK(s >= 0);
    CHECK(s < 86400);
  }
}

TEST_CASE("seconds_since_midnight is monotone within one civil day") {
  const std::int32_t off = -480;
  const std::uint64_t midnight = 86400ull * 19700 + 8 * 3600;
  std::int32_t prev = -1;
  for (std::uint64_t ts = midnight; ts < midnight + 86400; ts += 977) {
    const auto s = seconds_since_midnight(ts, off);
    CHECK(s > prev);
    prev = s;
  }
}
