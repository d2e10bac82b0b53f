#include <doctest.h>

#include <stdexcept>

#include "rtpos/config.hpp"

using namespace rtpos::config;

TEST_CASE("config text parses keys, comments and peer lists") {
  const auto cfg = parse_config_text(
      "# server config\n"
      "udp_bind = 0.0.0.0:5005\n"
      "http_bind = 127.0.0.1:8080\n"
      "gtfs_path = /data/gtfs\n"
      "vehicle_map_path = /data/vehicles.csv\n"
      "agency_utc_offset = -480\n"
      "feed_ttl = 600\n"
      "node_id = west-1\n"
      "peers = east-1@10.0.0.2:7000, central-1@10.0.0.3:7000\n"
      "replication_enabled = true\n"
      "raft_bind = 0.0.0.0:7000\n"
      "raft_log_path = /var/lib/rtpos/raft.log\n",
      "test");
  CHECK(cfg.udp_bind.host == "0.0.0.0");
  CHECK(cfg.udp_bind.port == 5005);
  CHECK(cfg.http_bind.port == 8080);
  CHECK(cfg.gtfs_path == "/data/gtfs");
  CHECK(cfg.agency_utc_offset == -480);
  CHECK(cfg.feed_ttl == 600);
  CHECK(cfg.node_id == "west-1");
  REQUIRE(cfg.peers.size() == 2);
  CHECK(cfg.peers[0].node_id == "east-1");
  CHECK(cfg.peers[0].endpoint.host == "10.0.0.2");
  CHECK(cfg.peers[0].endpoint.port == 7000);
  CHECK(cfg.replication_enabled);
  CHECK(cfg.raft_bind.port == 7000);
  validate(cfg);
}

TEST_CASE("unknown keys and malformed lines are rejected with a line number") {
  CHECK_THROWS_WITH_AS(parse_config_text("bogus_key = 1\n", "cfg"),
                       doctest::Contains("cfg:1"), std::runtime_error);
  CHECK_THROWS(parse_config_text("udp_bind\n", "cfg"));
  CHECK_THROWS(parse_config_text("udp_bind = nohost\n", "cfg"));
  CHECK_THROWS(parse_config_text("feed_ttl = many\n", "cfg"));
  CHECK_THROWS(parse_config_text("replication_enabled = maybe\n", "cfg"));
  CHECK_THROWS(parse_config_text("peers = broken\n", "cfg"));
}

TEST_CASE("validation enforces the cross-field invariants") {
  ServiceConfig cfg;
  cfg.gtfs_path = "/g";
  cfg.vehicle_map_path = "/v";

  SUBCASE("valid base passes") { validate(cfg); }

  SUBCASE("identical ports rejected") {
    cfg.udp_bind.port = 8080;
    cfg.http_bind.port = 8080;
    CHECK_THROWS(validate(cfg));
  }
  SUBCASE("utc offset range") {
    cfg.agency_utc_offset = 841;
    CHECK_THROWS(validate(cfg));
    cfg.agency_utc_offset = -841;
    CHECK_THROWS(validate(cfg));
    cfg.agency_utc_offset = 840;
    validate(cfg);
  }
  SUBCASE("self in peers rejected") {
    cfg.node_id = "n1";
    cfg.peers.push_back(parse_peer("n1@127.0.0.1:7001"));
    CHECK_THROWS(validate(cfg));
  }
  SUBCASE("zero ttl rejected") {
    cfg.feed_ttl = 0;
    CHECK_THROWS(validate(cfg));
  }
  SUBCASE("missing paths rejected") {
    cfg.gtfs_path.clear();
    CHECK_THROWS(validate(cfg));
  }
}
