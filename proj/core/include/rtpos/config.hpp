#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rtpos::config {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  bool operator==(const Endpoint&) const = default;
};

// A replication peer: "<node_id>@<host>:<port>".
struct PeerAddress {
  std::string node_id;
  Endpoint endpoint;

  bool operator==(const PeerAddress&) const = default;
};

struct ServiceConfig {
  Endpoint udp_bind{"127.0.0.1", 5005};
  Endpoint http_bind{"127.0.0.1", 8080};
  std::string gtfs_path;
  std::string vehicle_map_path;
  std::int32_t agency_utc_offset = 0;  // signed minutes, [-840, 840]
  std::uint32_t feed_ttl = 900;        // seconds
  std::string node_id = "n1";
  std::vector<PeerAddress> peers;      // excludes self
  bool replication_enabled = false;
  Endpoint raft_bind{"127.0.0.1", 0};  // this node's peer-protocol listener
  std::string raft_log_path;           // empty = in-memory log (no restart safety)
};

// Parses "key = value" lines ('#' comments, blank lines ignored).
// Unknown keys are an error. Throws std::runtime_error with file:line.
ServiceConfig parse_config_file(const std::string& path);
ServiceConfig parse_config_text(const std::string& text, const std::string& name);

// Validates cross-field invariants (distinct ports, offset range, peers
// exclude self). Throws std::runtime_error on violation.
void validate(const ServiceConfig& config);

Endpoint parse_endpoint(const std::string& text);       // "host:port"
PeerAddress parse_peer(const std::string& text);        // "id@host:port"

}  // namespace rtpos::config
