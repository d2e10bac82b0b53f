#include "rtpos/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace rtpos::config {

namespace {

std::string trim(std::string_view v) {
  while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.remove_prefix(1);
  while (!v.empty() && (v.back() == ' ' || v.back() == '\t' || v.back() == '\r')) {
    v.remove_suffix(1);
  }
  return std::string(v);
}

template <typename T>
T parse_int(const std::string& text, const std::string& what) {
  T v{};
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) {
    throw std::runtime_error("config: bad " + what + " '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw std::runtime_error("config: bad boolean '" + text + "'");
}

}  // namespace

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw std::runtime_error("config: bad endpoint '" + text + "' (want host:port)");
  }
  Endpoint ep;
  ep.host = text.substr(0, colon);
  ep.port = parse_int<std::uint16_t>(text.substr(colon + 1), "port");
  return ep;
}

PeerAddress parse_peer(const std::string& text) {
  const auto at = text.find('@');
  if (at == std::string::npos || at == 0) {
    throw std::runtime_error("config: bad peer '" + text + "' (want id@host:port)");
  }
  PeerAddress p;
  p.node_id = text.substr(0, at);
  p.endpoint = parse_endpoint(text.substr(at + 1));
  return p;
}

ServiceConfig parse_config_text(const std::string& text, const std::string& name) {
  ServiceConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(name + ":" + std::to_string(line_no) +
                               ": expected 'key = value'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));

    if (key == "udp_bind") {
      cfg.udp_bind = parse_endpoint(value);
    } else if (key == "http_bind") {
      cfg.http_bind = parse_endpoint(value);
    } else if (key == "gtfs_path") {
      cfg.gtfs_path = value;
    } else if (key == "vehicle_map_path") {
      cfg.vehicle_map_path = value;
    } else if (key == "agency_utc_offset") {
      cfg.agency_utc_offset = parse_int<std::int32_t>(value, "agency_utc_offset");
    } else if (key == "feed_ttl") {
      cfg.feed_ttl = parse_int<std::uint32_t>(value, "feed_ttl");
    } else if (key == "node_id") {
      cfg.node_id = value;
    } else if (key == "peers") {
      cfg.peers.clear();
      if (!value.empty()) {
        std::size_t start = 0;
        while (start <= value.size()) {
          const auto comma = value.find(',', start);
          const std::string item = trim(
              comma == std::string::npos ? value.substr(start)
                                         : value.substr(start, comma - start));
          if (!item.empty()) cfg.peers.push_back(parse_peer(item));
          if (comma == std::string::npos) break;
          start = comma + 1;
        }
      }
    } else if (key == "replication_enabled") {
      cfg.replication_enabled = parse_bool(value);
    } else if (key == "raft_bind") {
      cfg.raft_bind = parse_endpoint(value);
    } else if (key == "raft_log_path") {
      cfg.raft_log_path = value;
    } else {
      throw std::runtime_error(name + ":" + std::to_string(line_no) +
                               ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

ServiceConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config_text(text, path);
}

void validate(const ServiceConfig& cfg) {
  std::set<std::uint16_t> ports;
  for (const std::uint16_t p : {cfg.udp_bind.port, cfg.http_bind.port}) {
    if (p != 0 && !ports.insert(p).second) {
      throw std::runtime_error("config: udp_bind and http_bind ports must differ");
    }
  }
  if (cfg.replication_enabled && cfg.raft_bind.port != 0 &&
      !ports.insert(cfg.raft_bind.port).second) {
    throw std::runtime_error("config: raft_bind port collides with another listener");
  }
  if (cfg.agency_utc_offset < -14 * 60 || cfg.agency_utc_offset > 14 * 60) {
    throw std::runtime_error("config: agency_utc_offset out of range [-840, 840]");
  }
  if (cfg.feed_ttl == 0) {
    throw std::runtime_error("config: feed_ttl must be positive");
  }
  for (const auto& peer : cfg.peers) {
    if (peer.node_id == cfg.node_id) {
      throw std::runtime_error("config: peers must not include this node ('" +
                               peer.node_id + "')");
    }
  }
  if (cfg.gtfs_path.empty()) {
    throw std::runtime_error("config: gtfs_path is required");
  }
  if (cfg.vehicle_map_path.empty()) {
    throw std::runtime_error("config: vehicle_map_path is required");
  }
}

}  // namespace rtpos::config
