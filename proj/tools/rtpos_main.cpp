#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "rtpos/cluster_sim.hpp"
#include "rtpos/config.hpp"
#include "rtpos/gtfs.hpp"
#include "rtpos/service.hpp"
#include "rtpos/simulate.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

int run_serve(const std::string& config_path, rtpos::config::ServiceConfig overrides,
              const std::vector<std::string>& set_keys) {
  rtpos::config::ServiceConfig cfg = rtpos::config::parse_config_file(config_path);

  // Flag overrides beat file values.
  for (const auto& key : set_keys) {
    if (key == "udp_bind") cfg.udp_bind = overrides.udp_bind;
    if (key == "http_bind") cfg.http_bind = overrides.http_bind;
    if (key == "gtfs_path") cfg.gtfs_path = overrides.gtfs_path;
    if (key == "vehicle_map_path") cfg.vehicle_map_path = overrides.vehicle_map_path;
    if (key == "agency_utc_offset") cfg.agency_utc_offset = overrides.agency_utc_offset;
    if (key == "feed_ttl") cfg.feed_ttl = overrides.feed_ttl;
    if (key == "node_id") cfg.node_id = overrides.node_id;
    if (key == "replication_enabled") cfg.replication_enabled = overrides.replication_enabled;
    if (key == "raft_bind") cfg.raft_bind = overrides.raft_bind;
    if (key == "raft_log_path") cfg.raft_log_path = overrides.raft_log_path;
  }

  rtpos::service::Service service(cfg);
  std::cout << "rtpos serving: udp=" << cfg.udp_bind.host << ":" << service.udp_port()
            << " http=" << cfg.http_bind.host << ":" << service.http_port();
  if (cfg.replication_enabled) {
    std::cout << " raft=" << cfg.raft_bind.host << ":" << service.raft_port()
              << " node=" << cfg.node_id;
  }
  std::cout << std::endl;

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  service.stop();
  return 0;
}

int run_validate(const std::string& path) {
  try {
    const auto data = rtpos::gtfs::load_gtfs(path);
    std::size_t stop_times = 0;
    for (const auto& trip : data.trips) stop_times += trip.stop_times.size();
    std::cout << "ok: " << data.stops.size() << " stops, " << data.trips.size()
              << " trips, " << stop_times << " stop_times";
    if (data.dropped_trips > 0) {
      std::cout << " (" << data.dropped_trips << " trips dropped: fewer than 2 stop times)";
    }
    std::cout << std::endl;
    if (!data.trips.empty()) {
      std::int32_t lo = data.trips.front().span_start();
      std::int32_t hi = data.trips.front().span_end();
      for (const auto& t : data.trips) {
        lo = std::min(lo, t.span_start());
        hi = std::max(hi, t.span_end());
      }
      std::cout << "service spans " << lo << ".." << hi << " seconds since midnight"
                << std::endl;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "invalid: " << e.what() << std::endl;
    return 1;
  }
}

rtpos::vsim::SpeedProfile parse_profile(const std::string& text, double& constant_kmh) {
  if (text == "scheduled" || text.empty()) return rtpos::vsim::SpeedProfile::Scheduled;
  if (text == "stop-and-go") return rtpos::vsim::SpeedProfile::StopAndGo;
  if (text.rfind("constant:", 0) == 0) {
    constant_kmh = std::strtod(text.c_str() + 9, nullptr);
    return rtpos::vsim::SpeedProfile::Constant;
  }
  throw CLI::ValidationError("--profile", "expected scheduled, constant:<kmh> or stop-and-go");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GTFS-RT vehicle positions server and tooling"};
  app.require_subcommand(1);

  // serve
  auto* serve = app.add_subcommand("serve", "Run the ingest/feed server");
  std::string config_path;
  serve->add_option("--config", config_path, "Config file (key = value lines)")
      ->required();
  std::string udp_bind, http_bind, raft_bind;
  rtpos::config::ServiceConfig overrides;
  std::vector<std::string> set_keys;
  serve->add_option("--udp-bind", udp_bind, "Override udp_bind (host:port)");
  serve->add_option("--http-bind", http_bind, "Override http_bind (host:port)");
  serve->add_option("--gtfs", overrides.gtfs_path, "Override gtfs_path");
  serve->add_option("--vehicle-map", overrides.vehicle_map_path,
                    "Override vehicle_map_path");
  serve->add_option("--utc-offset-min", overrides.agency_utc_offset,
                    "Override agency_utc_offset (minutes)");
  serve->add_option("--feed-ttl", overrides.feed_ttl, "Override feed_ttl (seconds)");
  serve->add_option("--node-id", overrides.node_id, "Override node_id");
  serve->add_flag("--replication,!--no-replication", overrides.replication_enabled,
                  "Override replication_enabled");
  serve->add_option("--raft-bind", raft_bind, "Override raft_bind (host:port)");
  serve->add_option("--raft-log", overrides.raft_log_path, "Override raft_log_path");

  // validate-gtfs
  auto* validate = app.add_subcommand("validate-gtfs", "Load a GTFS dataset and report");
  std::string gtfs_path;
  validate->add_option("path", gtfs_path, "GTFS directory or zip")->required();

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Emit synthetic vehicle packets");
  std::string sim_gtfs, sim_trip, sim_target, sim_profile = "scheduled", plan_path;
  std::uint32_t sim_vehicle = 0, cadence_ms = 500;
  std::int32_t start_offset = 0, utc_offset_min = 0;
  double jitter_m = 0.0, time_scale = 1.0;
  std::uint64_t seed = 0;
  std::int64_t base_epoch = -1;
  simulate->add_option("--gtfs", sim_gtfs, "GTFS directory or zip")->required();
  simulate->add_option("--trip", sim_trip, "Trip id to follow");
  simulate->add_option("--vehicle", sim_vehicle, "Vehicle id to report");
  simulate->add_option("--plan", plan_path, "Multi-vehicle plan file");
  simulate->add_option("--cadence-ms", cadence_ms, "Report cadence (default 500)");
  simulate->add_option("--jitter-m", jitter_m, "Gaussian position noise sigma, meters");
  simulate->add_option("--seed", seed, "Noise seed");
  simulate->add_option("--time-scale", time_scale,
                       "Pacing multiplier; 0 = send as fast as possible");
  simulate->add_option("--start-offset", start_offset,
                       "Seconds into the trip span to start at");
  simulate->add_option("--utc-offset-min", utc_offset_min,
                       "Agency UTC offset in minutes (schedule clock)");
  simulate->add_option("--base-epoch", base_epoch,
                       "Unix time of schedule 00:00:00 (default: last local midnight)");
  simulate->add_option("--profile", sim_profile,
                       "scheduled | constant:<kmh> | stop-and-go");
  simulate->add_option("--target", sim_target, "UDP target host:port")->required();

  // cluster-sim
  auto* cluster = app.add_subcommand("cluster-sim",
                                     "Run a consensus scenario on the simulated transport");
  std::string scenario_path, nodes_csv = "n1,n2,n3";
  std::uint64_t sim_seed = 1, max_ms = 30000;
  cluster->add_option("--scenario", scenario_path, "Scenario script")->required();
  cluster->add_option("--nodes", nodes_csv, "Comma-separated node ids");
  cluster->add_option("--seed", sim_seed, "Deterministic seed");
  cluster->add_option("--max-ms", max_ms, "Virtual time budget");

  CLI11_PARSE(app, argc, argv);

  try {
    if (serve->parsed()) {
      if (serve->count("--udp-bind")) {
        overrides.udp_bind = rtpos::config::parse_endpoint(udp_bind);
        set_keys.push_back("udp_bind");
      }
      if (serve->count("--http-bind")) {
        overrides.http_bind = rtpos::config::parse_endpoint(http_bind);
        set_keys.push_back("http_bind");
      }
      if (serve->count("--raft-bind")) {
        overrides.raft_bind = rtpos::config::parse_endpoint(raft_bind);
        set_keys.push_back("raft_bind");
      }
      if (serve->count("--gtfs")) set_keys.push_back("gtfs_path");
      if (serve->count("--vehicle-map")) set_keys.push_back("vehicle_map_path");
      if (serve->count("--utc-offset-min")) set_keys.push_back("agency_utc_offset");
      if (serve->count("--feed-ttl")) set_keys.push_back("feed_ttl");
      if (serve->count("--node-id")) set_keys.push_back("node_id");
      if (serve->count("--replication") || serve->count("--no-replication")) {
        set_keys.push_back("replication_enabled");
      }
      if (serve->count("--raft-log")) set_keys.push_back("raft_log_path");
      return run_serve(config_path, overrides, set_keys);
    }

    if (validate->parsed()) {
      return run_validate(gtfs_path);
    }

    if (simulate->parsed()) {
      const auto gtfs = rtpos::gtfs::load_gtfs(sim_gtfs);
      const auto target = rtpos::config::parse_endpoint(sim_target);
      const std::int64_t base =
          base_epoch >= 0 ? base_epoch
                          : rtpos::vsim::local_midnight_epoch(
                                rtpos::service::now_unix(), utc_offset_min);

      std::vector<rtpos::vsim::SimPlan> plans;
      if (!plan_path.empty()) {
        plans = rtpos::vsim::parse_plan_file(plan_path);
      } else {
        if (sim_trip.empty()) {
          std::cerr << "simulate: either --plan or --trip/--vehicle is required"
                    << std::endl;
          return 2;
        }
        rtpos::vsim::SimPlan plan;
        plan.vehicle_id = sim_vehicle;
        plan.trip_id = sim_trip;
        plan.start_offset_s = start_offset;
        plan.cadence_ms = cadence_ms;
        plan.jitter_m = jitter_m;
        plan.seed = seed;
        plan.profile = parse_profile(sim_profile, plan.constant_speed_kmh);
        plans.push_back(std::move(plan));
      }

      std::vector<std::vector<rtpos::vsim::TimedReport>> traces;
      for (const auto& plan : plans) {
        traces.push_back(rtpos::vsim::generate_trace(plan, gtfs, base));
      }
      const auto merged = rtpos::vsim::merge_traces(std::move(traces));
      rtpos::vsim::EmitOptions opts;
      opts.host = target.host;
      opts.port = target.port;
      opts.time_scale = time_scale;
      const auto result = rtpos::vsim::emit(merged, opts);
      std::cout << "sent " << result.sent << " datagrams";
      if (result.socket_errors > 0) {
        std::cout << " (" << result.socket_errors << " socket errors)";
      }
      std::cout << std::endl;
      return result.socket_errors == 0 ? 0 : 1;
    }

    if (cluster->parsed()) {
      std::ifstream in(scenario_path, std::ios::binary);
      if (!in) {
        std::cerr << "cannot open scenario " << scenario_path << std::endl;
        return 1;
      }
      const std::string text((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
      const auto scenario = rtpos::sim::Scenario::parse(text);

      rtpos::sim::SimOptions options;
      options.seed = sim_seed;
      options.max_ms = max_ms;
      std::stringstream ss(nodes_csv);
      std::string id;
      options.nodes.clear();
      while (std::getline(ss, id, ',')) {
        if (!id.empty()) options.nodes.push_back(id);
      }
      const auto result = rtpos::sim::simulate_cluster(scenario, options);
      std::cout << rtpos::sim::render_trace(result);
      return result.violations.empty() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
