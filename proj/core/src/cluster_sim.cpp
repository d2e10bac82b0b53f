#include "rtpos/cluster_sim.hpp"

#include <algorithm>
#include <charconv>
#include <memory>
#include <queue>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "rtpos/feed.hpp"
#include "rtpos/interval_tree.hpp"
#include "rtpos/raft.hpp"
#include "rtpos/replication.hpp"
#include "rtpos/wire.hpp"

namespace rtpos::sim {

namespace {

std::uint64_t parse_u64_or_throw(std::string_view text, std::size_t line) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) {
    throw std::runtime_error("scenario line " + std::to_string(line) +
                             ": expected a number, got '" + std::string(text) + "'");
  }
  return v;
}

std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

Scenario Scenario::parse(std::string_view text) {
  Scenario scenario;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = nl == std::string_view::npos
                                ? text.substr(pos)
                                : text.substr(pos, nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    const auto tokens = tokenize(line);
    if (tokens.empty() || tokens[0][0] == '#') continue;

    const auto need = [&](std::size_t n) {
      if (tokens.size() != n) {
        throw std::runtime_error("scenario line " + std::to_string(line_no) +
                                 ": wrong argument count for '" + tokens[1] + "'");
      }
    };
    if (tokens.size() < 2) {
      throw std::runtime_error("scenario line " + std::to_string(line_no) +
                               ": expected '<time-ms> <event> ...'");
    }

    SimEvent ev;
    ev.at_ms = parse_u64_or_throw(tokens[0], line_no);
    const std::string& verb = tokens[1];
    if (verb == "propose") {
      need(4);
      ev.kind = EventKind::Propose;
      ev.node = tokens[2];
      ev.value = parse_u64_or_throw(tokens[3], line_no);
    } else if (verb == "crash") {
      need(3);
      ev.kind = EventKind::Crash;
      ev.node = tokens[2];
    } else if (verb == "restart") {
      need(3);
      ev.kind = EventKind::Restart;
      ev.node = tokens[2];
    } else if (verb == "partition") {
      need(3);
      ev.kind = EventKind::Partition;
      std::string_view spec = tokens[2];
      std::size_t start = 0;
      while (start <= spec.size()) {
        const std::size_t bar = spec.find('|', start);
        const std::string_view group = bar == std::string_view::npos
                                           ? spec.substr(start)
                                           : spec.substr(start, bar - start);
        std::vector<std::string> members;
        std::size_t gs = 0;
        while (gs <= group.size()) {
          const std::size_t comma = group.find(',', gs);
          const std::string_view m = comma == std::string_view::npos
                                         ? group.substr(gs)
                                         : group.substr(gs, comma - gs);
          if (!m.empty()) members.emplace_back(m);
          if (comma == std::string_view::npos) break;
          gs = comma + 1;
        }
        if (members.empty()) {
          throw std::runtime_error("scenario line " + std::to_string(line_no) +
                                   ": empty partition group");
        }
        ev.groups.push_back(std::move(members));
        if (bar == std::string_view::npos) break;
        start = bar + 1;
      }
      if (ev.groups.size() < 2) {
        throw std::runtime_error("scenario line " + std::to_string(line_no) +
                                 ": partition needs at least two groups");
      }
    } else if (verb == "heal") {
      need(2);
      ev.kind = EventKind::Heal;
    } else if (verb == "drop") {
      need(4);
      ev.kind = EventKind::DropLink;
      ev.from = tokens[2];
      ev.to = tokens[3];
    } else if (verb == "undrop") {
      need(4);
      ev.kind = EventKind::UndropLink;
      ev.from = tokens[2];
      ev.to = tokens[3];
    } else if (verb == "delay") {
      need(5);
      ev.kind = EventKind::DelayLink;
      ev.from = tokens[2];
      ev.to = tokens[3];
      ev.value = parse_u64_or_throw(tokens[4], line_no);
    } else if (verb == "end") {
      need(2);
      ev.kind = EventKind::End;
    } else {
      throw std::runtime_error("scenario line " + std::to_string(line_no) +
                               ": unknown event '" + verb + "'");
    }
    scenario.events.push_back(std::move(ev));
  }
  std::stable_sort(scenario.events.begin(), scenario.events.end(),
                   [](const SimEvent& a, const SimEvent& b) { return a.at_ms < b.at_ms; });
  return scenario;
}

namespace {

struct PendingMessage {
  std::uint64_t deliver_at = 0;
  std::uint64_t seq = 0;
  std::string from, to;
  raft::Message message;
};

struct LaterDelivery {
  bool operator()(const PendingMessage& a, const PendingMessage& b) const {
    if (a.deliver_at != b.deliver_at) return a.deliver_at > b.deliver_at;
    return a.seq > b.seq;
  }
};

struct ClientTask {
  std::uint64_t at_ms = 0;
  std::uint64_t seq = 0;
  std::string node;
  std::vector<std::uint8_t> command;
};

struct LaterTask {
  bool operator()(const ClientTask& a, const ClientTask& b) const {
    if (a.at_ms != b.at_ms) return a.at_ms > b.at_ms;
    return a.seq > b.seq;
  }
};

struct SimNode {
  std::string id;
  raft::MemoryStorage storage;  // stable storage survives crashes
  std::unique_ptr<raft::RaftNode> raft;
  feed::FeedSnapshot feed;
  replication::ApplyStats apply_stats;
  raft::Role observed_role = raft::Role::Follower;
  std::uint64_t observed_term = 0;
  std::uint64_t observed_commit = 0;

  bool live() const { return raft != nullptr; }
};

struct CommandHash {
  std::size_t operator()(const std::vector<std::uint8_t>& v) const {
    std::size_t h = 1469598103934665603ull;
    for (const auto b : v) {
      h ^= b;
      h *= 1099511628211ull;
    }
    return h;
  }
};

class Simulation {
 public:
  Simulation(const Scenario& scenario, const SimOptions& options)
      : options_(options), rng_(options.seed) {
    if (options_.nodes.empty()) {
      throw std::runtime_error("simulate_cluster: no nodes configured");
    }
    validate(scenario);

    if (options_.gtfs == nullptr) {
      empty_gtfs_ = std::make_unique<gtfs::GtfsData>();
    }
    const gtfs::GtfsData* data = options_.gtfs ? options_.gtfs : empty_gtfs_.get();
    trip_tree_ = indexes::TripIntervalTree::build(data->trips);
    ctx_ = matcher::MatchContext{data, &trip_tree_, data->mean_stop_latitude(),
                                 options_.utc_offset_minutes};
    if (options_.vehicles == nullptr) {
      empty_vehicles_ = std::make_unique<matcher::VehicleMap>();
    }

    for (const auto& id : options_.nodes) {
      auto node = std::make_unique<SimNode>();
      node->id = id;
      boot(*node, 0);
      nodes_.emplace(id, std::move(node));
      group_[id] = 0;
    }
    pending_events_ = scenario.events;
    std::stable_sort(pending_events_.begin(), pending_events_.end(),
                     [](const SimEvent& a, const SimEvent& b) {
                       return a.at_ms < b.at_ms;
                     });
  }

  SimResult run() {
    std::size_t next_event = 0;
    std::uint64_t end_at = options_.max_ms;

    for (now_ = 0; now_ <= end_at; ++now_) {
      while (next_event < pending_events_.size() &&
             pending_events_[next_event].at_ms <= now_) {
        const auto& ev = pending_events_[next_event++];
        if (ev.kind == EventKind::End) {
          end_at = std::min(end_at, now_);
          break;
        }
        apply_event(ev);
      }
      if (now_ > end_at) break;

      while (!wire_.empty() && wire_.top().deliver_at <= now_) {
        PendingMessage m = wire_.top();
        wire_.pop();
        deliver(std::move(m));
      }
      while (!client_.empty() && client_.top().at_ms <= now_) {
        ClientTask t = client_.top();
        client_.pop();
        run_client_task(std::move(t));
      }
      for (const auto& id : options_.nodes) {
        SimNode& n = *nodes_.at(id);
        if (!n.live()) continue;
        n.raft->on_tick(now_);
        sync_node(n);
      }
    }

    SimResult result;
    result.trace = std::move(trace_);
    result.violations = std::move(violations_);
    result.messages_delivered = delivered_;
    result.messages_dropped = dropped_;
    result.proposals_made = proposals_made_;
    for (const auto& cmd : proposal_commands_) {
      if (committed_commands_.count(cmd) > 0) ++result.proposals_committed;
    }
    for (const auto& id : options_.nodes) {
      const SimNode& n = *nodes_.at(id);
      if (n.live()) {
        result.live_feeds[id] = feed::encode_feed(n.feed);
        result.commit_index[id] = n.raft->commit_index();
      }
    }
    return result;
  }

 private:
  void validate(const Scenario& scenario) const {
    const std::unordered_set<std::string> known(options_.nodes.begin(),
                                                options_.nodes.end());
    const auto check = [&](const std::string& id) {
      if (!id.empty() && known.count(id) == 0) {
        throw std::runtime_error("scenario references unknown node '" + id + "'");
      }
    };
    for (const auto& ev : scenario.events) {
      check(ev.node);
      check(ev.from);
      check(ev.to);
      if (ev.kind == EventKind::Partition) {
        std::unordered_set<std::string> seen;
        for (const auto& group : ev.groups) {
          for (const auto& member : group) {
            check(member);
            if (!seen.insert(member).second) {
              throw std::runtime_error("partition lists node '" + member +
                                       "' more than once");
            }
          }
        }
        if (seen.size() != known.size()) {
          throw std::runtime_error("partition must list every node exactly once");
        }
      }
    }
  }

  raft::RaftOptions node_options(const std::string& id) const {
    raft::RaftOptions opt;
    opt.self = id;
    for (const auto& peer : options_.nodes) {
      if (peer != id) opt.peers.push_back(peer);
    }
    opt.election_timeout_min_ms = options_.election_timeout_min_ms;
    opt.election_timeout_max_ms = options_.election_timeout_max_ms;
    opt.heartbeat_interval_ms = options_.heartbeat_interval_ms;
    opt.seed = options_.seed;
    return opt;
  }

  void boot(SimNode& n, std::uint64_t restart_count) {
    raft::RaftOptions opt = node_options(n.id);
    // Restarted nodes draw a fresh jitter stream so reboots do not replay
    // the exact pre-crash election timing.
    opt.seed = options_.seed + restart_count * 0x9e3779b97f4a7c15ull;
    n.raft = std::make_unique<raft::RaftNode>(opt, n.storage);
    n.feed = feed::FeedSnapshot{};
    n.observed_role = raft::Role::Follower;
    n.observed_term = n.raft->current_term();
    n.observed_commit = 0;
    check_log(n);
  }

  void apply_event(const SimEvent& ev) {
    switch (ev.kind) {
      case EventKind::Propose: {
        ++proposals_made_;
        const auto cmd = make_command(ev.value);
        proposal_commands_.push_back(cmd);
        trace(ev.node, "propose", "key=" + std::to_string(ev.value));
        client_.push(ClientTask{now_, next_seq_++, ev.node, cmd});
        break;
      }
      case EventKind::Crash: {
        SimNode& n = *nodes_.at(ev.node);
        if (n.live()) {
          n.raft.reset();
          ++restart_counts_[ev.node];
          trace(ev.node, "crash", "");
        }
        break;
      }
      case EventKind::Restart: {
        SimNode& n = *nodes_.at(ev.node);
        if (!n.live()) {
          boot(n, restart_counts_[ev.node]);
          trace(ev.node, "restart", "");
          sync_node(n);
        }
        break;
      }
      case EventKind::Partition: {
        int g = 1;
        for (const auto& group : ev.groups) {
          for (const auto& member : group) group_[member] = g;
          ++g;
        }
        trace("", "partition", std::to_string(ev.groups.size()) + " groups");
        break;
      }
      case EventKind::Heal: {
        for (auto& [id, g] : group_) g = 0;
        trace("", "heal", "");
        break;
      }
      case EventKind::DropLink:
        dropped_links_.insert(ev.from + "|" + ev.to);
        break;
      case EventKind::UndropLink:
        dropped_links_.erase(ev.from + "|" + ev.to);
        break;
      case EventKind::DelayLink:
        link_extra_delay_[ev.from + "|" + ev.to] = ev.value;
        break;
      case EventKind::End:
        break;
    }
  }

  std::vector<std::uint8_t> make_command(std::uint64_t key) const {
    wire::PositionReport report;
    report.latitude = static_cast<float>(34.0 + 0.0001 * static_cast<double>(key % 1000));
    report.longitude = -118.25f;
    report.bearing = 0.0f;
    report.speed = 0.0f;
    report.vehicle_id = static_cast<std::uint32_t>(key);
    report.timestamp = 1700000000ull + key;
    const auto bytes = wire::encode_packet(report);
    return std::vector<std::uint8_t>(bytes->begin(), bytes->end());
  }

  void run_client_task(ClientTask task) {
    SimNode& n = *nodes_.at(task.node);
    if (!n.live()) {
      // Target down: retry the same ingest point later.
      task.at_ms = now_ + 50;
      task.seq = next_seq_++;
      client_.push(std::move(task));
      return;
    }
    const auto result = n.raft->propose(task.command, now_);
    if (result.accepted) {
      trace(task.node, "accepted", "index=" + std::to_string(result.index));
      sync_node(n);
      return;
    }
    sync_node(n);
    if (result.leader_hint && *result.leader_hint != task.node) {
      // Non-leader ingest: relay toward the last known leader.
      send(task.node, *result.leader_hint, raft::ForwardReport{task.command});
      return;
    }
    task.at_ms = now_ + 25;  // no leader known yet
    task.seq = next_seq_++;
    client_.push(std::move(task));
  }

  void deliver(PendingMessage m) {
    SimNode& to = *nodes_.at(m.to);
    if (!to.live() || partitioned(m.from, m.to) || link_dropped(m.from, m.to)) {
      ++dropped_;
      return;
    }
    ++delivered_;
    if (const auto* fwd = std::get_if<raft::ForwardReport>(&m.message)) {
      handle_forward(to, *fwd);
      return;
    }
    to.raft->handle(m.from, m.message, now_);
    sync_node(to);
  }

  void handle_forward(SimNode& n, const raft::ForwardReport& fwd) {
    const auto result = n.raft->propose(fwd.command, now_);
    if (result.accepted) {
      trace(n.id, "accepted", "forwarded index=" + std::to_string(result.index));
      sync_node(n);
      return;
    }
    const auto hint = n.raft->leader_hint();
    if (hint && *hint != n.id) {
      send(n.id, *hint, raft::ForwardReport{fwd.command});
    } else {
      ++forward_dropped_;
    }
  }

  void send(const std::string& from, const std::string& to, raft::Message message) {
    std::uint64_t delay = options_.link_delay_ms;
    if (options_.link_jitter_ms > 0) {
      std::uniform_int_distribution<std::uint32_t> dist(0, options_.link_jitter_ms);
      delay += dist(rng_);
    }
    const auto extra = link_extra_delay_.find(from + "|" + to);
    if (extra != link_extra_delay_.end()) delay += extra->second;
    wire_.push(PendingMessage{now_ + delay, next_seq_++, from, to, std::move(message)});
  }

  bool partitioned(const std::string& a, const std::string& b) const {
    return group_.at(a) != group_.at(b);
  }

  bool link_dropped(const std::string& from, const std::string& to) const {
    return dropped_links_.count(from + "|" + to) > 0;
  }

  // --- safety checkers -----------------------------------------------------

  void violation(const std::string& what) {
    violations_.push_back("t=" + std::to_string(now_) + "ms " + what);
  }

  // Log matching: an entry is created once, by the leader of its term; every
  // copy must carry the same command and the same predecessor term.
  void check_log(SimNode& n) {
    const auto& log = n.raft->log();
    for (std::size_t i = 0; i < log.size(); ++i) {
      const auto& e = log[i];
      if (e.index != i + 1) {
        violation(n.id + ": log index gap at position " + std::to_string(i));
        return;
      }
      const std::uint64_t prev_term = i == 0 ? 0 : log[i - 1].term;
      const auto key = std::make_pair(e.term, e.index);
      const auto it = entry_registry_.find(key);
      if (it == entry_registry_.end()) {
        entry_registry_.emplace(key, std::make_pair(e.command, prev_term));
      } else if (it->second.first != e.command || it->second.second != prev_term) {
        violation(n.id + ": log matching violated at term " +
                  std::to_string(e.term) + " index " + std::to_string(e.index));
      }
    }
  }

  void check_commit_advance(SimNode& n) {
    const std::uint64_t commit = n.raft->commit_index();
    if (commit < n.observed_commit) {
      // Fresh boots reset the volatile commit index; that is not a regression.
      n.observed_commit = commit;
    }
    if (commit == n.observed_commit) return;
    const auto& log = n.raft->log();
    if (commit > log.size()) {
      violation(n.id + ": commit index beyond log end");
      n.observed_commit = commit;
      return;
    }
    for (std::uint64_t idx = n.observed_commit + 1; idx <= commit; ++idx) {
      const auto& e = log[idx - 1];
      const auto it = committed_registry_.find(idx);
      if (it == committed_registry_.end()) {
        committed_registry_.emplace(idx, std::make_pair(e.term, e.command));
        committed_commands_.insert(e.command);
      } else if (it->second.first != e.term || it->second.second != e.command) {
        violation(n.id + ": state-machine safety violated at index " +
                  std::to_string(idx));
      }
    }
    trace(n.id, "commit", "index=" + std::to_string(commit));
    n.observed_commit = commit;
  }

  void check_leader_completeness(SimNode& n) {
    const auto& log = n.raft->log();
    for (const auto& [idx, entry] : committed_registry_) {
      if (idx > log.size() || log[idx - 1].term != entry.first ||
          log[idx - 1].command != entry.second) {
        violation(n.id + ": leader of term " +
                  std::to_string(n.raft->current_term()) +
                  " is missing committed entry " + std::to_string(idx));
      }
    }
  }

  void sync_node(SimNode& n) {
    for (auto& env : n.raft->take_outbox()) {
      send(n.id, env.to, std::move(env.message));
    }
    check_log(n);

    const raft::Role role = n.raft->role();
    const std::uint64_t term = n.raft->current_term();
    if (role != n.observed_role || term != n.observed_term) {
      if (role == raft::Role::Leader) {
        const auto it = leaders_by_term_.find(term);
        if (it != leaders_by_term_.end() && it->second != n.id) {
          violation("two leaders in term " + std::to_string(term) + ": " +
                    it->second + " and " + n.id);
        } else {
          leaders_by_term_.emplace(term, n.id);
        }
        check_leader_completeness(n);
      }
      trace(n.id, "role",
            std::string(raft::role_name(role)) + " term=" + std::to_string(term));
      n.observed_role = role;
      n.observed_term = term;
    }

    check_commit_advance(n);

    // Apply committed entries, checking state-machine agreement.
    const auto entries = n.raft->drain_committed();
    for (const auto& e : entries) {
      const auto it = applied_registry_.find(e.index);
      if (it == applied_registry_.end()) {
        applied_registry_.emplace(e.index, e.command);
      } else if (it->second != e.command) {
        violation(n.id + ": applied a different command at index " +
                  std::to_string(e.index));
      }
      replication::apply_entry(e, vehicles(), ctx_, n.feed, n.apply_stats);
    }
  }

  const matcher::VehicleMap& vehicles() const {
    return options_.vehicles ? *options_.vehicles : *empty_vehicles_;
  }

  void trace(const std::string& node, const std::string& kind,
             const std::string& detail) {
    trace_.push_back(TraceEvent{now_, node, kind, detail});
  }

  SimOptions options_;
  std::unique_ptr<gtfs::GtfsData> empty_gtfs_;
  std::unique_ptr<matcher::VehicleMap> empty_vehicles_;
  indexes::TripIntervalTree trip_tree_;
  matcher::MatchContext ctx_;

  std::map<std::string, std::unique_ptr<SimNode>> nodes_;
  std::unordered_map<std::string, int> group_;
  std::unordered_map<std::string, std::uint64_t> restart_counts_;
  std::set<std::string> dropped_links_;
  std::unordered_map<std::string, std::uint64_t> link_extra_delay_;

  std::vector<SimEvent> pending_events_;
  std::priority_queue<PendingMessage, std::vector<PendingMessage>, LaterDelivery> wire_;
  std::priority_queue<ClientTask, std::vector<ClientTask>, LaterTask> client_;

  std::map<std::pair<std::uint64_t, std::uint64_t>,
           std::pair<std::vector<std::uint8_t>, std::uint64_t>>
      entry_registry_;
  std::map<std::uint64_t, std::pair<std::uint64_t, std::vector<std::uint8_t>>>
      committed_registry_;
  std::map<std::uint64_t, std::vector<std::uint8_t>> applied_registry_;
  std::unordered_set<std::vector<std::uint8_t>, CommandHash> committed_commands_;
  std::map<std::uint64_t, std::string> leaders_by_term_;

  std::vector<std::vector<std::uint8_t>> proposal_commands_;
  std::vector<TraceEvent> trace_;
  std::vector<std::string> violations_;

  std::uint64_t now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t delivered_ = 0;
  std::uint64_t dropped_ = 0;
  std::uint64_t forward_dropped_ = 0;
  std::uint64_t proposals_made_ = 0;
  std::mt19937_64 rng_;
};

}  // namespace

SimResult simulate_cluster(const Scenario& scenario, const SimOptions& options) {
  Simulation sim(scenario, options);
  return sim.run();
}

std::string render_trace(const SimResult& result) {
  std::ostringstream out;
  for (const auto& ev : result.trace) {
    out << ev.at_ms << "ms";
    if (!ev.node.empty()) out << " [" << ev.node << "]";
    out << " " << ev.kind;
    if (!ev.detail.empty()) out << " " << ev.detail;
    out << "\n";
  }
  for (const auto& v : result.violations) {
    out << "VIOLATION " << v << "\n";
  }
  out << "delivered=" << result.messages_delivered
      << " dropped=" << result.messages_dropped
      << " proposals=" << result.proposals_made << "/"
      << result.proposals_committed << " committed\n";
  for (const auto& [node, commit] : result.commit_index) {
    out << node << ": commit_index=" << commit << "\n";
  }
  return out.str();
}

}  // namespace rtpos::sim
