#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace rtpos::raft {

struct LogEntry {
  std::uint64_t term = 0;
  std::uint64_t index = 0;  // first entry has index 1
  std::vector<std::uint8_t> command;

  bool operator==(const LogEntry&) const = default;
};

struct VoteRequest {
  std::uint64_t term = 0;
  std::uint64_t last_log_index = 0;
  std::uint64_t last_log_term = 0;
};

struct VoteResponse {
  std::uint64_t term = 0;
  bool granted = false;
};

struct AppendEntriesRequest {
  std::uint64_t term = 0;
  std::uint64_t prev_log_index = 0;
  std::uint64_t prev_log_term = 0;
  std::uint64_t leader_commit = 0;
  std::vector<LogEntry> entries;
};

struct AppendEntriesResponse {
  std::uint64_t term = 0;
  bool success = false;
  std::uint64_t match_index = 0;  // highest index known replicated on success
};

// An accepted report relayed toward the leader by a non-leader ingest node.
struct ForwardReport {
  std::vector<std::uint8_t> command;
};

using Message = std::variant<VoteRequest, VoteResponse, AppendEntriesRequest,
                             AppendEntriesResponse, ForwardReport>;

struct Envelope {
  std::string to;
  Message message;
};

enum class Role : std::uint8_t { Follower, Candidate, Leader };

const char* role_name(Role r);

// Durable state: current term, vote, and the log, persisted before the node
// acts on (or acknowledges) anything that depends on them.
class Storage {
 public:
  struct Persisted {
    std::uint64_t current_term = 0;
    std::optional<std::string> voted_for;
    std::vector<LogEntry> log;
  };

  virtual ~Storage() = default;
  virtual void save_term_and_vote(std::uint64_t term,
                                  const std::optional<std::string>& voted_for) = 0;
  virtual void append_entry(const LogEntry& entry) = 0;
  virtual void truncate_from(std::uint64_t index) = 0;  // drop entries with index >= index
  virtual Persisted load() = 0;
};

class MemoryStorage final : public Storage {
 public:
  void save_term_and_vote(std::uint64_t term,
                          const std::optional<std::string>& voted_for) override;
  void append_entry(const LogEntry& entry) override;
  void truncate_from(std::uint64_t index) override;
  Persisted load() override;

 private:
  Persisted state_;
};

// Append-only file persistence; records are replayed at load. Truncation is
// logical (a truncate record) so the file is never rewritten in place.
class FileStorage final : public Storage {
 public:
  explicit FileStorage(std::string path, bool sync_every_write = true);
  ~FileStorage() override;

  void save_term_and_vote(std::uint64_t term,
                          const std::optional<std::string>& voted_for) override;
  void append_entry(const LogEntry& entry) override;
  void truncate_from(std::uint64_t index) override;
  Persisted load() override;

 private:
  void write_record(const std::vector<std::uint8_t>& payload);

  std::string path_;
  bool sync_;
  int fd_ = -1;
};

struct RaftOptions {
  std::string self;
  std::vector<std::string> peers;  // excludes self
  std::uint32_t election_timeout_min_ms = 150;
  std::uint32_t election_timeout_max_ms = 300;
  std::uint32_t heartbeat_interval_ms = 50;
  std::uint64_t seed = 0;  // election jitter
};

struct ProposeResult {
  bool accepted = false;
  std::uint64_t index = 0;
  std::uint64_t term = 0;
  std::optional<std::string> leader_hint;  // set when not leader
};

// Single-context consensus state machine. The owner drives it with timer
// ticks, peer messages and local proposals, then drains the outbox (messages
// to send) and the committed entries (to apply). Not thread-safe by design;
// confine each instance to one thread or the simulator loop.
class RaftNode {
 public:
  RaftNode(RaftOptions options, Storage& storage);

  // Timer-driven behavior: election timeout, leader heartbeats.
  void on_tick(std::uint64_t now_ms);

  void handle(const std::string& from, const Message& message, std::uint64_t now_ms);

  // Leader: appends to the local log and schedules replication. Follower or
  // candidate: rejected with the last known leader as a hint.
  ProposeResult propose(std::span<const std::uint8_t> command, std::uint64_t now_ms);

  std::vector<Envelope> take_outbox();

  // Entries with index in (last_applied, commit_index], in order; advances
  // last_applied.
  std::vector<LogEntry> drain_committed();

  Role role() const { return role_; }
  std::uint64_t current_term() const { return current_term_; }
  std::uint64_t commit_index() const { return commit_index_; }
  std::uint64_t last_applied() const { return last_applied_; }
  std::uint64_t last_log_index() const { return log_.empty() ? 0 : log_.back().index; }
  std::uint64_t last_log_term() const { return log_.empty() ? 0 : log_.back().term; }
  const std::vector<LogEntry>& log() const { return log_; }
  const std::string& id() const { return options_.self; }
  std::optional<std::string> leader_hint() const { return leader_hint_; }

 private:
  void become_follower(std::uint64_t term, std::uint64_t now_ms);
  void start_election(std::uint64_t now_ms);
  void become_leader(std::uint64_t now_ms);
  void reset_election_deadline(std::uint64_t now_ms);
  void persist_term_and_vote();
  void send_append_to(const std::string& peer);
  void broadcast_append();
  void advance_commit();
  std::size_t quorum() const { return (options_.peers.size() + 1) / 2 + 1; }

  void on_vote_request(const std::string& from, const VoteRequest& req,
                       std::uint64_t now_ms);
  void on_vote_response(const std::string& from, const VoteResponse& resp,
                        std::uint64_t now_ms);
  void on_append_request(const std::string& from, const AppendEntriesRequest& req,
                         std::uint64_t now_ms);
  void on_append_response(const std::string& from, const AppendEntriesResponse& resp,
                          std::uint64_t now_ms);

  RaftOptions options_;
  Storage& storage_;

  Role role_ = Role::Follower;
  std::uint64_t current_term_ = 0;
  std::optional<std::string> voted_for_;
  std::vector<LogEntry> log_;
  std::uint64_t commit_index_ = 0;
  std::uint64_t last_applied_ = 0;
  std::optional<std::string> leader_hint_;

  std::uint64_t election_deadline_ms_ = 0;
  std::uint64_t next_heartbeat_ms_ = 0;
  std::unordered_map<std::string, bool> votes_;
  std::unordered_map<std::string, std::uint64_t> next_index_;
  std::unordered_map<std::string, std::uint64_t> match_index_;

  std::mt19937_64 rng_;
  std::vector<Envelope> outbox_;
};

}  // namespace rtpos::raft
