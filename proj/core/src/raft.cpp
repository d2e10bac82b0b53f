#include "rtpos/raft.hpp"

#include <algorithm>
#include <cassert>

namespace rtpos::raft {

const char* role_name(Role r) {
  switch (r) {
    case Role::Follower: return "follower";
    case Role::Candidate: return "candidate";
    case Role::Leader: return "leader";
  }
  return "?";
}

void MemoryStorage::save_term_and_vote(std::uint64_t term,
                                       const std::optional<std::string>& voted_for) {
  state_.current_term = term;
  state_.voted_for = voted_for;
}

void MemoryStorage::append_entry(const LogEntry& entry) {
  state_.log.push_back(entry);
}

void MemoryStorage::truncate_from(std::uint64_t index) {
  while (!state_.log.empty() && state_.log.back().index >= index) {
    state_.log.pop_back();
  }
}

Storage::Persisted MemoryStorage::load() { return state_; }

namespace {

std::uint64_t mix_seed(std::uint64_t seed, const std::string& id) {
  // FNV-1a over the node id, folded into the seed, so every node draws a
  // distinct but reproducible election-jitter stream.
  std::uint64_t h = 1469598103934665603ull;
  for (const char c : id) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 1099511628211ull;
  }
  return seed ^ h;
}

}  // namespace

RaftNode::RaftNode(RaftOptions options, Storage& storage)
    : options_(std::move(options)),
      storage_(storage),
      rng_(mix_seed(options_.seed, options_.self)) {
  const auto persisted = storage_.load();
  current_term_ = persisted.current_term;
  voted_for_ = persisted.voted_for;
  log_ = persisted.log;
}

void RaftNode::persist_term_and_vote() {
  storage_.save_term_and_vote(current_term_, voted_for_);
}

void RaftNode::reset_election_deadline(std::uint64_t now_ms) {
  std::uniform_int_distribution<std::uint32_t> dist(
      options_.election_timeout_min_ms, options_.election_timeout_max_ms);
  election_deadline_ms_ = now_ms + dist(rng_);
}

void RaftNode::become_follower(std::uint64_t term, std::uint64_t now_ms) {
  role_ = Role::Follower;
  votes_.clear();
  if (term > current_term_) {
    current_term_ = term;
    voted_for_.reset();
    leader_hint_.reset();
    persist_term_and_vote();
  }
  reset_election_deadline(now_ms);
}

void RaftNode::start_election(std::uint64_t now_ms) {
  role_ = Role::Candidate;
  ++current_term_;
  voted_for_ = options_.self;
  leader_hint_.reset();
  persist_term_and_vote();
  votes_.clear();
  votes_[options_.self] = true;
  reset_election_deadline(now_ms);

  const VoteRequest req{current_term_, last_log_index(), last_log_term()};
  for (const auto& peer : options_.peers) {
    outbox_.push_back({peer, req});
  }
  if (votes_.size() >= quorum()) become_leader(now_ms);
}

void RaftNode::become_leader(std::uint64_t now_ms) {
  role_ = Role::Leader;
  leader_hint_ = options_.self;
  next_index_.clear();
  match_index_.clear();
  for (const auto& peer : options_.peers) {
    next_index_[peer] = last_log_index() + 1;
    match_index_[peer] = 0;
  }
  broadcast_append();
  next_heartbeat_ms_ = now_ms + options_.heartbeat_interval_ms;
}

void RaftNode::on_tick(std::uint64_t now_ms) {
  if (role_ == Role::Leader) {
    if (now_ms >= next_heartbeat_ms_) {
      broadcast_append();
      next_heartbeat_ms_ = now_ms + options_.heartbeat_interval_ms;
    }
    return;
  }
  if (election_deadline_ms_ == 0) {
    reset_election_deadline(now_ms);
    return;
  }
  if (now_ms >= election_deadline_ms_) start_election(now_ms);
}

void RaftNode::handle(const std::string& from, const Message& message,
                      std::uint64_t now_ms) {
  // Consensus state only moves on messages from configured peers; anything
  // else reaching the transport is dropped here.
  if (std::find(options_.peers.begin(), options_.peers.end(), from) ==
      options_.peers.end()) {
    return;
  }
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, VoteRequest>) {
          on_vote_request(from, m, now_ms);
        } else if constexpr (std::is_same_v<T, VoteResponse>) {
          on_vote_response(from, m, now_ms);
        } else if constexpr (std::is_same_v<T, AppendEntriesRequest>) {
          on_append_request(from, m, now_ms);
        } else if constexpr (std::is_same_v<T, AppendEntriesResponse>) {
          on_append_response(from, m, now_ms);
        } else {
          // ForwardReport is routed by the owner (service or simulator), not
          // by the consensus core.
        }
      },
      message);
}

void RaftNode::on_vote_request(const std::string& from, const VoteRequest& req,
                               std::uint64_t now_ms) {
  if (req.term > current_term_) become_follower(req.term, now_ms);

  bool granted = false;
  if (req.term == current_term_ && role_ != Role::Leader &&
      (!voted_for_.has_value() || *voted_for_ == from)) {
    const bool up_to_date =
        req.last_log_term > last_log_term() ||
        (req.last_log_term == last_log_term() &&
         req.last_log_index >= last_log_index());
    if (up_to_date) {
      granted = true;
      if (!voted_for_.has_value()) {
        voted_for_ = from;
        persist_term_and_vote();
      }
      reset_election_deadline(now_ms);
    }
  }
  outbox_.push_back({from, VoteResponse{current_term_, granted}});
}

void RaftNode::on_vote_response(const std::string& from, const VoteResponse& resp,
                                std::uint64_t now_ms) {
  if (resp.term > current_term_) {
    become_follower(resp.term, now_ms);
    return;
  }
  if (role_ != Role::Candidate || resp.term != current_term_ || !resp.granted) {
    return;
  }
  votes_[from] = true;
  if (votes_.size() >= quorum()) become_leader(now_ms);
}

void RaftNode::on_append_request(const std::string& from,
                                 const AppendEntriesRequest& req,
                                 std::uint64_t now_ms) {
  if (req.term < current_term_) {
    outbox_.push_back({from, AppendEntriesResponse{current_term_, false, 0}});
    return;
  }
  become_follower(req.term, now_ms);
  leader_hint_ = from;

  // Log consistency check on the entry preceding the batch.
  if (req.prev_log_index > 0) {
    if (last_log_index() < req.prev_log_index ||
        log_[req.prev_log_index - 1].term != req.prev_log_term) {
      outbox_.push_back({from, AppendEntriesResponse{current_term_, false, 0}});
      return;
    }
  }

  for (const auto& entry : req.entries) {
    if (entry.index <= last_log_index()) {
      if (log_[entry.index - 1].term == entry.term) continue;  // already have it
      storage_.truncate_from(entry.index);
      log_.resize(entry.index - 1);
    }
    storage_.append_entry(entry);
    log_.push_back(entry);
  }

  const std::uint64_t last_new = req.prev_log_index + req.entries.size();
  if (req.leader_commit > commit_index_) {
    commit_index_ = std::min(req.leader_commit, last_new);
  }
  outbox_.push_back({from, AppendEntriesResponse{current_term_, true, last_new}});
}

void RaftNode::on_append_response(const std::string& from,
                                  const AppendEntriesResponse& resp,
                                  std::uint64_t now_ms) {
  if (resp.term > current_term_) {
    become_follower(resp.term, now_ms);
    return;
  }
  if (role_ != Role::Leader || resp.term != current_term_) return;

  if (resp.success) {
    match_index_[from] = std::max(match_index_[from], resp.match_index);
    next_index_[from] = match_index_[from] + 1;
    advance_commit();
    if (next_index_[from] <= last_log_index()) send_append_to(from);
  } else {
    if (next_index_[from] > 1) --next_index_[from];
    send_append_to(from);
  }
}

void RaftNode::advance_commit() {
  for (std::uint64_t n = last_log_index(); n > commit_index_; --n) {
    if (log_[n - 1].term != current_term_) break;
    std::size_t replicas = 1;  // self
    for (const auto& [peer, match] : match_index_) {
      if (match >= n) ++replicas;
    }
    if (replicas >= quorum()) {
      commit_index_ = n;
      break;
    }
  }
}

void RaftNode::send_append_to(const std::string& peer) {
  const std::uint64_t next = next_index_[peer];
  AppendEntriesRequest req;
  req.term = current_term_;
  req.prev_log_index = next - 1;
  req.prev_log_term = next >= 2 ? log_[next - 2].term : 0;
  req.leader_commit = commit_index_;
  for (std::uint64_t i = next; i <= last_log_index(); ++i) {
    req.entries.push_back(log_[i - 1]);
  }
  outbox_.push_back({peer, std::move(req)});
}

void RaftNode::broadcast_append() {
  for (const auto& peer : options_.peers) send_append_to(peer);
}

ProposeResult RaftNode::propose(std::span<const std::uint8_t> command,
                                std::uint64_t now_ms) {
  if (role_ != Role::Leader) {
    return {false, 0, 0, leader_hint_};
  }
  LogEntry entry;
  entry.term = current_term_;
  entry.index = last_log_index() + 1;
  entry.command.assign(command.begin(), command.end());
  storage_.append_entry(entry);
  log_.push_back(std::move(entry));
  advance_commit();  // a single-node cluster commits immediately
  broadcast_append();
  next_heartbeat_ms_ = now_ms + options_.heartbeat_interval_ms;
  return {true, last_log_index(), current_term_, options_.self};
}

std::vector<Envelope> RaftNode::take_outbox() {
  std::vector<Envelope> out;
  out.swap(outbox_);
  return out;
}

std::vector<LogEntry> RaftNode::drain_committed() {
  std::vector<LogEntry> out;
  while (last_applied_ < commit_index_) {
    ++last_applied_;
    out.push_back(log_[last_applied_ - 1]);
  }
  return out;
}

}  // namespace rtpos::raft
