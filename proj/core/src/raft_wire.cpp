#include "rtpos/raft_wire.hpp"

namespace rtpos::raft_wire {

namespace {

void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v >> 8));
  b.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  b.push_back(static_cast<std::uint8_t>(v >> 24));
  b.push_back(static_cast<std::uint8_t>(v >> 16));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
  b.push_back(static_cast<std::uint8_t>(v));
}

void put_u64(std::vector<std::uint8_t>& b, std::uint64_t v) {
  put_u32(b, static_cast<std::uint32_t>(v >> 32));
  put_u32(b, static_cast<std::uint32_t>(v));
}

struct Cursor {
  std::span<const std::uint8_t> data;
  std::size_t off = 0;

  bool u8(std::uint8_t& v) {
    if (off + 1 > data.size()) return false;
    v = data[off++];
    return true;
  }
  bool u16(std::uint16_t& v) {
    if (off + 2 > data.size()) return false;
    v = static_cast<std::uint16_t>((data[off] << 8) | data[off + 1]);
    off += 2;
    return true;
  }
  bool u32(std::uint32_t& v) {
    if (off + 4 > data.size()) return false;
    v = (static_cast<std::uint32_t>(data[off]) << 24) |
        (static_cast<std::uint32_t>(data[off + 1]) << 16) |
        (static_cast<std::uint32_t>(data[off + 2]) << 8) | data[off + 3];
    off += 4;
    return true;
  }
  bool u64(std::uint64_t& v) {
    std::uint32_t hi, lo;
    if (!u32(hi) || !u32(lo)) return false;
    v = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return true;
  }
  bool str(std::size_t n, std::string& out) {
    if (off + n > data.size()) return false;
    out.assign(reinterpret_cast<const char*>(data.data() + off), n);
    off += n;
    return true;
  }
  bool bytes(std::size_t n, std::vector<std::uint8_t>& out) {
    if (off + n > data.size()) return false;
    out.assign(data.begin() + off, data.begin() + off + n);
    off += n;
    return true;
  }
};

}  // namespace

std::vector<std::uint8_t> encode_body(const std::string& sender,
                                      const raft::Message& message) {
  std::vector<std::uint8_t> b;
  b.push_back(0);  // type placeholder
  put_u16(b, static_cast<std::uint16_t>(sender.size()));
  b.insert(b.end(), sender.begin(), sender.end());

  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, raft::VoteRequest>) {
          b[0] = kVoteRequest;
          put_u64(b, m.term);
          put_u64(b, m.last_log_index);
          put_u64(b, m.last_log_term);
        } else if constexpr (std::is_same_v<T, raft::VoteResponse>) {
          b[0] = kVoteResponse;
          put_u64(b, m.term);
          b.push_back(m.granted ? 1 : 0);
        } else if constexpr (std::is_same_v<T, raft::AppendEntriesRequest>) {
          b[0] = kAppendEntries;
          put_u64(b, m.term);
          put_u64(b, m.prev_log_index);
          put_u64(b, m.prev_log_term);
          put_u64(b, m.leader_commit);
          put_u32(b, static_cast<std::uint32_t>(m.entries.size()));
          for (const auto& e : m.entries) {
            put_u64(b, e.term);
            put_u64(b, e.index);
            put_u32(b, static_cast<std::uint32_t>(e.command.size()));
            b.insert(b.end(), e.command.begin(), e.command.end());
          }
        } else if constexpr (std::is_same_v<T, raft::AppendEntriesResponse>) {
          b[0] = kAppendResponse;
          put_u64(b, m.term);
          b.push_back(m.success ? 1 : 0);
          put_u64(b, m.match_index);
        } else {
          b[0] = kForwardReport;
          put_u32(b, static_cast<std::uint32_t>(m.command.size()));
          b.insert(b.end(), m.command.begin(), m.command.end());
        }
      },
      message);
  return b;
}

std::vector<std::uint8_t> encode_frame(const std::string& sender,
                                       const raft::Message& message) {
  const auto body = encode_body(sender, message);
  std::vector<std::uint8_t> frame;
  frame.reserve(body.size() + 4);
  put_u32(frame, static_cast<std::uint32_t>(body.size()));
  frame.insert(frame.end(), body.begin(), body.end());
  return frame;
}

std::optional<WireMessage> decode_body(std::span<const std::uint8_t> body) {
  Cursor c{body};
  std::uint8_t type;
  std::uint16_t sender_len;
  WireMessage out;
  if (!c.u8(type) || !c.u16(sender_len) || !c.str(sender_len, out.sender)) {
    return std::nullopt;
  }

  switch (type) {
    case kVoteRequest: {
      raft::VoteRequest m;
      if (!c.u64(m.term) || !c.u64(m.last_log_index) || !c.u64(m.last_log_term)) {
        return std::nullopt;
      }
      out.message = m;
      return out;
    }
    case kVoteResponse: {
      raft::VoteResponse m;
      std::uint8_t granted;
      if (!c.u64(m.term) || !c.u8(granted)) return std::nullopt;
      m.granted = granted != 0;
      out.message = m;
      return out;
    }
    case kAppendEntries: {
      raft::AppendEntriesRequest m;
      std::uint32_t count;
      if (!c.u64(m.term) || !c.u64(m.prev_log_index) || !c.u64(m.prev_log_term) ||
          !c.u64(m.leader_commit) || !c.u32(count)) {
        return std::nullopt;
      }
      m.entries.reserve(count);
      for (std::uint32_t i = 0; i < count; ++i) {
        raft::LogEntry e;
        std::uint32_t len;
        if (!c.u64(e.term) || !c.u64(e.index) || !c.u32(len) ||
            !c.bytes(len, e.command)) {
          return std::nullopt;
        }
        m.entries.push_back(std::move(e));
      }
      out.message = std::move(m);
      return out;
    }
    case kAppendResponse: {
      raft::AppendEntriesResponse m;
      std::uint8_t success;
      if (!c.u64(m.term) || !c.u8(success) || !c.u64(m.match_index)) {
        return std::nullopt;
      }
      m.success = success != 0;
      out.message = m;
      return out;
    }
    case kForwardReport: {
      raft::ForwardReport m;
      std::uint32_t len;
      if (!c.u32(len) || !c.bytes(len, m.command)) return std::nullopt;
      out.message = std::move(m);
      return out;
    }
    default:
      return std::nullopt;
  }
}

}  // namespace rtpos::raft_wire
