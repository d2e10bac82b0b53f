#include <fcntl.h>
#include <unistd.h>

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "rtpos/raft.hpp"

namespace rtpos::raft {

namespace {

constexpr std::uint8_t kRecTermVote = 1;
constexpr std::uint8_t kRecEntry = 2;
constexpr std::uint8_t kRecTruncate = 3;

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
  const std::uint8_t* p;
  std::size_t left;

  bool u8(std::uint8_t& v) {
    if (left < 1) return false;
    v = *p;
    ++p;
    --left;
    return true;
  }
  bool u16(std::uint16_t& v) {
    if (left < 2) return false;
    v = static_cast<std::uint16_t>((p[0] << 8) | p[1]);
    p += 2;
    left -= 2;
    return true;
  }
  bool u32(std::uint32_t& v) {
    if (left < 4) return false;
    v = (static_cast<std::uint32_t>(p[0]) << 24) |
        (static_cast<std::uint32_t>(p[1]) << 16) |
        (static_cast<std::uint32_t>(p[2]) << 8) | p[3];
    p += 4;
    left -= 4;
    return true;
  }
  bool u64(std::uint64_t& v) {
    std::uint32_t hi, lo;
    if (!u32(hi) || !u32(lo)) return false;
    v = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return true;
  }
  bool bytes(std::size_t n, const std::uint8_t*& out) {
    if (left < n) return false;
    out = p;
    p += n;
    left -= n;
    return true;
  }
};

}  // namespace

FileStorage::FileStorage(std::string path, bool sync_every_write)
    : path_(std::move(path)), sync_(sync_every_write) {
  fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd_ < 0) {
    throw std::runtime_error("raft storage: cannot open " + path_);
  }
}

FileStorage::~FileStorage() {
  if (fd_ >= 0) ::close(fd_);
}

void FileStorage::write_record(const std::vector<std::uint8_t>& payload) {
  std::vector<std::uint8_t> framed;
  framed.reserve(payload.size() + 4);
  put_u32(framed, static_cast<std::uint32_t>(payload.size()));
  framed.insert(framed.end(), payload.begin(), payload.end());

  std::size_t off = 0;
  while (off < framed.size()) {
    const ssize_t n = ::write(fd_, framed.data() + off, framed.size() - off);
    if (n < 0) throw std::runtime_error("raft storage: write failed on " + path_);
    off += static_cast<std::size_t>(n);
  }
  if (sync_) ::fdatasync(fd_);
}

void FileStorage::save_term_and_vote(std::uint64_t term,
                                     const std::optional<std::string>& voted_for) {
  std::vector<std::uint8_t> rec;
  rec.push_back(kRecTermVote);
  put_u64(rec, term);
  rec.push_back(voted_for.has_value() ? 1 : 0);
  if (voted_for) {
    put_u16(rec, static_cast<std::uint16_t>(voted_for->size()));
    rec.insert(rec.end(), voted_for->begin(), voted_for->end());
  }
  write_record(rec);
}

void FileStorage::append_entry(const LogEntry& entry) {
  std::vector<std::uint8_t> rec;
  rec.push_back(kRecEntry);
  put_u64(rec, entry.term);
  put_u64(rec, entry.index);
  put_u32(rec, static_cast<std::uint32_t>(entry.command.size()));
  rec.insert(rec.end(), entry.command.begin(), entry.command.end());
  write_record(rec);
}

void FileStorage::truncate_from(std::uint64_t index) {
  std::vector<std::uint8_t> rec;
  rec.push_back(kRecTruncate);
  put_u64(rec, index);
  write_record(rec);
}

Storage::Persisted FileStorage::load() {
  Persisted state;
  std::ifstream in(path_, std::ios::binary);
  if (!in) return state;
  const std::vector<std::uint8_t> raw((std::istreambuf_iterator<char>(in)),
                                      std::istreambuf_iterator<char>());

  std::size_t off = 0;
  while (off + 4 <= raw.size()) {
    const std::uint32_t len = (static_cast<std::uint32_t>(raw[off]) << 24) |
                              (static_cast<std::uint32_t>(raw[off + 1]) << 16) |
                              (static_cast<std::uint32_t>(raw[off + 2]) << 8) |
                              raw[off + 3];
    if (off + 4 + len > raw.size()) break;  // torn tail record, ignore
    Cursor c{raw.data() + off + 4, len};
    off += 4 + len;

    std::uint8_t type;
    if (!c.u8(type)) break;
    if (type == kRecTermVote) {
      std::uint64_t term;
      std::uint8_t has_vote;
      if (!c.u64(term) || !c.u8(has_vote)) break;
      state.current_term = term;
      state.voted_for.reset();
      if (has_vote != 0) {
        std::uint16_t n;
        const std::uint8_t* p;
        if (!c.u16(n) || !c.bytes(n, p)) break;
        state.voted_for = std::string(reinterpret_cast<const char*>(p), n);
      }
    } else if (type == kRecEntry) {
      LogEntry e;
      std::uint32_t n;
      const std::uint8_t* p;
      if (!c.u64(e.term) || !c.u64(e.index) || !c.u32(n) || !c.bytes(n, p)) break;
      e.command.assign(p, p + n);
      state.log.push_back(std::move(e));
    } else if (type == kRecTruncate) {
      std::uint64_t index;
      if (!c.u64(index)) break;
      while (!state.log.empty() && state.log.back().index >= index) {
        state.log.pop_back();
      }
    } else {
      break;  // unknown record, stop replay
    }
  }
  return state;
}

}  // namespace rtpos::raft
