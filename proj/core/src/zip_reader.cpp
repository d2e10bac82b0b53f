#include "zip_reader.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace rtpos::detail {

namespace {

constexpr std::uint32_t kEocdSig = 0x06054b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kLocalSig = 0x04034b50;

std::uint16_t rd16(const std::string& s, std::size_t off) {
  return static_cast<std::uint16_t>(static_cast<std::uint8_t>(s[off]) |
                                    (static_cast<std::uint8_t>(s[off + 1]) << 8));
}

std::uint32_t rd32(const std::string& s, std::size_t off) {
  return static_cast<std::uint32_t>(static_cast<std::uint8_t>(s[off])) |
         (static_cast<std::uint32_t>(static_cast<std::uint8_t>(s[off + 1])) << 8) |
         (static_cast<std::uint32_t>(static_cast<std::uint8_t>(s[off + 2])) << 16) |
         (static_cast<std::uint32_t>(static_cast<std::uint8_t>(s[off + 3])) << 24);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return data;
}

std::string inflate_raw(const char* src, std::size_t src_len, std::size_t out_len) {
  std::string out(out_len, '\0');
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) {
    throw std::runtime_error("zlib inflateInit failed");
  }
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(src));
  zs.avail_in = static_cast<uInt>(src_len);
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  const std::size_t written = zs.avail_out <= out.size() ? out.size() - zs.avail_out : 0;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END) {
    throw std::runtime_error("zip entry: deflate stream corrupt");
  }
  out.resize(written);
  return out;
}

}  // namespace

bool is_zip_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  char magic[4] = {};
  in.read(magic, 4);
  return in.gcount() == 4 && std::memcmp(magic, "PK\x03\x04", 4) == 0;
}

ZipReader::ZipReader(const std::string& path) : raw_(read_file(path)) {
  if (raw_.size() < 22) throw std::runtime_error(path + ": not a zip archive");

  // EOCD is within the last 64 KiB + 22 bytes (variable-length comment).
  const std::size_t scan_start =
      raw_.size() > 22 + 65535 ? raw_.size() - 22 - 65535 : 0;
  std::size_t eocd = std::string::npos;
  for (std::size_t i = raw_.size() - 22 + 1; i-- > scan_start;) {
    if (rd32(raw_, i) == kEocdSig) {
      eocd = i;
      break;
    }
  }
  if (eocd == std::string::npos) {
    throw std::runtime_error(path + ": zip end-of-central-directory not found");
  }

  const std::uint16_t count = rd16(raw_, eocd + 10);
  std::size_t off = rd32(raw_, eocd + 16);
  entries_.reserve(count);
  for (std::uint16_t i = 0; i < count; ++i) {
    if (off + 46 > raw_.size() || rd32(raw_, off) != kCentralSig) {
      throw std::runtime_error(path + ": zip central directory corrupt");
    }
    Entry e;
    e.method = rd16(raw_, off + 10);
    e.compressed_size = rd32(raw_, off + 20);
    e.uncompressed_size = rd32(raw_, off + 24);
    const std::uint16_t name_len = rd16(raw_, off + 28);
    const std::uint16_t extra_len = rd16(raw_, off + 30);
    const std::uint16_t comment_len = rd16(raw_, off + 32);
    e.local_header_offset = rd32(raw_, off + 42);
    e.name = raw_.substr(off + 46, name_len);
    entries_.push_back(std::move(e));
    off += 46u + name_len + extra_len + comment_len;
  }
}

std::vector<std::string> ZipReader::entry_names() const {
  std::vector<std::string> names;
  names.reserve(entries_.size());
  for (const auto& e : entries_) names.push_back(e.name);
  return names;
}

std::optional<std::string> ZipReader::read_entry(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return extract(e);
  }
  // Fall back to basename match for feeds zipped inside one top directory.
  for (const auto& e : entries_) {
    const auto slash = e.name.rfind('/');
    if (slash != std::string::npos && e.name.substr(slash + 1) == name) {
      return extract(e);
    }
  }
  return std::nullopt;
}

std::string ZipReader::extract(const Entry& e) const {
  std::size_t off = e.local_header_offset;
  if (off + 30 > raw_.size() || rd32(raw_, off) != kLocalSig) {
    throw std::runtime_error("zip local header corrupt for " + e.name);
  }
  const std::uint16_t name_len = rd16(raw_, off + 26);
  const std::uint16_t extra_len = rd16(raw_, off + 28);
  off += 30u + name_len + extra_len;
  if (off + e.compressed_size > raw_.size()) {
    throw std::runtime_error("zip entry truncated: " + e.name);
  }
  if (e.method == 0) {
    return raw_.substr(off, e.compressed_size);
  }
  if (e.method == 8) {
    return inflate_raw(raw_.data() + off, e.compressed_size, e.uncompressed_size);
  }
  throw std::runtime_error("zip entry " + e.name + ": unsupported compression method");
}

}  // namespace rtpos::detail
