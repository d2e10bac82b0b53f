#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rtpos::detail {

// Minimal read-only ZIP archive access: central-directory listing plus
// extraction of stored and deflate entries. No zip64, no encryption.
class ZipReader {
 public:
  // Throws std::runtime_error when the file is unreadable or not a zip.
  explicit ZipReader(const std::string& path);

  std::vector<std::string> entry_names() const;

  // Entry content by exact name, or by basename match when the archive nests
  // everything under a single directory. nullopt when absent.
  std::optional<std::string> read_entry(const std::string& name) const;

 private:
  struct Entry {
    std::string name;
    std::uint16_t method = 0;
    std::uint32_t compressed_size = 0;
    std::uint32_t uncompressed_size = 0;
    std::uint32_t local_header_offset = 0;
  };

  std::string extract(const Entry& e) const;

  std::string raw_;
  std::vector<Entry> entries_;
};

bool is_zip_file(const std::string& path);

}  // namespace rtpos::detail
