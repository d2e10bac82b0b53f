#pragma once

#include <bit>
#include <cstdint>
#include <string_view>
#include <vector>

namespace rtpos::pbwire {

// Minimal protocol-buffers wire-format writer: varint, fixed32 and
// length-delimited fields, emitted in the order the caller makes the calls.

inline void put_varint(std::vector<std::uint8_t>& out, std::uint64_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<std::uint8_t>(v) | 0x80);
    v >>= 7;
  }
  out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_tag(std::vector<std::uint8_t>& out, std::uint32_t field,
                    std::uint32_t wire_type) {
  put_varint(out, (static_cast<std::uint64_t>(field) << 3) | wire_type);
}

inline void put_uint(std::vector<std::uint8_t>& out, std::uint32_t field,
                     std::uint64_t v) {
  put_tag(out, field, 0);
  put_varint(out, v);
}

inline void put_float(std::vector<std::uint8_t>& out, std::uint32_t field, float v) {
  put_tag(out, field, 5);
  const auto bits = std::bit_cast<std::uint32_t>(v);
  out.push_back(static_cast<std::uint8_t>(bits));
  out.push_back(static_cast<std::uint8_t>(bits >> 8));
  out.push_back(static_cast<std::uint8_t>(bits >> 16));
  out.push_back(static_cast<std::uint8_t>(bits >> 24));
}

inline void put_string(std::vector<std::uint8_t>& out, std::uint32_t field,
                       std::string_view s) {
  put_tag(out, field, 2);
  put_varint(out, s.size());
  out.insert(out.end(), s.begin(), s.end());
}

inline void put_message(std::vector<std::uint8_t>& out, std::uint32_t field,
                        const std::vector<std::uint8_t>& body) {
  put_tag(out, field, 2);
  put_varint(out, body.size());
  out.insert(out.end(), body.begin(), body.end());
}

}  // namespace rtpos::pbwire
