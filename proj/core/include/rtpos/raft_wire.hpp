#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rtpos/raft.hpp"

namespace rtpos::raft_wire {

// Peer link framing: a 4-byte big-endian body length, then the body:
//   type(u8) | sender_len(u16) | sender | type-specific fields, integers
// big-endian. Log entries travel as (term u64, index u64, length u32, bytes).
// Message type codes:
inline constexpr std::uint8_t kVoteRequest = 1;
inline constexpr std::uint8_t kVoteResponse = 2;
inline constexpr std::uint8_t kAppendEntries = 3;
inline constexpr std::uint8_t kAppendResponse = 4;
inline constexpr std::uint8_t kForwardReport = 5;

struct WireMessage {
  std::string sender;
  raft::Message message;
};

// Encodes body only (no length prefix).
std::vector<std::uint8_t> encode_body(const std::string& sender,
                                      const raft::Message& message);

// Encodes the full frame: length prefix plus body.
std::vector<std::uint8_t> encode_frame(const std::string& sender,
                                       const raft::Message& message);

// Decodes one body (without the length prefix). nullopt on malformed input.
std::optional<WireMessage> decode_body(std::span<const std::uint8_t> body);

}  // namespace rtpos::raft_wire
