#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace dream::service::ws {

/// Sec-WebSocket-Accept value for a client key.
std::string accept_key(std::string_view client_key);

enum class Opcode : std::uint8_t { Continuation = 0x0, Text = 0x1, Binary = 0x2, Close = 0x8, Ping = 0x9, Pong = 0xA };

struct Frame {
  bool fin = true;
  Opcode opcode = Opcode::Text;
  std::string payload;
};

/// Removes one complete frame from the front of `buffer`; nullopt when more
/// bytes are needed. Throws std::runtime_error on protocol violations.
std::optional<Frame> parse_frame(std::string& buffer, std::size_t max_payload = 1 << 20);

/// Unmasked server-to-client frame.
std::string encode_frame(Opcode op, std::string_view payload);

}  // namespace dream::service::ws
