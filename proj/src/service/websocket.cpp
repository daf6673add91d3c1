#include "websocket.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <stdexcept>

namespace dream::service::ws {

std::string accept_key(std::string_view client_key) {
  static constexpr std::string_view kGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
  std::string input(client_key);
  input += kGuid;
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(input.data()), input.size(), digest);
  unsigned char encoded[4 * ((SHA_DIGEST_LENGTH + 2) / 3) + 1];
  const int n = EVP_EncodeBlock(encoded, digest, SHA_DIGEST_LENGTH);
  return std::string(reinterpret_cast<char*>(encoded), static_cast<std::size_t>(n));
}

std::optional<Frame> parse_frame(std::string& buffer, std::size_t max_payload) {
  if (buffer.size() < 2) return std::nullopt;
  const auto b0 = static_cast<unsigned char>(buffer[0]);
  const auto b1 = static_cast<unsigned char>(buffer[1]);
  if (b0 & 0x70) throw std::runtime_error("websocket: reserved bits set");
  const bool masked = b1 & 0x80;
  if (!masked) throw std::runtime_error("websocket: client frames must be masked");
  std::uint64_t len = b1 & 0x7F;
  std::size_t pos = 2;
  if (len == 126) {
    if (buffer.size() < 4) return std::nullopt;
    len = (static_cast<std::uint64_t>(static_cast<unsigned char>(buffer[2])) << 8) |
          static_cast<unsigned char>(buffer[3]);
    pos = 4;
  } else if (len == 127) {
    if (buffer.size() < 10) return std::nullopt;
    len = 0;
    for (int i = 0; i < 8; ++i) len = (len << 8) | static_cast<unsigned char>(buffer[2 + i]);
    pos = 10;
  }
  if (len > max_payload) throw std::runtime_error("websocket: frame too large");
  if (buffer.size() < pos + 4 + len) return std::nullopt;
  const unsigned char* mask = reinterpret_cast<const unsigned char*>(buffer.data() + pos);
  pos += 4;
  Frame f;
  f.fin = b0 & 0x80;
  f.opcode = static_cast<Opcode>(b0 & 0x0F);
  f.payload.resize(len);
  for (std::uint64_t i = 0; i < len; ++i)
    f.payload[i] = static_cast<char>(static_cast<unsigned char>(buffer[pos + i]) ^ mask[i % 4]);
  buffer.erase(0, pos + len);
  return f;
}

std::string encode_frame(Opcode op, std::string_view payload) {
  std::string out;
  out.push_back(static_cast<char>(0x80 | static_cast<std::uint8_t>(op)));
  const std::size_t len = payload.size();
  if (len < 126) {
    out.push_back(static_cast<char>(len));
  } else if (len <= 0xFFFF) {
    out.push_back(static_cast<char>(126));
    out.push_back(static_cast<char>((len >> 8) & 0xFF));
    out.push_back(static_cast<char>(len & 0xFF));
  } else {
    out.push_back(static_cast<char>(127));
    for (int i = 7; i >= 0; --i) out.push_back(static_cast<char>((static_cast<std::uint64_t>(len) >> (8 * i)) & 0xFF));
  }
  out.append(payload);
  return out;
}

}  // namespace dream::service::ws
