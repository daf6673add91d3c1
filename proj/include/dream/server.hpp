#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dream/logstore.hpp"
#include "dream/teleop_service.hpp"

namespace dream::service {

struct ServerOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8765;  // 0 picks an ephemeral port
  bool pacing = true;         // false: step as fast as possible
  SessionOptions session{};   // template for sessions created on demand
  std::optional<std::filesystem::path> ui_dir;
  std::size_t max_sessions = 64;

  /// When set the server hosts a single read-only replay of this log.
  std::optional<FlightLog> replay_log;
  double replay_speed = 1.0;
};

/// Socket front end for sessions.
///
/// One TCP port speaks three dialects, picked from the first bytes a client
/// sends: newline-delimited JSON, WebSocket (text frames carrying the same
/// JSON messages) and plain HTTP GET for the static UI bundle.
///
/// Each hosted session runs on its own thread and is reached only through
/// its inbox; connections only ever see serialized messages.
class TeleopServer {
 public:
  explicit TeleopServer(ServerOptions options);
  ~TeleopServer();
  TeleopServer(const TeleopServer&) = delete;
  TeleopServer& operator=(const TeleopServer&) = delete;

  /// Binds and starts accepting. Throws std::system_error when the port is taken.
  void start();
  /// Stops accepting, disconnects clients, joins session threads and
  /// closes recorded logs. Idempotent.
  void stop();

  std::uint16_t port() const;
  bool replay_finished() const;
  std::vector<std::filesystem::path> recorded_logs() const;
  std::size_t session_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dream::service
