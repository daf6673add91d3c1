#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dream/config.hpp"
#include "dream/json_fields.hpp"
#include "dream/logstore.hpp"
#include "dream/world.hpp"

namespace dream::service {

inline constexpr int kProtocolVersion = 1;

using ClientId = std::uint64_t;

/// Wire helpers. Every server message carries "v", "type" and "session";
/// the connection layer stamps "seq".
Json make_error(const std::string& session, const std::string& code, const std::string& message);
Json make_event(const std::string& session, const std::string& event, double t, Json payload = Json::object());

/// Something a runner can host: a live session or a replay.
class Hosted {
 public:
  virtual ~Hosted() = default;
  virtual const std::string& id() const = 0;
  /// Replies go to the sender only.
  virtual std::vector<Json> handle_message(const Json& msg, ClientId client) = 0;
  /// One scheduling step; returns messages for every subscriber.
  virtual std::vector<Json> step() = 0;
  /// Seconds after runner start at which the next step is due.
  virtual double next_due() const = 0;
  virtual bool finished() const { return false; }
  /// Replays wait for their first subscriber before starting the clock.
  virtual bool starts_on_subscribe() const { return false; }
  virtual void flush() {}
  virtual void close() {}
};

struct SessionOptions {
  WorldConfig world{};
  std::uint64_t seed = 0;
  double broadcast_hz = 30.0;
  std::optional<std::filesystem::path> record_dir;
  /// ISO-8601 wall time for log headers; fixed when unset.
  std::function<std::string()> wall_clock;
};

/// Live teleoperation session.
///
/// Inputs land in a last-writer-wins slot consumed by the next tick; the
/// world keeps the previous input when nothing new arrived. Snapshots are
/// decimated from the tick rate to `broadcast_hz` and only ever carry the
/// phantom, never the true UAV pose.
class Session final : public Hosted {
 public:
  Session(std::string id, SessionOptions options);
  ~Session() override;

  const std::string& id() const override { return id_; }
  std::vector<Json> handle_message(const Json& msg, ClientId client) override;
  std::vector<Json> step() override;
  double next_due() const override;
  void flush() override;
  void close() override;

  Json snapshot() const;

  bool running() const { return running_; }
  std::uint64_t steps() const { return steps_; }
  const World& world() const { return *world_; }
  /// Fault injection (e.g. link blackouts) from the hosting thread.
  World& world() { return *world_; }
  ControlMode mode() const { return options_.world.mode; }
  std::optional<std::filesystem::path> log_path() const;
  const std::vector<std::filesystem::path>& log_paths() const { return log_paths_; }

  void reset();

 private:
  Json handle_control(const Json& msg);
  void open_log();

  std::string id_;
  SessionOptions options_;
  std::unique_ptr<World> world_;
  OperatorInput pending_;
  std::map<ClientId, std::int64_t> last_seq_;
  bool running_ = true;
  std::uint64_t steps_ = 0;
  double next_broadcast_ = 0.0;
  std::unique_ptr<LogWriter> log_;
  std::vector<std::filesystem::path> log_paths_;
};

/// Read-only playback of a recorded log over the session protocol.
class ReplaySession final : public Hosted {
 public:
  ReplaySession(std::string id, FlightLog log, double speed);

  const std::string& id() const override { return id_; }
  std::vector<Json> handle_message(const Json& msg, ClientId client) override;
  std::vector<Json> step() override;
  double next_due() const override;
  bool finished() const override { return next_ >= log_.samples.size(); }
  bool starts_on_subscribe() const override { return true; }

  std::size_t frames_sent() const { return next_; }

 private:
  std::string id_;
  FlightLog log_;
  double speed_;
  double max_speed_ = 1.0;
  std::size_t next_ = 0;
};

std::string utc_now_iso8601();

}  // namespace dream::service
