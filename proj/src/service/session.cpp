#include <cmath>
#include <ctime>

#include "dream/metaphor.hpp"
#include "dream/teleop_service.hpp"
#include "dream/version.hpp"

namespace dream::service {
namespace {

constexpr std::uint64_t kFlushEveryTicks = 50;

class MalformedMessage : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Json base_message(const std::string& session, const char* type) {
  return Json{{"v", kProtocolVersion}, {"type", type}, {"session", session}};
}

std::string file_safe(const std::string& id) {
  std::string out = id;
  for (char& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
    if (!ok) c = '_';
  }
  return out;
}

double number_field(const Json& msg, const char* key) {
  auto it = msg.find(key);
  if (it == msg.end() || !it->is_number()) throw MalformedMessage(std::string("'") + key + "' must be a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw MalformedMessage(std::string("'") + key + "' must be finite");
  return v;
}

/// Shared envelope checks. Returns an error reply, or nullopt when the
/// message may be dispatched.
std::optional<Json> check_envelope(const Json& msg, const std::string& session_id) {
  if (!msg.is_object()) return make_error(session_id, "malformed", "message must be a JSON object");
  auto v = msg.find("v");
  if (v == msg.end() || !v->is_number_integer() || v->get<int>() != kProtocolVersion)
    return make_error(session_id, "version_mismatch",
                      "unsupported protocol version (server speaks v" + std::to_string(kProtocolVersion) + ")");
  auto type = msg.find("type");
  if (type == msg.end() || !type->is_string()) return make_error(session_id, "malformed", "missing message type");
  auto session = msg.find("session");
  if (session == msg.end() || !session->is_string() || session->get<std::string>() != session_id)
    return make_error(session_id, "session_mismatch", "message is not addressed to this session");
  auto seq = msg.find("seq");
  if (seq == msg.end() || !seq->is_number_integer())
    return make_error(session_id, "malformed", "missing integer sequence number");
  return std::nullopt;
}

}  // namespace

Json make_error(const std::string& session, const std::string& code, const std::string& message) {
  Json j = base_message(session, "error");
  j["error"] = code;
  j["message"] = message;
  return j;
}

Json make_event(const std::string& session, const std::string& event, double t, Json payload) {
  Json j = base_message(session, "event");
  j["event"] = event;
  j["t"] = t;
  j["payload"] = std::move(payload);
  return j;
}

std::string utc_now_iso8601() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Session::Session(std::string id, SessionOptions options) : id_(std::move(id)), options_(std::move(options)) {
  if (!(options_.broadcast_hz > 0)) throw std::invalid_argument("broadcast_hz must be positive");
  world_ = std::make_unique<World>(options_.world, options_.seed);
  open_log();
}

Session::~Session() { close(); }

void Session::open_log() {
  if (!options_.record_dir) return;
  std::filesystem::create_directories(*options_.record_dir);
  const auto path = *options_.record_dir /
                    (file_safe(id_) + "-" + std::to_string(log_paths_.size() + 1) + ".dreamlog");
  ScenarioConfig cfg;
  cfg.world = options_.world;
  cfg.seed = options_.seed;
  if (options_.wall_clock) cfg.start_wall_time = options_.wall_clock();
  LogHeader header;
  header.manifest = Json{{"generator", "serve"},  {"code_version", kVersion}, {"session", id_},
                         {"seed", options_.seed}, {"config", to_json(cfg)}};
  header.geometry = options_.world.geometry;
  header.start_wall_time = cfg.start_wall_time;
  log_ = std::make_unique<LogWriter>(path, header);
  log_->append(world_->sample());
  log_->flush();
  log_paths_.push_back(path);
}

std::optional<std::filesystem::path> Session::log_path() const {
  if (log_paths_.empty()) return std::nullopt;
  return log_paths_.back();
}

void Session::flush() {
  if (log_) log_->flush();
}

void Session::close() {
  if (log_) {
    log_->close();
    log_.reset();
  }
}

void Session::reset() {
  close();
  world_ = std::make_unique<World>(options_.world, options_.seed);
  pending_ = {};
  running_ = true;
  open_log();
}

std::vector<Json> Session::handle_message(const Json& msg, ClientId client) {
  if (auto err = check_envelope(msg, id_)) return {*err};
  const std::string type = msg["type"].get<std::string>();
  const std::int64_t seq = msg["seq"].get<std::int64_t>();
  auto last = last_seq_.find(client);
  if (last != last_seq_.end() && seq <= last->second) {
    return {make_event(id_, "warning", world_->time(),
                       Json{{"code", "stale_sequence"}, {"seq", seq}, {"last_seq", last->second}})};
  }
  last_seq_[client] = seq;

  try {
    if (type == "hello") {
      Json w = base_message(id_, "welcome");
      w["protocol"] = kProtocolVersion;
      w["mode"] = std::string(to_string(mode()));
      w["read_only"] = false;
      w["dt"] = options_.world.dt;
      w["broadcast_hz"] = options_.broadcast_hz;
      w["server_version"] = kVersion;
      return {w, snapshot()};
    }
    if (type == "hand_pose") {
      auto pose = msg.find("pose");
      if (pose == msg.end() || !pose->is_object()) throw MalformedMessage("'pose' must be an object");
      const Pose hand(number_field(*pose, "x"), number_field(*pose, "y"), number_field(*pose, "z"),
                      number_field(*pose, "yaw"));
      auto pressed = msg.find("take_pressed");
      if (pressed == msg.end() || !pressed->is_boolean()) throw MalformedMessage("'take_pressed' must be a boolean");
      if (mode() != ControlMode::Dream) return {make_error(id_, "wrong_mode", "hand_pose requires dream mode")};
      pending_.hand = HandInput{hand, pressed->get<bool>()};
      return {};
    }
    if (type == "sticks") {
      auto left = msg.find("left");
      if (left == msg.end() || !left->is_array() || left->size() != 2 || !(*left)[0].is_number() ||
          !(*left)[1].is_number())
        throw MalformedMessage("'left' must be [u, v]");
      const StickInput raw{(*left)[0].get<double>(), (*left)[1].get<double>(), number_field(msg, "right")};
      if (mode() != ControlMode::Joystick) return {make_error(id_, "wrong_mode", "sticks require joystick mode")};
      bool clamped = false;
      pending_.sticks = clamp_sticks(raw, &clamped);
      if (clamped)
        return {make_event(id_, "warning", world_->time(),
                           Json{{"code", "stick_clamped"}, {"message", "stick values clamped to [-1, 1]"}})};
      return {};
    }
    if (type == "control") return {handle_control(msg)};
  } catch (const MalformedMessage& e) {
    return {make_error(id_, "malformed", e.what())};
  } catch (const std::exception& e) {
    return {make_error(id_, "malformed", e.what())};
  }
  Json err = make_error(id_, "unknown_type", "unknown message type '" + type + "'");
  err["tag"] = type;
  return {err};
}

Json Session::handle_control(const Json& msg) {
  auto cmd = msg.find("command");
  if (cmd == msg.end() || !cmd->is_string()) throw MalformedMessage("'command' must be a string");
  const std::string c = cmd->get<std::string>();
  if (c == "start") {
    running_ = true;
  } else if (c == "stop") {
    running_ = false;
  } else if (c == "reset") {
    reset();
  } else if (c == "mode") {
    auto m = msg.find("mode");
    if (m == msg.end() || !m->is_string()) throw MalformedMessage("'mode' must be a string");
    try {
      options_.world.mode = parse_mode(m->get<std::string>());
    } catch (const ConfigError& e) {
      throw MalformedMessage(e.what());
    }
    reset();
  } else {
    throw MalformedMessage("unknown control command '" + c + "'");
  }
  return make_event(id_, "control", world_->time(),
                    Json{{"command", c}, {"mode", std::string(to_string(mode()))}, {"running", running_}});
}

std::vector<Json> Session::step() {
  std::vector<Json> out;
  const double now = static_cast<double>(steps_) * options_.world.dt;
  ++steps_;
  if (running_) {
    TickOutcome outcome = world_->tick(pending_);
    pending_ = {};
    for (const LogEvent& e : outcome.events) {
      out.push_back(make_event(id_, std::string(to_string(e.kind)), e.t, e.payload));
      if (log_) log_->append(e);
    }
    if (log_) {
      log_->append(world_->sample());
      if (world_->tick_count() % kFlushEveryTicks == 0) log_->flush();
    }
  }
  if (now >= next_broadcast_ - 1e-9) {
    out.push_back(snapshot());
    next_broadcast_ += 1.0 / options_.broadcast_hz;
  }
  return out;
}

double Session::next_due() const { return static_cast<double>(steps_) * options_.world.dt; }

Json Session::snapshot() const {
  Json j = base_message(id_, "snapshot");
  j["mode"] = std::string(to_string(mode()));
  j["tick"] = steps_;
  j["t"] = world_->time();
  j["running"] = running_;
  j["read_only"] = false;
  j["vuav"] = pose_json(world_->vuav_pose());
  j["phantom"] = pose_json(world_->phantom().pose);
  j["staleness"] = world_->phantom().staleness;
  j["visual"] = std::string(to_string(world_->visual()));
  j["speed_intensity"] = world_->speed_intensity();
  return j;
}

ReplaySession::ReplaySession(std::string id, FlightLog log, double speed)
    : id_(std::move(id)), log_(std::move(log)), speed_(speed) {
  if (!(speed_ > 0) || !std::isfinite(speed_)) throw std::invalid_argument("replay speed must be positive");
  const Json& m = log_.header.manifest;
  if (m.contains("config") && m["config"].contains("limits")) {
    const Json& l = m["config"]["limits"];
    if (l.contains("max_horizontal_speed") && l["max_horizontal_speed"].is_number())
      max_speed_ = l["max_horizontal_speed"].get<double>();
  }
  if (!(max_speed_ > 0)) max_speed_ = 1.0;
}

std::vector<Json> ReplaySession::handle_message(const Json& msg, ClientId) {
  if (auto err = check_envelope(msg, id_)) return {*err};
  const std::string type = msg["type"].get<std::string>();
  if (type == "hello") {
    Json w = base_message(id_, "welcome");
    w["protocol"] = kProtocolVersion;
    const Json& m = log_.header.manifest;
    w["mode"] = m.contains("config") && m["config"].contains("mode") ? m["config"]["mode"] : Json("dream");
    w["read_only"] = true;
    w["server_version"] = kVersion;
    return {w};
  }
  if (type == "hand_pose" || type == "sticks" || type == "control")
    return {make_error(id_, "read_only", "replay sessions do not accept input")};
  Json err = make_error(id_, "unknown_type", "unknown message type '" + type + "'");
  err["tag"] = type;
  return {err};
}

std::vector<Json> ReplaySession::step() {
  std::vector<Json> out;
  if (finished()) return out;
  const LogSample& s = log_.samples[next_];
  const Pose pose(s.x, s.y, s.z, s.yaw);
  Json j = base_message(id_, "snapshot");
  const Json& m = log_.header.manifest;
  j["mode"] = m.contains("config") && m["config"].contains("mode") ? m["config"]["mode"] : Json("dream");
  j["tick"] = next_;
  j["t"] = s.t;
  j["running"] = true;
  j["read_only"] = true;
  j["vuav"] = pose_json(pose);
  j["phantom"] = pose_json(pose);
  j["staleness"] = 0.0;
  j["visual"] = std::string(to_string(VisualState::CannotBeTaken));
  j["speed_intensity"] = speed_feedback(std::hypot(s.vx, s.vy), max_speed_);
  out.push_back(std::move(j));
  ++next_;
  if (finished()) out.push_back(make_event(id_, "replay_finished", s.t, Json{{"frames", next_}}));
  return out;
}

double ReplaySession::next_due() const {
  if (log_.samples.empty()) return 0.0;
  const std::size_t i = std::min(next_, log_.samples.size() - 1);
  return (log_.samples[i].t - log_.samples.front().t) / speed_;
}

}  // namespace dream::service
