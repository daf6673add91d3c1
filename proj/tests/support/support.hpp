#pragma once

// Test helpers: synthetic logs, brute-force metric oracles, temp dirs and a
// minimal NDJSON socket client.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "dream/logstore.hpp"
#include "dream/task_geometry.hpp"

namespace testsupport {

using dream::FlightLog;
using dream::Json;
using dream::LogSample;
using dream::StopParams;
using dream::TaskGeometry;
using dream::Vec3;

/// Builds a kinematically consistent sample stream at a fixed dt.
class Trajectory {
 public:
  explicit Trajectory(Vec3 start, double yaw = 0.0, double dt = 0.01) : p_(start), yaw_(yaw), dt_(dt) {
    push(0.0, 0.0, 0.0);
  }

  /// Holds position for `duration` seconds.
  Trajectory& rest(double duration) {
    const int n = static_cast<int>(std::lround(duration / dt_));
    for (int i = 0; i < n; ++i) {
      ++k_;
      push(0.0, 0.0, 0.0);
    }
    return *this;
  }

  /// Constant-velocity straight leg to `to` over `duration` seconds. The
  /// optional lateral wobble displaces samples perpendicular to the leg.
  Trajectory& move_to(Vec3 to, double duration, double wobble = 0.0, double yaw_wobble = 0.0) {
    const int n = static_cast<int>(std::lround(duration / dt_));
    const Vec3 from = p_;
    const double dx = to.x - from.x, dy = to.y - from.y;
    const double len = std::hypot(dx, dy);
    const double nx = len > 0 ? -dy / len : 0.0, ny = len > 0 ? dx / len : 0.0;
    for (int i = 1; i <= n; ++i) {
      const double s = static_cast<double>(i) / n;
      const double w = wobble * std::sin(dream::kPi * s);
      p_ = {from.x + s * dx + w * nx, from.y + s * dy + w * ny, from.z + s * (to.z - from.z)};
      yaw_ = dream::wrap_angle(base_yaw_ + yaw_wobble * std::sin(2 * dream::kPi * s));
      ++k_;
      // The sample that reaches `to` is already stopped.
      if (i == n)
        push(0.0, 0.0, 0.0);
      else
        push(dx / duration, dy / duration, (to.z - from.z) / duration);
    }
    p_ = to;
    return *this;
  }

  Trajectory& face(double yaw) {
    base_yaw_ = yaw;
    yaw_ = dream::wrap_angle(yaw);
    return *this;
  }

  const std::vector<LogSample>& samples() const { return samples_; }

  FlightLog log(const TaskGeometry& g = {}) const {
    FlightLog l;
    l.header.geometry = g;
    l.samples = samples_;
    return l;
  }

 private:
  void push(double vx, double vy, double vz) {
    LogSample s;
    s.t = static_cast<double>(k_) * dt_;
    s.x = p_.x;
    s.y = p_.y;
    s.z = p_.z;
    s.yaw = yaw_;
    s.vx = vx;
    s.vy = vy;
    s.vz = vz;
    s.thrust = {0.5, 0.5, 0.5, 0.5};
    samples_.push_back(s);
  }

  Vec3 p_;
  double yaw_;
  double base_yaw_ = 0.0;
  double dt_;
  long k_ = 0;
  std::vector<LogSample> samples_;
};

// ---- brute-force oracles ----

/// Distance from p to the line S-A through the foot of the perpendicular.
inline double oracle_lateral(const Vec3& p, const Vec3& s, const Vec3& a) {
  const double dx = a.x - s.x, dy = a.y - s.y;
  const double u = ((p.x - s.x) * dx + (p.y - s.y) * dy) / (dx * dx + dy * dy);
  const double fx = s.x + u * dx, fy = s.y + u * dy;
  return std::sqrt((p.x - fx) * (p.x - fx) + (p.y - fy) * (p.y - fy));
}

inline double oracle_yaw_error(const Vec3& p, double yaw, const Vec3& t) {
  const double ref = std::atan2(t.y - p.y, t.x - p.x);
  const double d = yaw - ref;
  return std::fabs(std::atan2(std::sin(d), std::cos(d)));
}

struct OracleJourney {
  std::size_t from;  // index of the departure sample
  std::size_t to;    // index of the arrival sample
  int direction;     // +1 S->A, -1 A->S
};

/// Straight scan: label every sample, collect maximal same-label stretches,
/// keep those lasting at least one dwell, pair neighbours with different labels.
inline std::vector<OracleJourney> oracle_segment(const std::vector<LogSample>& s, const TaskGeometry& g,
                                                 const StopParams& stop) {
  std::vector<int> label(s.size(), 0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double speed = std::sqrt(s[i].vx * s[i].vx + s[i].vy * s[i].vy + s[i].vz * s[i].vz);
    if (speed >= stop.speed) continue;
    const double ds = std::sqrt((s[i].x - g.start.x) * (s[i].x - g.start.x) + (s[i].y - g.start.y) * (s[i].y - g.start.y));
    const double da =
        std::sqrt((s[i].x - g.arrival.x) * (s[i].x - g.arrival.x) + (s[i].y - g.arrival.y) * (s[i].y - g.arrival.y));
    if (ds <= stop.radius && ds <= da)
      label[i] = 1;
    else if (da <= stop.radius)
      label[i] = 2;
  }
  struct Run {
    int label;
    std::size_t a, b;
  };
  std::vector<Run> runs;
  std::size_t i = 0;
  while (i < s.size()) {
    if (label[i] == 0) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < s.size() && label[j + 1] == label[i]) ++j;
    if (s[j].t - s[i].t >= stop.dwell - 1e-9) runs.push_back({label[i], i, j});
    i = j + 1;
  }
  std::vector<OracleJourney> out;
  for (std::size_t k = 1; k < runs.size(); ++k)
    if (runs[k].label != runs[k - 1].label)
      out.push_back({runs[k - 1].b, runs[k].a, runs[k - 1].label == 1 ? +1 : -1});
  return out;
}

struct OracleMetrics {
  double mle = 0, mye = 0, mct = 0;
  std::size_t n = 0;
};

/// Per-journey means, then the unweighted mean over journeys.
inline OracleMetrics oracle_metrics(const std::vector<LogSample>& s, const TaskGeometry& g, const StopParams& stop) {
  OracleMetrics m;
  const auto js = oracle_segment(s, g, stop);
  for (const auto& j : js) {
    double lat = 0, yaw = 0;
    for (std::size_t i = j.from; i <= j.to; ++i) {
      const Vec3 p{s[i].x, s[i].y, s[i].z};
      lat += oracle_lateral(p, g.start, g.arrival);
      yaw += oracle_yaw_error(p, s[i].yaw, g.target);
    }
    const double n = static_cast<double>(j.to - j.from + 1);
    m.mle += lat / n;
    m.mye += yaw / n;
    m.mct += s[j.to].t - s[j.from].t;
  }
  m.n = js.size();
  if (m.n) {
    m.mle /= static_cast<double>(m.n);
    m.mye /= static_cast<double>(m.n);
    m.mct /= static_cast<double>(m.n);
  }
  return m;
}

/// Random shuttle log on the default-like geometry: rests, wobbly legs,
/// random yaw offsets.
inline FlightLog random_shuttle_log(std::mt19937_64& rng, const TaskGeometry& g = {}) {
  std::uniform_real_distribution<double> rest(0.6, 2.0), leg(2.5, 6.0), wob(-0.3, 0.3), yw(-0.6, 0.6),
      jit(-0.1, 0.1);
  std::uniform_int_distribution<int> legs(1, 5);
  Trajectory tr(g.start, 0.0);
  tr.face(std::atan2(g.target.y - g.start.y, g.target.x - g.start.x) + yw(rng));
  tr.rest(rest(rng));
  const int n = legs(rng);
  for (int k = 0; k < n; ++k) {
    const Vec3& to = (k % 2 == 0) ? g.arrival : g.start;
    const Vec3 end{to.x + jit(rng), to.y + jit(rng), to.z};
    tr.move_to(end, leg(rng), wob(rng), yw(rng));
    tr.face(std::atan2(g.target.y - end.y, g.target.x - end.x) + yw(rng)).rest(rest(rng));
  }
  FlightLog log = tr.log(g);
  log.header.manifest = Json{{"generator", "test"}};
  return log;
}

// ---- filesystem ----

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("dream-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// ---- sockets ----

/// Blocking NDJSON client with receive timeouts.
class LineClient {
 public:
  explicit LineClient(std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      ::close(fd_);
      throw std::runtime_error("connect failed");
    }
  }
  ~LineClient() { close(); }

  void close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

  void send_raw(const std::string& bytes) {
    std::size_t off = 0;
    while (off < bytes.size()) {
      const ssize_t n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
      if (n <= 0) throw std::runtime_error("send failed");
      off += static_cast<std::size_t>(n);
    }
  }

  void send(Json msg) { send_raw(msg.dump() + "\n"); }

  /// Client envelope with an incrementing sequence number.
  void send_msg(const std::string& type, Json body = Json::object()) {
    body["v"] = 1;
    body["type"] = type;
    body["session"] = session;
    body["seq"] = ++seq;
    send(std::move(body));
  }

  /// Raw bytes until the peer closes or the timeout elapses.
  std::string read_all(double timeout_s = 2.0) {
    std::string out = buffer_;
    buffer_.clear();
    const auto end = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
    char chunk[4096];
    while (std::chrono::steady_clock::now() < end) {
      pollfd p{fd_, POLLIN, 0};
      if (::poll(&p, 1, 50) <= 0) continue;
      const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n <= 0) break;
      out.append(chunk, static_cast<std::size_t>(n));
    }
    return out;
  }

  std::optional<std::string> read_line(double timeout_s = 2.0) {
    const auto end = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
    char chunk[4096];
    while (true) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(end - std::chrono::steady_clock::now());
      if (left.count() <= 0) return std::nullopt;
      pollfd p{fd_, POLLIN, 0};
      if (::poll(&p, 1, static_cast<int>(left.count())) <= 0) continue;
      const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n <= 0) {
        closed = true;
        return std::nullopt;
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  std::optional<Json> read_json(double timeout_s = 2.0) {
    auto line = read_line(timeout_s);
    if (!line) return std::nullopt;
    return Json::parse(*line);
  }

  /// Next message of the given type, skipping others.
  std::optional<Json> wait_for(const std::string& type, double timeout_s = 2.0) {
    const auto end = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
    while (true) {
      const double left = std::chrono::duration<double>(end - std::chrono::steady_clock::now()).count();
      if (left <= 0) return std::nullopt;
      auto m = read_json(left);
      if (!m) return std::nullopt;
      if ((*m)["type"] == type) return m;
    }
  }

  std::string session;
  std::int64_t seq = 0;
  bool closed = false;

 private:
  int fd_ = -1;
  std::string buffer_;
};

}  // namespace testsupport
