#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "dream/core_types.hpp"

namespace dream {

struct ChannelConfig {
  double latency = 0.06;  // s
  double jitter = 0.0;    // half-width of the uniform jitter, s
  double drop = 0.0;      // probability in [0, 1)

  void validate() const;
};

/// Uniform double in [0, 1) from the top 53 bits; independent of the
/// standard library's distribution implementations so replays match.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename Payload>
struct Delivered {
  double sent_at = 0.0;
  double deliver_at = 0.0;
  Payload payload;
};

struct ChannelCounters {
  std::uint64_t sent = 0;
  std::uint64_t dropped = 0;
  std::uint64_t delivered = 0;

  std::uint64_t in_flight() const { return sent - dropped - delivered; }
};

/// Unidirectional simulated link with base latency, uniform jitter and
/// Bernoulli drop. Delivery is in send order: a jittered deliver time is
/// never allowed to precede the previous message's.
template <typename Payload>
class Channel {
 public:
  /// Tolerance for comparing deliver times against a tick clock built from
  /// k * dt.
  static constexpr double kClockEpsilon = 1e-9;

  Channel() : Channel(ChannelConfig{}, 0) {}
  Channel(ChannelConfig cfg, std::uint64_t seed) : config_(cfg), rng_(seed) { config_.validate(); }

  const ChannelConfig& config() const { return config_; }
  const ChannelCounters& counters() const { return counters_; }

  /// While disconnected every send is counted as dropped (link blackout).
  void set_connected(bool connected) { connected_ = connected; }
  bool connected() const { return connected_; }

  /// Returns false when the message was dropped.
  bool send(Payload msg, double now) {
    if (!std::isfinite(now) || now < last_send_) throw std::domain_error("channel send: clock went backwards");
    last_send_ = now;
    ++counters_.sent;
    // Both draws happen regardless of outcome so the RNG stream does not
    // depend on earlier drop decisions.
    const double drop_draw = unit_uniform(rng_);
    const double jitter_draw = unit_uniform(rng_);
    if (!connected_ || drop_draw < config_.drop) {
      ++counters_.dropped;
      return false;
    }
    double at = now + config_.latency + config_.jitter * (2.0 * jitter_draw - 1.0);
    at = std::max({at, now, last_deliver_at_});
    last_deliver_at_ = at;
    queue_.push_back({now, at, std::move(msg)});
    return true;
  }

  std::vector<Delivered<Payload>> poll(double now) {
    if (!std::isfinite(now) || now < last_poll_) throw std::domain_error("channel poll: clock went backwards");
    last_poll_ = now;
    std::vector<Delivered<Payload>> out;
    while (!queue_.empty() && queue_.front().deliver_at <= now + kClockEpsilon) {
      out.push_back(std::move(queue_.front()));
      queue_.pop_front();
    }
    counters_.delivered += out.size();
    return out;
  }

  std::size_t in_flight() const { return queue_.size(); }

 private:
  ChannelConfig config_;
  std::mt19937_64 rng_;
  std::deque<Delivered<Payload>> queue_;
  ChannelCounters counters_;
  double last_send_ = -std::numeric_limits<double>::infinity();
  double last_poll_ = -std::numeric_limits<double>::infinity();
  double last_deliver_at_ = -std::numeric_limits<double>::infinity();
  bool connected_ = true;
};

/// Feedback sample sent by the real UAV.
struct PoseFeedback {
  double stamp = 0.0;  // time the UAV occupied `pose`
  Pose pose;
  double speed = 0.0;  // horizontal, m/s
};

/// Last known real-UAV pose as seen from the control room.
struct PhantomState {
  Pose pose;
  double stamp = 0.0;
  double speed = 0.0;
  double staleness = 0.0;

  static PhantomState at(const Pose& pose, double now);
};

PhantomState update_phantom(const PhantomState& ph, const std::vector<Delivered<PoseFeedback>>& delivered,
                            double now);

}  // namespace dream
