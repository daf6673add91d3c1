#include "dream/netlink.hpp"

namespace dream {

void ChannelConfig::validate() const {
  if (!(latency >= 0) || !std::isfinite(latency)) throw std::invalid_argument("channel latency must be >= 0");
  if (!(jitter >= 0) || !std::isfinite(jitter)) throw std::invalid_argument("channel jitter must be >= 0");
  if (!(drop >= 0 && drop < 1)) throw std::invalid_argument("channel drop must be in [0, 1)");
}

PhantomState PhantomState::at(const Pose& pose, double now) {
  return {pose, now, 0.0, 0.0};
}

PhantomState update_phantom(const PhantomState& ph, const std::vector<Delivered<PoseFeedback>>& delivered,
                            double now) {
  PhantomState next = ph;
  for (const auto& d : delivered) {
    if (d.payload.stamp >= next.stamp) {
      next.pose = d.payload.pose;
      next.stamp = d.payload.stamp;
      next.speed = d.payload.speed;
    }
  }
  next.staleness = now - next.stamp;
  return next;
}

}  // namespace dream
