#pragma once

#include "dream/core_types.hpp"
#include "dream/json_fields.hpp"

namespace dream {

/// Navigation task: fly S -> C -> A (and back) with the nose on target T.
struct TaskGeometry {
  Vec3 start{0.0, -2.0, 1.0};
  Vec3 checkpoint{0.0, 0.0, 1.0};
  Vec3 arrival{0.0, 2.0, 1.0};
  Vec3 target{5.0, 0.0, 1.0};
  double window_half_width = 0.5;

  double altitude() const { return start.z; }

  /// Throws ConfigError when S == A or T lies on segment S-A.
  void validate() const;
};

/// Stop predicate: speed below `speed` for at least `dwell` within `radius`
/// of an endpoint.
struct StopParams {
  double speed = 0.05;  // m/s
  double dwell = 0.5;   // s
  double radius = 0.3;  // m

  void validate() const;
};

Json to_json(const TaskGeometry& g);
/// All four points are required; window_half_width is optional.
TaskGeometry geometry_from_json(const Json& j, const std::string& path = "geometry");

Json to_json(const StopParams& s);
StopParams stop_params_from_json(const Json& j, const std::string& path = "stop");

}  // namespace dream
