#include "dream/task_geometry.hpp"

#include <algorithm>
#include <cmath>

namespace dream {

void TaskGeometry::validate() const {
  const double sx = arrival.x - start.x;
  const double sy = arrival.y - start.y;
  const double len2 = sx * sx + sy * sy;
  if (!(len2 > 0)) throw ConfigError("geometry", "start and arrival must differ horizontally");
  // Horizontal distance from T to segment S-A.
  const double tx = target.x - start.x;
  const double ty = target.y - start.y;
  const double s = std::clamp((tx * sx + ty * sy) / len2, 0.0, 1.0);
  if (std::hypot(tx - s * sx, ty - s * sy) < 1e-9)
    throw ConfigError("geometry.target", "target lies on the start-arrival segment");
  if (!(window_half_width > 0)) throw ConfigError("geometry.window_half_width", "must be positive");
}

void StopParams::validate() const {
  if (!(speed > 0)) throw ConfigError("stop.speed", "must be positive");
  if (!(dwell > 0)) throw ConfigError("stop.dwell_s", "must be positive");
  if (!(radius > 0)) throw ConfigError("stop.radius", "must be positive");
}

Json to_json(const TaskGeometry& g) {
  return Json{{"start", vec3_json(g.start)},
              {"checkpoint", vec3_json(g.checkpoint)},
              {"arrival", vec3_json(g.arrival)},
              {"target", vec3_json(g.target)},
              {"window_half_width", g.window_half_width}};
}

TaskGeometry geometry_from_json(const Json& j, const std::string& path) {
  TaskGeometry g;
  g.start = read_vec3(j, "start", path);
  g.checkpoint = read_vec3(j, "checkpoint", path);
  g.arrival = read_vec3(j, "arrival", path);
  g.target = read_vec3(j, "target", path);
  read_number_opt(j, "window_half_width", path, g.window_half_width);
  g.validate();
  return g;
}

Json to_json(const StopParams& s) {
  return Json{{"speed", s.speed}, {"dwell_s", s.dwell}, {"radius", s.radius}};
}

StopParams stop_params_from_json(const Json& j, const std::string& path) {
  StopParams s;
  read_number_opt(j, "speed", path, s.speed);
  read_number_opt(j, "dwell_s", path, s.dwell);
  read_number_opt(j, "radius", path, s.radius);
  s.validate();
  return s;
}

}  // namespace dream
