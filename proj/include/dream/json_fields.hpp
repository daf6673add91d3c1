#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "dream/core_types.hpp"

namespace dream {

using Json = nlohmann::ordered_json;

/// Configuration problem located at a dotted field path ("geometry.target").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

inline std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

inline const Json& require_field(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(join_path(path, key), "missing required field");
  return *it;
}

inline double as_number(const Json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(path, "expected a finite number");
  return d;
}

inline double read_number(const Json& obj, const std::string& key, const std::string& path) {
  return as_number(require_field(obj, key, path), join_path(path, key));
}

/// Reads obj[key] into `out` if present; keeps the default otherwise.
inline void read_number_opt(const Json& obj, const std::string& key, const std::string& path, double& out) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  if (auto it = obj.find(key); it != obj.end()) out = as_number(*it, join_path(path, key));
}

inline Vec3 as_vec3(const Json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 3) throw ConfigError(path, "expected an array of 3 numbers");
  return {as_number(v[0], path + "[0]"), as_number(v[1], path + "[1]"), as_number(v[2], path + "[2]")};
}

inline Vec3 read_vec3(const Json& obj, const std::string& key, const std::string& path) {
  return as_vec3(require_field(obj, key, path), join_path(path, key));
}

inline Json vec3_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

inline Json pose_json(const Pose& p) {
  return Json{{"x", p.x()}, {"y", p.y()}, {"z", p.z()}, {"yaw", p.yaw()}};
}

inline Pose pose_from_json(const Json& j, const std::string& path) {
  return Pose(read_number(j, "x", path), read_number(j, "y", path), read_number(j, "z", path),
              read_number(j, "yaw", path));
}

}  // namespace dream
