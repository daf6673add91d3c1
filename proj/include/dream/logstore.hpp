#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "dream/json_fields.hpp"
#include "dream/task_geometry.hpp"

namespace dream {

inline constexpr int kLogSchemaVersion = 1;
inline constexpr const char* kLogSchemaName = "dreamlog";

struct LogSample {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double yaw = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double vz = 0.0;
  double yaw_rate = 0.0;
  std::array<double, 4> thrust{};

  double speed() const;
  Vec3 position() const { return {x, y, z}; }

  friend bool operator==(const LogSample&, const LogSample&) = default;
};

enum class LogEventKind { Grab, Release, Button };

std::string_view to_string(LogEventKind k);

struct LogEvent {
  double t = 0.0;
  LogEventKind kind = LogEventKind::Button;
  Json payload = Json::object();

  friend bool operator==(const LogEvent&, const LogEvent&) = default;
};

struct LogHeader {
  int schema_version = kLogSchemaVersion;
  Json manifest = Json::object();
  TaskGeometry geometry{};
  std::string start_wall_time = "1970-01-01T00:00:00Z";

  friend bool operator==(const LogHeader& a, const LogHeader& b) {
    return a.schema_version == b.schema_version && a.manifest == b.manifest &&
           to_json(a.geometry) == to_json(b.geometry) && a.start_wall_time == b.start_wall_time;
  }
};

/// Samples have strictly increasing t; events are interleaved by time when
/// written (a sample precedes an event with the same timestamp).
struct FlightLog {
  LogHeader header;
  std::vector<LogSample> samples;
  std::vector<LogEvent> events;

  friend bool operator==(const FlightLog&, const FlightLog&) = default;
};

/// Malformed log content; `line()` is 1-based (0 when not line-specific).
class LogFormatError : public std::runtime_error {
 public:
  LogFormatError(std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class LogVersionError : public LogFormatError {
 public:
  LogVersionError(std::size_t line, int found);
  int found() const { return found_; }

 private:
  int found_;
};

std::string header_line(const LogHeader& h);
std::string sample_line(const LogSample& s);
std::string event_line(const LogEvent& e);

void write_log(const FlightLog& log, std::ostream& out);
void write_log(const FlightLog& log, const std::filesystem::path& path);
std::string write_log_string(const FlightLog& log);

FlightLog read_log(std::istream& in);
FlightLog read_log(const std::filesystem::path& path);
FlightLog read_log_string(const std::string& text);

/// Append-only streaming writer. The header is written on open; every
/// append writes one complete line.
class LogWriter {
 public:
  LogWriter(const std::filesystem::path& path, const LogHeader& header);
  ~LogWriter();
  LogWriter(const LogWriter&) = delete;
  LogWriter& operator=(const LogWriter&) = delete;

  void append(const LogSample& s);
  void append(const LogEvent& e);
  void flush();
  void close();

  const std::filesystem::path& path() const { return path_; }

 private:
  void write_line(const std::string& line);

  std::filesystem::path path_;
  std::ofstream out_;
  double last_sample_t_;
};

}  // namespace dream
