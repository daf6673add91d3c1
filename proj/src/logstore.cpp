#include "dream/logstore.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace dream {
namespace {

constexpr std::array<const char*, 10> kSampleFields = {"t",  "x",  "y",  "z",        "yaw",
                                                       "vx", "vy", "vz", "yaw_rate", "thrust"};

LogEventKind parse_event_kind(const std::string& s, std::size_t line) {
  if (s == "grab") return LogEventKind::Grab;
  if (s == "release") return LogEventKind::Release;
  if (s == "button") return LogEventKind::Button;
  throw LogFormatError(line, "unknown event '" + s + "'");
}

double finite_field(const Json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw LogFormatError(line, std::string("missing field '") + key + "'");
  if (!it->is_number()) throw LogFormatError(line, std::string("field '") + key + "' is not a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw LogFormatError(line, std::string("field '") + key + "' is not finite");
  return v;
}

LogHeader parse_header(const Json& j, std::size_t line) {
  if (!j.is_object()) throw LogFormatError(line, "header is not a JSON object");
  auto schema = j.find("schema");
  if (schema == j.end() || !schema->is_string() || schema->get<std::string>() != kLogSchemaName)
    throw LogFormatError(line, "not a dreamlog header");
  auto version = j.find("schema_version");
  if (version == j.end() || !version->is_number_integer())
    throw LogFormatError(line, "missing schema_version");
  if (version->get<int>() != kLogSchemaVersion) throw LogVersionError(line, version->get<int>());

  LogHeader h;
  auto manifest = j.find("manifest");
  if (manifest == j.end() || !manifest->is_object()) throw LogFormatError(line, "missing manifest object");
  h.manifest = *manifest;
  auto wall = j.find("start_wall_time");
  if (wall == j.end() || !wall->is_string()) throw LogFormatError(line, "missing start_wall_time");
  h.start_wall_time = wall->get<std::string>();
  auto geom = j.find("geometry");
  if (geom == j.end()) throw LogFormatError(line, "missing geometry");
  try {
    h.geometry = geometry_from_json(*geom);
  } catch (const ConfigError& e) {
    throw LogFormatError(line, std::string("bad geometry: ") + e.what());
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k != "schema" && k != "schema_version" && k != "manifest" && k != "geometry" && k != "start_wall_time")
      throw LogFormatError(line, "unexpected header field '" + k + "'");
  }
  return h;
}

LogSample parse_sample(const Json& j, std::size_t line) {
  if (j.size() != kSampleFields.size()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      bool known = false;
      for (const char* f : kSampleFields) known = known || it.key() == f;
      if (!known) throw LogFormatError(line, "unexpected sample field '" + it.key() + "'");
    }
  }
  LogSample s;
  s.t = finite_field(j, "t", line);
  s.x = finite_field(j, "x", line);
  s.y = finite_field(j, "y", line);
  s.z = finite_field(j, "z", line);
  s.yaw = finite_field(j, "yaw", line);
  s.vx = finite_field(j, "vx", line);
  s.vy = finite_field(j, "vy", line);
  s.vz = finite_field(j, "vz", line);
  s.yaw_rate = finite_field(j, "yaw_rate", line);
  if (!(s.yaw > -kPi && s.yaw <= kPi)) throw LogFormatError(line, "yaw outside (-pi, pi]");
  auto thrust = j.find("thrust");
  if (thrust == j.end()) throw LogFormatError(line, "missing field 'thrust'");
  if (!thrust->is_array() || thrust->size() != 4) throw LogFormatError(line, "thrust must hold 4 values");
  for (std::size_t i = 0; i < 4; ++i) {
    const Json& v = (*thrust)[i];
    if (!v.is_number()) throw LogFormatError(line, "thrust value is not a number");
    s.thrust[i] = v.get<double>();
    if (!(s.thrust[i] >= 0.0 && s.thrust[i] <= 1.0)) throw LogFormatError(line, "thrust value outside [0, 1]");
  }
  return s;
}

LogEvent parse_event(const Json& j, std::size_t line) {
  LogEvent e;
  e.t = finite_field(j, "t", line);
  const Json& kind = j.at("event");
  if (!kind.is_string()) throw LogFormatError(line, "event name is not a string");
  e.kind = parse_event_kind(kind.get<std::string>(), line);
  auto payload = j.find("payload");
  if (payload == j.end() || !payload->is_object()) throw LogFormatError(line, "event payload must be an object");
  e.payload = *payload;
  if (j.size() != 3) throw LogFormatError(line, "unexpected event field");
  return e;
}

}  // namespace

double LogSample::speed() const { return std::sqrt(vx * vx + vy * vy + vz * vz); }

std::string_view to_string(LogEventKind k) {
  switch (k) {
    case LogEventKind::Grab: return "grab";
    case LogEventKind::Release: return "release";
    case LogEventKind::Button: return "button";
  }
  return "unknown";
}

LogFormatError::LogFormatError(std::size_t line, const std::string& message)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

LogVersionError::LogVersionError(std::size_t line, int found)
    : LogFormatError(line, "unsupported schema_version " + std::to_string(found) + " (expected " +
                               std::to_string(kLogSchemaVersion) + ")"),
      found_(found) {}

std::string header_line(const LogHeader& h) {
  Json j{{"schema", kLogSchemaName},
         {"schema_version", h.schema_version},
         {"manifest", h.manifest},
         {"geometry", to_json(h.geometry)},
         {"start_wall_time", h.start_wall_time}};
  return j.dump();
}

std::string sample_line(const LogSample& s) {
  Json j{{"t", s.t},   {"x", s.x},   {"y", s.y},   {"z", s.z},
         {"yaw", s.yaw}, {"vx", s.vx}, {"vy", s.vy}, {"vz", s.vz},
         {"yaw_rate", s.yaw_rate}, {"thrust", Json::array({s.thrust[0], s.thrust[1], s.thrust[2], s.thrust[3]})}};
  return j.dump();
}

std::string event_line(const LogEvent& e) {
  Json j{{"t", e.t}, {"event", std::string(to_string(e.kind))}, {"payload", e.payload}};
  return j.dump();
}

void write_log(const FlightLog& log, std::ostream& out) {
  out << header_line(log.header) << '\n';
  std::size_t si = 0;
  std::size_t ei = 0;
  while (si < log.samples.size() || ei < log.events.size()) {
    const bool take_sample =
        ei == log.events.size() || (si < log.samples.size() && log.samples[si].t <= log.events[ei].t);
    if (take_sample) {
      out << sample_line(log.samples[si++]) << '\n';
    } else {
      out << event_line(log.events[ei++]) << '\n';
    }
  }
}

void write_log(const FlightLog& log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_log(log, out);
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string write_log_string(const FlightLog& log) {
  std::ostringstream out;
  write_log(log, out);
  return out.str();
}

FlightLog read_log(std::istream& in) {
  FlightLog log;
  std::string text;
  std::size_t line_no = 0;
  bool have_header = false;
  double last_sample_t = -std::numeric_limits<double>::infinity();
  double last_record_t = -std::numeric_limits<double>::infinity();

  while (std::getline(in, text)) {
    ++line_no;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) {
      if (in.peek() == std::char_traits<char>::eof()) break;
      throw LogFormatError(line_no, "empty line");
    }
    Json j;
    try {
      j = Json::parse(text);
    } catch (const Json::parse_error& e) {
      throw LogFormatError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!have_header) {
      log.header = parse_header(j, line_no);
      have_header = true;
      continue;
    }
    if (!j.is_object()) throw LogFormatError(line_no, "record is not a JSON object");
    if (j.contains("event")) {
      LogEvent e = parse_event(j, line_no);
      if (e.t < last_record_t) throw LogFormatError(line_no, "event timestamp goes backwards");
      last_record_t = e.t;
      log.events.push_back(std::move(e));
    } else {
      LogSample s = parse_sample(j, line_no);
      if (!(s.t > last_sample_t)) throw LogFormatError(line_no, "sample timestamps not strictly increasing");
      if (s.t < last_record_t) throw LogFormatError(line_no, "sample timestamp precedes an earlier event");
      last_sample_t = s.t;
      last_record_t = s.t;
      log.samples.push_back(s);
    }
  }
  if (!have_header) throw LogFormatError(line_no ? line_no : 1, "missing header line");
  return log;
}

FlightLog read_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_log(in);
}

FlightLog read_log_string(const std::string& text) {
  std::istringstream in(text);
  return read_log(in);
}

LogWriter::LogWriter(const std::filesystem::path& path, const LogHeader& header)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc),
      last_sample_t_(-std::numeric_limits<double>::infinity()) {
  if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_line(header_line(header));
  flush();
}

LogWriter::~LogWriter() { close(); }

void LogWriter::append(const LogSample& s) {
  if (!(s.t > last_sample_t_)) throw std::invalid_argument("LogWriter: sample timestamps must increase");
  last_sample_t_ = s.t;
  write_line(sample_line(s));
}

void LogWriter::append(const LogEvent& e) { write_line(event_line(e)); }

void LogWriter::write_line(const std::string& line) {
  if (!out_.is_open()) throw std::logic_error("LogWriter: append after close");
  out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  out_.put('\n');
}

void LogWriter::flush() {
  if (out_.is_open()) out_.flush();
}

void LogWriter::close() {
  if (out_.is_open()) {
    out_.flush();
    out_.close();
  }
}

}  // namespace dream
