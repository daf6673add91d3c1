#pragma once

// Shared fixtures: the hand-built stop/transit log and the mutated-log corpora.

#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dream/logstore.hpp"
#include "support.hpp"

namespace testsupport {

/// Rest at S until t = 2.0 s, transit at constant speed, stopped at A from
/// t = 8.5 s to 10.0 s. One journey, completion time 6.5 s.
inline FlightLog segmentation_fixture() {
  const TaskGeometry g;
  Trajectory tr(g.start, 0.0);
  tr.face(0.0).rest(2.0).move_to(g.arrival, 6.5).rest(1.5);
  FlightLog log = tr.log(g);
  log.header.manifest = Json{{"generator", "fixture"}};
  return log;
}

/// A short but complete log: header, samples and interleaved events.
inline FlightLog small_log() {
  const TaskGeometry g;
  Trajectory tr(g.start, 0.3);
  tr.rest(0.2).move_to({0.2, -1.5, 1.1}, 0.3);
  FlightLog log = tr.log(g);
  log.header.manifest = Json{{"generator", "fixture"}, {"seed", 5}};
  log.events.push_back({0.1, dream::LogEventKind::Button, Json{{"pressed", true}}});
  log.events.push_back({0.1, dream::LogEventKind::Grab, Json::object()});
  log.events.push_back({0.35, dream::LogEventKind::Release, Json::object()});
  return log;
}

inline std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string l;
  while (std::getline(in, l)) lines.push_back(l);
  return lines;
}

inline std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

struct Mutation {
  std::string name;
  std::string text;
  std::size_t expected_line;  // 1-based line the reader must report
};

/// Twenty ways to break a valid log, each with the line that is at fault.
inline std::vector<Mutation> mutated_corpora() {
  const std::string base = dream::write_log_string(small_log());
  const std::vector<std::string> lines = split_lines(base);
  // Line 1 is the header; find the first few sample and event lines.
  std::vector<std::size_t> samples, events;
  for (std::size_t i = 1; i < lines.size(); ++i)
    (lines[i].find("\"event\"") != std::string::npos ? events : samples).push_back(i);

  std::vector<Mutation> out;
  auto edit_record = [&](const std::string& name, std::size_t idx, const std::function<void(Json&)>& f) {
    auto copy = lines;
    Json j = Json::parse(copy[idx]);
    f(j);
    copy[idx] = j.dump();
    out.push_back({name, join_lines(copy), idx + 1});
  };
  auto replace_line = [&](const std::string& name, std::size_t idx, const std::string& text) {
    auto copy = lines;
    copy[idx] = text;
    out.push_back({name, join_lines(copy), idx + 1});
  };

  const std::size_t s3 = samples.at(3), s5 = samples.at(5), ev = events.at(0);
  {
    auto copy = lines;
    std::swap(copy[s3], copy[s5]);
    // The displaced later sample now precedes the next one in file order.
    out.push_back({"decreasing timestamps", join_lines(copy), samples.at(4) + 1});
  }
  edit_record("duplicate timestamp", s5, [&](Json& j) { j["t"] = Json::parse(lines[s5 - 1])["t"]; });
  edit_record("missing field", s3, [](Json& j) { j.erase("vy"); });
  edit_record("unexpected field", s3, [](Json& j) { j["roll"] = 0.0; });
  edit_record("yaw out of range", s3, [](Json& j) { j["yaw"] = 4.0; });
  edit_record("three thrust values", s3, [](Json& j) { j["thrust"] = Json::array({0.5, 0.5, 0.5}); });
  edit_record("thrust above one", s3, [](Json& j) { j["thrust"][2] = 1.5; });
  edit_record("string for a number", s3, [](Json& j) { j["x"] = "0.0"; });
  replace_line("NaN literal", s3, std::string(lines[s3]).replace(lines[s3].find("\"x\":") + 4, 1, "NaN,\"q\":0"));
  replace_line("truncated line", s5, lines[s5].substr(0, lines[s5].size() / 2));
  replace_line("empty line mid-file", s3, "");
  replace_line("record is an array", s3, "[1,2,3]");
  replace_line("garbage", s5, "not json at all");
  edit_record("future schema version", 0, [](Json& j) { j["schema_version"] = 2; });
  edit_record("wrong schema name", 0, [](Json& j) { j["schema"] = "csv"; });
  edit_record("header without geometry", 0, [](Json& j) { j.erase("geometry"); });
  edit_record("degenerate geometry", 0, [](Json& j) { j["geometry"]["arrival"] = j["geometry"]["start"]; });
  edit_record("unknown event", ev, [](Json& j) { j["event"] = "teleport"; });
  edit_record("event payload not an object", ev, [](Json& j) { j["payload"] = 3; });
  {
    auto copy = lines;
    copy.erase(copy.begin());
    out.push_back({"missing header", join_lines(copy), 1});
  }
  return out;
}

}  // namespace testsupport
