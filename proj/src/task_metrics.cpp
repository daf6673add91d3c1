#include "dream/task_metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace dream {
namespace {

constexpr double kTimeEps = 1e-9;

enum class StopLabel { None, Start, Arrival };

double horizontal_distance(const Vec3& a, const Vec3& b) { return std::hypot(a.x - b.x, a.y - b.y); }

StopLabel stop_label(const LogSample& s, const TaskGeometry& g, const StopParams& stop) {
  if (!(s.speed() < stop.speed)) return StopLabel::None;
  const double ds = horizontal_distance(s.position(), g.start);
  const double da = horizontal_distance(s.position(), g.arrival);
  if (ds <= stop.radius && ds <= da) return StopLabel::Start;
  if (da <= stop.radius) return StopLabel::Arrival;
  return StopLabel::None;
}

struct StopRun {
  StopLabel label;
  std::size_t first;
  std::size_t last;
};

double mean(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

MetricComparison compare_metric(double a, double b) {
  MetricComparison m{a, b, a - b, std::nullopt};
  if (b != 0.0) m.ratio = a / b;
  return m;
}

Json to_json(const MetricComparison& m) {
  return Json{{"a", m.a}, {"b", m.b}, {"difference", m.difference},
              {"ratio", m.ratio ? Json(*m.ratio) : Json(nullptr)}};
}

}  // namespace

double reference_yaw(const Vec3& p, const Vec3& target) {
  const double dx = target.x - p.x;
  const double dy = target.y - p.y;
  if (dx == 0.0 && dy == 0.0) throw UndefinedBearingError("bearing undefined at the target position");
  return wrap_angle(std::atan2(dy, dx));
}

double signed_lateral_error(const Vec3& p, const TaskGeometry& geom) {
  const double dx = geom.arrival.x - geom.start.x;
  const double dy = geom.arrival.y - geom.start.y;
  const double len = std::hypot(dx, dy);
  if (!(len > 0)) throw ConfigError("geometry", "start and arrival must differ horizontally");
  return (dx * (p.y - geom.start.y) - dy * (p.x - geom.start.x)) / len;
}

double lateral_error(const Vec3& p, const TaskGeometry& geom) { return std::abs(signed_lateral_error(p, geom)); }

double yaw_error(const Vec3& p, double observed_yaw, const Vec3& target) {
  return std::abs(wrap_angle(observed_yaw - reference_yaw(p, target)));
}

std::string_view to_string(Direction d) {
  return d == Direction::StartToArrival ? "S->A" : "A->S";
}

std::vector<Journey> segment_journeys(std::span<const LogSample> samples, const TaskGeometry& geom,
                                      const StopParams& stop) {
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (!(samples[i].t > samples[i - 1].t))
      throw std::invalid_argument("segment_journeys: timestamps not strictly increasing at sample " +
                                  std::to_string(i));
  }

  std::vector<StopRun> runs;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const StopLabel label = stop_label(samples[i], geom, stop);
    if (label == StopLabel::None) continue;
    if (!runs.empty() && runs.back().label == label && runs.back().last + 1 == i) {
      runs.back().last = i;
    } else {
      runs.push_back({label, i, i});
    }
  }
  std::erase_if(runs, [&](const StopRun& r) {
    return samples[r.last].t - samples[r.first].t < stop.dwell - kTimeEps;
  });

  std::vector<Journey> journeys;
  for (std::size_t k = 0; k + 1 < runs.size(); ++k) {
    const StopRun& from = runs[k];
    const StopRun& to = runs[k + 1];
    if (from.label == to.label) continue;

    const std::size_t departure = from.last;
    const std::size_t arrival = to.first;
    std::size_t lead_in = from.first;
    while (lead_in < departure && samples[departure].t - samples[lead_in + 1].t >= stop.dwell - kTimeEps)
      ++lead_in;
    std::size_t lead_out = arrival;
    while (lead_out < to.last && samples[lead_out].t - samples[arrival].t < stop.dwell - kTimeEps) ++lead_out;

    Journey j;
    j.direction = from.label == StopLabel::Start ? Direction::StartToArrival : Direction::ArrivalToStart;
    j.samples.assign(samples.begin() + static_cast<std::ptrdiff_t>(lead_in),
                     samples.begin() + static_cast<std::ptrdiff_t>(lead_out + 1));
    j.departure = departure - lead_in;
    j.arrival = arrival - lead_in;
    journeys.push_back(std::move(j));
  }
  return journeys;
}

std::vector<Journey> segment_journeys(const FlightLog& log, const StopParams& stop) {
  return segment_journeys(log.samples, log.header.geometry, stop);
}

JourneyMetrics measure_journey(const Journey& j, const TaskGeometry& geom) {
  JourneyMetrics m;
  m.direction = j.direction;
  m.t_start = j.departure_time();
  m.t_end = j.arrival_time();
  m.completion_s = j.completion_time();
  double lat = 0.0;
  double yaw = 0.0;
  for (const LogSample& s : j.measured()) {
    lat += lateral_error(s.position(), geom);
    yaw += yaw_error(s.position(), s.yaw, geom.target);
  }
  m.n_samples = j.measured().size();
  m.lateral_error_m = lat / static_cast<double>(m.n_samples);
  m.yaw_error_rad = yaw / static_cast<double>(m.n_samples);
  return m;
}

JourneyReport aggregate(std::span<const Journey> journeys, const TaskGeometry& geom, AggregationMode mode) {
  if (journeys.empty()) throw EmptyReportError("aggregate: no completed journeys");
  JourneyReport r;
  r.mode = mode;
  r.n_journeys = journeys.size();
  std::vector<double> lat, yaw, ct;
  for (const Journey& j : journeys) {
    r.per_journey.push_back(measure_journey(j, geom));
    lat.push_back(r.per_journey.back().lateral_error_m);
    yaw.push_back(r.per_journey.back().yaw_error_rad);
    ct.push_back(r.per_journey.back().completion_s);
  }
  r.mct_s = mean(ct);
  if (mode == AggregationMode::PerJourney) {
    r.mle_m = mean(lat);
    r.mye_rad = mean(yaw);
  } else {
    double lat_sum = 0.0, yaw_sum = 0.0;
    std::size_t n = 0;
    for (const Journey& j : journeys) {
      for (const LogSample& s : j.measured()) {
        lat_sum += lateral_error(s.position(), geom);
        yaw_sum += yaw_error(s.position(), s.yaw, geom.target);
        ++n;
      }
    }
    r.mle_m = lat_sum / static_cast<double>(n);
    r.mye_rad = yaw_sum / static_cast<double>(n);
  }
  return r;
}

JourneyReport analyze_log(const FlightLog& log, const StopParams& stop, AggregationMode mode) {
  const auto journeys = segment_journeys(log, stop);
  return aggregate(journeys, log.header.geometry, mode);
}

JourneyReport merge_reports(std::span<const JourneyReport> reports) {
  JourneyReport r;
  if (!reports.empty()) r.mode = reports.front().mode;
  for (const JourneyReport& part : reports) {
    if (part.mode != r.mode) throw std::invalid_argument("merge_reports: mixed aggregation modes");
    r.per_journey.insert(r.per_journey.end(), part.per_journey.begin(), part.per_journey.end());
  }
  if (r.per_journey.empty()) throw EmptyReportError("merge_reports: no completed journeys");
  r.n_journeys = r.per_journey.size();
  double lat = 0.0, yaw = 0.0, ct = 0.0, weight = 0.0;
  for (const JourneyMetrics& m : r.per_journey) {
    const double w = r.mode == AggregationMode::Pooled ? static_cast<double>(m.n_samples) : 1.0;
    lat += w * m.lateral_error_m;
    yaw += w * m.yaw_error_rad;
    weight += w;
    ct += m.completion_s;
  }
  r.mle_m = lat / weight;
  r.mye_rad = yaw / weight;
  r.mct_s = ct / static_cast<double>(r.n_journeys);
  return r;
}

Json to_json(const JourneyReport& r) {
  Json per = Json::array();
  for (const JourneyMetrics& m : r.per_journey) {
    per.push_back(Json{{"direction", std::string(to_string(m.direction))},
                       {"t_start", m.t_start},
                       {"t_end", m.t_end},
                       {"lateral_error_m", m.lateral_error_m},
                       {"yaw_error_rad", m.yaw_error_rad},
                       {"completion_s", m.completion_s},
                       {"n_samples", m.n_samples}});
  }
  return Json{{"mle_m", r.mle_m},
              {"mye_rad", r.mye_rad},
              {"mct_s", r.mct_s},
              {"n_journeys", r.n_journeys},
              {"aggregation", r.mode == AggregationMode::PerJourney ? "per_journey" : "pooled"},
              {"per_journey", per}};
}

ConditionComparison compare_conditions(const JourneyReport& a, const JourneyReport& b, std::string label_a,
                                       std::string label_b) {
  if (a.n_journeys == 0 || b.n_journeys == 0) throw EmptyReportError("compare_conditions: empty report");
  return {std::move(label_a), std::move(label_b), compare_metric(a.mle_m, b.mle_m),
          compare_metric(a.mye_rad, b.mye_rad), compare_metric(a.mct_s, b.mct_s)};
}

Json to_json(const ConditionComparison& c) {
  return Json{{"a", c.label_a}, {"b", c.label_b}, {"mle_m", to_json(c.mle)},
              {"mye_rad", to_json(c.mye)}, {"mct_s", to_json(c.mct)}};
}

std::string format_report_table(const std::vector<std::pair<std::string, JourneyReport>>& columns) {
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-12s", "Metric");
  out << buf;
  for (const auto& [label, _] : columns) {
    std::snprintf(buf, sizeof buf, " %12s", label.c_str());
    out << buf;
  }
  out << '\n';
  auto row = [&](const char* name, auto value, const char* fmt) {
    std::snprintf(buf, sizeof buf, "%-12s", name);
    out << buf;
    for (const auto& [_, r] : columns) {
      std::snprintf(buf, sizeof buf, fmt, value(r));
      out << buf;
    }
    out << '\n';
  };
  row("MLE (m)", [](const JourneyReport& r) { return r.mle_m; }, " %12.3f");
  row("MYE (rad)", [](const JourneyReport& r) { return r.mye_rad; }, " %12.3f");
  row("MCT (s)", [](const JourneyReport& r) { return r.mct_s; }, " %12.2f");
  row("Journeys", [](const JourneyReport& r) { return static_cast<int>(r.n_journeys); }, " %12d");
  return out.str();
}

}  // namespace dream
