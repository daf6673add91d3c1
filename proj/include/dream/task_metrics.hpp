#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dream/json_fields.hpp"
#include "dream/logstore.hpp"
#include "dream/task_geometry.hpp"

namespace dream {

/// Raised when a bearing is requested from the target position itself.
class UndefinedBearingError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class EmptyReportError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Horizontal bearing from `p` to `target`, wrapped to (-pi, pi].
double reference_yaw(const Vec3& p, const Vec3& target);

/// Signed horizontal distance from `p` to the line through start and
/// arrival; positive on the left of the S -> A direction.
double signed_lateral_error(const Vec3& p, const TaskGeometry& geom);

/// Unsigned horizontal distance to the S-A line.
double lateral_error(const Vec3& p, const TaskGeometry& geom);

/// |wrap(observed - bearing-to-target)|, in [0, pi].
double yaw_error(const Vec3& p, double observed_yaw, const Vec3& target);

enum class Direction { StartToArrival, ArrivalToStart };

std::string_view to_string(Direction d);

/// One stop-to-stop traversal.
///
/// `samples` also holds the trailing dwell window of the departure stop and
/// the leading dwell window of the arrival stop, so that re-segmenting a
/// journey (or a time-ordered union of journeys) reproduces its boundaries.
/// The measured part is samples[departure..arrival] inclusive.
struct Journey {
  Direction direction = Direction::StartToArrival;
  std::vector<LogSample> samples;
  std::size_t departure = 0;
  std::size_t arrival = 0;

  double departure_time() const { return samples[departure].t; }
  double arrival_time() const { return samples[arrival].t; }
  double completion_time() const { return arrival_time() - departure_time(); }
  std::span<const LogSample> measured() const {
    return std::span<const LogSample>(samples).subspan(departure, arrival - departure + 1);
  }
};

/// Throws std::invalid_argument when timestamps are not strictly increasing.
std::vector<Journey> segment_journeys(std::span<const LogSample> samples, const TaskGeometry& geom,
                                      const StopParams& stop = {});
std::vector<Journey> segment_journeys(const FlightLog& log, const StopParams& stop = {});

/// How sample errors are averaged across journeys.
enum class AggregationMode {
  PerJourney,  // mean per journey, then unweighted mean of journeys
  Pooled,      // mean over every measured sample of every journey
};

struct JourneyMetrics {
  Direction direction = Direction::StartToArrival;
  double t_start = 0.0;
  double t_end = 0.0;
  double lateral_error_m = 0.0;
  double yaw_error_rad = 0.0;
  double completion_s = 0.0;
  std::size_t n_samples = 0;
};

struct JourneyReport {
  std::vector<JourneyMetrics> per_journey;
  double mle_m = 0.0;
  double mye_rad = 0.0;
  double mct_s = 0.0;
  std::size_t n_journeys = 0;
  AggregationMode mode = AggregationMode::PerJourney;
};

JourneyMetrics measure_journey(const Journey& j, const TaskGeometry& geom);

/// Throws EmptyReportError with no journeys.
JourneyReport aggregate(std::span<const Journey> journeys, const TaskGeometry& geom,
                        AggregationMode mode = AggregationMode::PerJourney);

/// Convenience: segment + aggregate.
JourneyReport analyze_log(const FlightLog& log, const StopParams& stop = {},
                          AggregationMode mode = AggregationMode::PerJourney);

/// Combines reports (e.g. one per log file) as if their journeys had been
/// aggregated together; pooled means weight each journey by its sample count.
/// Throws EmptyReportError when there is nothing to merge.
JourneyReport merge_reports(std::span<const JourneyReport> reports);

Json to_json(const JourneyReport& r);

struct MetricComparison {
  double a = 0.0;
  double b = 0.0;
  double difference = 0.0;       // a - b
  std::optional<double> ratio;   // a / b; empty when b == 0
};

struct ConditionComparison {
  std::string label_a;
  std::string label_b;
  MetricComparison mle;
  MetricComparison mye;
  MetricComparison mct;
};

ConditionComparison compare_conditions(const JourneyReport& a, const JourneyReport& b,
                                       std::string label_a = "a", std::string label_b = "b");

Json to_json(const ConditionComparison& c);

/// Metric rows, one column per condition.
std::string format_report_table(const std::vector<std::pair<std::string, JourneyReport>>& columns);

}  // namespace dream
