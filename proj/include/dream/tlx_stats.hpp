#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dream/json_fields.hpp"

namespace dream::tlx {

enum class Condition { Dream, Joystick };

std::string_view to_string(Condition c);

/// The six NASA-TLX scales, in questionnaire order.
enum class Criterion { Mental, Physical, Temporal, Performance, Effort, Frustration };

inline constexpr std::array<Criterion, 6> kCriteria = {Criterion::Mental,      Criterion::Physical,
                                                       Criterion::Temporal,    Criterion::Performance,
                                                       Criterion::Effort,      Criterion::Frustration};

std::string_view key(Criterion c);    // "mental", ...
std::string_view label(Criterion c);  // "Mental Demand", ...

struct TlxResponse {
  std::string participant;
  Condition condition = Condition::Dream;
  std::array<double, 6> scores{};  // indexed like kCriteria, each in [0, 100]

  double score(Criterion c) const { return scores[static_cast<std::size_t>(c)]; }
  void validate() const;
};

/// Raw-TLX: unweighted mean of the six scales.
double rtlx_score(const TlxResponse& r);

class InsufficientDataError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DegenerateTestError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class UnpairedParticipantError : public std::invalid_argument {
 public:
  UnpairedParticipantError(const std::string& participant, const std::string& message)
      : std::invalid_argument(message), participant_(participant) {}
  const std::string& participant() const { return participant_; }

 private:
  std::string participant_;
};

/// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);

double student_t_cdf(double t, double df);

/// P(|T| >= |t|) for T ~ Student(df).
double student_t_two_sided_p(double t, double df);

struct TTest {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

/// Paired Student test on d = xs - ys with the n-1 sample deviation.
TTest paired_t_test(std::span<const double> xs, std::span<const double> ys);

enum class Decision { Rejected, NotRejected };

std::string_view to_string(Decision d);

/// Rejected iff p < alpha.
Decision decide(double p, double alpha);

struct TestResult {
  Criterion criterion = Criterion::Mental;
  std::optional<TTest> test;   // empty when the test was degenerate
  std::optional<std::string> error;
  Decision decision = Decision::NotRejected;
};

/// One paired test per criterion (DrEAM minus Joystick), H0..H5.
std::vector<TestResult> run_hypotheses(std::span<const TlxResponse> responses, double alpha);

/// Reads `participant,condition,mental,physical,temporal,performance,effort,frustration`.
std::vector<TlxResponse> read_tlx_csv(std::istream& in);

Json to_json(const std::vector<TestResult>& rows, double alpha);
std::string format_hypothesis_table(const std::vector<TestResult>& rows);

}  // namespace dream::tlx
