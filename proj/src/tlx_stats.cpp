#include "dream/tlx_stats.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <sstream>

namespace dream::tlx {
namespace {

// Modified Lentz evaluation of the incomplete-beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  return h;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string_view to_string(Condition c) { return c == Condition::Dream ? "DrEAM" : "Joystick"; }

std::string_view key(Criterion c) {
  switch (c) {
    case Criterion::Mental: return "mental";
    case Criterion::Physical: return "physical";
    case Criterion::Temporal: return "temporal";
    case Criterion::Performance: return "performance";
    case Criterion::Effort: return "effort";
    case Criterion::Frustration: return "frustration";
  }
  return "";
}

std::string_view label(Criterion c) {
  switch (c) {
    case Criterion::Mental: return "Mental Demand";
    case Criterion::Physical: return "Physical Demand";
    case Criterion::Temporal: return "Temporal Demand";
    case Criterion::Performance: return "Performance";
    case Criterion::Effort: return "Effort";
    case Criterion::Frustration: return "Frustration";
  }
  return "";
}

void TlxResponse::validate() const {
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!(scores[i] >= 0.0 && scores[i] <= 100.0))
      throw std::invalid_argument("participant " + participant + ": " + std::string(key(kCriteria[i])) +
                                  " score outside [0, 100]");
  }
}

double rtlx_score(const TlxResponse& r) {
  double sum = 0.0;
  for (double s : r.scores) sum += s;
  return sum / 6.0;
}

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0 && b > 0)) throw std::domain_error("incomplete_beta: a and b must be positive");
  if (!(x >= 0 && x <= 1)) throw std::domain_error("incomplete_beta: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0)) throw std::domain_error("student_t: df must be positive");
  if (std::isnan(t)) throw std::domain_error("student_t: t is NaN");
  if (std::isinf(t)) return 0.0;
  const double t2 = t * t;
  // For large |t| the df/(df + t^2) form loses no precision; for small |t|
  // use the complementary argument to avoid 1 - tiny cancellation.
  if (t2 < df) return 1.0 - incomplete_beta(0.5, 0.5 * df, t2 / (df + t2));
  return incomplete_beta(0.5 * df, 0.5, df / (df + t2));
}

double student_t_cdf(double t, double df) {
  const double tail = 0.5 * student_t_two_sided_p(t, df);
  return t < 0 ? tail : 1.0 - tail;
}

TTest paired_t_test(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("paired_t_test: samples differ in length");
  const std::size_t n = xs.size();
  if (n < 2) throw InsufficientDataError("paired_t_test: need at least 2 pairs");
  std::vector<double> d(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = xs[i] - ys[i];
    sum += d[i];
  }
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0)) throw DegenerateTestError("paired_t_test: differences have zero variance");
  TTest r;
  r.df = static_cast<double>(n - 1);
  r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  r.p = std::clamp(student_t_two_sided_p(r.t, r.df), 0.0, 1.0);
  return r;
}

std::string_view to_string(Decision d) { return d == Decision::Rejected ? "Rejected" : "Not Rejected"; }

Decision decide(double p, double alpha) { return p < alpha ? Decision::Rejected : Decision::NotRejected; }

std::vector<TestResult> run_hypotheses(std::span<const TlxResponse> responses, double alpha) {
  if (!(alpha >= 0 && alpha <= 1)) throw std::invalid_argument("alpha must be in [0, 1]");
  std::map<std::string, std::pair<const TlxResponse*, const TlxResponse*>> by_participant;
  for (const TlxResponse& r : responses) {
    r.validate();
    auto& slot = by_participant[r.participant];
    auto& target = r.condition == Condition::Dream ? slot.first : slot.second;
    if (target)
      throw std::invalid_argument("participant " + r.participant + " has two " +
                                  std::string(to_string(r.condition)) + " responses");
    target = &r;
  }
  for (const auto& [id, pair] : by_participant) {
    if (!pair.first || !pair.second)
      throw UnpairedParticipantError(id, "participant " + id + " is missing the " +
                                             std::string(pair.first ? "Joystick" : "DrEAM") + " response");
  }

  std::vector<TestResult> rows;
  for (Criterion c : kCriteria) {
    std::vector<double> xs, ys;
    for (const auto& [id, pair] : by_participant) {
      xs.push_back(pair.first->score(c));
      ys.push_back(pair.second->score(c));
    }
    TestResult row;
    row.criterion = c;
    try {
      row.test = paired_t_test(xs, ys);
      row.decision = decide(row.test->p, alpha);
    } catch (const std::exception& e) {
      row.error = e.what();
      row.decision = Decision::NotRejected;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<TlxResponse> read_tlx_csv(std::istream& in) {
  static const std::vector<std::string> kHeader = {"participant", "condition", "mental",      "physical",
                                                   "temporal",    "performance", "effort", "frustration"};
  std::string line;
  std::size_t line_no = 0;
  std::vector<TlxResponse> out;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (!have_header) {
      std::vector<std::string> lowered;
      for (const auto& c : cells) lowered.push_back(lower(c));
      if (lowered != kHeader) throw std::invalid_argument(where + "unexpected CSV header");
      have_header = true;
      continue;
    }
    if (cells.size() != kHeader.size()) throw std::invalid_argument(where + "expected 8 columns");
    TlxResponse r;
    r.participant = cells[0];
    if (r.participant.empty()) throw std::invalid_argument(where + "empty participant id");
    const std::string cond = lower(cells[1]);
    if (cond == "dream") {
      r.condition = Condition::Dream;
    } else if (cond == "joystick") {
      r.condition = Condition::Joystick;
    } else {
      throw std::invalid_argument(where + "unknown condition '" + cells[1] + "'");
    }
    for (std::size_t i = 0; i < 6; ++i) {
      const std::string& cell = cells[2 + i];
      std::size_t used = 0;
      double v = std::numeric_limits<double>::quiet_NaN();
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != cell.size())
        throw std::invalid_argument(where + "bad " + kHeader[2 + i] + " value '" + cell + "'");
      r.scores[i] = v;
    }
    try {
      r.validate();
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + e.what());
    }
    out.push_back(std::move(r));
  }
  if (!have_header) throw std::invalid_argument("empty TLX CSV");
  return out;
}

Json to_json(const std::vector<TestResult>& rows, double alpha) {
  Json arr = Json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const TestResult& r = rows[i];
    Json j{{"hypothesis", "H" + std::to_string(i)},
           {"criterion", std::string(key(r.criterion))},
           {"label", std::string(label(r.criterion))}};
    if (r.test) {
      j["t"] = r.test->t;
      j["df"] = r.test->df;
      j["p"] = r.test->p;
    } else {
      j["t"] = nullptr;
      j["df"] = nullptr;
      j["p"] = nullptr;
    }
    j["decision"] = std::string(to_string(r.decision));
    if (r.error) j["error"] = *r.error;
    arr.push_back(std::move(j));
  }
  return Json{{"alpha", alpha}, {"rows", arr}};
}

std::string format_hypothesis_table(const std::vector<TestResult>& rows) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-4s %-16s %9s %4s %8s  %s\n", "H", "Hypothesis", "t", "df", "p",
                "H0 Result");
  out << buf;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const TestResult& r = rows[i];
    const std::string h = "H" + std::to_string(i);
    if (r.test) {
      std::snprintf(buf, sizeof buf, "%-4s %-16s %9.4f %4.0f %8.4f  %s\n", h.c_str(),
                    std::string(label(r.criterion)).c_str(), r.test->t, r.test->df, r.test->p,
                    std::string(to_string(r.decision)).c_str());
    } else {
      std::snprintf(buf, sizeof buf, "%-4s %-16s %9s %4s %8s  %s (%s)\n", h.c_str(),
                    std::string(label(r.criterion)).c_str(), "-", "-", "-",
                    std::string(to_string(r.decision)).c_str(), r.error ? r.error->c_str() : "");
    }
    out << buf;
  }
  return out.str();
}

}  // namespace dream::tlx
