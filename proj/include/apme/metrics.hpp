#pragma once

// Per-attempt performance, per-problem aggregates and the risk-adjusted
// reward (inverse coefficient of variation) that drives the bandit arms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "apme/error.hpp"

namespace apme {

inline constexpr double kDefaultEpsilonSmooth = 1e-6;

struct ResponseRecord {
  std::string problem_id;
  std::int64_t time_ms = 0;
  double marks = 0.0;

  friend bool operator==(const ResponseRecord&, const ResponseRecord&) = default;
};

struct MarkingScheme {
  double alpha = 1.0;
  std::map<std::string, double> outcome_marks{{"correct", 1.0}, {"incorrect", 0.0}};
  double modulator_a1 = 1.0;
  double modulator_a2 = 0.0;
  double true_value = 1.0;
  double time_unit_divisor = 1000.0;
  double epsilon_smooth = kDefaultEpsilonSmooth;
};

inline void validate(const MarkingScheme& scheme) {
  if (!(scheme.alpha > 0.0)) throw DomainError("marking scheme: alpha must be > 0");
  if (!(scheme.true_value > 0.0)) throw DomainError("marking scheme: true_value must be > 0");
  if (!(scheme.time_unit_divisor > 0.0))
    throw DomainError("marking scheme: time_unit_divisor must be > 0");
  if (!(scheme.epsilon_smooth >= 0.0))
    throw DomainError("marking scheme: epsilon_smooth must be >= 0");
  if (scheme.outcome_marks.empty())
    throw InputError("marking scheme: outcome_marks must contain at least one outcome");
}

struct ProblemStats {
  std::string problem_id;
  std::size_t k = 0;
  double mean_eta = 0.0;
  double std_eta = 0.0;
  double psi = 0.0;
  // Zero sample variance: psi is mean / epsilon_smooth.
  bool degenerate = false;
};

struct ArmProbabilities {
  std::vector<std::pair<std::string, double>> entries;

  std::size_t size() const { return entries.size(); }
};

// eta = alpha * marks / (time / divisor)
inline double instantaneous_performance(const ResponseRecord& record,
                                        const MarkingScheme& scheme) {
  if (record.time_ms <= 0)
    throw DomainError("instantaneous_performance: time must be positive (problem '" +
                      record.problem_id + "')");
  const double time = static_cast<double>(record.time_ms) / scheme.time_unit_divisor;
  return scheme.alpha * record.marks / time;
}

inline double derived_performance(double mean_eta, double std_eta, double epsilon_smooth) {
  return mean_eta / (std_eta + epsilon_smooth);
}

inline ProblemStats aggregate_problem(std::span<const ResponseRecord> records,
                                      const MarkingScheme& scheme) {
  if (records.size() < 2)
    throw InsufficientDataError("aggregate_problem: need at least 2 records, got " +
                                std::to_string(records.size()));
  const std::string& id = records.front().problem_id;

  // Welford's running mean / M2.
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (r.problem_id != id)
      throw InputError("aggregate_problem: mixed problem ids '" + id + "' and '" +
                       r.problem_id + "'");
    const double eta = instantaneous_performance(r, scheme);
    ++n;
    const double delta = eta - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (eta - mean);
  }

  ProblemStats stats;
  stats.problem_id = id;
  stats.k = n;
  stats.mean_eta = mean;
  stats.std_eta = std::sqrt(std::max(0.0, m2 / static_cast<double>(n - 1)));
  stats.psi = derived_performance(stats.mean_eta, stats.std_eta, scheme.epsilon_smooth);
  stats.degenerate = stats.std_eta == 0.0;
  return stats;
}

// Splits a record stream by problem id, keeping first-appearance order of
// problems and input order of records within each problem.
inline std::vector<std::vector<ResponseRecord>> group_by_problem(
    std::span<const ResponseRecord> records) {
  std::vector<std::vector<ResponseRecord>> groups;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& r : records) {
    auto [it, inserted] = index.try_emplace(r.problem_id, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(r);
  }
  return groups;
}

// S' = A1 * R + A2 * p
inline double modulated_return(double reward, const MarkingScheme& scheme) {
  return scheme.modulator_a1 * reward + scheme.modulator_a2 * scheme.true_value;
}

inline MarkingScheme shift_marks(MarkingScheme scheme) {
  if (scheme.outcome_marks.empty()) return scheme;
  double lowest = scheme.outcome_marks.begin()->second;
  for (const auto& [_, m] : scheme.outcome_marks) lowest = std::min(lowest, m);
  if (lowest < 0.0) {
    const double offset = std::abs(lowest);
    for (auto& [_, m] : scheme.outcome_marks) m += offset;
  }
  return scheme;
}

struct NormalizedValues {
  std::vector<double> values;
  bool degenerate = false;
};

inline NormalizedValues min_max_normalize(std::span<const double> values) {
  if (values.empty()) throw InputError("min_max_normalize: empty input");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  NormalizedValues out;
  out.values.reserve(values.size());
  if (range == 0.0) {
    out.values.assign(values.size(), 0.0);
    out.degenerate = true;
    return out;
  }
  for (double v : values) out.values.push_back((v - *lo) / range);
  return out;
}

// p_i = score_i / sum_k score_k over strictly positive scores.
inline ArmProbabilities assign_probabilities(
    std::span<const std::pair<std::string, double>> scores) {
  if (scores.size() < 2)
    throw InputError("assign_probabilities: need at least 2 problems, got " +
                     std::to_string(scores.size()));
  double total = 0.0;
  for (const auto& [id, s] : scores) {
    if (!(s > 0.0))
      throw DomainError("assign_probabilities: derived performance of '" + id +
                        "' is not positive; shift the marking scheme (shift_marks) or "
                        "apply a modulator before assigning probabilities");
    total += s;
  }
  ArmProbabilities probs;
  probs.entries.reserve(scores.size());
  for (const auto& [id, s] : scores) probs.entries.emplace_back(id, s / total);
  return probs;
}

inline ArmProbabilities assign_probabilities(std::span<const ProblemStats> stats) {
  std::vector<std::pair<std::string, double>> scores;
  scores.reserve(stats.size());
  for (const auto& s : stats) scores.emplace_back(s.problem_id, s.psi);
  return assign_probabilities(std::span<const std::pair<std::string, double>>(scores));
}

// Same as above, on the modulated return A1 * psi + A2 * p.
inline ArmProbabilities assign_probabilities(std::span<const ProblemStats> stats,
                                             const MarkingScheme& scheme) {
  std::vector<std::pair<std::string, double>> scores;
  scores.reserve(stats.size());
  for (const auto& s : stats) scores.emplace_back(s.problem_id, modulated_return(s.psi, scheme));
  return assign_probabilities(std::span<const std::pair<std::string, double>>(scores));
}

// P(|gain - mu| <= epsilon) for a Gaussian gain with standard deviation sigma.
inline double confidence_within(double epsilon, double sigma) {
  if (!(epsilon > 0.0) || !(sigma > 0.0))
    throw DomainError("confidence_within: epsilon and sigma must be positive");
  if (std::isinf(sigma)) return 0.0;
  return std::erf(epsilon / (sigma * std::numbers::sqrt2));
}

}  // namespace apme
