#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "apme/bandit.hpp"
#include "apme/error.hpp"
#include "apme/metrics.hpp"

namespace apme {

namespace detail {

inline void check_paired(std::span<const double> actual, std::span<const double> predicted,
                         std::size_t min_size, const char* what) {
  if (actual.size() != predicted.size())
    throw InputError(std::string(what) + ": length mismatch (" + std::to_string(actual.size()) +
                     " vs " + std::to_string(predicted.size()) + ")");
  if (actual.size() < min_size)
    throw InputError(std::string(what) + ": need at least " + std::to_string(min_size) + " values");
}

}  // namespace detail

// Coefficient of determination, 1 - SS_res / SS_tot.
inline double r_squared(std::span<const double> actual, std::span<const double> predicted) {
  detail::check_paired(actual, predicted, 2, "r_squared");
  const double mean = std::accumulate(actual.begin(), actual.end(), 0.0) /
                      static_cast<double>(actual.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ss_res += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
    ss_tot += (actual[i] - mean) * (actual[i] - mean);
  }
  if (ss_tot == 0.0) throw DomainError("r_squared: actual values have zero variance");
  return 1.0 - ss_res / ss_tot;
}

inline double rmse(std::span<const double> actual, std::span<const double> predicted) {
  detail::check_paired(actual, predicted, 1, "rmse");
  double ss = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i)
    ss += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
  return std::sqrt(ss / static_cast<double>(actual.size()));
}

// 1-based ranks, ties share their average rank.
inline std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t m = i; m <= j; ++m) ranks[order[m]] = r;
    i = j + 1;
  }
  return ranks;
}

// Pearson correlation of average ranks; NaN when either side is constant.
inline double spearman(std::span<const double> a, std::span<const double> b) {
  detail::check_paired(a, b, 2, "spearman");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(ra.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return cov / std::sqrt(va * vb);
}

struct ArmEvaluation {
  std::string problem_id;
  double hidden = 0.0;
  double estimate = 0.0;
  double abs_error = 0.0;
};

// Estimates are scored against the hidden arm probabilities of the environment.
struct EvaluationReport {
  double r_squared = 0.0;
  double rmse = 0.0;
  double spearman = 0.0;
  std::vector<ArmEvaluation> per_arm;
};

inline EvaluationReport evaluate(std::span<const std::string> problem_ids,
                                 std::span<const double> hidden, std::span<const double> estimates) {
  detail::check_paired(hidden, estimates, 2, "evaluate");
  if (problem_ids.size() != hidden.size())
    throw InputError("evaluate: problem id count does not match value count");
  EvaluationReport report;
  report.r_squared = r_squared(hidden, estimates);
  report.rmse = rmse(hidden, estimates);
  report.spearman = spearman(hidden, estimates);
  for (std::size_t i = 0; i < hidden.size(); ++i)
    report.per_arm.push_back(
        {problem_ids[i], hidden[i], estimates[i], std::abs(hidden[i] - estimates[i])});
  return report;
}

inline EvaluationReport evaluate(const BanditEnvironment& env, std::span<const double> estimates) {
  std::vector<std::string> ids;
  std::vector<double> hidden;
  for (const auto& a : env.arms) {
    ids.push_back(a.problem_id);
    hidden.push_back(a.probability);
  }
  return evaluate(ids, hidden, estimates);
}

struct RankedProblem {
  std::size_t rank = 0;
  std::string problem_id;
  double psi = 0.0;
  double mean_eta = 0.0;
  double std_eta = 0.0;
};

// Easiest (highest psi) first; equal psi ordered by problem id.
inline std::vector<RankedProblem> rank_problems(std::span<const ProblemStats> stats) {
  std::vector<const ProblemStats*> order;
  order.reserve(stats.size());
  for (const auto& s : stats) order.push_back(&s);
  std::sort(order.begin(), order.end(), [](const ProblemStats* a, const ProblemStats* b) {
    if (a->psi != b->psi) return a->psi > b->psi;
    return a->problem_id < b->problem_id;
  });
  std::vector<RankedProblem> ranked;
  ranked.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    ranked.push_back({i + 1, order[i]->problem_id, order[i]->psi, order[i]->mean_eta,
                      order[i]->std_eta});
  return ranked;
}

// Reference aggregation: collects every eta first, then a plain two-pass
// mean and sample deviation. Kept separate from aggregate_problem so the
// two can be checked against each other.
inline std::vector<ProblemStats> brute_force_psi(std::span<const ResponseRecord> records,
                                                 const MarkingScheme& scheme) {
  if (records.empty()) throw InsufficientDataError("brute_force_psi: no records");
  std::vector<std::string> ids;
  std::map<std::string, std::vector<double>> etas;
  for (const auto& r : records) {
    if (r.time_ms <= 0)
      throw DomainError("brute_force_psi: non-positive time for '" + r.problem_id + "'");
    auto& bucket = etas[r.problem_id];
    if (bucket.empty()) ids.push_back(r.problem_id);
    const double seconds = static_cast<double>(r.time_ms) / scheme.time_unit_divisor;
    bucket.push_back(scheme.alpha * r.marks / seconds);
  }

  std::vector<ProblemStats> out;
  for (const auto& id : ids) {
    const auto& values = etas[id];
    const std::size_t k = values.size();
    if (k < 2)
      throw InsufficientDataError("brute_force_psi: problem '" + id + "' has fewer than 2 records");
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / static_cast<double>(k);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(k - 1));

    ProblemStats s;
    s.problem_id = id;
    s.k = k;
    s.mean_eta = mean;
    s.std_eta = sd;
    s.psi = mean / (sd + scheme.epsilon_smooth);
    s.degenerate = sd == 0.0;
    out.push_back(s);
  }
  return out;
}

struct SyntheticSpec {
  std::size_t num_problems = 0;
  std::size_t records_per_problem = 0;
  std::vector<double> target_psi;
  double mark_value = 1.0;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  std::vector<ResponseRecord> records;
  std::vector<ProblemStats> hidden;
  MarkingScheme scheme;  // alpha 1, seconds, epsilon_smooth 0
};

inline std::string synthetic_problem_id(std::size_t i) {
  std::string id = std::to_string(i);
  return "P" + std::string(id.size() < 3 ? 3 - id.size() : 0, '0') + id;
}

// Log-normal solve times per problem. With eta = mark / t and t log-normal
// with log-sd s, the population CV of eta is sqrt(exp(s^2) - 1); the sample
// psi falls monotonically in s for fixed normal draws, so s is bisected until
// the realized psi is within 2% of the target.
inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.num_problems < 2) throw InputError("generate_synthetic: need at least 2 problems");
  if (spec.records_per_problem < 2)
    throw InputError("generate_synthetic: need at least 2 records per problem");
  if (spec.target_psi.size() != spec.num_problems)
    throw InputError("generate_synthetic: target_psi length does not match num_problems");
  if (!(spec.mark_value > 0.0)) throw InputError("generate_synthetic: mark_value must be > 0");
  for (double t : spec.target_psi)
    if (!(t > 0.0) || !std::isfinite(t))
      throw InputError("generate_synthetic: target psi values must be positive and finite");

  constexpr double kMedianMs = 20000.0;
  constexpr double kTolerance = 0.02;
  constexpr int kAttempts = 16;

  SyntheticData data;
  data.scheme.alpha = 1.0;
  data.scheme.time_unit_divisor = 1000.0;
  data.scheme.epsilon_smooth = 0.0;
  const std::size_t k = spec.records_per_problem;

  for (std::size_t i = 0; i < spec.num_problems; ++i) {
    const std::string id = synthetic_problem_id(i);
    const double target = spec.target_psi[i];
    Rng rng = make_run_rng(spec.seed, i);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<std::int64_t> times(k);
    auto realize = [&](const std::vector<double>& z, double s) {
      for (std::size_t j = 0; j < k; ++j)
        times[j] = std::max<std::int64_t>(1, std::llround(kMedianMs * std::exp(s * z[j])));
      double sum = 0.0;
      for (auto t : times) sum += spec.mark_value * 1000.0 / static_cast<double>(t);
      const double mean = sum / static_cast<double>(k);
      double ss = 0.0;
      for (auto t : times) {
        const double d = spec.mark_value * 1000.0 / static_cast<double>(t) - mean;
        ss += d * d;
      }
      const double sd = std::sqrt(ss / static_cast<double>(k - 1));
      return sd == 0.0 ? std::numeric_limits<double>::infinity() : mean / sd;
    };

    bool solved = false;
    for (int attempt = 0; attempt < kAttempts && !solved; ++attempt) {
      std::vector<double> z(k);
      double max_abs = 0.0;
      for (auto& v : z) {
        v = normal(rng);
        max_abs = std::max(max_abs, std::abs(v));
      }
      // Keep times below ~2e4 * e^23 ms.
      double hi = 23.0 / std::max(max_abs, 1e-12);
      double lo = 0.0;
      if (realize(z, hi) > target) continue;
      double best_s = hi;
      double best_err = std::abs(realize(z, hi) - target) / target;
      for (int it = 0; it < 200 && best_err > 1e-9; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double psi = realize(z, mid);
        const double err = std::abs(psi - target) / target;
        if (err < best_err) {
          best_err = err;
          best_s = mid;
        }
        if (psi > target)
          lo = mid;
        else
          hi = mid;
      }
      if (best_err <= kTolerance) {
        realize(z, best_s);
        for (auto t : times) data.records.push_back({id, t, spec.mark_value});
        solved = true;
      }
    }
    if (!solved)
      throw InputError("generate_synthetic: target psi " + std::to_string(target) +
                       " unattainable with " + std::to_string(k) + " records per problem");
  }
  data.hidden = brute_force_psi(data.records, data.scheme);
  return data;
}

}  // namespace apme
