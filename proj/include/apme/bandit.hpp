#pragma once

// Bernoulli bandit environment built from per-problem probabilities, the
// Beta-Bernoulli Thompson sampler, epsilon-greedy / UCB baselines, and a
// multi-run simulator with deterministic per-run random streams.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "apme/error.hpp"
#include "apme/metrics.hpp"

namespace apme {

struct Arm {
  std::string problem_id;
  double probability = 0.0;
};

struct BanditEnvironment {
  std::vector<Arm> arms;

  std::size_t size() const { return arms.size(); }

  double best_mean() const {
    double best = 0.0;
    for (const auto& a : arms) best = std::max(best, a.probability);
    return best;
  }
};

inline BanditEnvironment build_environment(const ArmProbabilities& probs) {
  if (probs.size() < 2)
    throw InputError("build_environment: need at least 2 arms, got " + std::to_string(probs.size()));
  double total = 0.0;
  BanditEnvironment env;
  env.arms.reserve(probs.size());
  for (const auto& [id, p] : probs.entries) {
    if (!(p > 0.0 && p < 1.0))
      throw DomainError("build_environment: probability of '" + id + "' must lie in (0, 1)");
    total += p;
    env.arms.push_back({id, p});
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw DomainError("build_environment: probabilities must sum to 1");
  return env;
}

enum class Strategy { thompson, epsilon_greedy, ucb };

inline std::optional<Strategy> parse_strategy(std::string_view name) {
  if (name == "thompson") return Strategy::thompson;
  if (name == "epsilon_greedy" || name == "epsilon-greedy") return Strategy::epsilon_greedy;
  if (name == "ucb") return Strategy::ucb;
  return std::nullopt;
}

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::thompson: return "thompson";
    case Strategy::epsilon_greedy: return "epsilon_greedy";
    case Strategy::ucb: return "ucb";
  }
  return "unknown";
}

struct SimulationConfig {
  Strategy strategy = Strategy::thompson;
  std::size_t steps = 1000;
  std::size_t runs = 1;
  std::uint64_t seed = 0;
  double epsilon = 0.1;
  double ucb_c = 1.0;
  // Worker threads for independent runs; 0 picks hardware concurrency.
  unsigned threads = 0;
};

inline void validate(const SimulationConfig& config) {
  if (config.steps < 1) throw InputError("simulation: steps must be >= 1");
  if (config.runs < 1) throw InputError("simulation: runs must be >= 1");
  if (!(config.epsilon >= 0.0 && config.epsilon <= 1.0))
    throw InputError("simulation: epsilon must lie in [0, 1]");
  if (!(config.ucb_c > 0.0)) throw InputError("simulation: ucb_c must be > 0");
}

// Beta(1, 1) prior per arm plus pull statistics used by the baselines.
struct AgentState {
  std::vector<std::uint64_t> alpha;
  std::vector<std::uint64_t> beta;
  std::vector<std::uint64_t> pulls;
  std::vector<std::uint64_t> successes;

  explicit AgentState(std::size_t num_arms = 0)
      : alpha(num_arms, 1), beta(num_arms, 1), pulls(num_arms, 0), successes(num_arms, 0) {}

  std::size_t size() const { return alpha.size(); }

  std::uint64_t total_pulls() const {
    std::uint64_t n = 0;
    for (auto p : pulls) n += p;
    return n;
  }

  double posterior_mean(std::size_t arm) const {
    return static_cast<double>(alpha[arm]) / static_cast<double>(alpha[arm] + beta[arm]);
  }

  double empirical_mean(std::size_t arm) const {
    return pulls[arm] == 0 ? 0.0
                           : static_cast<double>(successes[arm]) / static_cast<double>(pulls[arm]);
  }

  void record(std::size_t arm, bool reward) {
    ++pulls[arm];
    if (reward) {
      ++successes[arm];
      ++alpha[arm];
    } else {
      ++beta[arm];
    }
  }
};

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent stream for run `run` of a simulation seeded with `seed`.
inline Rng make_run_rng(std::uint64_t seed, std::uint64_t run) {
  return Rng(splitmix64(seed ^ splitmix64(run)));
}

inline double sample_beta(Rng& rng, double a, double b) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x / (x + y);
}

inline bool draw_reward(Rng& rng, double p) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

struct StepOutcome {
  std::size_t arm = 0;
  bool reward = false;
};

namespace detail {

inline void check_dimensions(const AgentState& state, const BanditEnvironment& env) {
  if (state.size() != env.size())
    throw InputError("agent state has " + std::to_string(state.size()) + " arms, environment has " +
                     std::to_string(env.size()));
}

inline StepOutcome pull(AgentState& state, const BanditEnvironment& env, Rng& rng, std::size_t arm) {
  const bool reward = draw_reward(rng, env.arms[arm].probability);
  state.record(arm, reward);
  return {arm, reward};
}

inline std::size_t greedy_arm(const AgentState& state) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < state.size(); ++a) {
    if (state.empirical_mean(a) > state.empirical_mean(best)) best = a;
  }
  return best;
}

}  // namespace detail

inline StepOutcome thompson_step(AgentState& state, const BanditEnvironment& env, Rng& rng) {
  detail::check_dimensions(state, env);
  std::size_t best = 0;
  double best_sample = -1.0;
  for (std::size_t a = 0; a < state.size(); ++a) {
    const double theta = sample_beta(rng, static_cast<double>(state.alpha[a]),
                                     static_cast<double>(state.beta[a]));
    if (theta > best_sample) {
      best_sample = theta;
      best = a;
    }
  }
  return detail::pull(state, env, rng, best);
}

inline StepOutcome epsilon_greedy_step(AgentState& state, const BanditEnvironment& env, Rng& rng,
                                       double epsilon) {
  detail::check_dimensions(state, env);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  std::size_t arm;
  if (u < epsilon)
    arm = std::uniform_int_distribution<std::size_t>(0, state.size() - 1)(rng);
  else
    arm = detail::greedy_arm(state);
  return detail::pull(state, env, rng, arm);
}

inline StepOutcome ucb_step(AgentState& state, const BanditEnvironment& env, Rng& rng, double c) {
  detail::check_dimensions(state, env);
  for (std::size_t a = 0; a < state.size(); ++a) {
    if (state.pulls[a] == 0) return detail::pull(state, env, rng, a);
  }
  const double log_t = std::log(static_cast<double>(state.total_pulls()));
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t a = 0; a < state.size(); ++a) {
    const double score =
        state.empirical_mean(a) + c * std::sqrt(2.0 * log_t / static_cast<double>(state.pulls[a]));
    if (score > best_score) {
      best_score = score;
      best = a;
    }
  }
  return detail::pull(state, env, rng, best);
}

inline StepOutcome strategy_step(AgentState& state, const BanditEnvironment& env, Rng& rng,
                                 const SimulationConfig& config) {
  switch (config.strategy) {
    case Strategy::thompson: return thompson_step(state, env, rng);
    case Strategy::epsilon_greedy: return epsilon_greedy_step(state, env, rng, config.epsilon);
    case Strategy::ucb: return ucb_step(state, env, rng, config.ucb_c);
  }
  return thompson_step(state, env, rng);
}

inline double final_estimate(const AgentState& state, std::size_t arm, Strategy strategy) {
  return strategy == Strategy::thompson ? state.posterior_mean(arm) : state.empirical_mean(arm);
}

struct RunTrace {
  std::vector<std::uint32_t> arms;
  std::vector<std::uint8_t> rewards;
  std::vector<std::uint64_t> selection_counts;
  std::vector<double> estimates;
  AgentState final_state;

  std::vector<double> average_reward() const {
    std::vector<double> avg(rewards.size());
    double sum = 0.0;
    for (std::size_t t = 0; t < rewards.size(); ++t) {
      sum += rewards[t];
      avg[t] = sum / static_cast<double>(t + 1);
    }
    return avg;
  }
};

struct SimulationTrace {
  std::size_t num_arms = 0;
  std::size_t steps = 0;
  std::vector<RunTrace> runs;
  // Cross-run means, reduced in run order.
  std::vector<double> mean_average_reward;
  std::vector<double> mean_cumulative_selections;  // steps x num_arms, row-major
  std::vector<double> mean_selection_counts;
  std::vector<double> mean_estimates;

  double cumulative_selection(std::size_t step, std::size_t arm) const {
    return mean_cumulative_selections[step * num_arms + arm];
  }
};

inline RunTrace simulate_run(const BanditEnvironment& env, const SimulationConfig& config,
                             std::uint64_t run_index) {
  Rng rng = make_run_rng(config.seed, run_index);
  AgentState state(env.size());
  RunTrace trace;
  trace.arms.reserve(config.steps);
  trace.rewards.reserve(config.steps);
  for (std::size_t t = 0; t < config.steps; ++t) {
    const StepOutcome out = strategy_step(state, env, rng, config);
    trace.arms.push_back(static_cast<std::uint32_t>(out.arm));
    trace.rewards.push_back(out.reward ? 1 : 0);
  }
  trace.selection_counts = state.pulls;
  trace.estimates.resize(env.size());
  for (std::size_t a = 0; a < env.size(); ++a)
    trace.estimates[a] = final_estimate(state, a, config.strategy);
  trace.final_state = std::move(state);
  return trace;
}

inline SimulationTrace run_simulation(const BanditEnvironment& env, const SimulationConfig& config) {
  validate(config);
  if (env.size() < 1) throw InputError("run_simulation: environment has no arms");

  SimulationTrace out;
  out.num_arms = env.size();
  out.steps = config.steps;
  out.runs.resize(config.runs);

  unsigned workers = config.threads != 0 ? config.threads : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(config.runs)));
  if (workers == 1) {
    for (std::size_t r = 0; r < config.runs; ++r) out.runs[r] = simulate_run(env, config, r);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t r = next++; r < config.runs; r = next++)
          out.runs[r] = simulate_run(env, config, r);
      });
    }
  }

  const std::size_t n = env.size();
  const double runs = static_cast<double>(config.runs);
  out.mean_average_reward.assign(config.steps, 0.0);
  out.mean_cumulative_selections.assign(config.steps * n, 0.0);
  out.mean_selection_counts.assign(n, 0.0);
  out.mean_estimates.assign(n, 0.0);
  std::vector<std::uint64_t> cumulative(n);
  for (const auto& run : out.runs) {
    const auto avg = run.average_reward();
    std::fill(cumulative.begin(), cumulative.end(), 0);
    for (std::size_t t = 0; t < config.steps; ++t) {
      out.mean_average_reward[t] += avg[t];
      ++cumulative[run.arms[t]];
      for (std::size_t a = 0; a < n; ++a)
        out.mean_cumulative_selections[t * n + a] += static_cast<double>(cumulative[a]);
    }
    for (std::size_t a = 0; a < n; ++a) {
      out.mean_selection_counts[a] += static_cast<double>(run.selection_counts[a]);
      out.mean_estimates[a] += run.estimates[a];
    }
  }
  for (auto& v : out.mean_average_reward) v /= runs;
  for (auto& v : out.mean_cumulative_selections) v /= runs;
  for (auto& v : out.mean_selection_counts) v /= runs;
  for (auto& v : out.mean_estimates) v /= runs;
  return out;
}

// R_T = T * mu_star - sum_{t <= T} mu_{a_t}, on the hidden arm means.
inline std::vector<double> cumulative_regret(std::span<const std::uint32_t> chosen_arms,
                                             const BanditEnvironment& env) {
  const double best = env.best_mean();
  std::vector<double> regret;
  regret.reserve(chosen_arms.size());
  double total = 0.0;
  for (auto a : chosen_arms) {
    if (a >= env.size())
      throw InputError("cumulative_regret: arm index " + std::to_string(a) +
                       " outside environment of " + std::to_string(env.size()) + " arms");
    total += best - env.arms[a].probability;
    regret.push_back(total);
  }
  return regret;
}

inline std::vector<double> cumulative_regret(const RunTrace& run, const BanditEnvironment& env) {
  return cumulative_regret(std::span<const std::uint32_t>(run.arms), env);
}

// Cross-run mean regret curve.
inline std::vector<double> cumulative_regret(const SimulationTrace& trace,
                                             const BanditEnvironment& env) {
  if (trace.num_arms != env.size())
    throw InputError("cumulative_regret: trace has " + std::to_string(trace.num_arms) +
                     " arms, environment has " + std::to_string(env.size()));
  std::vector<double> mean(trace.steps, 0.0);
  for (const auto& run : trace.runs) {
    const auto r = cumulative_regret(run, env);
    for (std::size_t t = 0; t < trace.steps; ++t) mean[t] += r[t];
  }
  for (auto& v : mean) v /= static_cast<double>(trace.runs.size());
  return mean;
}

}  // namespace apme
