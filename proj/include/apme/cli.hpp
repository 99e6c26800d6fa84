#pragma once

// Subcommand bodies for the `apme` binary. Each returns the process exit
// code: 0 success, 1 validation / schema error, 2 I/O error. Outputs are
// only written after every input has been validated.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "apme/bandit.hpp"
#include "apme/csv.hpp"
#include "apme/error.hpp"
#include "apme/evaluation.hpp"
#include "apme/ingestion.hpp"
#include "apme/io.hpp"
#include "apme/metrics.hpp"
#include "apme/plot.hpp"

namespace apme::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kIo = 2 };

inline int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }
}

// ---------------------------------------------------------------------------
// ingest

struct IngestOptions {
  std::string schema = "generic";
  std::string input;
  std::string output;
  std::size_t min_responses = 3500;
  std::int64_t nominal_time_ms = 0;  // 0: exam duration / question count
  std::int64_t exam_duration_ms = 3 * 60 * 60 * 1000;
};

inline std::string report_json(const IngestReport& r) {
  nlohmann::ordered_json j;
  j["rows_read"] = r.rows_read;
  j["rows_dropped_invalid"] = r.rows_dropped_invalid;
  j["problems_retained"] = r.problems_retained;
  j["problems_filtered_below_threshold"] = r.problems_filtered_below_threshold;
  return j.dump();
}

inline IngestResult ingest_jee(const std::string& path, std::int64_t nominal_time_ms,
                               std::int64_t exam_duration_ms) {
  IngestResult result;
  const auto questions = load_jee_counts(path, &result.report);
  if (questions.empty()) throw SchemaError("jee: no valid question rows");
  std::int64_t nominal = nominal_time_ms;
  if (nominal == 0) {
    if (exam_duration_ms <= 0) throw InputError("jee: exam duration must be positive");
    nominal = exam_duration_ms / static_cast<std::int64_t>(questions.size());
  }
  if (nominal <= 0) throw InputError("jee: nominal time must be positive");
  for (const auto& q : questions) {
    const MarkingScheme scheme = shift_marks(jee_marking_scheme(q.scheme));
    auto expanded = expand_jee_counts(q, scheme, nominal);
    result.records.insert(result.records.end(), std::make_move_iterator(expanded.begin()),
                          std::make_move_iterator(expanded.end()));
  }
  return result;
}

inline int cmd_ingest(const IngestOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    IngestResult result;
    if (opt.schema == "generic") {
      result = load_generic_csv(opt.input);
    } else if (opt.schema == "skyben") {
      result = load_skyben_csv(opt.input);
    } else if (opt.schema == "timss") {
      if (opt.min_responses < 1) throw InputError("--min-responses must be >= 1");
      const auto rows = load_timss_csv(opt.input);
      result = preprocess_timss(rows, opt.min_responses);
    } else if (opt.schema == "jee") {
      result = ingest_jee(opt.input, opt.nominal_time_ms, opt.exam_duration_ms);
    } else {
      throw InputError("unknown schema '" + opt.schema + "' (expected skyben|timss|jee|generic)");
    }
    std::ostringstream csv_out;
    write_canonical_csv(result.records, csv_out);
    io::write_file_atomic(opt.output, csv_out.str());
    out << report_json(result.report) << '\n';
    return static_cast<int>(kOk);
  });
}

// ---------------------------------------------------------------------------
// stats

struct StatsOptions {
  std::string records;
  std::string scheme;  // optional JSON scheme file
  std::string output;
  std::optional<double> alpha;
  std::optional<double> time_unit_divisor;
  std::optional<double> epsilon_smooth;
  std::optional<double> a1;
  std::optional<double> a2;
  std::optional<double> true_value;
};

inline MarkingScheme resolve_scheme(const StatsOptions& opt) {
  MarkingScheme scheme = opt.scheme.empty() ? MarkingScheme{} : io::load_scheme(opt.scheme);
  if (opt.alpha) scheme.alpha = *opt.alpha;
  if (opt.time_unit_divisor) scheme.time_unit_divisor = *opt.time_unit_divisor;
  if (opt.epsilon_smooth) scheme.epsilon_smooth = *opt.epsilon_smooth;
  if (opt.a1) scheme.modulator_a1 = *opt.a1;
  if (opt.a2) scheme.modulator_a2 = *opt.a2;
  if (opt.true_value) scheme.true_value = *opt.true_value;
  validate(scheme);
  return scheme;
}

inline std::vector<io::StatsRow> compute_stats(const std::vector<ResponseRecord>& records,
                                               const MarkingScheme& scheme, std::ostream& err) {
  std::vector<ProblemStats> stats;
  for (const auto& group : group_by_problem(records)) {
    if (group.size() < 2) {
      err << "warning: problem '" << group.front().problem_id << "' has " << group.size()
          << " record(s); excluded\n";
      continue;
    }
    stats.push_back(aggregate_problem(group, scheme));
  }
  if (stats.empty()) throw InsufficientDataError("no problem has at least 2 records");

  std::vector<io::StatsRow> rows;
  for (const auto& s : stats) rows.push_back({s, modulated_return(s.psi, scheme), 1.0});
  if (stats.size() >= 2) {
    const auto probs = assign_probabilities(stats, scheme);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].probability = probs.entries[i].second;
  }
  return rows;
}

inline int cmd_stats(const StatsOptions& opt, std::ostream& /*out*/, std::ostream& err) {
  return guarded(err, [&] {
    const MarkingScheme scheme = resolve_scheme(opt);
    const auto loaded = load_generic_csv(opt.records);
    const auto rows = compute_stats(loaded.records, scheme, err);
    io::write_file_atomic(opt.output, io::format_stats_csv(rows));
    return static_cast<int>(kOk);
  });
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  std::string stats;
  std::string strategy = "thompson";
  long long steps = 1000;
  long long runs = 1;
  // Total pulls across runs; when set, runs = round(experiments / steps).
  std::optional<long long> experiments;
  std::optional<std::uint64_t> seed;
  double epsilon = 0.1;
  double ucb_c = 1.0;
  unsigned threads = 0;
  std::string trace_out;
  std::string curves_out;
  std::string estimates_out;
};

// --seed, else APME_SEED, else 0.
inline std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("APME_SEED"); env && *env) {
    const auto v = csv::parse_int(env);
    if (!v || *v < 0) throw InputError(std::string("APME_SEED is not a valid seed: '") + env + "'");
    return static_cast<std::uint64_t>(*v);
  }
  return 0;
}

inline int cmd_simulate(const SimulateOptions& opt, std::ostream& /*out*/, std::ostream& err) {
  return guarded(err, [&] {
    const auto strategy = parse_strategy(opt.strategy);
    if (!strategy)
      throw InputError("unknown strategy '" + opt.strategy + "' (expected thompson|epsilon_greedy|ucb)");
    if (opt.steps < 1) throw InputError("--steps must be >= 1");
    long long runs = opt.runs;
    if (opt.experiments) {
      if (*opt.experiments < 1) throw InputError("--experiments must be >= 1");
      runs = std::max(1LL, std::llround(static_cast<double>(*opt.experiments) /
                                        static_cast<double>(opt.steps)));
    }
    if (runs < 1) throw InputError("--runs must be >= 1");
    if (opt.trace_out.empty() && opt.curves_out.empty() && opt.estimates_out.empty())
      throw InputError("no output requested (--trace, --curves, --estimates)");

    SimulationConfig config;
    config.strategy = *strategy;
    config.steps = static_cast<std::size_t>(opt.steps);
    config.runs = static_cast<std::size_t>(runs);
    config.seed = resolve_seed(opt.seed);
    config.epsilon = opt.epsilon;
    config.ucb_c = opt.ucb_c;
    config.threads = opt.threads;
    validate(config);

    const auto rows = io::load_stats(opt.stats);
    const BanditEnvironment env = io::environment_from_stats(rows);
    const SimulationTrace trace = run_simulation(env, config);

    std::string trace_csv, curves_csv, estimates_json;
    if (!opt.trace_out.empty()) trace_csv = io::format_trace_csv(trace);
    if (!opt.curves_out.empty()) curves_csv = io::format_curves_csv(trace);
    if (!opt.estimates_out.empty()) estimates_json = io::format_estimates_json(env, trace);
    if (!opt.trace_out.empty()) io::write_file_atomic(opt.trace_out, trace_csv);
    if (!opt.curves_out.empty()) io::write_file_atomic(opt.curves_out, curves_csv);
    if (!opt.estimates_out.empty()) io::write_file_atomic(opt.estimates_out, estimates_json);
    return static_cast<int>(kOk);
  });
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOptions {
  std::string estimates;
  std::string stats;
  std::string output;
};

inline int cmd_evaluate(const EvaluateOptions& opt, std::ostream& /*out*/, std::ostream& err) {
  return guarded(err, [&] {
    const auto estimates = io::parse_estimates_json(io::read_file(opt.estimates));
    const auto rows = io::load_stats(opt.stats);

    std::map<std::string, double> by_id;
    for (const auto& e : estimates) by_id[e.problem_id] = e.estimate;
    std::set<std::string> stats_ids;
    for (const auto& r : rows) stats_ids.insert(r.stats.problem_id);
    std::vector<std::string> only_estimates, only_stats;
    for (const auto& [id, _] : by_id)
      if (!stats_ids.contains(id)) only_estimates.push_back(id);
    for (const auto& id : stats_ids)
      if (!by_id.contains(id)) only_stats.push_back(id);
    if (!only_estimates.empty() || !only_stats.empty()) {
      std::string msg = "problem sets differ;";
      for (const auto& id : only_estimates) msg += " estimates-only:" + id;
      for (const auto& id : only_stats) msg += " stats-only:" + id;
      throw InputError(msg);
    }

    std::vector<std::string> ids;
    std::vector<double> hidden, predicted;
    for (const auto& r : rows) {
      ids.push_back(r.stats.problem_id);
      hidden.push_back(r.probability);
      predicted.push_back(by_id.at(r.stats.problem_id));
    }
    const auto report = evaluate(ids, hidden, predicted);
    io::write_file_atomic(opt.output, io::format_report_json(report));
    return static_cast<int>(kOk);
  });
}

// ---------------------------------------------------------------------------
// rank

struct RankOptions {
  std::string stats;
  std::string output;
};

inline int cmd_rank(const RankOptions& opt, std::ostream& /*out*/, std::ostream& err) {
  return guarded(err, [&] {
    const auto rows = io::load_stats(opt.stats);
    if (rows.empty()) throw InsufficientDataError("stats file has no problems");
    std::vector<ProblemStats> stats;
    for (const auto& r : rows) stats.push_back(r.stats);
    io::write_file_atomic(opt.output, io::format_ranking_csv(rank_problems(stats)));
    return static_cast<int>(kOk);
  });
}

// ---------------------------------------------------------------------------
// plot

struct PlotOptions {
  std::string input;
  std::string kind;
  std::string output;
};

inline std::string sidecar_path(const std::string& svg_path) {
  if (svg_path.size() > 4 && svg_path.ends_with(".svg"))
    return svg_path.substr(0, svg_path.size() - 4) + ".csv";
  return svg_path + ".csv";
}

struct TraceTable {
  std::size_t num_arms = 0;
  std::vector<std::vector<std::uint32_t>> arms;  // per run, in step order
  std::vector<std::vector<std::uint8_t>> rewards;
};

inline TraceTable parse_trace_csv(const std::string& text) {
  std::istringstream in(text);
  const csv::Header header = csv::read_header(in);
  const auto step_col = header.at("step");
  const auto run_col = header.at("run");
  const auto arm_col = header.at("arm");
  const auto reward_col = header.at("reward");
  TraceTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = csv::split_line(line);
    const auto step = csv::parse_int(csv::field_or_empty(f, step_col));
    const auto run = csv::parse_int(csv::field_or_empty(f, run_col));
    const auto arm = csv::parse_int(csv::field_or_empty(f, arm_col));
    const auto reward = csv::parse_int(csv::field_or_empty(f, reward_col));
    if (!step || !run || !arm || !reward || *run < 0 || *arm < 0 || (*reward != 0 && *reward != 1))
      throw SchemaError("trace file: malformed row '" + line + "'");
    const auto r = static_cast<std::size_t>(*run);
    if (r >= t.arms.size()) {
      t.arms.resize(r + 1);
      t.rewards.resize(r + 1);
    }
    if (static_cast<std::size_t>(*step) != t.arms[r].size() + 1)
      throw SchemaError("trace file: steps of run " + std::to_string(r) + " are not consecutive");
    t.arms[r].push_back(static_cast<std::uint32_t>(*arm));
    t.rewards[r].push_back(static_cast<std::uint8_t>(*reward));
    t.num_arms = std::max<std::size_t>(t.num_arms, static_cast<std::size_t>(*arm) + 1);
  }
  if (t.arms.empty()) throw SchemaError("trace file: no rows");
  for (const auto& run : t.arms)
    if (run.size() != t.arms.front().size())
      throw SchemaError("trace file: runs have different lengths");
  return t;
}

// Cross-run mean of per-run prefix-mean reward.
inline std::vector<double> average_reward_curve(const TraceTable& t) {
  const std::size_t steps = t.rewards.front().size();
  std::vector<double> mean(steps, 0.0);
  for (const auto& run : t.rewards) {
    double sum = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
      sum += run[s];
      mean[s] += sum / static_cast<double>(s + 1);
    }
  }
  for (auto& v : mean) v /= static_cast<double>(t.rewards.size());
  return mean;
}

// [arm][step] cross-run mean cumulative selection count.
inline std::vector<std::vector<double>> selection_curves(const TraceTable& t) {
  const std::size_t steps = t.arms.front().size();
  std::vector<std::vector<double>> curves(t.num_arms, std::vector<double>(steps, 0.0));
  std::vector<std::uint64_t> counts(t.num_arms);
  for (const auto& run : t.arms) {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t s = 0; s < steps; ++s) {
      ++counts[run[s]];
      for (std::size_t a = 0; a < t.num_arms; ++a) curves[a][s] += static_cast<double>(counts[a]);
    }
  }
  for (auto& c : curves)
    for (auto& v : c) v /= static_cast<double>(t.arms.size());
  return curves;
}

inline int cmd_plot(const PlotOptions& opt, std::ostream& /*out*/, std::ostream& err) {
  return guarded(err, [&] {
    if (opt.kind != "avg-reward" && opt.kind != "selections" && opt.kind != "marks-hist")
      throw InputError("unknown plot kind '" + opt.kind + "' (expected avg-reward|selections|marks-hist)");

    std::string svg;
    std::ostringstream side;
    if (opt.kind == "marks-hist") {
      const auto loaded = load_generic_csv(opt.input);
      if (loaded.records.empty()) throw InsufficientDataError("records file has no valid rows");
      std::map<double, std::size_t> counts;
      for (const auto& r : loaded.records) ++counts[r.marks];
      std::vector<std::string> labels;
      std::vector<double> values;
      side << "marks,count\n";
      for (const auto& [m, c] : counts) {
        labels.push_back(csv::format_double(m));
        values.push_back(static_cast<double>(c));
        side << csv::format_double(m) << ',' << c << '\n';
      }
      svg = plot::render_bars({"Distribution of marks", "Marks", "Count"}, labels, values);
    } else {
      const auto table = parse_trace_csv(io::read_file(opt.input));
      const std::size_t steps = table.arms.front().size();
      std::vector<double> x(steps);
      for (std::size_t s = 0; s < steps; ++s) x[s] = static_cast<double>(s + 1);
      if (opt.kind == "avg-reward") {
        const auto avg = average_reward_curve(table);
        side << "step,avg_reward\n";
        for (std::size_t s = 0; s < steps; ++s)
          side << s + 1 << ',' << csv::format_double(avg[s]) << '\n';
        svg = plot::render_lines({"Average Reward Over Time", "Steps", "Average Reward"},
                                 {{"average reward", x, avg}});
      } else {
        const auto curves = selection_curves(table);
        std::vector<plot::Series> series;
        side << "step";
        for (std::size_t a = 0; a < curves.size(); ++a) {
          side << ",arm_" << a;
          series.push_back({"arm " + std::to_string(a), x, curves[a]});
        }
        side << '\n';
        for (std::size_t s = 0; s < steps; ++s) {
          side << s + 1;
          for (const auto& c : curves) side << ',' << csv::format_double(c[s]);
          side << '\n';
        }
        svg = plot::render_lines(
            {"Cumulative count of arm selections", "Steps", "Cumulative selections"}, series);
      }
    }
    io::write_file_atomic(opt.output, svg);
    io::write_file_atomic(sidecar_path(opt.output), side.str());
    return static_cast<int>(kOk);
  });
}

}  // namespace apme::cli
