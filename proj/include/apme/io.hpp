#pragma once

// On-disk formats: scheme file (JSON), per-problem stats CSV, simulation
// trace / curve CSVs, estimates JSON, evaluation report JSON, ranking CSV.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "apme/bandit.hpp"
#include "apme/csv.hpp"
#include "apme/error.hpp"
#include "apme/evaluation.hpp"
#include "apme/metrics.hpp"

namespace apme::io {

using ordered_json = nlohmann::ordered_json;

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes through a temporary sibling and renames, so a failed write never
// leaves a partial file at `path`.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("write to '" + path + "' failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output into '" + path + "'");
  }
}

// ---------------------------------------------------------------------------
// Scheme file

namespace detail {

inline double number_field(const ordered_json& j, const char* key) {
  if (!j.is_number()) throw SchemaError(std::string("scheme file: '") + key + "' must be a number");
  return j.get<double>();
}

}  // namespace detail

// {alpha, marks: {outcome: value}, modulator: {a1, a2}, true_value,
//  time_unit_divisor, epsilon_smooth}. Omitted keys keep their defaults;
// unknown keys are rejected.
inline MarkingScheme parse_scheme(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("scheme file: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("scheme file: top level must be an object");

  MarkingScheme scheme;
  for (const auto& [key, value] : doc.items()) {
    if (key == "alpha") {
      scheme.alpha = detail::number_field(value, "alpha");
    } else if (key == "true_value") {
      scheme.true_value = detail::number_field(value, "true_value");
    } else if (key == "time_unit_divisor") {
      scheme.time_unit_divisor = detail::number_field(value, "time_unit_divisor");
    } else if (key == "epsilon_smooth") {
      scheme.epsilon_smooth = detail::number_field(value, "epsilon_smooth");
    } else if (key == "marks") {
      if (!value.is_object()) throw SchemaError("scheme file: 'marks' must be an object");
      scheme.outcome_marks.clear();
      for (const auto& [outcome, m] : value.items())
        scheme.outcome_marks[outcome] = detail::number_field(m, "marks");
    } else if (key == "modulator") {
      if (!value.is_object()) throw SchemaError("scheme file: 'modulator' must be an object");
      for (const auto& [mk, mv] : value.items()) {
        if (mk == "a1")
          scheme.modulator_a1 = detail::number_field(mv, "modulator.a1");
        else if (mk == "a2")
          scheme.modulator_a2 = detail::number_field(mv, "modulator.a2");
        else
          throw SchemaError("scheme file: unknown key 'modulator." + mk + "'");
      }
    } else {
      throw SchemaError("scheme file: unknown key '" + key + "'");
    }
  }
  try {
    validate(scheme);
  } catch (const std::exception& e) {
    throw SchemaError(std::string("scheme file: ") + e.what());
  }
  return scheme;
}

inline MarkingScheme load_scheme(const std::string& path) { return parse_scheme(read_file(path)); }

inline std::string dump_scheme(const MarkingScheme& s) {
  ordered_json j;
  j["alpha"] = s.alpha;
  j["marks"] = ordered_json::object();
  for (const auto& [k, v] : s.outcome_marks) j["marks"][k] = v;
  j["modulator"] = {{"a1", s.modulator_a1}, {"a2", s.modulator_a2}};
  j["true_value"] = s.true_value;
  j["time_unit_divisor"] = s.time_unit_divisor;
  j["epsilon_smooth"] = s.epsilon_smooth;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Stats CSV: problem_id,k,mean_eta,std_eta,psi,reward,probability,degenerate

struct StatsRow {
  ProblemStats stats;
  double reward = 0.0;
  double probability = 0.0;
};

inline std::string format_stats_csv(const std::vector<StatsRow>& rows) {
  std::ostringstream out;
  out << "problem_id,k,mean_eta,std_eta,psi,reward,probability,degenerate\n";
  for (const auto& r : rows) {
    out << csv::escape(r.stats.problem_id) << ',' << r.stats.k << ','
        << csv::format_double(r.stats.mean_eta) << ',' << csv::format_double(r.stats.std_eta)
        << ',' << csv::format_double(r.stats.psi) << ',' << csv::format_double(r.reward) << ','
        << csv::format_double(r.probability) << ',' << (r.stats.degenerate ? "true" : "false")
        << '\n';
  }
  return out.str();
}

inline std::vector<StatsRow> parse_stats_csv(const std::string& text) {
  std::istringstream in(text);
  const csv::Header header = csv::read_header(in);
  const auto id_col = header.at("problem_id");
  const auto k_col = header.at("k");
  const auto mean_col = header.at("mean_eta");
  const auto std_col = header.at("std_eta");
  const auto psi_col = header.at("psi");
  const auto prob_col = header.at("probability");

  std::vector<StatsRow> rows;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = csv::split_line(line);
    StatsRow row;
    row.stats.problem_id = std::string(csv::trim(csv::field_or_empty(f, id_col)));
    const auto k = csv::parse_int(csv::field_or_empty(f, k_col));
    const auto mean = csv::parse_double(csv::field_or_empty(f, mean_col));
    const auto sd = csv::parse_double(csv::field_or_empty(f, std_col));
    const auto psi = csv::parse_double(csv::field_or_empty(f, psi_col));
    const auto prob = csv::parse_double(csv::field_or_empty(f, prob_col));
    if (row.stats.problem_id.empty() || !k || *k < 0 || !mean || !sd || !psi || !prob)
      throw SchemaError("stats file: malformed row at line " + std::to_string(line_no));
    row.stats.k = static_cast<std::size_t>(*k);
    row.stats.mean_eta = *mean;
    row.stats.std_eta = *sd;
    row.stats.psi = *psi;
    row.stats.degenerate = *sd == 0.0;
    row.probability = *prob;
    row.reward = *psi;
    if (header.has("reward")) {
      const auto reward = csv::parse_double(csv::field_or_empty(f, header.at("reward")));
      if (!reward) throw SchemaError("stats file: malformed reward at line " + std::to_string(line_no));
      row.reward = *reward;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<StatsRow> load_stats(const std::string& path) {
  return parse_stats_csv(read_file(path));
}

inline BanditEnvironment environment_from_stats(const std::vector<StatsRow>& rows) {
  ArmProbabilities probs;
  for (const auto& r : rows) probs.entries.emplace_back(r.stats.problem_id, r.probability);
  return build_environment(probs);
}

// ---------------------------------------------------------------------------
// Simulation outputs

// step,run,arm,reward; run-major, steps 1-based.
inline std::string format_trace_csv(const SimulationTrace& trace) {
  std::string out = "step,run,arm,reward\n";
  out.reserve(out.size() + trace.runs.size() * trace.steps * 16);
  char buf[64];
  for (std::size_t r = 0; r < trace.runs.size(); ++r) {
    const auto& run = trace.runs[r];
    for (std::size_t t = 0; t < run.arms.size(); ++t) {
      const int n = std::snprintf(buf, sizeof buf, "%zu,%zu,%u,%u\n", t + 1, r,
                                  static_cast<unsigned>(run.arms[t]),
                                  static_cast<unsigned>(run.rewards[t]));
      out.append(buf, static_cast<std::size_t>(n));
    }
  }
  return out;
}

// step,avg_reward,arm_0_count,...,arm_{n-1}_count (cross-run means).
inline std::string format_curves_csv(const SimulationTrace& trace) {
  std::ostringstream out;
  out << "step,avg_reward";
  for (std::size_t a = 0; a < trace.num_arms; ++a) out << ",arm_" << a << "_count";
  out << '\n';
  for (std::size_t t = 0; t < trace.steps; ++t) {
    out << t + 1 << ',' << csv::format_double(trace.mean_average_reward[t]);
    for (std::size_t a = 0; a < trace.num_arms; ++a)
      out << ',' << csv::format_double(trace.cumulative_selection(t, a));
    out << '\n';
  }
  return out.str();
}

struct Estimate {
  std::string problem_id;
  double estimate = 0.0;
  double pulls = 0.0;
};

inline std::string format_estimates_json(const BanditEnvironment& env, const SimulationTrace& trace) {
  ordered_json j = ordered_json::object();
  for (std::size_t a = 0; a < env.size(); ++a)
    j[env.arms[a].problem_id] = {{"estimate", trace.mean_estimates[a]},
                                 {"pulls", trace.mean_selection_counts[a]}};
  return j.dump(2) + "\n";
}

inline std::vector<Estimate> parse_estimates_json(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("estimates file: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("estimates file: top level must be an object");
  std::vector<Estimate> out;
  for (const auto& [id, v] : doc.items()) {
    if (!v.is_object() || !v.contains("estimate") || !v["estimate"].is_number())
      throw SchemaError("estimates file: entry '" + id + "' lacks a numeric 'estimate'");
    Estimate e{id, v["estimate"].get<double>(), 0.0};
    if (v.contains("pulls") && v["pulls"].is_number()) e.pulls = v["pulls"].get<double>();
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation and ranking

inline ordered_json number_or_null(double v) {
  return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

inline std::string format_report_json(const EvaluationReport& report) {
  ordered_json j;
  j["r_squared"] = number_or_null(report.r_squared);
  j["rmse"] = number_or_null(report.rmse);
  j["spearman"] = number_or_null(report.spearman);
  j["target"] = "hidden_arm_probability";
  j["per_arm"] = ordered_json::array();
  for (const auto& a : report.per_arm)
    j["per_arm"].push_back({{"problem_id", a.problem_id},
                            {"hidden", a.hidden},
                            {"estimate", a.estimate},
                            {"abs_error", a.abs_error}});
  return j.dump(2) + "\n";
}

inline std::string format_ranking_csv(const std::vector<RankedProblem>& ranked) {
  std::ostringstream out;
  out << "rank,problem_id,psi,mean_eta,std_eta\n";
  for (const auto& r : ranked)
    out << r.rank << ',' << csv::escape(r.problem_id) << ',' << csv::format_double(r.psi) << ','
        << csv::format_double(r.mean_eta) << ',' << csv::format_double(r.std_eta) << '\n';
  return out.str();
}

}  // namespace apme::io
