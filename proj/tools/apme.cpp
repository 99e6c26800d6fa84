#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "apme/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"apme: question difficulty from solver marks and time"};
  app.require_subcommand(1);

  apme::cli::IngestOptions ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Convert a source dataset into canonical records");
  ingest_cmd->add_option("--schema", ingest.schema, "skyben | timss | jee | generic")
      ->check(CLI::IsMember({"skyben", "timss", "jee", "generic"}));
  ingest_cmd->add_option("--input,-i", ingest.input, "Source file")->required();
  ingest_cmd->add_option("--output,-o", ingest.output, "Canonical records CSV")->required();
  ingest_cmd->add_option("--min-responses", ingest.min_responses,
                         "TIMSS: minimum retained responses per problem");
  ingest_cmd->add_option("--nominal-time-ms", ingest.nominal_time_ms,
                         "JEE: time assigned to every expanded response");
  ingest_cmd->add_option("--exam-duration-ms", ingest.exam_duration_ms,
                         "JEE: exam length used when --nominal-time-ms is not given");

  apme::cli::StatsOptions stats;
  auto* stats_cmd = app.add_subcommand("stats", "Per-problem eta, psi and arm probabilities");
  stats_cmd->add_option("--records,-i", stats.records, "Canonical records CSV")->required();
  stats_cmd->add_option("--scheme", stats.scheme, "Marking scheme JSON");
  stats_cmd->add_option("--output,-o", stats.output, "Stats CSV")->required();
  stats_cmd->add_option("--alpha", stats.alpha);
  stats_cmd->add_option("--time-unit-divisor", stats.time_unit_divisor);
  stats_cmd->add_option("--epsilon-smooth", stats.epsilon_smooth);
  stats_cmd->add_option("--a1", stats.a1);
  stats_cmd->add_option("--a2", stats.a2);
  stats_cmd->add_option("--true-value", stats.true_value);

  apme::cli::SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run the bandit simulation over a stats file");
  sim_cmd->add_option("--stats,-i", sim.stats, "Stats CSV")->required();
  sim_cmd->add_option("--strategy", sim.strategy, "thompson | epsilon_greedy | ucb");
  sim_cmd->add_option("--steps", sim.steps, "Pulls per run");
  auto* runs_opt = sim_cmd->add_option("--runs", sim.runs, "Independent runs");
  sim_cmd->add_option("--experiments", sim.experiments, "Total pulls; sets runs = experiments / steps")
      ->excludes(runs_opt);
  sim_cmd->add_option("--seed", sim.seed, "Seed (default: $APME_SEED, else 0)");
  sim_cmd->add_option("--epsilon", sim.epsilon, "epsilon_greedy exploration rate");
  sim_cmd->add_option("--ucb-c", sim.ucb_c, "UCB exploration weight");
  sim_cmd->add_option("--threads", sim.threads, "Worker threads (0 = all cores)");
  sim_cmd->add_option("--trace", sim.trace_out, "Per-step trace CSV");
  sim_cmd->add_option("--curves", sim.curves_out, "Aggregate curve CSV");
  sim_cmd->add_option("--estimates", sim.estimates_out, "Estimates JSON");

  apme::cli::EvaluateOptions eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score estimates against hidden probabilities");
  eval_cmd->add_option("--estimates", eval.estimates, "Estimates JSON")->required();
  eval_cmd->add_option("--stats", eval.stats, "Stats CSV")->required();
  eval_cmd->add_option("--output,-o", eval.output, "Report JSON")->required();

  apme::cli::RankOptions rank;
  auto* rank_cmd = app.add_subcommand("rank", "Order problems from easiest to hardest");
  rank_cmd->add_option("--stats,-i", rank.stats, "Stats CSV")->required();
  rank_cmd->add_option("--output,-o", rank.output, "Ranking CSV")->required();

  apme::cli::PlotOptions plot;
  auto* plot_cmd = app.add_subcommand("plot", "Render an SVG figure plus sidecar CSV");
  plot_cmd->add_option("--input,-i", plot.input, "Trace CSV or records CSV")->required();
  plot_cmd->add_option("--kind", plot.kind, "avg-reward | selections | marks-hist")->required();
  plot_cmd->add_option("--output,-o", plot.output, "SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : apme::cli::kValidation;
  }

  if (*ingest_cmd) return apme::cli::cmd_ingest(ingest, std::cout, std::cerr);
  if (*stats_cmd) return apme::cli::cmd_stats(stats, std::cout, std::cerr);
  if (*sim_cmd) return apme::cli::cmd_simulate(sim, std::cout, std::cerr);
  if (*eval_cmd) return apme::cli::cmd_evaluate(eval, std::cout, std::cerr);
  if (*rank_cmd) return apme::cli::cmd_rank(rank, std::cout, std::cerr);
  if (*plot_cmd) return apme::cli::cmd_plot(plot, std::cout, std::cerr);
  return apme::cli::kValidation;
}
