#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "repsig/cli.hpp"

int main(int argc, char** argv) {
  namespace cli = repsig::cli;

  CLI::App app{"repsig: early-stopping A/B test plans based on repeated significance"};
  app.require_subcommand(1);

  auto* plan_cmd = app.add_subcommand("plan", "Plan document commands");
  plan_cmd->require_subcommand(1);
  auto* validate_cmd = plan_cmd->add_subcommand("validate", "Check a plan document");
  std::string validate_path;
  bool validate_json = false;
  validate_cmd->add_option("path", validate_path, "Plan JSON file")->required();
  validate_cmd->add_flag("--json", validate_json, "Print the result as JSON on stdout");

  auto* thresholds_cmd = app.add_subcommand("thresholds", "Print per-decision-point thresholds");
  std::string thresholds_path;
  std::optional<std::string> criterion;
  std::optional<std::string> points;
  thresholds_cmd->add_option("path", thresholds_path, "Plan JSON file")->required();
  thresholds_cmd->add_option("--criterion", criterion, "Criterion id (optional for single-criterion plans)");
  thresholds_cmd->add_option("--points", points, "Decision index range t1..t2 (or a single t)");

  auto* monitor_cmd = app.add_subcommand("monitor", "Replay a p-value log against a plan");
  std::string monitor_plan;
  std::string monitor_log;
  bool lenient = false;
  bool monitor_json = false;
  monitor_cmd->add_option("plan", monitor_plan, "Plan JSON file")->required();
  monitor_cmd->add_option("log", monitor_log, "CSV log with header t,criterion_id,p")->required();
  monitor_cmd->add_flag("--lenient-unlimited", lenient,
                        "Unlimited plans: keep hits qualified at arrival (non-default reading)");
  monitor_cmd->add_flag("--json", monitor_json, "Print the decision as JSON");

  auto* curves_cmd = app.add_subcommand("curves", "Emit Z-score curve data as CSV");
  std::string which;
  cli::CurveOptions curve_opts;
  std::optional<double> rho;
  curves_cmd->add_option("figure", which, "fig4 | fig5 | fig6 | fig7")->required();
  curves_cmd->add_option("--alphas", curve_opts.alphas, "Alpha lines for fig4/fig6");
  curves_cmd->add_option("--dm-max", curve_opts.dm_max, "Largest d*m for fig4");
  curves_cmd->add_option("--alpha", curve_opts.alpha, "fig7 alpha");
  curves_cmd->add_option("--u", curve_opts.u, "fig7 repetition rate");
  curves_cmd->add_option("--t-max", curve_opts.t_max, "fig7 observation horizon");
  curves_cmd->add_option("--rho", rho, "fig7 comparator rho (default: minimum at --t-max)");
  curves_cmd->add_option("--points", curve_opts.points, "fig7 number of t values");

  auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo Type I / power estimation");
  std::string config_path;
  cli::SimulateOptions sim_opts;
  simulate_cmd->add_option("config", config_path, "Simulation JSON (plan + stream)")->required();
  simulate_cmd->add_option("--trials", sim_opts.trials, "Number of trials (overrides config)");
  simulate_cmd->add_option("--seed", sim_opts.seed, "64-bit seed (default: config, then REPSIG_SEED)");
  simulate_cmd->add_option("--out", sim_opts.out_path, "Write the JSON report here instead of stdout");
  simulate_cmd->add_option("--histogram", sim_opts.histogram_path, "Write stop-time histogram CSV here");
  simulate_cmd->add_option("--threads", sim_opts.threads, "Worker threads (0: hardware concurrency)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kExitParse;
  }

  if (*validate_cmd) return cli::cmd_plan_validate(validate_path, validate_json, std::cout, std::cerr);
  if (*thresholds_cmd) return cli::cmd_thresholds(thresholds_path, criterion, points, std::cout, std::cerr);
  if (*monitor_cmd) {
    const auto mode = lenient ? repsig::UnlimitedHitMode::lenient_arrival : repsig::UnlimitedHitMode::requalify;
    return cli::cmd_monitor(monitor_plan, monitor_log, mode, monitor_json, std::cout, std::cerr);
  }
  if (*curves_cmd) {
    curve_opts.rho = rho;
    return cli::cmd_curves(which, curve_opts, std::cout, std::cerr);
  }
  if (*simulate_cmd) return cli::cmd_simulate(config_path, sim_opts, std::cout, std::cerr);
  return cli::kExitParse;
}
