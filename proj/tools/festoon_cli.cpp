// Command-line front end: simulate Gaussian convex hulls, sample the
// rescaled limit process, estimate variance constants over independent
// routes, and run model diagnostics. All randomness is driven by an
// explicit master seed; outputs are CSV tables plus a JSON sidecar.

#include <CLI11.hpp>
#include <festoon/io.hpp>

#include <iostream>
#include <string>
#include <vector>

namespace {

void add_common(CLI::App* sub, festoon::RunConfig& cfg,
                std::string& config_path) {
  sub->add_option("--config", config_path,
                  "JSON config file; explicit flags override its values");
  sub->add_option("--dim", cfg.dim, "ambient dimension (2-6)");
  sub->add_option("--n", cfg.n, "binomial sample size");
  sub->add_flag("--binomial", cfg.binomial,
                "draw a fixed-size sample instead of a Poisson cloud");
  sub->add_option("--lambda", cfg.lambda, "Poisson intensity");
  sub->add_option("--grid", cfg.grid,
                  "sweep grid (sample sizes or intensities)")
      ->delimiter(',');
  sub->add_option("--reps", cfg.reps, "replicates (0 = command default)");
  sub->add_option("--seed", cfg.seed, "master seed (required; never timed)");
  sub->add_option("--workers", cfg.workers, "worker threads");
  sub->add_option("--window-l", cfg.window_lengths,
                  "limit-window lengths, increasing")
      ->delimiter(',');
  sub->add_option("--hmax", cfg.h_max, "height cap of the limit window");
  sub->add_option("--route", cfg.route,
                  "estimate: all | direct | limit | window");
  sub->add_option("--functional", cfg.functional,
                  "simulate: f<k>, v<k>, or volume");
  sub->add_option("--k", cfg.k, "face dimension for score diagnostics");
  sub->add_option("--failure-budget", cfg.failure_budget,
                  "tolerated failed-replicate fraction");
  sub->add_option("--out", cfg.out_dir, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  festoon::RunConfig cfg;
  std::string config_path;

  // The config file must land before flag values so flags can override it:
  // find it with a pre-scan, then let the real parse overwrite.
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc)
      config_path = argv[i + 1];
    else if (a.rfind("--config=", 0) == 0)
      config_path = a.substr(9);
  }
  try {
    if (!config_path.empty()) festoon::load_config_file(config_path, cfg);
    cfg.config_path = config_path;

    CLI::App app{
        "festoon: convex hulls of Gaussian clouds, their rescaled boundary "
        "process, and variance-constant estimation"};
    app.require_subcommand(1);
    CLI::App* sim = app.add_subcommand(
        "simulate", "sweep hull statistics over sample size or intensity");
    CLI::App* lim = app.add_subcommand(
        "limit-model", "sample the limit point process and its festoon");
    CLI::App* est = app.add_subcommand(
        "estimate", "vertex-count variance constant via independent routes");
    CLI::App* dia = app.add_subcommand(
        "diagnostics", "intensity fit, paraboloid gap, tails, normality");
    CLI::App* rep = app.add_subcommand(
        "report", "validate and index the CSV outputs in a directory");
    for (CLI::App* sub : {sim, lim, est, dia, rep})
      add_common(sub, cfg, config_path);

    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e);
      return code == 0 ? 0 : festoon::kExitConfig;
    }

    CLI::App* chosen = app.get_subcommands().front();
    cfg.command = chosen->get_name();
    if (chosen->count("--seed") > 0) cfg.seed_set = true;
    return festoon::run_command(cfg, std::cout);
  } catch (const std::invalid_argument& e) {
    std::cout << "error: invalid configuration: " << e.what() << "\n";
    return festoon::kExitConfig;
  } catch (const std::exception& e) {
    std::cout << "error: " << e.what() << "\n";
    return 1;
  }
}
