// stratflow command-line front end.
//
//   stratflow run --config cfg.json [--seeds 1,2,3] [--out dir]
//   stratflow check --suite identities|inequalities|montecarlo
//   stratflow plot --report diag_seed1.json [--report ...] [--out dir]
//   stratflow battery

#include "stratflow/experiment.hpp"
#include "stratflow/objectives.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace stratflow;

namespace {

int run_command(const std::string& config, const std::vector<std::uint64_t>& seeds, const std::string& out) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config);
    if (!seeds.empty()) cfg.seeds = seeds;
    if (!out.empty()) cfg.output = out;
    cfg.validate();
  } catch (const ConfigError& ex) {
    std::cerr << "config error: " << ex.what() << '\n';
    return exit_code::config;
  }
  const auto result = run_experiment(cfg);
  for (const auto& m : result.messages) std::cerr << m << '\n';
  std::cout << "wrote " << result.files.size() << " files to " << cfg.output.string() << " (exit "
            << result.exit_code << ")\n";
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonsmooth subgradient methods and their convergence diagnostics"};
  app.require_subcommand(1);

  std::string config, out;
  std::vector<std::uint64_t> seeds;
  auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config");
  run->add_option("--config", config, "Experiment config (JSON)")->required();
  run->add_option("--seeds", seeds, "Override the seed list")->delimiter(',');
  run->add_option("--out", out, "Override the output directory");

  std::string suite;
  auto* check = app.add_subcommand("check", "Run an invariant suite");
  check->add_option("--suite", suite, "Suite name")
      ->required()
      ->check(CLI::IsMember(check_suite_names()));

  std::vector<std::string> reports;
  std::string plot_out;
  auto* plot = app.add_subcommand("plot", "Emit CSV and SVG plot data from diagnostics reports");
  plot->add_option("--report", reports, "diag_seed*.json or summary.json (repeatable)")->required();
  plot->add_option("--out", plot_out, "Output directory (default: <report dir>/plots)");

  auto* list = app.add_subcommand("battery", "List the test functions");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_command(config, seeds, out);
    if (*check) return run_check_suite(suite, std::cout) ? exit_code::ok : exit_code::failure;
    if (*plot) {
      std::vector<std::filesystem::path> paths(reports.begin(), reports.end());
      const auto dir = plot_out.empty() ? paths.front().parent_path() / "plots" : std::filesystem::path(plot_out);
      for (const auto& p : emit_plotdata(paths, dir)) std::cout << p.string() << '\n';
      return exit_code::ok;
    }
    if (*list) {
      for (const auto& f : battery())
        std::cout << f.name << "  (R^" << f.dim << ", Lipschitz bound " << f.lipschitz_bound << ")\n";
      std::cout << "abs  (R^1)\nlinear  (R^n, unbounded below)\n";
      return exit_code::ok;
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return exit_code::failure;
  }
  return exit_code::failure;
}
