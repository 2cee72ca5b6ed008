#pragma once

#include "stratflow/diagnostics.hpp"
#include "stratflow/methods.hpp"
#include "stratflow/schedule.hpp"
#include "stratflow/strata.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace stratflow {

/// Process exit codes of the experiment runner.
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int failure = 1;
inline constexpr int config = 2;
inline constexpr int blowup = 3;
inline constexpr int invariant = 4;
}  // namespace exit_code

/// Malformed or invalid configuration. line and column are 1-based and set
/// for syntax errors; they are 0 for semantic errors, which name the key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
      : std::runtime_error(what), line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

struct ScheduleConfig {
  ScheduleKind kind = ScheduleKind::harmonic;
  double c = 1.0;
  double p = 1.0;
  std::size_t k0 = 0;
  std::vector<double> values;

  StepSchedule build() const;
};

struct DiagnosticToggles {
  bool criterion = true;
  bool criticality = true;
  bool bounds = false;
  bool windows = false;
  bool momentum_decomp = false;
  bool strata = false;
};

struct ExperimentConfig {
  std::string function = "abs";
  Eigen::Index dim = 0;  // 0: 1 for "abs", 2 otherwise
  std::string method = "inexact";
  InexactConfig inexact;
  StochasticNoise stochastic;
  MomentumConfig momentum;
  ScheduleConfig schedule;
  std::size_t K = 1000;
  std::vector<std::uint64_t> seeds{0};
  std::optional<std::vector<double>> x0;
  double init_radius = 1.0;
  double blowup_radius = 1e9;

  DiagnosticToggles diagnostics;
  double criticality_r = 1e-3;
  std::size_t criticality_m = 64;
  double zeta = 0.3;
  double gamma = 0.45;
  double theta = 0.5;
  BoundMode bound_mode = BoundMode::inexact;
  double bound_beta = 0.5;
  double level = 0.0;
  std::size_t strata_pairs = 500;
  /// Custom stratification; the battery one for the function otherwise.
  std::optional<Stratification> strata;

  std::filesystem::path output = "out";
  std::size_t thin_every = 1;
  std::size_t dense_tail = 0;

  Eigen::Index dimension() const { return dim > 0 ? dim : (function == "abs" ? 1 : 2); }
  /// Throws ConfigError when constants fall outside their documented ranges.
  void validate() const;
};

/// Parses a JSON configuration. Throws ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Parses the "strata" block of a configuration (a JSON object) into a
/// stratification for functions in R^n. Throws ConfigError.
Stratification parse_stratification(const std::string& json_text, Eigen::Index n);

/// Worker count: min(seeds, STRATFLOW_THREADS or hardware concurrency).
std::size_t worker_count(std::size_t jobs);

struct RunResult {
  int exit_code = exit_code::ok;
  std::vector<std::filesystem::path> files;
  std::vector<std::string> messages;
};

/// Runs every seed, writing traj_seed{S}.csv/.json and diag_seed{S}.json
/// (plus window_, momentum_ and strata_ reports when toggled), then
/// summary.json after all workers finish.
RunResult run_experiment(const ExperimentConfig& cfg);

/// Reads diagnostics reports (diag_seed*.json, or a summary.json listing
/// them) and writes f, tail_diameter, window_ratio and criticality CSV and
/// SVG files into out_dir. Several reports give mean/min/max columns.
/// Throws std::runtime_error on missing input or an empty seed set.
std::vector<std::filesystem::path> emit_plotdata(const std::vector<std::filesystem::path>& reports,
                                                 const std::filesystem::path& out_dir);

/// Invariant suites "identities", "inequalities" and "montecarlo". Prints one
/// line per check; returns true when all pass. Throws std::invalid_argument
/// for an unknown suite.
bool run_check_suite(const std::string& suite, std::ostream& out);
std::vector<std::string> check_suite_names();

}  // namespace stratflow
