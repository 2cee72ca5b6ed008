#include "stratflow/experiment.hpp"

#include <doctest.h>

#include <json.hpp>

#include <fstream>
#include <sstream>

using namespace stratflow;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("stratflow_unit_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ostringstream s;
  s << std::ifstream(p).rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = parse_config(R"({
    "function": "ridge", "method": "momentum", "kappa": 0.7,
    "schedule": {"kind": "power", "c": 0.5, "p": 0.75, "k0": 3},
    "K": 500, "seeds": [4, 5], "diagnostics": {"windows": true}
  })");
  CHECK(cfg.function == "ridge");
  CHECK(cfg.dimension() == 2);
  CHECK(cfg.momentum.kappa == 0.7);
  CHECK(cfg.schedule.kind == ScheduleKind::power);
  CHECK(cfg.schedule.build()(0) == doctest::Approx(0.5 / std::pow(4.0, 0.75)));
  CHECK(cfg.seeds == std::vector<std::uint64_t>{4, 5});
  CHECK(cfg.diagnostics.windows);
  CHECK(cfg.diagnostics.criterion);
  CHECK(parse_config(R"({"function": "abs"})").dimension() == 1);
}

TEST_CASE("config errors") {
  SUBCASE("syntax errors carry line and column") {
    try {
      parse_config("{\n  \"function\": \"abs\",\n  \"K\": ,\n}");
      FAIL("expected a ConfigError");
    } catch (const ConfigError& ex) {
      CHECK(ex.line() == 3);
      CHECK(ex.column() == 8);
      CHECK(std::string(ex.what()).find("line 3, column 8") != std::string::npos);
    }
  }
  SUBCASE("semantic errors") {
    CHECK_THROWS_AS(parse_config(R"({"function": "rosenbrock"})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"function": "abs", "speed": 3})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"method": "momentum", "kappa": 1.0})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"c_b": -1})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"K": "many"})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"seeds": []})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"function": "ridge", "x0": [1]})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"windows": {"zeta": 0.5, "gamma": 0.45}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"schedule": {"kind": "cosine"}})"), ConfigError);
  }
}

TEST_CASE("custom stratification in a config") {
  const auto cfg = parse_config(R"({
    "function": "ridge",
    "strata": {"pairs": 50, "theta": 0.5, "strata": [
      {"name": "axis", "kind": "affine", "point": [0, 0], "directions": [[0, 1]]},
      {"kind": "open_region", "region": "halfspace", "normal": [1, 0]},
      {"kind": "open_region", "region": "halfspace", "normal": [-1, 0]}
    ], "frontier": [[], [0], [0]]}
  })");
  REQUIRE(cfg.strata);
  CHECK(cfg.strata->size() == 3);
  CHECK(cfg.strata->strata[0].gamma == doctest::Approx(0.38));
  CHECK(cfg.strata_pairs == 50);
  CHECK_THROWS_AS(parse_stratification(R"({"strata": [{"kind": "sphere", "center": [0]}]})", 2), ConfigError);
}

TEST_CASE("minimal run writes the per-seed files and a summary") {
  const auto dir = scratch("min");
  auto cfg = parse_config(R"({"function": "abs", "method": "inexact", "K": 1000, "seeds": [1], "x0": [0.7]})");
  cfg.output = dir;
  const auto r = run_experiment(cfg);
  CHECK(r.exit_code == exit_code::ok);
  CHECK(fs::exists(dir / "traj_seed1.csv"));
  CHECK(fs::exists(dir / "traj_seed1.json"));
  CHECK(fs::exists(dir / "diag_seed1.json"));
  CHECK(fs::exists(dir / "summary.json"));
  CHECK_FALSE(fs::exists(dir / "window_seed1.json"));
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(summary["exit_code"] == 0);
  CHECK(summary["runs"][0]["status"] == "ok");
  fs::remove_all(dir);
}

TEST_CASE("window toggle adds a window report and reruns are identical") {
  const auto dir = scratch("win");
  auto cfg = parse_config(R"({"function": "abs_sum", "method": "stochastic", "sigma": 0.5, "K": 3000,
                              "seeds": [1, 2], "diagnostics": {"windows": true}})");
  cfg.output = dir / "a";
  CHECK(run_experiment(cfg).exit_code == exit_code::ok);
  CHECK(fs::exists(dir / "a" / "window_seed1.json"));
  CHECK(fs::exists(dir / "a" / "window_seed2.json"));
  cfg.output = dir / "b";
  run_experiment(cfg);
  for (const auto& entry : fs::directory_iterator(dir / "a"))
    CHECK(slurp(entry.path()) == slurp(dir / "b" / entry.path().filename()));
  fs::remove_all(dir);
}

TEST_CASE("blow-up exits with code 3") {
  const auto dir = scratch("blow");
  auto cfg = parse_config(R"({"function": "linear", "schedule": {"kind": "constant", "c": 1e8}, "K": 100})");
  cfg.output = dir;
  CHECK(run_experiment(cfg).exit_code == exit_code::blowup);
  fs::remove_all(dir);
}

TEST_CASE("plot data") {
  const auto dir = scratch("plot");
  auto cfg = parse_config(R"({"function": "ring", "K": 2000, "seeds": [1, 2, 3]})");
  cfg.output = dir / "run";
  REQUIRE(run_experiment(cfg).exit_code == exit_code::ok);

  const auto single = emit_plotdata({dir / "run" / "diag_seed1.json"}, dir / "single");
  CHECK(single.size() == 8);
  for (const char* name : {"f", "tail_diameter", "window_ratio", "criticality"}) {
    CHECK(fs::exists(dir / "single" / (std::string(name) + ".csv")));
    CHECK(fs::exists(dir / "single" / (std::string(name) + ".svg")));
  }
  std::ifstream csv(dir / "single" / "f.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "k,value");

  emit_plotdata({dir / "run" / "summary.json"}, dir / "agg");
  std::ifstream agg(dir / "agg" / "tail_diameter.csv");
  std::getline(agg, header);
  CHECK(header == "k,mean,min,max");
  std::string row;
  std::getline(agg, row);
  double k, mean, lo, hi;
  char c;
  std::istringstream(row) >> k >> c >> mean >> c >> lo >> c >> hi;
  CHECK(lo <= mean);
  CHECK(mean <= hi);

  CHECK_THROWS_AS(emit_plotdata({}, dir / "none"), std::runtime_error);
  CHECK_THROWS_AS(emit_plotdata({dir / "missing.json"}, dir / "none"), std::runtime_error);
  std::ofstream(dir / "empty_summary.json") << R"({"reports": []})";
  CHECK_THROWS_AS(emit_plotdata({dir / "empty_summary.json"}, dir / "none"), std::runtime_error);
  fs::remove_all(dir);
}

TEST_CASE("check suites") {
  std::ostringstream out;
  CHECK(run_check_suite("inequalities", out));
  CHECK(out.str().find("FAIL") == std::string::npos);
  CHECK_THROWS_AS(run_check_suite("nonsense", out), std::invalid_argument);
}

TEST_CASE("worker count honours the environment cap") {
  setenv("STRATFLOW_THREADS", "2", 1);
  CHECK(worker_count(10) == 2);
  CHECK(worker_count(1) == 1);
  unsetenv("STRATFLOW_THREADS");
  CHECK(worker_count(3) >= 1);
}
