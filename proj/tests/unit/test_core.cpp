#include "stratflow/methods.hpp"
#include "stratflow/rng.hpp"
#include "stratflow/schedule.hpp"
#include "stratflow/trajectory.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace stratflow;
using doctest::Approx;

TEST_CASE("schedule values") {
  CHECK(StepSchedule::harmonic(1.0)(0) == Approx(1.0));
  CHECK(StepSchedule::harmonic(1.0)(4) == Approx(0.2));
  CHECK(StepSchedule::power(2.0, 0.5)(3) == Approx(1.0));
  CHECK(StepSchedule::constant(0.1)(1000) == Approx(0.1));
  const auto table = StepSchedule::table({1.0, 0.5, 0.75});
  CHECK(table(2) == 0.75);
  CHECK(table(10) == 0.75);
  CHECK_THROWS_AS(schedule_kind_from_string("cosine"), std::invalid_argument);
}

TEST_CASE("ratio bound") {
  CHECK(ratio_bound(StepSchedule::harmonic(1.0), 100) == Approx(1.0));
  CHECK(ratio_bound(StepSchedule::constant(0.1), 10) == Approx(1.0));
  CHECK(ratio_bound(std::vector<double>{1.0, 0.5, 0.75}) == Approx(1.5));
}

TEST_CASE("order 1/k detection") {
  CHECK(StepSchedule::harmonic(2.0, 5).is_order_one_over_k());
  CHECK_FALSE(StepSchedule::constant(0.1).is_order_one_over_k());
  CHECK_FALSE(StepSchedule::power(1.0, 0.6).is_order_one_over_k());
}

TEST_CASE("rng sub-streams are reproducible and distinct") {
  Rng a(7, Stream::noise), b(7, Stream::noise), c(7, Stream::goldstein);
  const double x = a.uniform();
  CHECK(x == b.uniform());
  CHECK(x != c.uniform());
  Rng d(1, Stream::diagnostics);
  const auto w = d.dirichlet(5);
  double sum = 0.0;
  for (double v : w) {
    CHECK(v >= 0.0);
    sum += v;
  }
  CHECK(sum == Approx(1.0));
  const Vec u = d.unit_direction(3);
  CHECK(u.norm() == Approx(1.0));
  CHECK(d.in_ball(Vec::Zero(3), 0.5).norm() <= 0.5);
}

TEST_CASE("trajectory shape and thinning") {
  Trajectory t;
  t.x = {make_vec({0.0}), make_vec({1.0})};
  t.alpha = {1.0};
  t.v = {make_vec({-1.0})};
  t.e = {make_vec({0.0})};
  CHECK_NOTHROW(t.check_shape());
  CHECK(t.alpha_at(5) == 1.0);
  t.alpha.push_back(0.5);
  CHECK_THROWS_AS(t.check_shape(), std::logic_error);

  const auto idx = thinned_indices(10, 4, 3);
  CHECK(idx == std::vector<std::size_t>{0, 4, 7, 8, 9, 10});
  CHECK(thinned_indices(5, 1, 0).size() == 6);
}

TEST_CASE("trajectory csv and sidecar") {
  const auto f = find_function("abs");
  const auto t = inexact_run(f, make_vec({0.7}), StepSchedule::harmonic(1.0), InexactConfig{}, 3, 9);
  const auto dir = std::filesystem::temp_directory_path() / "stratflow_unit_csv";
  std::filesystem::create_directories(dir);
  write_trajectory_csv(t, dir / "t.csv");
  write_trajectory_sidecar(t, dir / "t.json");
  std::ifstream in(dir / "t.csv");
  std::string header, row0, row1;
  std::getline(in, header);
  std::getline(in, row0);
  std::getline(in, row1);
  CHECK(header == "k,alpha,e_norm,x_0");
  CHECK(row0.rfind("0,1,0,", 0) == 0);
  CHECK(std::stod(row0.substr(6)) == 0.7);
  std::stringstream sidecar;
  sidecar << std::ifstream(dir / "t.json").rdbuf();
  CHECK(sidecar.str().find("\"seed\": 9") != std::string::npos);
  CHECK(sidecar.str().find("\"method\": \"inexact\"") != std::string::npos);
  std::filesystem::remove_all(dir);
}
