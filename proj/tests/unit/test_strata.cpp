#include "../oracles.hpp"

#include "stratflow/methods.hpp"
#include "stratflow/strata.hpp"

#include <doctest.h>

#include <cmath>

using namespace stratflow;
using doctest::Approx;

namespace {

// Builds a record from iterates and step sizes; directions are zero and the
// increments are carried by e.
Trajectory from_points(const std::vector<Vec>& x, const std::vector<double>& alpha) {
  Trajectory t;
  t.x = x;
  t.alpha = alpha;
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    t.v.push_back(Vec::Zero(x[k].size()));
    t.e.push_back(x[k + 1] - x[k]);
  }
  return t;
}

Trajectory from_scalars(const std::vector<double>& x, const std::vector<double>& alpha) {
  std::vector<Vec> pts;
  for (double v : x) pts.push_back(make_vec({v}));
  return from_points(pts, alpha);
}

// Steps stay below the assignment radius 2 c_hat alpha^gamma at alpha = 0.002,
// so every crossing segment has an endpoint close to the stratum.
std::vector<double> random_walk(std::uint64_t seed, std::size_t K) {
  Rng rng(seed, Stream::diagnostics);
  std::vector<double> x{rng.uniform(-1.0, 1.0)};
  for (std::size_t k = 0; k < K; ++k) x.push_back(std::clamp(x.back() + rng.uniform(-0.08, 0.08), -1.0, 1.0));
  return x;
}

}  // namespace

TEST_CASE("projections") {
  const auto line = Stratum::affine("x1=0", Vec::Zero(2), make_vec({0.0, 1.0}));
  CHECK((line.project(make_vec({3.0, 4.0})) - make_vec({0.0, 4.0})).norm() < 1e-15);
  const auto circle = Stratum::sphere("S1", Vec::Zero(2), 1.0);
  CHECK((circle.project(make_vec({2.0, 0.0})) - make_vec({1.0, 0.0})).norm() < 1e-15);
  CHECK_THROWS_AS(project(circle, Vec::Zero(2)), std::domain_error);
  Eigen::MatrixXd dirs(3, 2);
  dirs << 1, 1, 0, 1, 2, 0;
  const auto plane = Stratum::affine("plane", make_vec({1.0, 2.0, 3.0}), dirs);
  const Vec on = make_vec({1.0, 2.0, 3.0}) + 0.3 * dirs.col(0) - 1.2 * dirs.col(1);
  CHECK((plane.project(on) - on).norm() < 1e-12);
  CHECK(plane.dimension() == 2);
}

TEST_CASE("segment distances") {
  const auto circle = Stratum::sphere("S1", Vec::Zero(2), 1.0);
  CHECK(circle.segment_distance(make_vec({-2.0, 0.0}), make_vec({2.0, 0.0})) == Approx(0.0));
  CHECK(circle.segment_distance(make_vec({0.0, 0.0}), make_vec({0.1, 0.0})) == Approx(0.9));
  CHECK(circle.segment_distance(make_vec({2.0, 2.0}), make_vec({3.0, 3.0})) == Approx(std::sqrt(8.0) - 1.0));
  const auto axis = Stratum::affine("x1=0", Vec::Zero(2), make_vec({0.0, 1.0}));
  CHECK(axis.segment_distance(make_vec({0.05, 1.0}), make_vec({-0.03, 1.0})) == 0.0);
  CHECK(axis.segment_distance(make_vec({0.5, 1.0}), make_vec({0.4, -3.0})) == Approx(0.4));
}

TEST_CASE("battery exponents") {
  const auto s = battery_stratification("ridge");
  CHECK(s.strata[0].gamma == Approx(0.38));
  CHECK(s.strata[0].beta == Approx(0.095));
  CHECK(s.strata[1].gamma == Approx(0.95));
  CHECK(s.strata[1].beta == Approx(0.4275));
  CHECK(s.non_open == 1);
  CHECK_NOTHROW(s.validate());
  for (const auto& name : {"abs", "abs_sum", "ring", "max_quad", "smooth_quad"}) {
    CAPTURE(name);
    CHECK_NOTHROW(battery_stratification(name).validate());
  }
}

TEST_CASE("frontier exponent condition") {
  // gamma = 0.8 on the axis cannot sit below open strata whose beta is
  // below gamma (1 - theta) < 1/2.
  auto s = battery_stratification("ridge");
  s.strata[0].gamma = 0.8;
  s.derive();
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("neighborhood membership") {
  auto s = battery_stratification("ridge");
  s.strata[0].c = 1.0;
  s.strata[0].beta = 0.3;
  s.strata[0].gamma = 0.8;
  s.derive();
  const Vec x = make_vec({0.001, 1.0});
  CHECK(neighborhood_member(s, 0, x, 0.1));
  CHECK_FALSE(neighborhood_member(s, 1, x, 0.1));
  CHECK(neighborhood_member(s, 1, make_vec({0.5, 1.0}), 0.1));
  CHECK_FALSE(neighborhood_member(s, 0, make_vec({5.0, 5.0}), 0.1));
  const auto ring = battery_stratification("ring");
  for (std::size_t i = 0; i < ring.non_open; ++i) CHECK_FALSE(neighborhood_member(ring, i, make_vec({5.0, 5.0}), 0.1));
}

TEST_CASE("crossing indices") {
  auto s = battery_stratification("abs");
  s.strata[0].c = 1.0;
  s.strata[0].gamma = 1.0;
  s.derive();
  const auto t = from_scalars({0.3, -0.2, -0.2, 0.5, 0.4}, {0.01, 0.01, 0.01, 0.01});
  CHECK(s.c_hat[0] * std::pow(0.01, s.strata[0].gamma) == Approx(0.01));
  CHECK(is_crossing(t, s, 0));
  CHECK_FALSE(is_crossing(t, s, 3));
  CHECK(crossing_indices(t, s) == std::vector<std::size_t>{0, 2});

  auto r = battery_stratification("ridge");
  r.strata[0].c = 0.1;
  r.strata[0].gamma = 0.0;
  r.derive();
  const auto tr = from_points({make_vec({0.05, 1.0}), make_vec({-0.03, 1.0})}, {0.5});
  CHECK(is_crossing(tr, r, 0));
}

TEST_CASE("stratum assignment") {
  const auto ridge = battery_stratification("ridge");
  CHECK(assign_point(ridge, make_vec({0.0001, 0.5}), 0.01) == 0);
  const auto corner = battery_stratification("abs_sum");
  const auto g = assign_point(corner, make_vec({1e-4, 2e-4}), 0.01);
  CHECK(corner.strata[g].dimension() == 0);
  CHECK_THROWS_AS(assign_point(ridge, make_vec({3.0, 0.0}), 0.01), std::runtime_error);
  const auto t = from_points({make_vec({3.0, 0.0}), make_vec({2.9, 0.0})}, {0.01});
  CHECK_THROWS_AS(assign_stratum(t, ridge, 0), std::invalid_argument);
}

TEST_CASE("block recursion") {
  const auto s = battery_stratification("abs");
  SUBCASE("a run that settles in the tube forms one block") {
    const auto t = inexact_run(find_function("abs"), make_vec({0.7}), StepSchedule::harmonic(1.0), InexactConfig{}, 300, 1);
    const auto b = block_recursion(t, s);
    REQUIRE(b.blocks.size() == 1);
    CHECK(b.blocks[0].s == 300);
    CHECK(b.membership_failures == 0);
    CHECK(b.repeat_violations == 0);
  }
  SUBCASE("no crossing means the open regime") {
    std::vector<double> x;
    for (int k = 0; k <= 50; ++k) x.push_back(5.0 - 0.01 * k);
    const auto b = block_recursion(from_scalars(x, std::vector<double>(50, 0.01)), s);
    CHECK(b.open_regime);
    CHECK(b.blocks.empty());
  }
  SUBCASE("literal recursion oracle") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      CAPTURE(seed);
      const auto x = random_walk(seed, 300);
      std::vector<double> alpha(300, 0.002);
      const auto t = from_scalars(x, alpha);
      const auto b = block_recursion(t, s);
      const auto ref = oracle::abs_blocks(x, alpha, s.strata[0].c, s.c_hat[0], s.strata[0].beta, s.strata[0].gamma);
      REQUIRE(b.blocks.size() == ref.size());
      for (std::size_t m = 0; m < ref.size(); ++m) {
        CHECK(b.blocks[m].l == ref[m].l);
        CHECK(b.blocks[m].s == ref[m].s);
        CHECK(b.blocks[m].q == ref[m].q);
        CHECK(b.blocks[m].q <= b.blocks[m].s);
        if (m > 0) CHECK(b.blocks[m].l > b.blocks[m - 1].q);
      }
    }
  }
}

TEST_CASE("relative length") {
  const auto s = battery_stratification("abs");
  SUBCASE("no crossings: path length") {
    std::vector<double> x;
    for (int k = 0; k <= 40; ++k) x.push_back(3.0 + std::sin(0.3 * k));
    const auto t = from_scalars(x, std::vector<double>(40, 0.01));
    const auto b = block_recursion(t, s);
    double path = 0.0;
    for (int k = 5; k < 30; ++k) path += std::abs(x[k + 1] - x[k]);
    CHECK(relative_length(t, s, b, 5, 30) == Approx(path));
  }
  SUBCASE("inside one block before q: projected length") {
    const auto ridge = battery_stratification("ridge");
    std::vector<Vec> x;
    for (int k = 0; k <= 30; ++k) x.push_back(make_vec({0.001 * ((k % 2) ? 1.0 : -1.0), 1.0 - 0.01 * k}));
    const auto t = from_points(x, std::vector<double>(30, 0.01));
    const auto b = block_recursion(t, ridge);
    REQUIRE(b.blocks.size() == 1);
    REQUIRE(b.blocks[0].q == 30);
    CHECK(relative_length(t, ridge, b, 3, 20) == Approx(0.17));
  }
  SUBCASE("spliced intervals match the case-by-case oracle") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto x = random_walk(seed, 300);
      std::vector<double> alpha(300, 0.002);
      const auto t = from_scalars(x, alpha);
      const auto b = block_recursion(t, s);
      const auto ref = oracle::abs_blocks(x, alpha, s.strata[0].c, s.c_hat[0], s.strata[0].beta, s.strata[0].gamma);
      Rng rng(seed, Stream::diagnostics);
      for (int i = 0; i < 100; ++i) {
        const std::size_t k1 = rng.index(300);
        const std::size_t k2 = k1 + 1 + rng.index(300 - k1);
        CAPTURE(k1);
        CAPTURE(k2);
        CHECK(relative_length(t, s, b, k1, k2) == Approx(oracle::abs_relative_length(x, ref, k1, k2)).epsilon(1e-12));
      }
    }
  }
  SUBCASE("diameter never exceeds relative length plus slack") {
    const auto t = inexact_run(find_function("abs"), make_vec({0.7}), StepSchedule::harmonic(1.0), InexactConfig{}, 2000, 1);
    const auto b = block_recursion(t, s);
    for (const auto& r : relative_length_check(t, s, b, 300, 1)) CHECK_FALSE(r.violated);
  }
}

TEST_CASE("descent residual") {
  const auto f = find_function("ridge");
  const auto s = battery_stratification("ridge");
  DescentSetup setup;
  setup.psi = {1.0, 0.5};
  setup.model = {1.0, 1.0, 0.5};
  const auto constant = from_points(std::vector<Vec>(21, make_vec({0.0, 0.5})), std::vector<double>(20, 0.01));
  CHECK(descent_residual(constant, s, f, 0, 0, 20, setup) <= 0.0);
  const auto far = from_points(std::vector<Vec>(5, make_vec({3.0, 0.5})), std::vector<double>(4, 0.01));
  CHECK_THROWS_AS(descent_residual(far, s, f, 0, 0, 4, setup), std::invalid_argument);
  const auto runs = membership_segments(constant, s, 0);
  REQUIRE(runs.size() == 1);
  CHECK(runs[0] == std::pair<std::size_t, std::size_t>{0, 20});
}
