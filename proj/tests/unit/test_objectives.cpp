#include "stratflow/objectives.hpp"

#include <doctest.h>

#include <algorithm>

using namespace stratflow;
using doctest::Approx;

namespace {

bool contains(const std::vector<Vec>& gens, const Vec& g) {
  return std::any_of(gens.begin(), gens.end(), [&](const Vec& h) { return (h - g).norm() < 1e-12; });
}

}  // namespace

TEST_CASE("battery function values") {
  CHECK(evaluate(find_function("abs_sum"), make_vec({3.0, -4.0})) == Approx(7.0));
  CHECK(evaluate(find_function("ridge"), make_vec({0.0, 2.0})) == Approx(4.0));
  CHECK(evaluate(find_function("ring"), make_vec({0.0, 0.0})) == Approx(1.0));
  CHECK_THROWS_AS(evaluate(find_function("ridge"), make_vec({1.0})), std::invalid_argument);
  CHECK_THROWS_AS(find_function("rosenbrock"), std::invalid_argument);
  CHECK(battery().size() >= 5);
}

TEST_CASE("clarke generators") {
  SUBCASE("abs at its kink") {
    const auto g = clarke_generators(find_function("abs"), make_vec({0.0})).generators;
    CHECK(g.size() == 2);
    CHECK(contains(g, make_vec({-1.0})));
    CHECK(contains(g, make_vec({1.0})));
  }
  SUBCASE("ridge on the axis") {
    const auto g = clarke_generators(find_function("ridge"), make_vec({0.0, 0.5})).generators;
    CHECK(g.size() == 2);
    CHECK(contains(g, make_vec({-1.0, 1.0})));
    CHECK(contains(g, make_vec({1.0, 1.0})));
  }
  SUBCASE("smooth quadratic") {
    const auto g = clarke_generators(find_function("smooth_quad"), make_vec({1.0, 2.0})).generators;
    REQUIRE(g.size() == 1);
    CHECK((g[0] - make_vec({2.0, 4.0})).norm() < 1e-12);
  }
  SUBCASE("max_quad with one active piece") {
    const auto g = clarke_generators(find_function("max_quad"), make_vec({0.5, 0.0})).generators;
    REQUIRE(g.size() == 1);
    CHECK((g[0] - make_vec({2.0 * (0.5 - 1.0), 0.0})).norm() < 1e-12);
  }
}

TEST_CASE("goldstein sampling") {
  Rng rng(3, Stream::goldstein);
  const auto quad = find_function("smooth_quad");
  CHECK((goldstein_sample(quad, make_vec({1.0, 0.0}), 0.0, 8, rng) - make_vec({2.0, 0.0})).norm() == 0.0);

  const auto abs = find_function("abs");
  for (int i = 0; i < 100; ++i) {
    const double u = goldstein_sample(abs, make_vec({0.0}), 0.1, 5, rng)[0];
    CHECK(u >= -1.0 - 1e-15);
    CHECK(u <= 1.0 + 1e-15);
  }
  double mean = 0.0;
  for (int i = 0; i < 1000; ++i) mean += goldstein_sample(abs, make_vec({1.0}), 0.5, 16, rng)[0] / 1000.0;
  CHECK(mean == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("tie rules") {
  const auto abs = find_function("abs");
  Rng rng(5, Stream::tie);
  int plus = 0;
  for (int i = 0; i < 200; ++i) plus += select_subgradient(abs, make_vec({0.0}), TieRule::random_vertex, &rng)[0] > 0;
  CHECK(plus > 50);
  CHECK(plus < 150);
  const Vec first = select_subgradient(abs, make_vec({0.0}), TieRule::first);
  CHECK(std::abs(first[0]) == 1.0);
}

TEST_CASE("critical sets") {
  const auto ring = find_function("ring");
  CHECK(ring.critical_set.distance(make_vec({2.0, 0.0})) == Approx(1.0));
  CHECK((ring.critical_set.nearest(make_vec({0.0, 3.0})) - make_vec({0.0, 1.0})).norm() < 1e-12);
}
