#include "../oracles.hpp"

#include "stratflow/methods.hpp"
#include "stratflow/reductions.hpp"

#include <doctest.h>

#include <cmath>

using namespace stratflow;
using doctest::Approx;

TEST_CASE("window starts") {
  const auto harmonic = StepSchedule::harmonic(1.0);
  const auto plan = window_indices(harmonic, 0.5, 4);
  CHECK(plan.s == std::vector<std::size_t>{0, 1, 2, 3, 5});
  CHECK(window_indices(harmonic, 0.5, 300).s == oracle::window_starts(harmonic, 0.5, 300));

  // Constant alpha = 1: the threshold is 1; the sum from s_t through
  // s_t + 1 is 2 > 1, so under the literal recursion every window is one step.
  const auto constant = StepSchedule::constant(1.0);
  CHECK(window_indices(constant, 0.5, 4).s == std::vector<std::size_t>{0, 1, 2, 3, 4});
  CHECK(window_indices(constant, 0.5, 50).s == oracle::window_starts(constant, 0.5, 50));

  // zeta close to 1: early windows are single steps.
  const auto near_one = window_indices(harmonic, 0.999, 5);
  for (std::size_t t = 0; t + 1 < near_one.s.size(); ++t) CHECK(near_one.s[t + 1] - near_one.s[t] <= 2);
  CHECK(window_sandwich_violation(window_indices(harmonic, 0.3, 200), harmonic) == 0.0);
}

TEST_CASE("windows within K") {
  const auto s = StepSchedule::harmonic(1.0);
  const auto plan = window_indices_within(s, 0.5, 1000);
  CHECK(plan.s.back() <= 1000);
  CHECK(window_indices(s, 0.5, plan.windows() + 1).s.back() > 1000);
}

TEST_CASE("window aggregation") {
  Trajectory t;
  t.x = {make_vec({0.0}), make_vec({-1.0}), make_vec({-0.5})};
  t.alpha = {1.0, 0.5};
  t.v = {make_vec({1.0}), make_vec({-1.0})};
  t.e = {make_vec({0.0}), make_vec({0.0})};
  WindowPlan plan;
  plan.s = {0, 2};
  const auto w = window_aggregate(t, plan);
  CHECK(w.a[0] == Approx(1.5));
  CHECK(w.u[0][0] == Approx(1.0 / 3.0));
  CHECK(w.e[0].norm() == 0.0);
  CHECK(window_reconstruction_error(t, plan, w) < 1e-15);

  plan.s = {0, 1, 2};
  const auto single = window_aggregate(t, plan);
  CHECK(single.a[1] == 0.5);
  CHECK(single.u[1][0] == -1.0);
  plan.s = {0, 1, 2, 3};
  CHECK_THROWS_AS(window_aggregate(t, plan), std::out_of_range);
}

TEST_CASE("noise-free windows carry no error") {
  const auto s = StepSchedule::harmonic(1.0);
  const auto t = stochastic_run(find_function("ridge"), make_vec({0.3, 0.3}), s, StochasticNoise{}, 2000, 1);
  const auto plan = window_indices_within(s, 0.3, 2000);
  const auto w = window_aggregate(t, plan);
  for (const auto& e : w.e) CHECK(e.norm() == 0.0);
  CHECK(window_error_check(t, plan, 0.45).violation_fraction == 0.0);
}

TEST_CASE("window asymptotics") {
  const auto s = StepSchedule::harmonic(1.0);
  for (double zeta : {0.5, 0.9}) {
    const auto a = window_asymptotics(window_indices(s, zeta, 1000), s);
    CHECK(a.applicable);
    CHECK(a.s_band <= 3.0);
    CHECK(a.a_band <= 3.0);
    CHECK_FALSE(a.flagged);
  }
  const auto c = StepSchedule::constant(0.01);
  const auto flagged = window_asymptotics(window_indices(c, 0.5, 200), c);
  CHECK_FALSE(flagged.applicable);
  CHECK(flagged.flagged);
}

TEST_CASE("streamed window statistics match the recorded ones") {
  const auto f = find_function("abs");
  const auto s = StepSchedule::harmonic(1.0);
  const StochasticNoise noise{1.0, NoiseLaw::gaussian, TieRule::first};
  auto plan = window_indices(s, 0.3, 60);
  const auto t = stochastic_run(f, make_vec({0.7}), s, noise, plan.s.back(), 3);
  WindowAccumulator acc(plan);
  stochastic_stream(f, make_vec({0.7}), s, noise, plan.s.back(), 3, acc);
  REQUIRE(acc.complete());
  const auto direct = window_stats(t, plan);
  REQUIRE(direct.size() == acc.stats().size());
  for (std::size_t i = 0; i < direct.size(); ++i) {
    CHECK(direct[i].a == Approx(acc.stats()[i].a));
    CHECK(direct[i].noise_sup == Approx(acc.stats()[i].noise_sup));
    CHECK(direct[i].deviation == Approx(acc.stats()[i].deviation));
  }
}

TEST_CASE("momentum decomposition") {
  const auto f = find_function("abs_sum");
  MomentumConfig cfg;
  cfg.kappa = 0.5;
  const auto t = momentum_run(f, make_vec({0.6, -0.2}), StepSchedule::harmonic(1.0), cfg, 500, 1);
  const auto d = momentum_decompose(t, 0.5, 0.5);
  CHECK(d.b[0] == Approx(1.0));
  CHECK(d.b[1] == Approx(1.0));
  CHECK(d.b[2] == Approx(0.5 + 1.0 / 3.0));
  CHECK(d.T[0] == 0);
  CHECK(d.a[0] == Approx(t.alpha[0]));
  CHECK(d.e[0].norm() == 0.0);
  CHECK(d.increment_error <= 1e-10);
  CHECK(d.reconstruction_error <= 1e-10);
  for (std::size_t k = 0; k < d.T.size(); ++k) CHECK(d.T[k] <= k);

  // Identical directions: every u_k is that direction.
  const auto lin = find_function("linear");
  const auto tl = momentum_run(lin, make_vec({0.0, 0.0}), StepSchedule::harmonic(1.0), cfg, 100, 1);
  const auto dl = momentum_decompose(tl, 0.5, 0.5);
  for (const auto& u : dl.u) CHECK((u - tl.v[0]).norm() < 1e-12);

  Trajectory broken = t;
  broken.v[10] *= 2.0;
  CHECK_THROWS_AS(momentum_decompose(broken, 0.5, 0.5), std::runtime_error);
}

TEST_CASE("momentum bounds") {
  const auto f = find_function("abs_sum");
  MomentumConfig cfg;
  cfg.kappa = 0.5;
  const auto t = momentum_run(f, make_vec({0.4, 0.9}), StepSchedule::harmonic(1.0), cfg, 10000, 2);
  const auto d = momentum_decompose(t, 0.5, 0.5);
  MomentumCheckOptions opts;
  opts.L = f.lipschitz_bound;
  opts.hull_stride = 10;
  const auto r = momentum_bounds_check(t, d, opts, &f);
  CHECK(r.a_violations == 0);
  CHECK(r.e_violations == 0);
  CHECK(r.b_band <= 3.0);
  CHECK(r.xi_violations == 0);

  const auto quad = find_function("smooth_quad");
  const auto tq = momentum_run(quad, make_vec({0.4, 0.9}), StepSchedule::harmonic(1.0), cfg, 10000, 2);
  const auto dq = momentum_decompose(tq, 0.5, 0.5);
  opts.L = quad.lipschitz_bound;
  CHECK(momentum_bounds_check(tq, dq, opts).e_decay_exponent >= 1.0 + 0.5 - 0.1);
}

TEST_CASE("goldstein radius fit") {
  const auto f = find_function("abs");
  const auto s = StepSchedule::harmonic(1.0);
  const StochasticNoise noise{1.0, NoiseLaw::gaussian, TieRule::first};
  auto plan = window_indices(s, 0.3, 120);
  std::vector<std::vector<WindowStats>> train, holdout;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    WindowAccumulator acc(plan);
    stochastic_stream(f, make_vec({0.7}), s, noise, plan.s.back(), seed, acc);
    (seed <= 4 ? train : holdout).push_back(acc.stats());
  }
  const auto fit = fit_window_radius(train, holdout);
  CHECK(fit.c_b > 0.0);
  CHECK(fit.holdout_windows > 0);
  CHECK(fit.holdout_violations == 0);
}
