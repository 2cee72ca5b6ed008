// Acceptance suite: one PASS/FAIL line per criterion.
//
//   stratflow_acceptance            run every criterion
//   stratflow_acceptance 3 7        run the listed criteria only

#include "oracles.hpp"

#include "stratflow/diagnostics.hpp"
#include "stratflow/geometry.hpp"
#include "stratflow/methods.hpp"
#include "stratflow/minnorm.hpp"
#include "stratflow/objectives.hpp"
#include "stratflow/reductions.hpp"
#include "stratflow/strata.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace stratflow;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

// 1. Identity suite ------------------------------------------------------------------

Outcome identities() {
  const std::vector<std::string> functions{"abs_sum", "ridge", "max_quad"};
  const std::size_t K = 1000;
  const auto sched = StepSchedule::harmonic(1.0);
  double worst_increment = 0, worst_momentum = 0, worst_window = 0, worst_averaging = 0;
  for (const auto& name : functions) {
    const auto f = find_function(name);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const Vec x0 = random_start(f.dim, seed);
      MomentumConfig mc;
      mc.kappa = 0.5;
      const auto tm = momentum_run(f, x0, sched, mc, K, seed);
      const auto d = momentum_decompose(tm, mc.kappa, 0.5);
      worst_increment = std::max(worst_increment, d.increment_error);
      worst_momentum = std::max(worst_momentum, d.reconstruction_error);

      StochasticNoise noise;
      noise.sigma = 0.5;
      const auto ts = stochastic_run(f, x0, sched, noise, K, seed);
      const auto plan = window_indices_within(sched, 0.5, K);
      worst_window = std::max(worst_window, window_reconstruction_error(ts, plan, window_aggregate(ts, plan)));

      InexactConfig ic;
      ic.c_b = 0.1;
      const auto ti = inexact_run(f, x0, sched, ic, K, seed);
      for (const Trajectory* t : {&tm, &ts, &ti})
        for (std::size_t N : {std::size_t{1}, std::size_t{10}, std::size_t{100}, K})
          worst_averaging = std::max(worst_averaging, averaging_residual(*t, N) / (averaging_tolerance(*t, N) / 1e-10));
    }
  }
  const bool pass = worst_increment <= 1e-10 && worst_momentum <= 1e-10 && worst_window <= 1e-10 &&
                    worst_averaging <= 1e-10;
  return {pass, fmt("max rel. error: momentum increment %.2e, momentum split %.2e, window %.2e, averaging %.2e "
                    "(limit 1e-10; 10 seeds x 3 functions, K=1000)",
                    worst_increment, worst_momentum, worst_window, worst_averaging)};
}

// 2. psi Hoelder property ----------------------------------------------------------------

Outcome psi_hoelder() {
  Rng rng(2024, Stream::diagnostics);
  std::size_t violations = 0;
  double worst = -1e300;
  for (double theta : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const Desingularizer psi{1.0, theta};
    for (int i = 0; i < 100000; ++i) {
      const double t1 = rng.uniform(-10.0, 10.0);
      const double t2 = rng.uniform(-10.0, 10.0);
      const double gap = std::abs(psi(t1) - psi(t2)) - 2.0 * psi(std::abs(t1 - t2));
      worst = std::max(worst, gap);
      if (gap > 1e-12) ++violations;
    }
  }
  return {violations == 0,
          fmt("%zu violations in 5 x 10^5 pairs on [-10,10]^2; max of lhs - rhs = %.3e", violations, worst)};
}

// 3. Window recursion oracle -----------------------------------------------------------------

Outcome window_oracle() {
  const auto sched = StepSchedule::harmonic(1.0);
  const auto plan = window_indices(sched, 0.5, 1000);
  const auto brute = oracle::window_starts(sched, 0.5, 1000);
  const bool same = plan.s == brute;
  const std::vector<std::size_t> prefix(plan.s.begin(), plan.s.begin() + 5);
  const bool prefix_ok = prefix == std::vector<std::size_t>{0, 1, 2, 3, 5};
  const auto asym = window_asymptotics(plan, sched);
  const bool pass = same && prefix_ok && asym.s_band <= 3.0 && asym.a_band <= 3.0;
  return {pass, fmt("prefix (%zu,%zu,%zu,%zu,%zu), full match with brute force: %s; bands over t in [100,1000]: "
                    "s_t/(t+1)^2 %.3f, a_t(t+1) %.3f (limit 3)",
                    prefix[0], prefix[1], prefix[2], prefix[3], prefix[4], same ? "yes" : "no", asym.s_band,
                    asym.a_band)};
}

// 4. Momentum bounds -----------------------------------------------------------------------------

Outcome momentum_bounds() {
  const auto f = find_function("abs_sum");
  const auto sched = StepSchedule::harmonic(1.0);
  bool pass = true;
  std::ostringstream out;
  for (double kappa : {0.3, 0.5, 0.9}) {
    MomentumConfig mc;
    mc.kappa = kappa;
    const auto t = momentum_run(f, random_start(f.dim, 7), sched, mc, 10000, 7);
    const auto d = momentum_decompose(t, kappa, 0.5);
    MomentumCheckOptions opts;
    opts.L = f.lipschitz_bound;
    opts.tail_start = 100;
    opts.band_start = 1000;
    const auto r = momentum_bounds_check(t, d, opts);
    pass = pass && r.a_violations == 0 && r.b_band <= 3.0;
    out << fmt("kappa=%.1f: %zu a-violations, b(k+1) band %.3f; ", kappa, r.a_violations, r.b_band);
  }
  return {pass, out.str() + "(limits 0 and 3, K=10^4)"};
}

// 5. Convergence battery -------------------------------------------------------------------------

Outcome convergence_battery() {
  const std::vector<std::string> functions{"abs_sum", "ridge", "ring", "max_quad"};
  const std::size_t K = 100000;
  const auto sched = StepSchedule::harmonic(1.0);
  struct Method {
    std::string name;
    std::function<Trajectory(const PiecewiseSmoothFunction&, const Vec&, std::uint64_t)> run;
  };
  const std::vector<Method> methods{
      {"inexact c_b=0",
       [&](const auto& f, const Vec& x0, std::uint64_t seed) { return inexact_run(f, x0, sched, {}, K, seed); }},
      {"inexact c_b=0.1",
       [&](const auto& f, const Vec& x0, std::uint64_t seed) {
         InexactConfig c;
         c.c_b = 0.1;
         return inexact_run(f, x0, sched, c, K, seed);
       }},
      {"stochastic sigma=0.5",
       [&](const auto& f, const Vec& x0, std::uint64_t seed) {
         StochasticNoise n;
         n.sigma = 0.5;
         return stochastic_run(f, x0, sched, n, K, seed);
       }},
      {"momentum kappa=0.5",
       [&](const auto& f, const Vec& x0, std::uint64_t seed) {
         MomentumConfig m;
         m.kappa = 0.5;
         return momentum_run(f, x0, sched, m, K, seed);
       }},
  };
  bool pass = true;
  std::ostringstream fails;
  std::size_t worst_cell = 10;
  double worst_diam = 0, worst_crit = 0;
  for (const auto& name : functions) {
    const auto f = find_function(name);
    for (const auto& m : methods) {
      std::size_t good = 0;
      for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto t = m.run(f, random_start(f.dim, seed), seed);
        const double diam = diameter(t, K / 2, K);
        Rng rng(seed, Stream::diagnostics);
        const double crit = criticality_distance(f, t.x[K], 1e-3, 64, rng);
        worst_diam = std::max(worst_diam, diam);
        worst_crit = std::max(worst_crit, crit);
        if (diam <= 1e-2 && crit <= 1e-2) ++good;
      }
      worst_cell = std::min(worst_cell, good);
      if (good < 9) {
        pass = false;
        fails << " [" << name << ", " << m.name << ": " << good << "/10]";
      }
    }
  }
  return {pass, fmt("16 cells x 10 seeds, K=10^5: worst cell %zu/10 seeds within limits; max tail diameter %.2e, "
                    "max criticality %.2e (limits 1e-2, need >= 9/10)",
                    worst_cell, worst_diam, worst_crit) +
                    fails.str()};
}

// 6. Criterion checker discrimination ---------------------------------------------------------------

Outcome criterion_discrimination() {
  const std::size_t K = 100000;
  std::vector<Vec> spiral(K + 1), walker(K + 1);
  double angle = 0.0;
  spiral[0] = make_vec({1.0, 0.0});
  walker[0] = make_vec({1.0, 0.0});
  for (std::size_t k = 1; k <= K; ++k) {
    const double kk = static_cast<double>(k);
    spiral[k] = make_vec({std::cos(std::log(kk)) / kk, std::sin(std::log(kk)) / kk});
    angle += 1.0 / kk;
    walker[k] = make_vec({std::cos(angle), std::sin(angle)});
  }
  const auto conv = criterion_residual(spiral, [](const Vec& x) { return 2.0 * x.norm(); }, 100);
  const auto walk = criterion_residual(walker, [](const Vec&) { return 0.0; }, 100);
  // Every grid k1 with room for an angular advance of >= 0.51 rad must show
  // residual >= 0.5; that covers k1 up to K / e^{0.51}.
  double walker_min = 1e300;
  std::size_t largest_k1 = 0;
  for (std::size_t g = 0; g < walk.k1.size(); ++g) {
    if (static_cast<double>(walk.k1[g]) * std::exp(0.51) > static_cast<double>(K)) break;
    walker_min = std::min(walker_min, walk.sup_residual[g]);
    largest_k1 = walk.k1[g];
  }
  const bool pass = conv.max_tail <= 1e-6 && walker_min >= 0.5;
  return {pass, fmt("spiral tail residual %.3e (limit 1e-6); circle walker min sup-residual %.3f over grid k1 in "
                    "[100, %zu] (limit >= 0.5), K=10^5",
                    conv.max_tail, walker_min, largest_k1)};
}

// 7. Min-norm-point oracle ------------------------------------------------------------------------------

Outcome min_norm_oracle() {
  Rng rng(77, Stream::diagnostics);
  double worst_grid = 0, worst_faces = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.index(2));
    const std::size_t m = 1 + rng.index(6);
    std::vector<Vec> pts;
    for (std::size_t i = 0; i < m; ++i) {
      Vec p(n);
      for (Eigen::Index j = 0; j < n; ++j) p[j] = rng.uniform(-1.0, 2.0);
      pts.push_back(p);
    }
    const double d = criticality_distance(pts);
    worst_grid = std::max(worst_grid, std::abs(d - oracle::simplex_grid_distance(pts)));
    worst_faces = std::max(worst_faces, std::abs(d - oracle::face_enumeration_distance(pts)));
  }
  const std::vector<Vec> seg{make_vec({1.0, 0.0}), make_vec({0.0, 1.0})};
  const double half = std::abs(criticality_distance(seg) - std::numbers::sqrt2 / 2.0);
  const bool pass = worst_grid <= 1e-6 && worst_faces <= 1e-6 && half <= 1e-9;
  return {pass, fmt("200 random sets: max |solver - grid search| %.2e, max |solver - face enumeration| %.2e "
                    "(limit 1e-6); |d(0, co{e1,e2}) - sqrt(2)/2| = %.1e (limit 1e-9)",
                    worst_grid, worst_faces, half)};
}

// 8. Strata inequality suite ----------------------------------------------------------------------------

Outcome strata_suite() {
  const auto f = find_function("ridge");
  const std::size_t K = 10000;
  const auto sched = StepSchedule::harmonic(1.0, 20);
  InexactConfig ic;
  ic.c_b = 0.1;
  const auto strat = battery_stratification("ridge", 2, 0.5, 1.0, ratio_bound(sched, K));
  std::vector<Trajectory> runs;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) runs.push_back(inexact_run(f, random_start(f.dim, seed), sched, ic, K, seed));

  std::size_t rl_pairs = 0, rl_violations = 0, repeats = 0;
  for (const auto& t : runs) {
    const auto blocks = block_recursion(t, strat);
    repeats += blocks.repeat_violations;
    for (const auto& p : relative_length_check(t, strat, blocks, 500, t.seed)) {
      ++rl_pairs;
      if (p.violated) ++rl_violations;
    }
  }

  DescentSetup setup;
  setup.psi = {1.0, strat.theta};
  setup.model = {1.0, 1.0, strat.theta};
  std::vector<FitSample> train;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto segs = descent_segments(runs[i], strat);
    const auto s = descent_fit_samples(runs[i], strat, f, segs, setup);
    train.insert(train.end(), s.begin(), s.end());
  }
  const auto fit = fit_two_multipliers(train);
  setup.psi.c = std::max(fit.a, 1e-12);
  setup.iota = fit.b;
  std::size_t segments = 0, descent_violations = 0;
  double worst = -1e300;
  for (std::size_t i = 5; i < 10; ++i) {
    for (const auto& seg : descent_segments(runs[i], strat)) {
      const double r = descent_residual(runs[i], strat, f, seg.stratum, seg.a, seg.b, setup);
      ++segments;
      worst = std::max(worst, r);
      if (r > 1e-12) ++descent_violations;
    }
  }
  const bool pass = rl_pairs > 0 && rl_violations == 0 && fit.feasible && segments > 0 && descent_violations == 0;
  return {pass, fmt("diam <= RL + 4 c_bar c_d alpha^beta_lower: %zu/%zu pairs violated (10 runs, K=10^4, %zu "
                    "no-repeat violations); descent: fitted c=%.4g iota=%.4g on 5 seeds, %zu/%zu held-out segments "
                    "violated (max residual %.3e)",
                    rl_violations, rl_pairs, repeats, setup.psi.c, setup.iota, descent_violations, segments, worst)};
}

// 9. Window error Monte Carlo ---------------------------------------------------------------------------

Outcome window_monte_carlo() {
  const auto f = find_function("abs", 1);
  const auto sched = StepSchedule::harmonic(1.0);
  auto plan = window_indices(sched, 0.3, 500);
  plan.gamma = 0.45;
  StochasticNoise noise;
  noise.sigma = 1.0;
  double total = 0.0, worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    WindowAccumulator acc(plan);
    stochastic_stream(f, random_start(1, seed), sched, noise, plan.s.back(), seed, acc, {});
    const auto r = window_error_check(acc.stats(), plan.gamma);
    total += r.violation_fraction;
    worst = std::max(worst, r.violation_fraction);
  }
  const double mean = total / 20.0;
  return {mean <= 0.05, fmt("mean tail violation fraction %.4f (limit 0.05), worst seed %.4f; 20 seeds, T=500 "
                            "windows (%zu steps each)",
                            mean, worst, plan.s.back())};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"identity suite", identities},
      {"psi Hoelder property", psi_hoelder},
      {"window recursion oracle", window_oracle},
      {"momentum bounds", momentum_bounds},
      {"convergence battery", convergence_battery},
      {"criterion checker discrimination", criterion_discrimination},
      {"min-norm-point oracle", min_norm_oracle},
      {"strata inequality suite", strata_suite},
      {"window error Monte Carlo", window_monte_carlo},
  };
  std::vector<std::size_t> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(static_cast<std::size_t>(std::atoi(argv[i])));
  if (selected.empty())
    for (std::size_t i = 1; i <= criteria.size(); ++i) selected.push_back(i);

  int failures = 0;
  for (std::size_t id : selected) {
    if (id < 1 || id > criteria.size()) {
      std::fprintf(stderr, "unknown criterion %zu\n", id);
      return 2;
    }
    const auto& [title, fn] = criteria[id - 1];
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %zu %s: %s -- %s [%.1fs]\n", id, o.pass ? "PASS" : "FAIL", title.c_str(), o.detail.c_str(),
                secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
