#include "stratflow/experiment.hpp"

#include "stratflow/minnorm.hpp"
#include "stratflow/reductions.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>

namespace stratflow {

namespace {

struct Check {
  std::string name;
  std::function<std::pair<bool, std::string>()> run;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

// Identities ---------------------------------------------------------------------

const std::vector<std::string> kIdentityFunctions{"abs_sum", "ridge", "max_quad"};
constexpr std::size_t kIdentitySeeds = 10;
constexpr std::size_t kIdentitySteps = 1000;

template <typename Fn>
double worst_over_runs(Fn&& fn) {
  double worst = 0.0;
  for (const auto& name : kIdentityFunctions) {
    const auto f = find_function(name);
    for (std::uint64_t seed = 1; seed <= kIdentitySeeds; ++seed) worst = std::max(worst, fn(f, seed));
  }
  return worst;
}

std::pair<bool, std::string> limit(double value, double bound) {
  return {value <= bound, fmt("max %.3e (limit %.0e)", value, bound)};
}

std::vector<Check> identity_checks() {
  const auto sched = StepSchedule::harmonic(1.0);
  return {
      {"update_identity",
       [=] {
         return limit(worst_over_runs([&](const PiecewiseSmoothFunction& f, std::uint64_t seed) {
                        InexactConfig ic;
                        ic.c_b = 0.1;
                        ic.noise = NoiseMode::adversarial_bounded;
                        return update_identity_error(inexact_run(f, random_start(f.dim, seed), sched, ic,
                                                                 kIdentitySteps, seed));
                      }),
                      1e-10);
       }},
      {"momentum_increment",
       [=] {
         return limit(worst_over_runs([&](const PiecewiseSmoothFunction& f, std::uint64_t seed) {
                        const MomentumConfig mc{0.5, 0.0, TieRule::first};
                        const auto t = momentum_run(f, random_start(f.dim, seed), sched, mc, kIdentitySteps, seed);
                        return momentum_decompose(t, mc.kappa, 0.5).increment_error;
                      }),
                      1e-10);
       }},
      {"momentum_reconstruction",
       [=] {
         return limit(worst_over_runs([&](const PiecewiseSmoothFunction& f, std::uint64_t seed) {
                        const MomentumConfig mc{0.5, 0.0, TieRule::first};
                        const auto t = momentum_run(f, random_start(f.dim, seed), sched, mc, kIdentitySteps, seed);
                        return momentum_decompose(t, mc.kappa, 0.5).reconstruction_error;
                      }),
                      1e-10);
       }},
      {"window_reconstruction",
       [=] {
         return limit(worst_over_runs([&](const PiecewiseSmoothFunction& f, std::uint64_t seed) {
                        const StochasticNoise noise{0.5, NoiseLaw::gaussian, TieRule::first};
                        const auto t = stochastic_run(f, random_start(f.dim, seed), sched, noise, kIdentitySteps, seed);
                        const auto plan = window_indices_within(sched, 0.5, kIdentitySteps);
                        return window_reconstruction_error(t, plan, window_aggregate(t, plan));
                      }),
                      1e-10);
       }},
      {"averaging_identity",
       [=] {
         // Residual in units of the acceptance threshold, scaled back to 1e-10.
         return limit(worst_over_runs([&](const PiecewiseSmoothFunction& f, std::uint64_t seed) {
                        InexactConfig ic;
                        ic.c_b = 0.1;
                        const auto t = inexact_run(f, random_start(f.dim, seed), sched, ic, kIdentitySteps, seed);
                        double worst = 0.0;
                        for (std::size_t N : {std::size_t{1}, std::size_t{10}, std::size_t{100}, kIdentitySteps})
                          worst = std::max(worst, 1e-10 * averaging_residual(t, N) / averaging_tolerance(t, N));
                        return worst;
                      }),
                      1e-10);
       }},
      {"stochastic_zero_noise",
       [=] {
         // sigma = 0 reproduces the c_b = 0 inexact run bit for bit.
         double worst = worst_over_runs([&](const PiecewiseSmoothFunction& f, std::uint64_t seed) {
           const Vec x0 = random_start(f.dim, seed);
           const auto a = stochastic_run(f, x0, sched, StochasticNoise{}, kIdentitySteps, seed);
           const auto b = inexact_run(f, x0, sched, InexactConfig{}, kIdentitySteps, seed);
           double d = 0.0;
           for (std::size_t k = 0; k < a.x.size(); ++k) d = std::max(d, (a.x[k] - b.x[k]).lpNorm<Eigen::Infinity>());
           return d;
         });
         return std::pair{worst == 0.0, fmt("max coordinate difference %.3e (must be 0)", worst)};
       }},
  };
}

// Inequalities -------------------------------------------------------------------

std::vector<Check> inequality_checks() {
  return {
      {"psi_hoelder",
       [] {
         Rng rng(11, Stream::diagnostics);
         std::size_t violations = 0;
         for (double theta : {0.1, 0.3, 0.5, 0.7, 0.9}) {
           const Desingularizer psi{1.0, theta};
           for (int i = 0; i < 20000; ++i) {
             const double t1 = rng.uniform(-10.0, 10.0), t2 = rng.uniform(-10.0, 10.0);
             if (std::abs(psi(t1) - psi(t2)) > 2.0 * psi(std::abs(t1 - t2)) + 1e-12) ++violations;
           }
         }
         return std::pair{violations == 0, fmt("%zu violations in 10^5 pairs", violations)};
       }},
      {"min_norm_known_value",
       [] {
         const std::vector<Vec> pts{Vec::Unit(2, 0), Vec::Unit(2, 1)};
         const double err = std::abs(min_norm_point(pts).distance - std::sqrt(0.5));
         return std::pair{err <= 1e-9, fmt("|d - sqrt(2)/2| = %.3e (limit 1e-9)", err)};
       }},
      {"criticality_at_critical_points",
       [] {
         double worst = 0.0;
         Rng rng(12, Stream::diagnostics);
         for (const auto& f : battery()) {
           Vec x = f.critical_set.nearest(Vec::Constant(f.dim, 0.3));
           worst = std::max(worst, criticality_distance(f, x, 1e-4, 64, rng));
         }
         return std::pair{worst <= 1e-3, fmt("max distance %.3e at r=1e-4, m=64 (limit 1e-3)", worst)};
       }},
      {"window_sandwich",
       [] {
         const auto sched = StepSchedule::harmonic(1.0);
         double worst = 0.0;
         for (double zeta : {0.3, 0.5, 0.7}) worst = std::max(worst, window_sandwich_violation(window_indices(sched, zeta, 300), sched));
         return std::pair{worst == 0.0, fmt("max violation %.3e (must be 0)", worst)};
       }},
      {"momentum_weight_band",
       [] {
         const auto f = find_function("abs_sum");
         const auto sched = StepSchedule::harmonic(1.0);
         std::size_t violations = 0;
         for (double kappa : {0.3, 0.5, 0.9}) {
           const MomentumConfig mc{kappa, 0.0, TieRule::first};
           const auto t = momentum_run(f, random_start(f.dim, 3), sched, mc, 5000, 3);
           MomentumCheckOptions opts;
           opts.L = f.lipschitz_bound;
           violations += momentum_bounds_check(t, momentum_decompose(t, kappa, 0.5), opts).a_violations;
         }
         return std::pair{violations == 0, fmt("%zu violations of b/2 <= a <= b for k >= 100", violations)};
       }},
      {"diameter_vs_relative_length",
       [] {
         const auto f = find_function("ridge");
         const auto s = battery_stratification("ridge");
         InexactConfig ic;
         ic.c_b = 0.1;
         ic.noise = NoiseMode::adversarial_bounded;
         std::size_t pairs = 0, violated = 0;
         for (std::uint64_t seed = 1; seed <= 3; ++seed) {
           const auto t = inexact_run(f, random_start(f.dim, seed), StepSchedule::harmonic(1.0, 20), ic, 3000, seed);
           const auto blocks = block_recursion(t, s);
           for (const auto& r : relative_length_check(t, s, blocks, 200, seed)) {
             ++pairs;
             violated += r.violated ? 1 : 0;
           }
         }
         return std::pair{violated == 0, fmt("%zu/%zu sampled pairs violated", violated, pairs)};
       }},
      {"tail_error_monotone",
       [] {
         const auto f = find_function("abs_sum");
         InexactConfig ic;
         ic.c_b = 0.1;
         ic.noise = NoiseMode::adversarial_bounded;
         const auto t = inexact_run(f, random_start(f.dim, 5), StepSchedule::harmonic(1.0), ic, 2000, 5);
         const TailErrorModel model{1.0, 0.5, 0.5};
         const auto p = tail_error_profile(model, t, 0, t.steps());
         double worst = 0.0;
         for (std::size_t i = 0; i + 1 < p.g1.size(); ++i) {
           const std::size_t k = i;
           const double drop = model.Q * (std::pow(t.alpha[k], 1.0 + model.beta) + t.e[k].norm());
           worst = std::max(worst, std::abs(p.g1[i] - p.g1[i + 1] - drop) / (1.0 + p.g1[i]));
         }
         return std::pair{worst <= 1e-12, fmt("max |g1_k - g1_{k+1} - Q(alpha^(1+beta) + |e|)| %.3e", worst)};
       }},
  };
}

// Monte Carlo ------------------------------------------------------------------------------

std::vector<Check> montecarlo_checks() {
  return {
      {"noise_second_moment",
       [] {
         double worst = 0.0;
         for (auto law : {NoiseLaw::gaussian, NoiseLaw::rademacher, NoiseLaw::uniform_ball}) {
           const StochasticNoise noise{0.7, law, TieRule::first};
           Rng rng(21, Stream::noise);
           const int draws = 100000;
           double sq = 0.0;
           Vec mean = Vec::Zero(3);
           for (int i = 0; i < draws; ++i) {
             const Vec e = noise.draw(3, rng);
             sq += e.squaredNorm();
             mean += e;
           }
           worst = std::max(worst, std::abs(sq / draws / (0.7 * 0.7) - 1.0));
           worst = std::max(worst, mean.norm() / draws / 0.7);
         }
         return std::pair{worst <= 0.02, fmt("max relative moment error %.4f over 3 laws, 10^5 draws (limit 0.02)", worst)};
       }},
      {"window_error_fraction",
       [] {
         const auto f = find_function("abs");
         const auto sched = StepSchedule::harmonic(1.0);
         const StochasticNoise noise{1.0, NoiseLaw::gaussian, TieRule::first};
         const auto plan = [&] {
           auto p = window_indices(sched, 0.3, 200);
           p.gamma = 0.45;
           return p;
         }();
         double mean = 0.0;
         const int seeds = 5;
         for (int seed = 1; seed <= seeds; ++seed) {
           WindowAccumulator acc(plan);
           stochastic_stream(f, Vec::Constant(1, 0.7), sched, noise, plan.s.back(), static_cast<std::uint64_t>(seed),
                             acc);
           mean += window_error_check(acc.stats(), plan.gamma).violation_fraction / seeds;
         }
         return std::pair{mean <= 0.05, fmt("mean tail violation fraction %.4f, T=200, 5 seeds (limit 0.05)", mean)};
       }},
      {"stochastic_convergence",
       [] {
         const auto f = find_function("abs_sum");
         const StochasticNoise noise{0.5, NoiseLaw::gaussian, TieRule::first};
         int good = 0;
         for (std::uint64_t seed = 1; seed <= 10; ++seed) {
           const auto t = stochastic_run(f, random_start(f.dim, seed), StepSchedule::harmonic(1.0), noise, 20000, seed);
           if (diameter(t, 10000, 20000) <= 5e-2) ++good;
         }
         return std::pair{good >= 9, fmt("%d/10 seeds with tail diameter <= 5e-2 at K=2*10^4 (need 9)", good)};
       }},
  };
}

}  // namespace

std::vector<std::string> check_suite_names() { return {"identities", "inequalities", "montecarlo"}; }

bool run_check_suite(const std::string& suite, std::ostream& out) {
  std::vector<Check> checks;
  if (suite == "identities")
    checks = identity_checks();
  else if (suite == "inequalities")
    checks = inequality_checks();
  else if (suite == "montecarlo")
    checks = montecarlo_checks();
  else
    throw std::invalid_argument("unknown suite '" + suite + "' (identities, inequalities, montecarlo)");

  bool all = true;
  for (const auto& c : checks) {
    bool pass = false;
    std::string detail;
    try {
      std::tie(pass, detail) = c.run();
    } catch (const std::exception& ex) {
      detail = std::string("exception: ") + ex.what();
    }
    all = all && pass;
    out << (pass ? "PASS " : "FAIL ") << suite << '/' << c.name << ": " << detail << '\n';
  }
  return all;
}

}  // namespace stratflow
