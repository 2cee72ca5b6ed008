#include "stratflow/experiment.hpp"

#include "stratflow/geometry.hpp"
#include "stratflow/reductions.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

namespace stratflow {

namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

// Identity-class invariants that make a run fail with exit code 4.
constexpr double kIdentityTolerance = 1e-10;

enum class SeedStatus { ok, blowup, invariant, error };

const char* to_string(SeedStatus s) {
  switch (s) {
    case SeedStatus::ok:
      return "ok";
    case SeedStatus::blowup:
      return "blowup";
    case SeedStatus::invariant:
      return "invariant_failure";
    case SeedStatus::error:
      return "error";
  }
  return "error";
}

struct SeedOutcome {
  std::uint64_t seed = 0;
  SeedStatus status = SeedStatus::ok;
  std::string message;
  std::vector<fs::path> files;
  ojson summary = ojson::object();
  std::vector<FitSample> bound_samples;
};

void write_json(const ojson& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

ojson series(const std::vector<std::size_t>& k, const std::vector<double>& value, const char* axis = "k") {
  ojson j;
  j[axis] = k;
  j["value"] = value;
  return j;
}

// diam(x_{[k, K]}) at every requested k (ascending), from one reverse sweep.
std::vector<double> tail_diameters(const Trajectory& t, const std::vector<std::size_t>& ks) {
  const std::size_t K = t.steps();
  std::vector<Vec> reversed(t.x.rbegin(), t.x.rend());
  FarthestTree tree(reversed);
  RunningDiameter running(tree, reversed, 0);
  std::vector<double> out(ks.size(), 0.0);
  std::size_t j = 0;  // reversed index reached
  for (std::size_t i = ks.size(); i-- > 0;) {
    const std::size_t target = K - ks[i];
    while (j < target) {
      running.advance();
      ++j;
    }
    out[i] = running.value();
  }
  return out;
}

Trajectory run_method(const ExperimentConfig& cfg, const PiecewiseSmoothFunction& f, const Vec& x0,
                      const StepSchedule& s, std::uint64_t seed) {
  const RunLimits limits{cfg.blowup_radius};
  if (cfg.method == "stochastic") return stochastic_run(f, x0, s, cfg.stochastic, cfg.K, seed, limits);
  if (cfg.method == "momentum") return momentum_run(f, x0, s, cfg.momentum, cfg.K, seed, limits);
  return inexact_run(f, x0, s, cfg.inexact, cfg.K, seed, limits);
}

Vec start_point(const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto n = cfg.dimension();
  if (cfg.x0) return Eigen::Map<const Vec>(cfg.x0->data(), n);
  return random_start(n, seed, cfg.init_radius);
}

std::vector<double> window_ratios(const WindowPlan& plan) {
  std::vector<double> r;
  r.reserve(plan.s.size());
  for (std::size_t t = 0; t < plan.s.size(); ++t)
    r.push_back(static_cast<double>(plan.s[t]) / std::pow(static_cast<double>(t + 1), 1.0 / plan.zeta));
  return r;
}

double stratified_beta_lower(const ExperimentConfig& cfg) {
  try {
    if (cfg.strata) return cfg.strata->beta_lower;
    return battery_stratification(cfg.function, cfg.dimension(), cfg.theta).beta_lower;
  } catch (const std::exception&) {
    return BoundConstants{}.beta_lower;
  }
}

std::vector<FitSample> bound_samples(const ExperimentConfig& cfg, const Trajectory& t,
                                     const PiecewiseSmoothFunction& f, const Desingularizer& d,
                                     const BoundConstants& consts, const TailErrorModel& model) {
  if (cfg.bound_mode == BoundMode::inexact) return inexact_bound_samples(t, f, d, consts, model);
  std::vector<FitSample> out;
  for (const auto& [k1, k2] : bound_windows(t.steps())) {
    const auto terms = diameter_bound_terms(cfg.bound_mode, d, consts, model, t, f, k1, k2);
    out.push_back({terms.lhs, terms.potential, terms.error, consts.C * terms.constant});
  }
  return out;
}

ojson window_report(const ExperimentConfig& cfg, const Trajectory& t, const StepSchedule& s, SeedOutcome& outcome) {
  ojson j;
  const WindowPlan plan = [&] {
    auto p = window_indices_within(s, cfg.zeta, t.steps());
    p.gamma = cfg.gamma;
    return p;
  }();
  j["zeta"] = plan.zeta;
  j["gamma"] = plan.gamma;
  j["windows"] = plan.windows();
  j["s"] = plan.s;
  j["s_ratio"] = window_ratios(plan);
  j["sandwich_violation"] = window_sandwich_violation(plan, s);
  if (plan.windows() == 0) {
    j["note"] = "no complete window within K steps";
    return j;
  }
  const auto w = window_aggregate(t, plan);
  const double recon = window_reconstruction_error(t, plan, w);
  j["reconstruction_error"] = recon;
  if (!(recon <= kIdentityTolerance)) {
    outcome.status = SeedStatus::invariant;
    outcome.message = "window reconstruction error " + format_real(recon);
  }
  if (plan.windows() >= 100) {
    const auto a = window_asymptotics(plan, s);
    j["asymptotics"] = {{"applicable", a.applicable}, {"s_ratio_min", a.s_ratio_min},
                        {"s_ratio_max", a.s_ratio_max}, {"a_ratio_min", a.a_ratio_min},
                        {"a_ratio_max", a.a_ratio_max}, {"s_band", a.s_band},
                        {"a_band", a.a_band},           {"band_factor", a.band_factor},
                        {"flagged", a.flagged}};
  }
  const auto stats = window_stats(t, plan);
  const auto err = window_error_check(stats, plan.gamma);
  j["error_check"] = {{"tail_start", err.tail_start},
                      {"tail_windows", err.tail_windows},
                      {"violations", err.violations},
                      {"violation_fraction", err.violation_fraction},
                      {"deviation_ratio", err.deviation_ratio}};
  return j;
}

ojson momentum_report(const ExperimentConfig& cfg, const Trajectory& t, const PiecewiseSmoothFunction& f,
                      SeedOutcome& outcome) {
  ojson j;
  if (cfg.method != "momentum") {
    j["note"] = "momentum decomposition applies to momentum runs only";
    return j;
  }
  MomentumDecomposition d;
  try {
    d = momentum_decompose(t, cfg.momentum.kappa, cfg.zeta);
  } catch (const std::runtime_error& ex) {
    outcome.status = SeedStatus::invariant;
    outcome.message = ex.what();
    j["error"] = ex.what();
    return j;
  }
  j["kappa"] = d.kappa;
  j["increment_error"] = d.increment_error;
  j["reconstruction_error"] = d.reconstruction_error;
  if (!(d.increment_error <= kIdentityTolerance && d.reconstruction_error <= kIdentityTolerance)) {
    outcome.status = SeedStatus::invariant;
    outcome.message = "momentum identity error " + format_real(std::max(d.increment_error, d.reconstruction_error));
  }
  MomentumCheckOptions opts;
  opts.L = f.lipschitz_bound;
  opts.iota_m = cfg.momentum.iota_m;
  opts.tail_start = std::min<std::size_t>(100, t.steps() / 2);
  opts.band_start = std::min<std::size_t>(1000, t.steps() / 2);
  opts.hull_stride = std::max<std::size_t>(1, t.steps() / 1000);
  const auto r = momentum_bounds_check(t, d, opts, &f);
  j["checks"] = {{"checked", r.checked},
                 {"a_violations", r.a_violations},
                 {"e_violations", r.e_violations},
                 {"b_ratio_min", r.b_ratio_min},
                 {"b_ratio_max", r.b_ratio_max},
                 {"b_band", r.b_band},
                 {"c_xi", r.c_xi},
                 {"xi_violations", r.xi_violations},
                 {"hull_distance_max", r.hull_distance_max},
                 {"hull_violations", r.hull_violations},
                 {"e_decay_exponent", r.e_decay_exponent}};
  return j;
}

ojson strata_report(const ExperimentConfig& cfg, const Trajectory& t, const PiecewiseSmoothFunction& f) {
  ojson j;
  try {
    const Stratification s =
        cfg.strata ? *cfg.strata : battery_stratification(cfg.function, cfg.dimension(), cfg.theta);
    j["strata"] = s.size();
    j["beta_lower"] = s.beta_lower;
    j["c_bar"] = s.c_bar;
    const auto blocks = block_recursion(t, s);
    j["crossings"] = blocks.crossings.size();
    j["blocks"] = blocks.blocks.size();
    j["open_regime"] = blocks.open_regime;
    j["membership_failures"] = blocks.membership_failures;
    j["repeat_violations"] = blocks.repeat_violations;
    const auto rl = relative_length_check(t, s, blocks, cfg.strata_pairs, t.seed);
    std::size_t violated = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& r : rl) {
      violated += r.violated ? 1 : 0;
      worst = std::max(worst, r.diameter - r.relative_length - r.slack);
    }
    j["rl_pairs"] = rl.size();
    j["rl_violations"] = violated;
    j["rl_worst_margin"] = rl.empty() ? 0.0 : worst;

    DescentSetup setup;
    setup.psi = {1.0, s.theta};
    setup.model = {1.0, 1.0, s.theta};
    setup.iota = s.iota;
    setup.level = cfg.level;
    const auto segments = descent_segments(t, s);
    const auto samples = descent_fit_samples(t, s, f, segments, setup);
    const auto fit = fit_two_multipliers(samples);
    j["descent_segments"] = segments.size();
    j["descent_fit"] = {{"c", fit.a}, {"iota", fit.b}, {"feasible", fit.feasible}};
  } catch (const std::exception& ex) {
    j["error"] = ex.what();
  }
  return j;
}

SeedOutcome run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  SeedOutcome out;
  out.seed = seed;
  const fs::path dir = cfg.output;
  const std::string tag = "seed" + std::to_string(seed);
  const auto f = find_function(cfg.function, cfg.dimension());
  const auto schedule = cfg.schedule.build();

  ojson diag;
  diag["seed"] = seed;
  diag["function"] = cfg.function;
  diag["method"] = cfg.method;
  diag["K"] = cfg.K;

  Trajectory t;
  try {
    t = run_method(cfg, f, start_point(cfg, seed), schedule, seed);
  } catch (const BlowUpError& ex) {
    out.status = SeedStatus::blowup;
    out.message = ex.what();
    diag["status"] = to_string(out.status);
    diag["blowup_step"] = ex.step();
    diag["message"] = out.message;
    const auto path = dir / ("diag_" + tag + ".json");
    write_json(diag, path);
    out.files.push_back(path);
    out.summary = {{"seed", seed}, {"status", to_string(out.status)}, {"message", out.message}};
    return out;
  }

  const auto csv = dir / ("traj_" + tag + ".csv");
  const auto sidecar = dir / ("traj_" + tag + ".json");
  write_trajectory_csv(t, csv, cfg.thin_every, cfg.dense_tail);
  write_trajectory_sidecar(t, sidecar);
  out.files.push_back(csv);
  out.files.push_back(sidecar);

  const std::size_t K = t.steps();
  // Identities.
  const double update_err = update_identity_error(t);
  const double avg_res = averaging_residual(t, K);
  const double avg_tol = averaging_tolerance(t, K);
  diag["identities"] = {{"update_error", update_err}, {"averaging_residual", avg_res}, {"averaging_tolerance", avg_tol}};
  if (!(update_err <= kIdentityTolerance) || !(avg_res <= avg_tol)) {
    out.status = SeedStatus::invariant;
    out.message = "update/averaging identity violated";
  }

  // Series.
  const auto ks = thinned_indices(K, cfg.thin_every, cfg.dense_tail);
  std::vector<double> fvals;
  fvals.reserve(ks.size());
  for (auto k : ks) fvals.push_back(f.value(t.x[k]));
  const auto tails = tail_diameters(t, ks);
  ojson ser;
  ser["f"] = series(ks, fvals);
  ser["tail_diameter"] = series(ks, tails);

  Rng rng(seed, Stream::diagnostics);
  std::vector<std::size_t> crit_k;
  std::vector<double> crit_v;
  double crit_final = std::numeric_limits<double>::quiet_NaN();
  if (cfg.diagnostics.criticality) {
    crit_k = geometric_grid(1, K, 1.2);
    if (crit_k.empty() || crit_k.back() != K) crit_k.push_back(K);
    crit_k.insert(crit_k.begin(), 0);
    for (auto k : crit_k) crit_v.push_back(criticality_distance(f, t.x[k], cfg.criticality_r, cfg.criticality_m, rng));
    crit_final = crit_v.back();
  }
  ser["criticality"] = series(crit_k, crit_v);

  const auto plan = window_indices_within(schedule, cfg.zeta, K);
  std::vector<std::size_t> ts(plan.s.size());
  for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = i;
  ser["window_ratio"] = series(ts, window_ratios(plan), "t");
  diag["series"] = std::move(ser);

  ojson summary{{"seed", seed}};
  summary["f_final"] = f.value(t.x.back());
  summary["tail_diameter_half"] = diameter(t, K / 2, K);
  summary["criticality_final"] = crit_final;
  summary["update_error"] = update_err;
  summary["averaging_residual"] = avg_res;

  if (cfg.diagnostics.criterion) {
    const auto profile = criterion_residual(t, [](const Vec&) { return 0.0; }, 1);
    diag["criterion"] = {{"potential", "zero"},
                         {"k1", profile.k1},
                         {"sup_residual", profile.sup_residual},
                         {"tail_max", profile.tail_max},
                         {"max_tail", profile.max_tail}};
    summary["criterion_max_tail"] = profile.max_tail;
    // Tail maximum from the first grid k1 >= K/2 on.
    const auto half = std::lower_bound(profile.k1.begin(), profile.k1.end(), K / 2);
    summary["criterion_tail_half"] =
        half == profile.k1.end() ? 0.0 : profile.tail_max[static_cast<std::size_t>(half - profile.k1.begin())];
  }

  if (cfg.diagnostics.bounds) {
    const Desingularizer d{1.0, cfg.theta};
    BoundConstants consts;
    consts.beta = cfg.bound_beta;
    consts.level = cfg.level;
    consts.beta_lower = stratified_beta_lower(cfg);
    const TailErrorModel model{1.0, cfg.bound_beta, cfg.theta};
    const auto terms = diameter_bound_terms(cfg.bound_mode, d, consts, model, t, f);
    diag["bounds"] = {{"mode", to_string(cfg.bound_mode)}, {"theta", cfg.theta},      {"lhs", terms.lhs},
                      {"potential", terms.potential},      {"error", terms.error},     {"constant", terms.constant},
                      {"rhs_unit", terms.rhs}};
    out.bound_samples = bound_samples(cfg, t, f, d, consts, model);
  }

  if (cfg.diagnostics.windows) {
    const auto path = dir / ("window_" + tag + ".json");
    write_json(window_report(cfg, t, schedule, out), path);
    out.files.push_back(path);
  }
  if (cfg.diagnostics.momentum_decomp) {
    const auto path = dir / ("momentum_" + tag + ".json");
    write_json(momentum_report(cfg, t, f, out), path);
    out.files.push_back(path);
  }
  if (cfg.diagnostics.strata) {
    const auto path = dir / ("strata_" + tag + ".json");
    write_json(strata_report(cfg, t, f), path);
    out.files.push_back(path);
  }

  diag["status"] = to_string(out.status);
  if (!out.message.empty()) diag["message"] = out.message;
  summary["status"] = to_string(out.status);
  if (!out.message.empty()) summary["message"] = out.message;
  const auto path = dir / ("diag_" + tag + ".json");
  write_json(diag, path);
  out.files.insert(out.files.begin() + 2, path);
  out.summary = std::move(summary);
  return out;
}

}  // namespace

std::size_t worker_count(std::size_t jobs) {
  std::size_t cap = std::max<unsigned>(1, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("STRATFLOW_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) cap = static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::min(cap, jobs));
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  RunResult result;
  try {
    cfg.validate();
  } catch (const ConfigError& ex) {
    result.exit_code = exit_code::config;
    result.messages.push_back(ex.what());
    return result;
  }
  fs::create_directories(cfg.output);

  std::vector<SeedOutcome> outcomes(cfg.seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) {
      try {
        outcomes[i] = run_seed(cfg, cfg.seeds[i]);
      } catch (const std::exception& ex) {
        outcomes[i].seed = cfg.seeds[i];
        outcomes[i].status = SeedStatus::error;
        outcomes[i].message = ex.what();
        outcomes[i].summary = {{"seed", cfg.seeds[i]}, {"status", "error"}, {"message", ex.what()}};
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const auto workers = worker_count(cfg.seeds.size());
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  bool blowup = false, invariant = false, error = false;
  ojson summary;
  summary["function"] = cfg.function;
  summary["dim"] = cfg.dimension();
  summary["method"] = cfg.method;
  summary["K"] = cfg.K;
  summary["seeds"] = cfg.seeds;
  ojson runs = ojson::array();
  ojson reports = ojson::array();
  for (auto& o : outcomes) {
    blowup = blowup || o.status == SeedStatus::blowup;
    invariant = invariant || o.status == SeedStatus::invariant;
    error = error || o.status == SeedStatus::error;
    if (!o.message.empty()) result.messages.push_back("seed " + std::to_string(o.seed) + ": " + o.message);
    for (const auto& p : o.files) {
      result.files.push_back(p);
      if (p.filename().string().rfind("diag_", 0) == 0 && o.status != SeedStatus::blowup)
        reports.push_back(p.filename().string());
    }
    runs.push_back(o.summary);
  }
  summary["runs"] = std::move(runs);
  summary["reports"] = std::move(reports);

  if (cfg.diagnostics.bounds) {
    // Fit the multipliers on the first half of the seeds, validate on the rest.
    std::vector<FitSample> train, holdout;
    const std::size_t split = (outcomes.size() + 1) / 2;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      auto& dst = (i < split || outcomes.size() == 1) ? train : holdout;
      dst.insert(dst.end(), outcomes[i].bound_samples.begin(), outcomes[i].bound_samples.end());
    }
    const auto fit = fit_two_multipliers(train);
    constexpr double margin = 1.5;
    const TwoMultiplierFit scaled{margin * fit.a, margin * fit.b, fit.feasible};
    summary["bounds_fit"] = {{"mode", to_string(cfg.bound_mode)},
                             {"theta", cfg.theta},
                             {"varsigma1", fit.a},
                             {"varsigma2", fit.b},
                             {"feasible", fit.feasible},
                             {"train_samples", train.size()},
                             {"holdout_samples", holdout.size()},
                             {"transfer_margin", margin},
                             {"holdout_violations", count_violations(scaled, holdout)}};
  }

  if (invariant)
    result.exit_code = exit_code::invariant;
  else if (blowup)
    result.exit_code = exit_code::blowup;
  else if (error)
    result.exit_code = exit_code::failure;
  summary["exit_code"] = result.exit_code;
  const auto path = cfg.output / "summary.json";
  write_json(summary, path);
  result.files.push_back(path);
  return result;
}

}  // namespace stratflow
