#include "stratflow/reductions.hpp"

#include "stratflow/minnorm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stratflow {

// Windowing ---------------------------------------------------------------------

WindowPlan window_indices(const StepSchedule& s, double zeta, std::size_t T) {
  if (!(zeta > 0.0 && zeta < 1.0)) throw std::invalid_argument("window exponent zeta must lie in (0, 1)");
  WindowPlan plan;
  plan.zeta = zeta;
  plan.s.reserve(T + 1);
  plan.s.push_back(0);
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t start = plan.s.back();
    const double threshold = std::pow(s.value(start), zeta);
    std::size_t k = start + 1;
    double sum = s.value(start) + s.value(k);
    while (!(sum > threshold)) {
      ++k;
      sum += s.value(k);
    }
    plan.s.push_back(k);
  }
  return plan;
}

WindowPlan window_indices_within(const StepSchedule& s, double zeta, std::size_t K) {
  if (!(zeta > 0.0 && zeta < 1.0)) throw std::invalid_argument("window exponent zeta must lie in (0, 1)");
  WindowPlan plan;
  plan.zeta = zeta;
  plan.s.push_back(0);
  while (true) {
    const std::size_t start = plan.s.back();
    const double threshold = std::pow(s.value(start), zeta);
    std::size_t k = start + 1;
    double sum = s.value(start) + s.value(k);
    while (!(sum > threshold) && k <= K) {
      ++k;
      sum += s.value(k);
    }
    if (k > K) break;
    plan.s.push_back(k);
  }
  return plan;
}

double window_sandwich_violation(const WindowPlan& plan, const StepSchedule& s) {
  double worst = 0.0;
  for (std::size_t t = 0; t < plan.windows(); ++t) {
    const double threshold = std::pow(s.value(plan.s[t]), plan.zeta);
    double inner = 0.0;
    for (std::size_t k = plan.s[t]; k < plan.s[t + 1]; ++k) inner += s.value(k);
    const double outer = inner + s.value(plan.s[t + 1]);
    worst = std::max(worst, inner - threshold);
    if (!(threshold < outer)) worst = std::max(worst, threshold - outer + std::numeric_limits<double>::min());
  }
  return worst;
}

namespace {

void check_plan(const Trajectory& t, const WindowPlan& plan) {
  if (plan.s.empty() || plan.s.front() != 0) throw std::invalid_argument("window plan must start at 0");
  if (plan.s.back() > t.steps())
    throw std::out_of_range("window plan reaches index " + std::to_string(plan.s.back()) + " beyond K = " +
                            std::to_string(t.steps()));
}

}  // namespace

WindowedSequence window_aggregate(const Trajectory& t, const WindowPlan& plan) {
  t.check_shape();
  check_plan(t, plan);
  WindowedSequence w;
  const std::size_t T = plan.windows();
  w.a.reserve(T);
  w.u.reserve(T);
  w.e.reserve(T);
  for (std::size_t i = 0; i < T; ++i) {
    double a = 0.0;
    Vec weighted = Vec::Zero(t.dim());
    Vec noise = Vec::Zero(t.dim());
    for (std::size_t k = plan.s[i]; k < plan.s[i + 1]; ++k) {
      a += t.alpha[k];
      weighted += t.alpha[k] * t.v[k];
      noise += t.e[k];
    }
    w.a.push_back(a);
    w.u.push_back(weighted / a);
    w.e.push_back(std::move(noise));
  }
  return w;
}

double window_reconstruction_error(const Trajectory& t, const WindowPlan& plan, const WindowedSequence& w) {
  check_plan(t, plan);
  double worst = 0.0;
  for (std::size_t i = 0; i < w.a.size(); ++i) {
    const Vec& from = t.x[plan.s[i]];
    const Vec& to = t.x[plan.s[i + 1]];
    const Vec rebuilt = from - w.a[i] * w.u[i] + w.e[i];
    const double scale = 1.0 + (to - from).norm() + w.a[i] * w.u[i].norm() + w.e[i].norm();
    worst = std::max(worst, (to - rebuilt).norm() / scale);
  }
  return worst;
}

WindowAsymptotics window_asymptotics(const WindowPlan& plan, const StepSchedule& s, double band_factor) {
  const std::size_t T = plan.windows();
  if (T < 100) throw std::invalid_argument("window asymptotics need T >= 100 windows");
  WindowAsymptotics out;
  out.band_factor = band_factor;
  out.applicable = s.is_order_one_over_k();
  out.s_ratio_min = out.a_ratio_min = std::numeric_limits<double>::infinity();
  out.s_ratio_max = out.a_ratio_max = 0.0;
  const double power = 1.0 / plan.zeta;
  for (std::size_t t = T / 10; t <= T; ++t) {
    const double tt = static_cast<double>(t + 1);
    const double sr = static_cast<double>(plan.s[t]) / std::pow(tt, power);
    out.s_ratio_min = std::min(out.s_ratio_min, sr);
    out.s_ratio_max = std::max(out.s_ratio_max, sr);
    if (t < T) {
      double a = 0.0;
      for (std::size_t k = plan.s[t]; k < plan.s[t + 1]; ++k) a += s.value(k);
      out.a_ratio_min = std::min(out.a_ratio_min, a * tt);
      out.a_ratio_max = std::max(out.a_ratio_max, a * tt);
    }
  }
  out.s_band = out.s_ratio_max / out.s_ratio_min;
  out.a_band = out.a_ratio_max / out.a_ratio_min;
  out.flagged = !out.applicable || !(out.s_band <= band_factor) || !(out.a_band <= band_factor);
  return out;
}

WindowAccumulator::WindowAccumulator(WindowPlan plan) : plan_(std::move(plan)) {
  if (plan_.s.empty() || plan_.s.front() != 0) throw std::invalid_argument("window plan must start at 0");
  stats_.reserve(plan_.windows());
}

void WindowAccumulator::begin(const Vec& x0) {
  stats_.clear();
  t_ = 0;
  anchor_ = x0;
  noise_ = Vec::Zero(x0.size());
}

void WindowAccumulator::step(const StepRecord& rec) {
  if (t_ >= plan_.windows()) return;
  if (rec.k == plan_.s[t_]) {
    open_ = WindowStats{rec.k, rec.alpha, 0.0, 0.0, 0.0};
    anchor_ = rec.x;
    noise_.setZero();
  }
  noise_ += rec.e;
  open_.a += rec.alpha;
  open_.noise_sup = std::max(open_.noise_sup, noise_.norm());
  open_.deviation = std::max(open_.deviation, (rec.x_next - anchor_).norm());
  if (rec.k + 1 == plan_.s[t_ + 1]) {
    stats_.push_back(open_);
    ++t_;
  }
}

std::vector<WindowStats> window_stats(const Trajectory& t, const WindowPlan& plan) {
  t.check_shape();
  check_plan(t, plan);
  WindowAccumulator acc(plan);
  acc.begin(t.x.front());
  for (std::size_t k = 0; k < plan.s.back(); ++k)
    acc.step(StepRecord{k, t.alpha[k], t.x[k], t.v[k], t.e[k], t.x[k + 1]});
  return acc.stats();
}

WindowErrorReport window_error_check(std::span<const WindowStats> stats, double gamma) {
  if (!(gamma > 0.0 && gamma < 0.5)) throw std::invalid_argument("window error exponent gamma must lie in (0, 1/2)");
  WindowErrorReport out;
  const std::size_t T = stats.size();
  out.tail_start = T / 2;
  for (std::size_t t = out.tail_start; t < T; ++t) {
    const auto& w = stats[t];
    ++out.tail_windows;
    if (w.noise_sup > std::pow(w.alpha_start, gamma)) ++out.violations;
    out.deviation_ratio = std::max(out.deviation_ratio, w.deviation / w.a);
  }
  out.violation_fraction =
      out.tail_windows == 0 ? 0.0 : static_cast<double>(out.violations) / static_cast<double>(out.tail_windows);
  return out;
}

WindowErrorReport window_error_check(const Trajectory& t, const WindowPlan& plan, double gamma) {
  if (!(gamma > plan.zeta)) throw std::invalid_argument("window error check needs gamma > zeta");
  const auto stats = window_stats(t, plan);
  return window_error_check(stats, gamma);
}

GoldsteinRadiusFit fit_window_radius(std::span<const std::vector<WindowStats>> train,
                                     std::span<const std::vector<WindowStats>> holdout, double margin) {
  GoldsteinRadiusFit out;
  double ratio = 0.0;
  for (const auto& stats : train)
    for (std::size_t t = stats.size() / 2; t < stats.size(); ++t) ratio = std::max(ratio, stats[t].deviation / stats[t].a);
  out.c_b = margin * ratio;
  for (const auto& stats : holdout) {
    for (std::size_t t = stats.size() / 2; t < stats.size(); ++t) {
      ++out.holdout_windows;
      if (stats[t].deviation > out.c_b * stats[t].a) ++out.holdout_violations;
    }
  }
  return out;
}

// Momentum -----------------------------------------------------------------------

MomentumDecomposition momentum_decompose(const Trajectory& t, double kappa, double zeta) {
  if (!(kappa > 0.0 && kappa < 1.0)) throw std::invalid_argument("momentum kappa must lie in (0, 1)");
  if (!(zeta > 0.0 && zeta < 1.0)) throw std::invalid_argument("window exponent zeta must lie in (0, 1)");
  t.check_shape();
  const std::size_t K = t.steps();
  const Eigen::Index n = t.dim();
  MomentumDecomposition d;
  d.kappa = kappa;
  d.zeta = zeta;
  d.b.resize(K);
  d.T.resize(K);
  d.a.resize(K);
  d.u.reserve(K);
  d.e.reserve(K);

  // D_k = sum_{i<=k} kappa^{k-i} alpha_i v_i and its magnitude companion W_k.
  std::vector<Vec> D;
  D.reserve(K);
  double b_prev = 0.0;
  double W = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    d.b[k] = kappa * b_prev + t.alpha[k];
    b_prev = d.b[k];
    D.push_back(t.alpha[k] * t.v[k]);
    if (k > 0) D[k] += kappa * D[k - 1];
    W = kappa * W + t.alpha[k] * t.v[k].norm();

    const Vec dx = t.x[k + 1] - t.x[k];
    const double err = (dx + D[k]).norm() / (dx.norm() + W + std::numeric_limits<double>::min());
    d.increment_error = std::max(d.increment_error, err);
    if (err > 1e-8)
      throw std::runtime_error("momentum increment at k = " + std::to_string(k) +
                               " does not match the stored directions (relative error " + format_real(err) + ")");

    // Recent window: extend backwards while kappa^{k-j} b_j >= b_k^{1+zeta}.
    const double bar = std::pow(d.b[k], 1.0 + zeta);
    std::size_t T = k;
    if (d.b[k] >= bar) {
      double weight = 1.0;
      while (T > 0) {
        weight *= kappa;
        if (weight * d.b[T - 1] >= bar)
          --T;
        else
          break;
      }
    }
    d.T[k] = T;

    double a = 0.0;
    Vec au = Vec::Zero(n);
    double w = 1.0;
    for (std::size_t i = k + 1; i-- > T;) {
      a += w * t.alpha[i];
      au += (w * t.alpha[i]) * t.v[i];
      w *= kappa;
    }
    d.a[k] = a;
    d.u.push_back(au / a);
    // w = kappa^{k-T+1} now.
    d.e.push_back(T == 0 ? Vec(Vec::Zero(n)) : Vec(-w * D[T - 1]));

    const Vec rebuilt = -a * d.u.back() + d.e.back();
    const double rec_err = (dx - rebuilt).norm() / (dx.norm() + W + std::numeric_limits<double>::min());
    d.reconstruction_error = std::max(d.reconstruction_error, rec_err);
  }
  return d;
}

MomentumCheckReport momentum_bounds_check(const Trajectory& t, const MomentumDecomposition& d,
                                          const MomentumCheckOptions& opts, const PiecewiseSmoothFunction* f) {
  const std::size_t K = d.b.size();
  if (opts.tail_start >= K) throw std::invalid_argument("momentum check tail starts beyond the decomposition");
  MomentumCheckReport out;

  std::vector<Vec> probes;
  probes.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    const Vec& prev = k == 0 ? t.x[0] : t.x[k - 1];
    probes.push_back(t.x[k] + opts.iota_m * (t.x[k] - prev));
  }
  auto proximity = [&](std::size_t k) {
    double worst = 0.0;
    for (std::size_t i = d.T[k]; i <= k; ++i) worst = std::max(worst, (probes[i] - t.x[k]).norm());
    return worst / std::pow(d.b[k], opts.xi);
  };

  const std::size_t mid = opts.tail_start + (K - opts.tail_start) / 2;
  for (std::size_t k = opts.tail_start; k < mid; ++k) out.c_xi = std::max(out.c_xi, proximity(k));

  out.b_ratio_min = std::numeric_limits<double>::infinity();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t nfit = 0;
  for (std::size_t k = opts.tail_start; k < K; ++k) {
    ++out.checked;
    const double b = d.b[k];
    const double slack = 1e-12 * b;
    if (d.a[k] < 0.5 * b - slack || d.a[k] > b + slack) ++out.a_violations;
    const double en = d.e[k].norm();
    if (en > opts.L * std::pow(b, 1.0 + d.zeta) * (1.0 + 1e-12)) ++out.e_violations;
    if (k >= opts.band_start) {
      const double r = b * static_cast<double>(k + 1);
      out.b_ratio_min = std::min(out.b_ratio_min, r);
      out.b_ratio_max = std::max(out.b_ratio_max, r);
    }
    if (k >= mid && proximity(k) > out.c_xi * (1.0 + 1e-12)) ++out.xi_violations;
    if (en > 0.0) {
      const double lx = std::log(static_cast<double>(k + 1));
      const double ly = std::log(en);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++nfit;
    }
    if (f != nullptr && (k - opts.tail_start) % std::max<std::size_t>(opts.hull_stride, 1) == 0) {
      std::vector<Vec> gens;
      for (std::size_t i = d.T[k]; i <= k; ++i) {
        auto g = clarke_generators(*f, probes[i]).generators;
        gens.insert(gens.end(), g.begin(), g.end());
      }
      const double dist = hull_distance(d.u[k], gens, 1e-12).distance;
      out.hull_distance_max = std::max(out.hull_distance_max, dist);
      if (dist > opts.hull_tolerance) ++out.hull_violations;
    }
  }
  if (out.b_ratio_max > 0.0) out.b_band = out.b_ratio_max / out.b_ratio_min;
  if (nfit >= 2) {
    const double nf = static_cast<double>(nfit);
    const double denom = nf * sxx - sx * sx;
    out.e_decay_exponent = denom > 0.0 ? -(nf * sxy - sx * sy) / denom : std::nan("");
  } else {
    out.e_decay_exponent = std::nan("");
  }
  return out;
}

}  // namespace stratflow
