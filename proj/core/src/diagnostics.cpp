#include "stratflow/diagnostics.hpp"

#include "stratflow/geometry.hpp"
#include "stratflow/minnorm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace stratflow {

// Diameters ---------------------------------------------------------------

double diameter_pairwise(std::span<const Vec> points) {
  if (points.empty()) throw std::invalid_argument("diameter of an empty set");
  double best = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j) best = std::max(best, (points[i] - points[j]).squaredNorm());
  return std::sqrt(best);
}

namespace {

std::size_t farthest_from(std::span<const Vec> points, const Vec& p) {
  std::size_t arg = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d = (points[i] - p).squaredNorm();
    if (d > best) {
      best = d;
      arg = i;
    }
  }
  return arg;
}

}  // namespace

double diameter(std::span<const Vec> points) {
  if (points.empty()) throw std::invalid_argument("diameter of an empty set");
  if (points.size() <= 5000) return diameter_pairwise(points);

  // Farthest-point sweeps give a pair (a, b) with |a - b| >= diam / 2.
  std::size_t a = farthest_from(points, points.front());
  std::size_t b = farthest_from(points, points[a]);
  double lower = (points[a] - points[b]).norm();
  for (int sweep = 0; sweep < 2; ++sweep) {
    const std::size_t c = farthest_from(points, points[b]);
    const double d = (points[c] - points[b]).norm();
    if (d <= lower) break;
    lower = d;
    a = b;
    b = c;
  }

  // Order the candidates along the sweep axis so index blocks are spatially
  // tight, then finish exactly with the pruned farthest-point search.
  const Vec axis = points[b] - points[a];
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> key(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) key[i] = axis.dot(points[i]);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return key[i] < key[j]; });
  std::vector<Vec> sorted;
  sorted.reserve(points.size());
  for (auto i : order) sorted.push_back(points[i]);
  FarthestTree tree(sorted);
  double best = lower;
  for (std::size_t i = 0; i < sorted.size(); ++i) best = tree.farthest(sorted[i], i + 1, sorted.size(), best);
  return best;
}

double diameter(const Trajectory& t, std::size_t k1, std::size_t k2) {
  if (k1 > k2 || k2 >= t.x.size()) throw std::out_of_range("diameter range outside the trajectory");
  return diameter(std::span<const Vec>(t.x).subspan(k1, k2 - k1 + 1));
}

// Convergence criterion ---------------------------------------------------

std::vector<std::size_t> geometric_grid(std::size_t first, std::size_t last, double ratio) {
  if (!(ratio > 1.0)) throw std::invalid_argument("grid ratio must exceed 1");
  std::vector<std::size_t> out;
  std::size_t k = first;
  while (k <= last) {
    out.push_back(k);
    const auto next = static_cast<std::size_t>(std::ceil(static_cast<double>(k) * ratio));
    k = std::max(k + 1, next);
  }
  return out;
}

namespace {

std::vector<std::size_t> k2_samples(std::size_t k1, std::size_t K, std::size_t max_samples) {
  const std::size_t span = K - k1;
  std::vector<std::size_t> out;
  if (span <= max_samples) {
    for (std::size_t k2 = k1 + 1; k2 <= K; ++k2) out.push_back(k2);
    return out;
  }
  // Geometric offsets from k1, always ending at K.
  const double ratio = std::pow(static_cast<double>(span), 1.0 / static_cast<double>(max_samples - 1));
  double offset = 1.0;
  for (std::size_t i = 0; i < max_samples; ++i) {
    const auto o = std::min<std::size_t>(span, static_cast<std::size_t>(std::llround(offset)));
    if (out.empty() || k1 + o > out.back()) out.push_back(k1 + o);
    offset *= ratio;
  }
  if (out.back() != K) out.push_back(K);
  return out;
}

}  // namespace

CriterionProfile criterion_residual(std::span<const Vec> x, const Potential& potential, std::size_t k_min,
                                    PairGrid grid) {
  if (x.size() < 2) throw std::invalid_argument("criterion needs at least two iterates");
  const std::size_t K = x.size() - 1;
  if (k_min >= K) throw std::invalid_argument("k_min must be < K");
  std::vector<double> L(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) L[k] = potential(x[k]);
  FarthestTree tree(x);

  CriterionProfile out;
  out.k1 = geometric_grid(k_min, K - 1, grid.ratio);
  out.sup_residual.resize(out.k1.size());
  for (std::size_t g = 0; g < out.k1.size(); ++g) {
    const std::size_t k1 = out.k1[g];
    const auto samples = k2_samples(k1, K, std::max<std::size_t>(grid.max_k2, 2));
    std::size_t next_sample = 0;
    RunningDiameter running(tree, x, k1);
    double sup = -std::numeric_limits<double>::infinity();
    for (std::size_t k2 = k1 + 1; k2 <= K; ++k2) {
      const double diam = running.advance();
      const double r = diam + L[k2] - L[k1];
      sup = std::max(sup, r);
      if (next_sample < samples.size() && samples[next_sample] == k2) {
        out.cells.push_back({k1, k2, diam, r});
        ++next_sample;
      }
    }
    out.sup_residual[g] = sup;
  }
  out.tail_max.resize(out.k1.size());
  double running_max = -std::numeric_limits<double>::infinity();
  for (std::size_t g = out.k1.size(); g-- > 0;) {
    running_max = std::max(running_max, out.sup_residual[g]);
    out.tail_max[g] = running_max;
  }
  out.max_tail = out.tail_max.front();
  return out;
}

CriterionProfile criterion_residual(const Trajectory& t, const Potential& potential, std::size_t k_min,
                                    PairGrid grid) {
  return criterion_residual(std::span<const Vec>(t.x), potential, k_min, grid);
}

// Desingularizer ------------------------------------------------------------

void Desingularizer::validate() const {
  if (!(c > 0.0)) throw std::invalid_argument("desingularizer scale c must be > 0");
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("desingularizer theta must lie in (0, 1)");
}

double Desingularizer::operator()(double s) const { return c * signed_pow(s, 1.0 - theta); }

double psi(const Desingularizer& d, double s) { return d(s); }

// Criticality ----------------------------------------------------------------

double criticality_distance(std::span<const Vec> generators) {
  const auto res = min_norm_point(generators, 1e-10);
  if (!res.converged) throw std::runtime_error("min-norm-point solver did not converge");
  return res.distance;
}

double criticality_distance(const PiecewiseSmoothFunction& f, const Vec& x, double r, std::size_t m, Rng& rng) {
  if (r < 0.0) throw std::invalid_argument("criticality radius must be >= 0");
  if (m < 1) throw std::invalid_argument("criticality sample count must be >= 1");
  const SubgradientSet set = r == 0.0 ? clarke_generators(f, x) : goldstein_generators(f, x, r, m, rng, false);
  return criticality_distance(set.generators);
}

// Averaging identity ---------------------------------------------------------

double update_identity_error(const Trajectory& t) {
  t.check_shape();
  double worst = 0.0;
  for (std::size_t k = 0; k < t.steps(); ++k) {
    const Vec step = t.x[k + 1] - t.x[k];
    const double scale = 1.0 + step.norm() + t.alpha[k] * t.v[k].norm() + t.e[k].norm();
    const double r = (step + t.alpha[k] * t.v[k] - t.e[k]).norm() / scale;
    worst = std::max(worst, r);
  }
  return worst;
}

double averaging_residual(const Trajectory& t, std::size_t N) {
  t.check_shape();
  if (N < 1 || N > t.steps()) throw std::out_of_range("averaging index must satisfy 1 <= N <= K");
  double A = 0.0;
  Vec weighted = Vec::Zero(t.dim());
  Vec noise = Vec::Zero(t.dim());
  for (std::size_t k = 0; k < N; ++k) {
    A += t.alpha[k];
    weighted += t.alpha[k] * t.v[k];
    noise += t.e[k];
  }
  const Vec lhs = (t.x[N] - t.x[0]) / A;
  const Vec rhs = (-weighted + noise) / A;
  return (lhs - rhs).norm();
}

double averaging_tolerance(const Trajectory& t, std::size_t N) {
  double A = 0.0;
  for (std::size_t k = 0; k < N; ++k) A += t.alpha[k];
  return 1e-10 * (1.0 + (t.x[N] - t.x[0]).norm() / A);
}

// Tail errors ---------------------------------------------------------------

void TailErrorModel::validate() const {
  if (!(Q > 0.0)) throw std::invalid_argument("tail model Q must be > 0");
  if (!(beta > 0.0)) throw std::invalid_argument("tail model beta must be > 0");
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("tail model theta must lie in (0, 1)");
}

TailErrors tail_errors(const TailErrorModel& model, const Trajectory& t, std::size_t k, std::size_t K) {
  if (K > t.steps()) throw std::out_of_range("tail horizon beyond the trajectory");
  if (k > K) throw std::out_of_range("tail index must satisfy k <= K");
  double S = 0.0;
  double E = 0.0;
  for (std::size_t j = k; j < K; ++j) {
    S += std::pow(t.alpha[j], 1.0 + model.beta);
    E += t.e[j].norm();
  }
  TailErrors out;
  out.g1 = model.Q * (S + E);
  if (k < K) {
    const double a = t.alpha[k];
    out.g2 = model.Q * (std::pow(a, 1.0 + model.beta) + a * std::pow(out.g1, model.theta) + t.e[k].norm());
  }
  return out;
}

TailProfile tail_error_profile(const TailErrorModel& model, const Trajectory& t, std::size_t k1, std::size_t k2) {
  if (k2 > t.steps() || k1 > k2) throw std::out_of_range("tail profile window outside the trajectory");
  const std::size_t len = k2 - k1 + 1;
  TailProfile out;
  out.g1.assign(len, 0.0);
  out.g2.assign(len, 0.0);
  double S = 0.0;
  double E = 0.0;
  for (std::size_t i = len - 1; i-- > 0;) {
    const std::size_t k = k1 + i;
    const double a = t.alpha[k];
    const double en = t.e[k].norm();
    S += std::pow(a, 1.0 + model.beta);
    E += en;
    out.g1[i] = model.Q * (S + E);
    out.g2[i] = model.Q * (std::pow(a, 1.0 + model.beta) + a * std::pow(out.g1[i], model.theta) + en);
  }
  return out;
}

// Diameter bounds ------------------------------------------------------------

std::string to_string(BoundMode mode) { return mode == BoundMode::stratified ? "stratified" : "inexact"; }

BoundMode bound_mode_from_string(const std::string& name) {
  if (name == "stratified" || name == "thm2") return BoundMode::stratified;
  if (name == "inexact" || name == "thm3") return BoundMode::inexact;
  throw std::invalid_argument("unknown bound mode '" + name + "'");
}

BoundTerms diameter_bound_terms(BoundMode mode, const Desingularizer& d, const BoundConstants& consts,
                                const TailErrorModel& model, const Trajectory& t, const PiecewiseSmoothFunction& f,
                                std::size_t k1, std::size_t k2) {
  d.validate();
  if (k2 == static_cast<std::size_t>(-1)) k2 = t.steps();
  if (k1 >= k2 || k2 > t.steps()) throw std::out_of_range("bound window outside the trajectory");
  BoundTerms out;
  out.lhs = diameter(t, k1, k2);
  const double f0 = f.value(t.x[k1]) - consts.level;
  const double fK = f.value(t.x[k2]) - consts.level;

  if (mode == BoundMode::stratified) {
    const TailProfile g = tail_error_profile(model, t, k1, k2);
    double sum_g2 = 0.0;
    for (std::size_t i = 0; i + 1 < g.g2.size(); ++i) sum_g2 += g.g2[i];
    out.potential = 2.0 * (d(f0) - d(fK));
    out.error = 4.0 * (d(g.g1.front()) + d(g.g1.back())) + 2.0 * sum_g2;
    out.constant = std::pow(t.alpha[k1], consts.beta_lower * (1.0 - d.theta));
    out.rhs = out.potential + out.error + consts.C * out.constant;
    return out;
  }

  const double theta = d.theta;
  const double b = consts.beta;
  const std::size_t len = k2 - k1;
  // Suffix sums of alpha^{1+beta} and |e| inside the window.
  std::vector<double> step_tail(len + 1, 0.0), noise_tail(len + 1, 0.0);
  for (std::size_t i = len; i-- > 0;) {
    step_tail[i] = step_tail[i + 1] + std::pow(t.alpha[k1 + i], 1.0 + b);
    noise_tail[i] = noise_tail[i + 1] + t.e[k1 + i].norm();
  }
  double weighted_steps = 0.0;
  double weighted_noise = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double a = t.alpha[k1 + i];
    weighted_steps += a * std::pow(step_tail[i], theta);
    weighted_noise += a * std::pow(noise_tail[i], theta);
  }
  out.potential = signed_pow(f0, 1.0 - theta) - signed_pow(fK, 1.0 - theta);
  out.error = std::pow(t.alpha[k1], b) + step_tail[0] + std::pow(step_tail[0], 1.0 - theta) + weighted_steps +
              weighted_noise + noise_tail[0] + std::pow(noise_tail[0], 1.0 - theta);
  out.rhs = consts.varsigma1 * out.potential + consts.varsigma2 * out.error;
  return out;
}

double diameter_bound_rhs(BoundMode mode, const Desingularizer& d, const BoundConstants& consts,
                          const TailErrorModel& model, const Trajectory& t, const PiecewiseSmoothFunction& f) {
  return diameter_bound_terms(mode, d, consts, model, t, f).rhs;
}

// Fit-then-validate ------------------------------------------------------------

namespace {

bool satisfies(double a, double b, std::span<const FitSample> samples, double rel_tol) {
  for (const auto& s : samples) {
    const double rhs = a * s.p + b * s.q + s.slack;
    const double scale = std::abs(a * s.p) + std::abs(b * s.q) + std::abs(s.slack) + std::abs(s.lhs);
    if (s.lhs > rhs + rel_tol * scale) return false;
  }
  return true;
}

}  // namespace

TwoMultiplierFit fit_two_multipliers(std::span<const FitSample> samples) {
  TwoMultiplierFit best;
  double best_cost = std::numeric_limits<double>::infinity();
  auto consider = [&](double a, double b) {
    if (!(a >= 0.0) || !(b >= 0.0) || !std::isfinite(a) || !std::isfinite(b)) return;
    if (a + b >= best_cost) return;
    if (!satisfies(a, b, samples, 1e-12)) return;
    best_cost = a + b;
    best = {a, b, true};
  };
  consider(0.0, 0.0);
  // Vertices of the feasible region lie on the axes or at pairwise
  // intersections of the constraint lines a p_i + b q_i = lhs_i - slack_i.
  for (const auto& s : samples) {
    const double r = s.lhs - s.slack;
    if (s.p > 0.0) consider(r / s.p, 0.0);
    if (s.q > 0.0) consider(0.0, r / s.q);
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      const auto& u = samples[i];
      const auto& w = samples[j];
      const double det = u.p * w.q - u.q * w.p;
      if (std::abs(det) < 1e-300) continue;
      const double ru = u.lhs - u.slack;
      const double rw = w.lhs - w.slack;
      consider((ru * w.q - u.q * rw) / det, (u.p * rw - ru * w.p) / det);
    }
  }
  return best;
}

std::size_t count_violations(const TwoMultiplierFit& fit, std::span<const FitSample> samples, double rel_tol) {
  std::size_t n = 0;
  for (const auto& s : samples) {
    const double rhs = fit.a * s.p + fit.b * s.q + s.slack;
    const double scale = std::abs(fit.a * s.p) + std::abs(fit.b * s.q) + std::abs(s.slack) + std::abs(s.lhs);
    if (s.lhs > rhs + rel_tol * scale) ++n;
  }
  return n;
}

std::vector<std::pair<std::size_t, std::size_t>> bound_windows(std::size_t K, double ratio) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t k1 : geometric_grid(0, K - 1, ratio)) out.emplace_back(k1, K);
  for (std::size_t k2 : geometric_grid(1, K - 1, ratio)) out.emplace_back(0, k2);
  return out;
}

std::vector<FitSample> inexact_bound_samples(const Trajectory& t, const PiecewiseSmoothFunction& f,
                                             const Desingularizer& d, const BoundConstants& consts,
                                             const TailErrorModel& model) {
  std::vector<FitSample> out;
  for (const auto& [k1, k2] : bound_windows(t.steps())) {
    const auto terms = diameter_bound_terms(BoundMode::inexact, d, consts, model, t, f, k1, k2);
    out.push_back({terms.lhs, terms.potential, terms.error, 0.0});
  }
  return out;
}

std::vector<ThetaSweepResult> sweep_theta(std::span<const double> thetas, std::span<const Trajectory> train,
                                          std::span<const Trajectory> holdout, const PiecewiseSmoothFunction& f,
                                          const BoundConstants& consts, const TailErrorModel& model,
                                          double margin) {
  std::vector<ThetaSweepResult> out;
  for (double theta : thetas) {
    const Desingularizer d{1.0, theta};
    TailErrorModel m = model;
    m.theta = theta;
    std::vector<FitSample> fit_set, check_set;
    for (const auto& t : train) {
      auto s = inexact_bound_samples(t, f, d, consts, m);
      fit_set.insert(fit_set.end(), s.begin(), s.end());
    }
    for (const auto& t : holdout) {
      auto s = inexact_bound_samples(t, f, d, consts, m);
      check_set.insert(check_set.end(), s.begin(), s.end());
    }
    ThetaSweepResult r;
    r.theta = theta;
    r.fit = fit_two_multipliers(fit_set);
    r.margin = margin;
    const TwoMultiplierFit scaled{margin * r.fit.a, margin * r.fit.b, r.fit.feasible};
    r.holdout_violations = r.fit.feasible ? count_violations(scaled, check_set) : check_set.size();
    r.validated = r.fit.feasible && r.holdout_violations == 0;
    out.push_back(r);
  }
  return out;
}

double smallest_validated_theta(std::span<const ThetaSweepResult> sweep) {
  double best = -1.0;
  for (const auto& r : sweep)
    if (r.validated && (best < 0.0 || r.theta < best)) best = r.theta;
  return best;
}

}  // namespace stratflow
