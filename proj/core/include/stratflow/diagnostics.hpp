#pragma once

#include "stratflow/objectives.hpp"
#include "stratflow/rng.hpp"
#include "stratflow/trajectory.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace stratflow {

// Diameters ---------------------------------------------------------------

/// Exact diameter. Sets of at most 5000 points use the pairwise scan; larger
/// sets seed a lower bound with farthest-point sweeps and finish with a
/// pruned exact search.
double diameter(std::span<const Vec> points);

/// Plain O(N^2) pairwise scan.
double diameter_pairwise(std::span<const Vec> points);

/// diam(x_{[k1, k2]}) of a trajectory (inclusive range).
double diameter(const Trajectory& t, std::size_t k1, std::size_t k2);

// Convergence criterion ---------------------------------------------------

using Potential = std::function<double(const Vec&)>;

/// Pair sampling for the limsup: k1 on a geometric grid, k2 stored at no
/// more than max_k2 samples per k1. The supremum over k2 is always exact.
struct PairGrid {
  double ratio = 1.3;
  std::size_t max_k2 = 200;
};

struct CriterionCell {
  std::size_t k1;
  std::size_t k2;
  double diameter;
  double residual;
};

struct CriterionProfile {
  std::vector<std::size_t> k1;
  /// sup over k2 in (k1, K] of r(k1, k2).
  std::vector<double> sup_residual;
  /// max over grid k1' >= k1 of sup_residual(k1').
  std::vector<double> tail_max;
  std::vector<CriterionCell> cells;
  /// tail_max at the first grid point, i.e. over k1 >= k_min.
  double max_tail = 0.0;
};

/// r(k1, k2) = diam(x_{[k1,k2]}) + L(x_{k2}) - L(x_{k1}).
CriterionProfile criterion_residual(std::span<const Vec> x, const Potential& potential, std::size_t k_min,
                                    PairGrid grid = {});
CriterionProfile criterion_residual(const Trajectory& t, const Potential& potential, std::size_t k_min,
                                    PairGrid grid = {});

/// Geometric grid k_min, ceil(1.3 k_min), ... below last.
std::vector<std::size_t> geometric_grid(std::size_t first, std::size_t last, double ratio);

// Desingularizing potentials -------------------------------------------------

/// psi(s) = c sgn(s) |s|^{1 - theta}; odd and strictly increasing.
struct Desingularizer {
  double c = 1.0;
  double theta = 0.5;

  void validate() const;
  double operator()(double s) const;
};

double psi(const Desingularizer& d, double s);

// Criticality ----------------------------------------------------------------

/// Distance from 0 to the hull of the Clarke generators at m uniform points
/// of B(x, r) (exact generators at x when r = 0). Throws std::runtime_error
/// if the min-norm solver hits its iteration cap.
double criticality_distance(const PiecewiseSmoothFunction& f, const Vec& x, double r, std::size_t m, Rng& rng);

/// Distance from 0 to co{generators}.
double criticality_distance(std::span<const Vec> generators);

// Update identity ------------------------------------------------------------

/// max_k |x_{k+1} - (x_k - alpha_k v_k + e_k)| / (1 + |x_{k+1} - x_k| + alpha_k |v_k| + |e_k|).
double update_identity_error(const Trajectory& t);

// Averaging identity ---------------------------------------------------------

/// | (x_N - x_0)/A_N - ( -sum lambda_k v_k + sum e_k / A_N ) | with
/// A_N = sum_{k<N} alpha_k and lambda_k = alpha_k / A_N.
double averaging_residual(const Trajectory& t, std::size_t N);

/// Acceptance threshold 1e-10 (1 + |x_N - x_0| / A_N).
double averaging_tolerance(const Trajectory& t, std::size_t N);

// Tail errors ---------------------------------------------------------------

/// g_{1,k} = Q (S_k + E_k) and g_{2,k} = Q (alpha_k^{1+beta} +
/// alpha_k g_{1,k}^theta + |e_k|) over zero-extended data, where S_k and E_k
/// are the tails of alpha^{1+beta} and |e|.
struct TailErrorModel {
  double Q = 1.0;
  double beta = 1.0;
  double theta = 0.5;

  void validate() const;
};

struct TailErrors {
  double g1 = 0.0;
  double g2 = 0.0;
};

/// Tail errors at k for the data truncated (zero-extended) after K steps.
TailErrors tail_errors(const TailErrorModel& model, const Trajectory& t, std::size_t k, std::size_t K);

/// All g_{1,k}, g_{2,k} for k in [k1, k2] of the window truncated at k2.
/// Entry i corresponds to k = k1 + i.
struct TailProfile {
  std::vector<double> g1;
  std::vector<double> g2;
};
TailProfile tail_error_profile(const TailErrorModel& model, const Trajectory& t, std::size_t k1, std::size_t k2);

// Diameter bounds ------------------------------------------------------------

enum class BoundMode {
  stratified,  // diameter bound for difference inclusions with stratified descent
  inexact,     // explicit tail form for the inexact subgradient method
};

std::string to_string(BoundMode mode);
BoundMode bound_mode_from_string(const std::string& name);

struct BoundConstants {
  double varsigma1 = 1.0;
  double varsigma2 = 1.0;
  double C = 0.0;
  /// Smallest stratum exponent (beta underline) in the stratified form.
  double beta_lower = 0.1;
  /// Step exponent beta of the inexact form.
  double beta = 0.5;
  /// Level-set radius; reported only.
  double epsilon = 1.0;
  /// f is shifted by this critical value before the potential is applied.
  double level = 0.0;
};

/// The right-hand side split into the parts that scale with the fitted
/// multipliers: rhs = potential_coef * potential + error_coef * error +
/// constant_coef * constant.
struct BoundTerms {
  double lhs = 0.0;  // diam(x_{[k1,k2]})
  double potential = 0.0;
  double error = 0.0;
  double constant = 0.0;
  double rhs = 0.0;
};

/// Evaluates the selected bound on the window [k1, k2] of t, treating the
/// window as a realization of its own. k2 = npos means K.
BoundTerms diameter_bound_terms(BoundMode mode, const Desingularizer& d, const BoundConstants& consts,
                                const TailErrorModel& model, const Trajectory& t, const PiecewiseSmoothFunction& f,
                                std::size_t k1 = 0, std::size_t k2 = static_cast<std::size_t>(-1));

double diameter_bound_rhs(BoundMode mode, const Desingularizer& d, const BoundConstants& consts,
                          const TailErrorModel& model, const Trajectory& t, const PiecewiseSmoothFunction& f);

// Fit-then-validate ------------------------------------------------------------

/// One inequality instance lhs <= a * p + b * q + slack.
struct FitSample {
  double lhs = 0.0;
  double p = 0.0;
  double q = 0.0;
  double slack = 0.0;
};

struct TwoMultiplierFit {
  double a = 0.0;
  double b = 0.0;
  bool feasible = false;
};

/// Minimal a + b >= 0 with lhs <= a p + b q + slack on every sample.
TwoMultiplierFit fit_two_multipliers(std::span<const FitSample> samples);

/// Number of samples violating lhs <= a p + b q + slack (with relative
/// tolerance rel_tol on the right-hand side magnitude).
std::size_t count_violations(const TwoMultiplierFit& fit, std::span<const FitSample> samples, double rel_tol = 1e-9);

/// Windows [k1, K] and [0, k2] with k1, k2 on a geometric grid, used as bound
/// instances.
std::vector<std::pair<std::size_t, std::size_t>> bound_windows(std::size_t K, double ratio = 1.5);

/// Samples for the inexact-form bound (p = potential term, q = error term)
/// over the windows of one trajectory.
std::vector<FitSample> inexact_bound_samples(const Trajectory& t, const PiecewiseSmoothFunction& f,
                                             const Desingularizer& d, const BoundConstants& consts,
                                             const TailErrorModel& model);

struct ThetaSweepResult {
  double theta = 0.0;
  TwoMultiplierFit fit;
  double margin = 1.0;
  std::size_t holdout_violations = 0;
  bool validated = false;
};

/// Fits minimal (varsigma1, varsigma2) on the training trajectories and
/// validates margin * (varsigma1, varsigma2) on the held-out ones for each
/// theta; returns the per-theta outcomes in input order. A minimal fit sits
/// on the training maximum, so some transfer margin is needed for it to
/// carry over to unseen seeds.
std::vector<ThetaSweepResult> sweep_theta(std::span<const double> thetas, std::span<const Trajectory> train,
                                          std::span<const Trajectory> holdout, const PiecewiseSmoothFunction& f,
                                          const BoundConstants& consts, const TailErrorModel& model,
                                          double margin = 1.5);

/// Smallest theta whose fit validates, or a negative value when none does.
double smallest_validated_theta(std::span<const ThetaSweepResult> sweep);

}  // namespace stratflow
