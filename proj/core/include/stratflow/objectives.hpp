#pragma once

#include "stratflow/rng.hpp"
#include "stratflow/vec.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace stratflow {

/// How pieces combine into f.
///  - max: f = max_j piece_j
///  - sum_of_abs: f = smooth + sum_j |piece_j|
///  - composite: f and its generators come from dedicated callbacks
enum class Combiner { max, sum_of_abs, composite };

/// Selection rule when several Clarke generators are available.
enum class TieRule { first, random_vertex };

std::string to_string(TieRule rule);
TieRule tie_rule_from_string(const std::string& name);

struct SmoothPiece {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
};

/// Finite points and spheres on which 0 is a Clarke subgradient.
struct CriticalSet {
  struct Sphere {
    Vec center;
    double radius;
  };
  std::vector<Vec> points;
  std::vector<Sphere> spheres;

  double distance(const Vec& x) const;
  /// Nearest critical point to x (sphere points by radial projection).
  Vec nearest(const Vec& x) const;
};

/// Generators whose convex hull represents the Clarke subdifferential at
/// base (radius 0) or its Goldstein enlargement over B(base, radius).
struct SubgradientSet {
  std::vector<Vec> generators;
  Vec base;
  double radius = 0.0;
};

class PiecewiseSmoothFunction {
 public:
  using GeneratorFn = std::function<std::vector<Vec>(const Vec&, double tol)>;

  std::string name;
  Eigen::Index dim = 0;
  Combiner combiner = Combiner::max;
  std::vector<SmoothPiece> pieces;
  /// Smooth summand for sum_of_abs; may be empty.
  SmoothPiece smooth;
  /// Callbacks for composite functions.
  std::function<double(const Vec&)> composite_value;
  GeneratorFn composite_generators;
  /// Bound on every generator norm over the box [-box_radius, box_radius]^n.
  double lipschitz_bound = 1.0;
  double box_radius = 2.0;
  CriticalSet critical_set;

  double value(const Vec& x) const;
  /// Gradients of all pieces active within the absolute tie band tol.
  std::vector<Vec> generators(const Vec& x, double tol) const;

 private:
  void check_dim(const Vec& x) const;
};

/// f(x); throws std::invalid_argument on dimension mismatch.
double evaluate(const PiecewiseSmoothFunction& f, const Vec& x);

/// Default tie band 1e-9 * (1 + |f(x)|).
double default_tolerance(const PiecewiseSmoothFunction& f, const Vec& x);

SubgradientSet clarke_generators(const PiecewiseSmoothFunction& f, const Vec& x,
                                 std::optional<double> tol_active = std::nullopt);

/// One element of the Clarke subdifferential at x chosen by the tie rule.
/// The random-vertex rule needs a generator; a null rng falls back to first.
Vec select_subgradient(const PiecewiseSmoothFunction& f, const Vec& x, TieRule rule = TieRule::first,
                       Rng* rng = nullptr);

/// A random element of the Goldstein enlargement co df(B(x, r)): flat
/// Dirichlet combination of one generator at each of m uniform points of the
/// ball. r = 0 returns select_subgradient(f, x) exactly.
Vec goldstein_sample(const PiecewiseSmoothFunction& f, const Vec& x, double r, std::size_t m, Rng& rng,
                     TieRule rule = TieRule::first);

/// Clarke generators gathered at x and at m uniform points of B(x, r).
SubgradientSet goldstein_generators(const PiecewiseSmoothFunction& f, const Vec& x, double r, std::size_t m,
                                    Rng& rng, bool include_center = false);

/// Default number of Goldstein samples per step, 2n + 2.
inline std::size_t default_goldstein_samples(Eigen::Index n) { return static_cast<std::size_t>(2 * n + 2); }

// Battery -----------------------------------------------------------------

PiecewiseSmoothFunction make_abs_sum(Eigen::Index n);
PiecewiseSmoothFunction make_ridge(Eigen::Index n);
PiecewiseSmoothFunction make_ring(Eigen::Index n);
PiecewiseSmoothFunction make_max_quad();
PiecewiseSmoothFunction make_smooth_quad(Eigen::Index n);
PiecewiseSmoothFunction make_linear(Eigen::Index n);

/// The named test functions in R^2: abs_sum, ridge, ring, max_quad,
/// smooth_quad.
std::vector<PiecewiseSmoothFunction> battery();

/// Looks up a function by name. "abs" is abs_sum in one dimension.
/// Throws std::invalid_argument for unknown names.
PiecewiseSmoothFunction find_function(const std::string& name, Eigen::Index dim = 2);

std::vector<std::string> function_names();

}  // namespace stratflow
