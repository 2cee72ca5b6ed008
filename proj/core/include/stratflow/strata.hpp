#pragma once

#include "stratflow/diagnostics.hpp"
#include "stratflow/objectives.hpp"
#include "stratflow/trajectory.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace stratflow {

enum class StratumKind { affine, sphere, open_region };

/// Open regions are described by a predicate family with closed-form
/// distances: whole space, halfspace {<normal, x> > offset}, orthant
/// {sign(x_j) = signs_j}, and shell {inner < |x - center| < outer}.
enum class RegionKind { whole, halfspace, orthant, shell };

std::string to_string(StratumKind kind);
StratumKind stratum_kind_from_string(const std::string& name);
std::string to_string(RegionKind kind);
RegionKind region_kind_from_string(const std::string& name);

struct Stratum {
  std::string name;
  StratumKind kind = StratumKind::affine;
  Eigen::Index ambient = 0;

  // affine: point + span of the orthonormal columns of basis.
  Vec point;
  Eigen::MatrixXd basis;
  // sphere and shell: center and radii.
  Vec center;
  double radius = 1.0;
  double inner = 0.0;
  double outer = 0.0;  // <= 0 means unbounded
  // open regions
  RegionKind region = RegionKind::whole;
  Vec normal;
  double offset = 0.0;
  Vec signs;

  // Exponents and tube radius of the stratified-descent condition.
  double beta = 0.0;
  double gamma = 0.0;
  double c = 1.0;

  bool is_open() const { return kind == StratumKind::open_region; }
  Eigen::Index dimension() const;

  /// Nearest point of the stratum's closure.
  Vec project(const Vec& x) const;
  double distance(const Vec& x) const;
  /// Exact distance from the segment [a, b] to the stratum.
  double segment_distance(const Vec& a, const Vec& b) const;
  /// Projects g onto the tangent space at y in M.
  Vec tangent(const Vec& y, const Vec& g) const;

  static Stratum affine(std::string name, Vec point, Eigen::MatrixXd directions);
  static Stratum sphere(std::string name, Vec center, double radius);
  static Stratum whole(std::string name, Eigen::Index n);
  static Stratum halfspace(std::string name, Vec normal, double offset);
  static Stratum orthant(std::string name, Vec signs);
  static Stratum shell(std::string name, Vec center, double inner, double outer);
};

/// Nearest point on m; throws std::domain_error for a sphere at its center.
Vec project(const Stratum& m, const Vec& x);

/// Gradient of f restricted to m at y (tangential part of a Clarke subgradient).
Vec restricted_gradient(const Stratum& m, const PiecewiseSmoothFunction& f, const Vec& y);

/// Strata (non-open first), frontier relation and the constants of the
/// stratified-descent condition. Indices are zero-based.
struct Stratification {
  std::string function;
  std::vector<Stratum> strata;
  /// frontier[i] lists every j with M_j contained in the boundary of M_i.
  std::vector<std::vector<std::size_t>> frontier;
  double theta = 0.5;
  double tau = 1.0;
  double c_d = 1.0;
  double iota = 1.0;

  // Derived by derive().
  std::vector<double> c_hat;       // c_d^{gamma_i} c_i
  std::vector<double> p;           // gamma_i (1 - theta)
  std::vector<double> beta_under;  // min{beta_j : M_i in boundary of M_j}, +inf if none
  double beta_lower = 0.0;
  double gamma_lower = 0.0;
  double p_lower = 0.0;
  double c_bar = 0.0;
  std::size_t non_open = 0;

  void derive();
  /// Throws std::invalid_argument when ordering, frontier or exponent
  /// conditions fail: 0 < beta_i < gamma_i (1 - theta) < tau (1 - theta) and
  /// M_j in boundary of M_i implies beta_i > gamma_j.
  void validate() const;
  std::size_t size() const { return strata.size(); }
};

/// Assigns exponents top-down: open strata get gamma = 0.95 tau; a lower
/// stratum gets 0.8 times the smallest p of the strata whose boundary holds
/// it; beta_i is the midpoint of (max child gamma, gamma_i (1 - theta)).
/// Then derives and validates.
void assign_exponents(Stratification& s);

/// Hand-built stratification of a battery function ("abs", "abs_sum",
/// "ridge", "ring", "max_quad", "smooth_quad").
Stratification battery_stratification(const std::string& function, Eigen::Index dim = 2, double theta = 0.5,
                                       double tau = 1.0, double c_d = 1.0);

/// x in N(i, alpha) = B(M_i, c_i alpha^beta_i) minus the tubes
/// B(M_l, c_l alpha^gamma_l) of the strata in its boundary.
bool neighborhood_member(const Stratification& s, std::size_t i, const Vec& x, double alpha);

/// k in [0, K) whose segment [x_k, x_{k+1}] meets some tube
/// B(M_i, c_hat_i alpha_k^gamma_i) of a non-open stratum.
std::vector<std::size_t> crossing_indices(const Trajectory& t, const Stratification& s);
bool is_crossing(const Trajectory& t, const Stratification& s, std::size_t k);

/// Minimal-dimension non-open stratum with d(x, M_i) <= 2 c_hat_i alpha^gamma_i.
/// Throws std::runtime_error when none qualifies.
std::size_t assign_point(const Stratification& s, const Vec& x, double alpha);
/// assign_point at x_k; throws std::invalid_argument when k is not a
/// crossing index.
std::size_t assign_stratum(const Trajectory& t, const Stratification& s, std::size_t k);

struct Block {
  std::size_t l = 0;
  std::size_t s = 0;
  std::size_t q = 0;
  std::size_t stratum = 0;
};

struct BlockStructure {
  std::vector<std::size_t> crossings;
  std::map<std::size_t, std::size_t> assignment;  // G on the crossing indices
  std::vector<Block> blocks;
  /// No crossing index: the run stays in one open stratum.
  bool open_regime = false;
  /// Blocks whose start was not inside its own neighborhood (the step
  /// sizes are too large for the standing assumptions).
  std::size_t membership_failures = 0;
  /// Blocks l_m with G(l) = G(l_m) for some later block start in (q, s].
  std::size_t repeat_violations = 0;
};

BlockStructure block_recursion(const Trajectory& t, const Stratification& s);
BlockStructure block_recursion(const Trajectory& t, const Stratification& s,
                               const std::vector<std::size_t>& crossings,
                               const std::map<std::size_t, std::size_t>& assignment);

/// Relative length of x_{[k1, k2]} by the three-case definition.
double relative_length(const Trajectory& t, const Stratification& s, const BlockStructure& blocks, std::size_t k1,
                       std::size_t k2);

/// 4 c_bar c_d alpha_{k1}^{beta_lower}.
double relative_length_slack(const Stratification& s, const Trajectory& t, std::size_t k1);

struct RelativeLengthSample {
  std::size_t k1 = 0;
  std::size_t k2 = 0;
  double diameter = 0.0;
  double relative_length = 0.0;
  double slack = 0.0;
  bool violated = false;
};

/// diam(x_{[k1,k2]}) <= RL + 4 c_bar c_d alpha_{k1}^{beta_lower} on random
/// pairs drawn from the diagnostics stream of seed.
std::vector<RelativeLengthSample> relative_length_check(const Trajectory& t, const Stratification& s,
                                                        const BlockStructure& blocks, std::size_t pairs,
                                                        std::uint64_t seed);

// Stratified descent ---------------------------------------------------------------

struct DescentSetup {
  Desingularizer psi;
  TailErrorModel model;
  double iota = 1.0;
  /// Critical value subtracted from f.
  double level = 0.0;
};

/// LHS - RHS of the stratified-descent inequality on the segment [a, b]
/// for stratum i; negative means satisfied. Throws std::invalid_argument if
/// some x_k leaves N(i, alpha_k).
double descent_residual(const Trajectory& t, const Stratification& s, const PiecewiseSmoothFunction& f,
                        std::size_t i, std::size_t a, std::size_t b, const DescentSetup& setup);

/// Maximal index runs [a, b], b > a, with x_k in N(i, alpha_k) throughout.
std::vector<std::pair<std::size_t, std::size_t>> membership_segments(const Trajectory& t, const Stratification& s,
                                                                     std::size_t i);

struct DescentSegment {
  std::size_t stratum = 0;
  std::size_t a = 0;
  std::size_t b = 0;
};

/// Sub-segments of every membership run (start and end on geometric grids
/// inside the run), over all strata.
std::vector<DescentSegment> descent_segments(const Trajectory& t, const Stratification& s,
                                             std::size_t max_per_run = 64);

/// Fit samples with p = psi_1(z_a) - psi_1(z_b) (unit scale), q = max alpha^tau
/// and slack = sum g_2, so that the fitted (a, b) are (c, iota).
std::vector<FitSample> descent_fit_samples(const Trajectory& t, const Stratification& s,
                                           const PiecewiseSmoothFunction& f,
                                           const std::vector<DescentSegment>& segments, const DescentSetup& setup);

}  // namespace stratflow
