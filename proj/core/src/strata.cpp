#include "stratflow/strata.hpp"

#include "stratflow/geometry.hpp"
#include "stratflow/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace stratflow {

std::string to_string(StratumKind kind) {
  switch (kind) {
    case StratumKind::affine: return "affine";
    case StratumKind::sphere: return "sphere";
    case StratumKind::open_region: return "open";
  }
  return "affine";
}

StratumKind stratum_kind_from_string(const std::string& name) {
  if (name == "affine" || name == "affine-subspace" || name == "affine_subspace") return StratumKind::affine;
  if (name == "sphere") return StratumKind::sphere;
  if (name == "open" || name == "open-region" || name == "open_region") return StratumKind::open_region;
  throw std::invalid_argument("unknown stratum kind '" + name + "'");
}

std::string to_string(RegionKind kind) {
  switch (kind) {
    case RegionKind::whole: return "whole";
    case RegionKind::halfspace: return "halfspace";
    case RegionKind::orthant: return "orthant";
    case RegionKind::shell: return "shell";
  }
  return "whole";
}

RegionKind region_kind_from_string(const std::string& name) {
  if (name == "whole") return RegionKind::whole;
  if (name == "halfspace") return RegionKind::halfspace;
  if (name == "orthant") return RegionKind::orthant;
  if (name == "shell") return RegionKind::shell;
  throw std::invalid_argument("unknown region kind '" + name + "'");
}

// Stratum -----------------------------------------------------------------------

Stratum Stratum::affine(std::string name, Vec point, Eigen::MatrixXd directions) {
  if (directions.rows() != point.size() && directions.cols() > 0)
    throw std::invalid_argument("affine stratum directions do not match the point dimension");
  Stratum m;
  m.name = std::move(name);
  m.kind = StratumKind::affine;
  m.ambient = point.size();
  m.point = std::move(point);
  if (directions.cols() == 0) {
    m.basis = Eigen::MatrixXd::Zero(m.ambient, 0);
  } else {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(directions);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(directions.cols()).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < directions.cols(); ++j)
      if (std::abs(r(j, j)) < 1e-12) throw std::invalid_argument("affine stratum directions are linearly dependent");
    m.basis = qr.householderQ() * Eigen::MatrixXd::Identity(m.ambient, directions.cols());
  }
  return m;
}

Stratum Stratum::sphere(std::string name, Vec center, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("sphere radius must be > 0");
  Stratum m;
  m.name = std::move(name);
  m.kind = StratumKind::sphere;
  m.ambient = center.size();
  m.center = std::move(center);
  m.radius = radius;
  return m;
}

Stratum Stratum::whole(std::string name, Eigen::Index n) {
  Stratum m;
  m.name = std::move(name);
  m.kind = StratumKind::open_region;
  m.region = RegionKind::whole;
  m.ambient = n;
  return m;
}

Stratum Stratum::halfspace(std::string name, Vec normal, double offset) {
  const double len = normal.norm();
  if (!(len > 0.0)) throw std::invalid_argument("halfspace normal must be nonzero");
  Stratum m;
  m.name = std::move(name);
  m.kind = StratumKind::open_region;
  m.region = RegionKind::halfspace;
  m.ambient = normal.size();
  m.normal = normal / len;
  m.offset = offset / len;
  return m;
}

Stratum Stratum::orthant(std::string name, Vec signs) {
  for (Eigen::Index j = 0; j < signs.size(); ++j)
    if (signs[j] != 1.0 && signs[j] != -1.0) throw std::invalid_argument("orthant signs must be +1 or -1");
  Stratum m;
  m.name = std::move(name);
  m.kind = StratumKind::open_region;
  m.region = RegionKind::orthant;
  m.ambient = signs.size();
  m.signs = std::move(signs);
  return m;
}

Stratum Stratum::shell(std::string name, Vec center, double inner, double outer) {
  if (inner < 0.0 || (outer > 0.0 && outer <= inner)) throw std::invalid_argument("shell radii must satisfy 0 <= inner < outer");
  Stratum m;
  m.name = std::move(name);
  m.kind = StratumKind::open_region;
  m.region = RegionKind::shell;
  m.ambient = center.size();
  m.center = std::move(center);
  m.inner = inner;
  m.outer = outer;
  return m;
}

Eigen::Index Stratum::dimension() const {
  switch (kind) {
    case StratumKind::affine: return basis.cols();
    case StratumKind::sphere: return ambient - 1;
    case StratumKind::open_region: return ambient;
  }
  return ambient;
}

Vec Stratum::project(const Vec& x) const {
  if (x.size() != ambient) throw std::invalid_argument("point dimension does not match the stratum");
  switch (kind) {
    case StratumKind::affine: return point + basis * (basis.transpose() * (x - point));
    case StratumKind::sphere: {
      const Vec d = x - center;
      const double r = d.norm();
      if (r == 0.0) throw std::domain_error("projection onto a sphere is undefined at its center");
      return center + (radius / r) * d;
    }
    case StratumKind::open_region: break;
  }
  switch (region) {
    case RegionKind::whole: return x;
    case RegionKind::halfspace: {
      const double h = normal.dot(x) - offset;
      return h >= 0.0 ? x : Vec(x - h * normal);
    }
    case RegionKind::orthant: {
      Vec y = x;
      for (Eigen::Index j = 0; j < y.size(); ++j)
        if (signs[j] * y[j] < 0.0) y[j] = 0.0;
      return y;
    }
    case RegionKind::shell: {
      const Vec d = x - center;
      const double r = d.norm();
      const double hi = outer > 0.0 ? outer : std::numeric_limits<double>::infinity();
      const double clamped = std::clamp(r, inner, hi);
      if (clamped == r) return x;
      if (r == 0.0) throw std::domain_error("projection onto a shell is undefined at its center");
      return center + (clamped / r) * d;
    }
  }
  return x;
}

double Stratum::distance(const Vec& x) const { return (x - project(x)).norm(); }

double Stratum::segment_distance(const Vec& a, const Vec& b) const {
  const Vec d = b - a;
  switch (kind) {
    case StratumKind::affine: {
      // |Q(a - p) + s Q d| over s in [0, 1] with Q the normal projector.
      const Vec w = (a - point) - basis * (basis.transpose() * (a - point));
      const Vec qd = d - basis * (basis.transpose() * d);
      const double dd = qd.squaredNorm();
      const double s = dd > 0.0 ? std::clamp(-w.dot(qd) / dd, 0.0, 1.0) : 0.0;
      return (w + s * qd).norm();
    }
    case StratumKind::sphere: {
      // |y(s) - c| is convex along the segment, so its range is [near, far].
      const double dd = d.squaredNorm();
      const double s = dd > 0.0 ? std::clamp(-(a - center).dot(d) / dd, 0.0, 1.0) : 0.0;
      const double near = (a + s * d - center).norm();
      const double far = std::max((a - center).norm(), (b - center).norm());
      if (radius < near) return near - radius;
      if (radius > far) return radius - far;
      return 0.0;
    }
    case StratumKind::open_region: break;
  }
  throw std::logic_error("segment distance is only defined for non-open strata");
}

Vec Stratum::tangent(const Vec& y, const Vec& g) const {
  switch (kind) {
    case StratumKind::affine: return basis * (basis.transpose() * g);
    case StratumKind::sphere: {
      const Vec d = y - center;
      const double r = d.norm();
      if (r == 0.0) throw std::domain_error("tangent space of a sphere is undefined at its center");
      const Vec n = d / r;
      return g - g.dot(n) * n;
    }
    case StratumKind::open_region: return g;
  }
  return g;
}

Vec project(const Stratum& m, const Vec& x) { return m.project(x); }

Vec restricted_gradient(const Stratum& m, const PiecewiseSmoothFunction& f, const Vec& y) {
  return m.tangent(y, select_subgradient(f, y));
}

// Stratification ---------------------------------------------------------------

void Stratification::derive() {
  const std::size_t n = strata.size();
  frontier.resize(n);
  c_hat.assign(n, 0.0);
  p.assign(n, 0.0);
  beta_under.assign(n, std::numeric_limits<double>::infinity());
  non_open = 0;
  beta_lower = gamma_lower = std::numeric_limits<double>::infinity();
  p_lower = std::numeric_limits<double>::infinity();
  c_bar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = strata[i];
    c_hat[i] = std::pow(c_d, m.gamma) * m.c;
    p[i] = m.gamma * (1.0 - theta);
    if (!m.is_open()) {
      ++non_open;
      p_lower = std::min(p_lower, p[i]);
    }
    beta_lower = std::min(beta_lower, m.beta);
    gamma_lower = std::min(gamma_lower, m.gamma);
    c_bar = std::max(c_bar, m.c);
    for (std::size_t j : frontier[i])
      if (j < n) beta_under[j] = std::min(beta_under[j], m.beta);
  }
  if (non_open == 0) p_lower = *std::min_element(p.begin(), p.end());
}

void Stratification::validate() const {
  const std::size_t n = strata.size();
  if (n == 0) throw std::invalid_argument("stratification has no strata");
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("stratification theta must lie in (0, 1)");
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("stratification tau must lie in (0, 1]");
  if (!(c_d >= 1.0)) throw std::invalid_argument("step ratio bound c_d must be >= 1");
  if (frontier.size() != n) throw std::invalid_argument("frontier relation does not cover every stratum");
  if (c_hat.size() != n) throw std::invalid_argument("derived constants are missing; call derive()");
  bool seen_open = false;
  const Eigen::Index ambient = strata.front().ambient;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = strata[i];
    const std::string tag = "stratum " + std::to_string(i) + " (" + m.name + ")";
    if (m.ambient != ambient) throw std::invalid_argument(tag + " lives in a different ambient space");
    if (m.is_open())
      seen_open = true;
    else if (seen_open)
      throw std::invalid_argument(tag + " is non-open but listed after an open stratum");
    if (!(m.c > 0.0)) throw std::invalid_argument(tag + ": radius c must be > 0");
    if (!(m.beta > 0.0 && m.beta < p[i] && p[i] < tau * (1.0 - theta)))
      throw std::invalid_argument(tag + ": exponents must satisfy 0 < beta < gamma (1 - theta) < tau (1 - theta)");
    for (std::size_t j : frontier[i]) {
      if (j >= n || j == i) throw std::invalid_argument(tag + ": invalid frontier index");
      if (strata[j].dimension() >= m.dimension())
        throw std::invalid_argument(tag + ": a boundary stratum must have lower dimension");
      if (!(m.beta > strata[j].gamma))
        throw std::invalid_argument(tag + ": beta must exceed gamma of every stratum in its boundary");
    }
  }
}

void assign_exponents(Stratification& s) {
  const std::size_t n = s.strata.size();
  s.frontier.resize(n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return s.strata[i].dimension() > s.strata[j].dimension(); });
  std::vector<std::vector<std::size_t>> parents(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j : s.frontier[i]) parents.at(j).push_back(i);

  const double top = 0.95 * s.tau;
  for (std::size_t i : order) {
    auto& m = s.strata[i];
    if (m.is_open() || parents[i].empty()) {
      m.gamma = m.is_open() ? top : 0.8 * top * (1.0 - s.theta);
      continue;
    }
    double smallest = std::numeric_limits<double>::infinity();
    for (std::size_t par : parents[i]) smallest = std::min(smallest, s.strata[par].gamma * (1.0 - s.theta));
    m.gamma = 0.8 * smallest;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double a = 0.0;
    for (std::size_t j : s.frontier[i]) a = std::max(a, s.strata[j].gamma);
    s.strata[i].beta = 0.5 * (a + s.strata[i].gamma * (1.0 - s.theta));
  }
  s.derive();
  s.validate();
}

namespace {

Vec unit_vec(Eigen::Index n, Eigen::Index i, double value = 1.0) {
  Vec v = Vec::Zero(n);
  v[i] = value;
  return v;
}

Eigen::MatrixXd columns(Eigen::Index n, const std::vector<Eigen::Index>& free) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(free.size()));
  for (std::size_t j = 0; j < free.size(); ++j) m(free[j], static_cast<Eigen::Index>(j)) = 1.0;
  return m;
}

/// {x_Z = 0} for every nonempty coordinate set Z, plus the open orthants.
void coordinate_strata(Stratification& s, Eigen::Index n) {
  if (n < 1 || n > 8) throw std::invalid_argument("coordinate stratification supports 1 <= n <= 8");
  const std::size_t subsets = std::size_t{1} << n;
  std::vector<std::size_t> masks;
  for (std::size_t mask = 1; mask < subsets; ++mask) masks.push_back(mask);
  // Smallest strata (most zero coordinates) first.
  std::stable_sort(masks.begin(), masks.end(),
                   [](std::size_t a, std::size_t b) { return std::popcount(a) > std::popcount(b); });
  for (std::size_t mask : masks) {
    std::vector<Eigen::Index> free;
    std::string name = "{";
    for (Eigen::Index j = 0; j < n; ++j) {
      if (mask & (std::size_t{1} << j)) {
        if (name.size() > 1) name += ",";
        name += "x" + std::to_string(j + 1) + "=0";
      } else {
        free.push_back(j);
      }
    }
    name += "}";
    s.strata.push_back(Stratum::affine(name, Vec::Zero(n), columns(n, free)));
  }
  const std::size_t lower = s.strata.size();
  for (std::size_t pattern = 0; pattern < subsets; ++pattern) {
    Vec signs(n);
    std::string name = "orthant(";
    for (Eigen::Index j = 0; j < n; ++j) {
      signs[j] = (pattern & (std::size_t{1} << j)) ? -1.0 : 1.0;
      name += signs[j] > 0 ? "+" : "-";
    }
    s.strata.push_back(Stratum::orthant(name + ")", signs));
  }
  s.frontier.assign(s.strata.size(), {});
  for (std::size_t i = 0; i < lower; ++i)
    for (std::size_t j = 0; j < lower; ++j)
      if (i != j && (masks[i] & masks[j]) == masks[i]) s.frontier[i].push_back(j);  // Z_i strictly inside Z_j
  for (std::size_t i = lower; i < s.strata.size(); ++i)
    for (std::size_t j = 0; j < lower; ++j) s.frontier[i].push_back(j);
}

}  // namespace

Stratification battery_stratification(const std::string& function, Eigen::Index dim, double theta, double tau,
                                      double c_d) {
  Stratification s;
  s.function = function;
  s.theta = theta;
  s.tau = tau;
  s.c_d = c_d;
  if (function == "abs") {
    coordinate_strata(s, 1);
  } else if (function == "abs_sum") {
    coordinate_strata(s, dim);
  } else if (function == "ridge") {
    std::vector<Eigen::Index> free;
    for (Eigen::Index j = 1; j < dim; ++j) free.push_back(j);
    s.strata.push_back(Stratum::affine("{x1=0}", Vec::Zero(dim), columns(dim, free)));
    s.strata.push_back(Stratum::halfspace("{x1>0}", unit_vec(dim, 0), 0.0));
    s.strata.push_back(Stratum::halfspace("{x1<0}", unit_vec(dim, 0, -1.0), 0.0));
    s.frontier = {{}, {0}, {0}};
  } else if (function == "ring") {
    s.strata.push_back(Stratum::affine("{0}", Vec::Zero(dim), Eigen::MatrixXd::Zero(dim, 0)));
    s.strata.push_back(Stratum::sphere("{|x|=1}", Vec::Zero(dim), 1.0));
    s.strata.push_back(Stratum::shell("{0<|x|<1}", Vec::Zero(dim), 0.0, 1.0));
    s.strata.push_back(Stratum::shell("{|x|>1}", Vec::Zero(dim), 1.0, 0.0));
    s.frontier = {{}, {}, {0, 1}, {1}};
  } else if (function == "max_quad") {
    if (dim != 2) throw std::invalid_argument("max_quad is defined in R^2 only");
    s.strata.push_back(Stratum::affine("{x1=1}", make_vec({1.0, 0.0}), unit_vec(2, 1)));
    s.strata.push_back(Stratum::halfspace("{x1>1}", unit_vec(2, 0), 1.0));
    s.strata.push_back(Stratum::halfspace("{x1<1}", unit_vec(2, 0, -1.0), -1.0));
    s.frontier = {{}, {0}, {0}};
  } else if (function == "smooth_quad" || function == "linear") {
    s.strata.push_back(Stratum::whole("R^n", dim));
    s.frontier = {{}};
  } else {
    throw std::invalid_argument("no stratification for function '" + function + "'");
  }
  assign_exponents(s);
  return s;
}

// Neighborhoods and crossings ------------------------------------------------------

bool neighborhood_member(const Stratification& s, std::size_t i, const Vec& x, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("neighborhood step size must be > 0");
  const auto& m = s.strata.at(i);
  if (m.distance(x) > m.c * std::pow(alpha, m.beta)) return false;
  for (std::size_t j : s.frontier.at(i)) {
    const auto& l = s.strata[j];
    if (l.distance(x) <= l.c * std::pow(alpha, l.gamma)) return false;
  }
  return true;
}

bool is_crossing(const Trajectory& t, const Stratification& s, std::size_t k) {
  if (k >= t.steps()) throw std::out_of_range("crossing index beyond the trajectory");
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& m = s.strata[i];
    if (m.is_open()) continue;
    if (m.segment_distance(t.x[k], t.x[k + 1]) <= s.c_hat[i] * std::pow(t.alpha[k], m.gamma)) return true;
  }
  return false;
}

std::vector<std::size_t> crossing_indices(const Trajectory& t, const Stratification& s) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < t.steps(); ++k)
    if (is_crossing(t, s, k)) out.push_back(k);
  return out;
}

std::size_t assign_point(const Stratification& s, const Vec& x, double alpha) {
  std::size_t best = s.size();
  double best_distance = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& m = s.strata[i];
    if (m.is_open()) continue;
    const double d = m.distance(x);
    if (d > 2.0 * s.c_hat[i] * std::pow(alpha, m.gamma)) continue;
    if (best == s.size() || m.dimension() < s.strata[best].dimension() ||
        (m.dimension() == s.strata[best].dimension() && d < best_distance)) {
      best = i;
      best_distance = d;
    }
  }
  if (best == s.size())
    throw std::runtime_error("no non-open stratum within 2 c_hat alpha^gamma of the iterate (alpha = " +
                             format_real(alpha) + "); the step sizes are too large, reduce alpha");
  return best;
}

std::size_t assign_stratum(const Trajectory& t, const Stratification& s, std::size_t k) {
  if (!is_crossing(t, s, k))
    throw std::invalid_argument("assign_stratum: index " + std::to_string(k) + " is not a crossing index");
  return assign_point(s, t.x[k], t.alpha[k]);
}

// Blocks --------------------------------------------------------------------------------

BlockStructure block_recursion(const Trajectory& t, const Stratification& s) {
  BlockStructure b;
  const auto crossings = crossing_indices(t, s);
  std::map<std::size_t, std::size_t> assignment;
  for (std::size_t k : crossings) assignment[k] = assign_point(s, t.x[k], t.alpha[k]);
  return block_recursion(t, s, crossings, assignment);
}

BlockStructure block_recursion(const Trajectory& t, const Stratification& s,
                               const std::vector<std::size_t>& crossings,
                               const std::map<std::size_t, std::size_t>& assignment) {
  BlockStructure out;
  out.crossings = crossings;
  out.assignment = assignment;
  if (crossings.empty()) {
    out.open_regime = true;
    return out;
  }
  const std::size_t K = t.steps();
  std::size_t l = crossings.front();
  while (true) {
    Block blk;
    blk.l = l;
    blk.stratum = assignment.at(l);
    const auto& m = s.strata[blk.stratum];
    if (!neighborhood_member(s, blk.stratum, t.x[l], t.alpha_at(l))) ++out.membership_failures;
    std::size_t last = l;
    while (last < K && neighborhood_member(s, blk.stratum, t.x[last + 1], t.alpha_at(last + 1))) ++last;
    blk.s = last;
    blk.q = l;
    const double radius = 2.0 * s.c_hat[blk.stratum];
    for (std::size_t k = l; k <= blk.s; ++k)
      if (m.distance(t.x[k]) <= radius * std::pow(t.alpha_at(k), m.gamma)) blk.q = k;
    out.blocks.push_back(blk);
    const auto next = std::upper_bound(crossings.begin(), crossings.end(), blk.q);
    if (next == crossings.end()) break;
    l = *next;
  }
  for (const auto& blk : out.blocks)
    for (const auto& other : out.blocks)
      if (other.l > blk.q && other.l <= blk.s && other.stratum == blk.stratum) {
        ++out.repeat_violations;
        break;
      }
  return out;
}

// Relative length ------------------------------------------------------------------------

namespace {

struct RelativeLength {
  const Trajectory& t;
  const Stratification& s;
  const BlockStructure& b;

  double path(std::size_t k1, std::size_t k2) const {
    double sum = 0.0;
    for (std::size_t k = k1; k < k2; ++k) sum += (t.x[k + 1] - t.x[k]).norm();
    return sum;
  }

  double projected_path(const Stratum& m, std::size_t k1, std::size_t k2) const {
    double sum = 0.0;
    Vec prev = m.project(t.x[k1]);
    for (std::size_t k = k1; k < k2; ++k) {
      Vec next = m.project(t.x[k + 1]);
      sum += (next - prev).norm();
      prev = std::move(next);
    }
    return sum;
  }

  double operator()(std::size_t k1, std::size_t k2) const {
    if (k1 >= k2) return 0.0;
    const auto& blocks = b.blocks;
    // Case 1: before the first distinguished index.
    if (blocks.empty() || k2 <= blocks.front().l) return path(k1, k2);
    // Case 3: a distinguished index strictly inside (k1, k2).
    auto first_after = std::upper_bound(blocks.begin(), blocks.end(), k1,
                                        [](std::size_t v, const Block& blk) { return v < blk.l; });
    if (first_after != blocks.end() && first_after->l < k2) {
      auto last_before = std::lower_bound(blocks.begin(), blocks.end(), k2,
                                          [](const Block& blk, std::size_t v) { return blk.l < v; });
      --last_before;
      double sum = (*this)(k1, first_after->l);
      for (auto it = first_after; it != last_before; ++it) sum += (*this)(it->l, std::next(it)->l);
      return sum + (*this)(last_before->l, k2);
    }
    // Case 2: l_m <= k1 < k2 <= l_{m+1}.
    const Block& blk = *std::prev(first_after);
    const Stratum& m = s.strata[blk.stratum];
    const std::size_t q = blk.q;
    if (q <= k1) return path(k1, k2);
    if (k1 > blk.l) {
      if (k2 < q) return projected_path(m, k1, k2);
      return projected_path(m, k1, q) + (t.x[q] - m.project(t.x[q])).norm() + path(q, k2);
    }
    const Vec y0 = m.project(t.x[k1]);
    const Vec y1 = m.project(t.x[k1 + 1]);
    return (t.x[k1] - y0).norm() + (y1 - y0).norm() + (*this)(k1 + 1, k2);
  }
};

}  // namespace

double relative_length(const Trajectory& t, const Stratification& s, const BlockStructure& blocks, std::size_t k1,
                       std::size_t k2) {
  if (!(k1 < k2) || k2 > t.steps()) throw std::out_of_range("relative length needs 0 <= k1 < k2 <= K");
  return RelativeLength{t, s, blocks}(k1, k2);
}

double relative_length_slack(const Stratification& s, const Trajectory& t, std::size_t k1) {
  return 4.0 * s.c_bar * s.c_d * std::pow(t.alpha_at(k1), s.beta_lower);
}

std::vector<RelativeLengthSample> relative_length_check(const Trajectory& t, const Stratification& s,
                                                        const BlockStructure& blocks, std::size_t pairs,
                                                        std::uint64_t seed) {
  const std::size_t K = t.steps();
  if (K < 1) throw std::invalid_argument("relative length check needs K >= 1");
  Rng rng(seed, Stream::diagnostics);
  std::vector<RelativeLengthSample> out(pairs);
  for (auto& p : out) {
    p.k1 = rng.index(K);
    p.k2 = p.k1 + 1 + rng.index(K - p.k1);
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.k1 != b.k1 ? a.k1 < b.k1 : a.k2 < b.k2; });
  FarthestTree tree(t.x);
  const RelativeLength rl{t, s, blocks};
  for (std::size_t i = 0; i < out.size();) {
    const std::size_t k1 = out[i].k1;
    RunningDiameter running(tree, t.x, k1);
    for (; i < out.size() && out[i].k1 == k1; ++i) {
      auto& p = out[i];
      while (running.last() < p.k2) running.advance();
      p.diameter = running.value();
      p.relative_length = rl(p.k1, p.k2);
      p.slack = relative_length_slack(s, t, p.k1);
      p.violated = p.diameter > (p.relative_length + p.slack) * (1.0 + 1e-12);
    }
  }
  return out;
}

// Stratified descent ----------------------------------------------------------------------

namespace {

/// z_k = f(y_k) - level + g_{1,k} with tails taken to the end of the run.
struct DescentTerms {
  double lhs = 0.0;
  double z_a = 0.0;
  double z_b = 0.0;
  double g2 = 0.0;
  double step_power = 0.0;
};

DescentTerms descent_terms(const Trajectory& t, const Stratification& s, const PiecewiseSmoothFunction& f,
                           std::size_t i, std::size_t a, std::size_t b, const DescentSetup& setup,
                           const TailProfile& tails, std::size_t tail_origin) {
  const Stratum& m = s.strata.at(i);
  DescentTerms out;
  Vec prev = m.project(t.x[a]);
  const double fa = f.value(prev) - setup.level;
  for (std::size_t k = a; k < b; ++k) {
    Vec next = m.project(t.x[k + 1]);
    out.lhs += (next - prev).norm();
    prev = std::move(next);
    out.g2 += tails.g2[k - tail_origin];
    out.step_power = std::max(out.step_power, std::pow(t.alpha[k], s.tau));
  }
  out.z_a = fa + tails.g1[a - tail_origin];
  out.z_b = f.value(prev) - setup.level + tails.g1[b - tail_origin];
  return out;
}

void check_membership(const Trajectory& t, const Stratification& s, std::size_t i, std::size_t a, std::size_t b) {
  if (!(a < b) || b > t.steps()) throw std::out_of_range("descent segment needs 0 <= a < b <= K");
  for (std::size_t k = a; k <= b; ++k)
    if (!neighborhood_member(s, i, t.x[k], t.alpha_at(k)))
      throw std::invalid_argument("descent segment leaves N(" + std::to_string(i) + ", alpha_k) at k = " +
                                  std::to_string(k));
}

}  // namespace

double descent_residual(const Trajectory& t, const Stratification& s, const PiecewiseSmoothFunction& f,
                        std::size_t i, std::size_t a, std::size_t b, const DescentSetup& setup) {
  setup.psi.validate();
  check_membership(t, s, i, a, b);
  const auto tails = tail_error_profile(setup.model, t, a, t.steps());
  const auto terms = descent_terms(t, s, f, i, a, b, setup, tails, a);
  const double rhs = setup.psi(terms.z_a) - setup.psi(terms.z_b) + terms.g2 + setup.iota * terms.step_power;
  return terms.lhs - rhs;
}

std::vector<std::pair<std::size_t, std::size_t>> membership_segments(const Trajectory& t, const Stratification& s,
                                                                     std::size_t i) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t K = t.steps();
  std::size_t k = 0;
  while (k <= K) {
    if (!neighborhood_member(s, i, t.x[k], t.alpha_at(k))) {
      ++k;
      continue;
    }
    std::size_t end = k;
    while (end < K && neighborhood_member(s, i, t.x[end + 1], t.alpha_at(end + 1))) ++end;
    if (end > k) out.emplace_back(k, end);
    k = end + 1;
  }
  return out;
}

std::vector<DescentSegment> descent_segments(const Trajectory& t, const Stratification& s, std::size_t max_per_run) {
  std::vector<DescentSegment> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (const auto& [lo, hi] : membership_segments(t, s, i)) {
      std::vector<std::size_t> grid;
      for (std::size_t step = 1, k = lo; k < hi; k = lo + step, step *= 2) grid.push_back(k);
      std::size_t count = 0;
      for (std::size_t a : grid) {
        // Ends at geometric offsets from a, always including the run end.
        for (std::size_t step = 1; count < max_per_run; step *= 2) {
          const std::size_t b = std::min(hi, a + step);
          out.push_back({i, a, b});
          ++count;
          if (b == hi) break;
        }
        if (count >= max_per_run) break;
      }
    }
  }
  return out;
}

std::vector<FitSample> descent_fit_samples(const Trajectory& t, const Stratification& s,
                                           const PiecewiseSmoothFunction& f,
                                           const std::vector<DescentSegment>& segments, const DescentSetup& setup) {
  const auto tails = tail_error_profile(setup.model, t, 0, t.steps());
  const Desingularizer unit{1.0, setup.psi.theta};
  std::vector<FitSample> out;
  out.reserve(segments.size());
  for (const auto& seg : segments) {
    check_membership(t, s, seg.stratum, seg.a, seg.b);
    const auto terms = descent_terms(t, s, f, seg.stratum, seg.a, seg.b, setup, tails, 0);
    out.push_back({terms.lhs, unit(terms.z_a) - unit(terms.z_b), terms.step_power, terms.g2});
  }
  return out;
}

}  // namespace stratflow
