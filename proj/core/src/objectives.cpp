#include "stratflow/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stratflow {

std::string to_string(TieRule rule) { return rule == TieRule::first ? "first" : "random_vertex"; }

TieRule tie_rule_from_string(const std::string& name) {
  if (name == "first") return TieRule::first;
  if (name == "random_vertex" || name == "random") return TieRule::random_vertex;
  throw std::invalid_argument("unknown tie rule '" + name + "'");
}

double CriticalSet::distance(const Vec& x) const { return (x - nearest(x)).norm(); }

Vec CriticalSet::nearest(const Vec& x) const {
  double best = std::numeric_limits<double>::infinity();
  Vec out = x;
  for (const auto& p : points) {
    const double d = (x - p).norm();
    if (d < best) {
      best = d;
      out = p;
    }
  }
  for (const auto& s : spheres) {
    Vec dir = x - s.center;
    const double r = dir.norm();
    if (r == 0.0) {
      dir = Vec::Zero(x.size());
      dir[0] = 1.0;
    } else {
      dir /= r;
    }
    const double d = std::abs(r - s.radius);
    if (d < best) {
      best = d;
      out = s.center + s.radius * dir;
    }
  }
  return out;
}

void PiecewiseSmoothFunction::check_dim(const Vec& x) const {
  if (x.size() != dim)
    throw std::invalid_argument(name + ": dimension mismatch (expected " + std::to_string(dim) + ", got " +
                                std::to_string(x.size()) + ")");
}

double PiecewiseSmoothFunction::value(const Vec& x) const {
  check_dim(x);
  switch (combiner) {
    case Combiner::max: {
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& p : pieces) best = std::max(best, p.value(x));
      return best;
    }
    case Combiner::sum_of_abs: {
      double total = smooth.value ? smooth.value(x) : 0.0;
      for (const auto& p : pieces) total += std::abs(p.value(x));
      return total;
    }
    case Combiner::composite:
      return composite_value(x);
  }
  return 0.0;
}

std::vector<Vec> PiecewiseSmoothFunction::generators(const Vec& x, double tol) const {
  check_dim(x);
  switch (combiner) {
    case Combiner::max: {
      std::vector<double> vals(pieces.size());
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < pieces.size(); ++j) {
        vals[j] = pieces[j].value(x);
        best = std::max(best, vals[j]);
      }
      std::vector<Vec> out;
      for (std::size_t j = 0; j < pieces.size(); ++j)
        if (vals[j] >= best - tol) out.push_back(pieces[j].gradient(x));
      return out;
    }
    case Combiner::sum_of_abs: {
      Vec base = smooth.gradient ? smooth.gradient(x) : Vec::Zero(dim);
      std::vector<Vec> tied;
      for (const auto& p : pieces) {
        const double h = p.value(x);
        if (std::abs(h) <= tol) {
          tied.push_back(p.gradient(x));
        } else {
          base += (h > 0.0 ? 1.0 : -1.0) * p.gradient(x);
        }
      }
      if (tied.size() > 20) throw std::runtime_error(name + ": too many simultaneous kinks to enumerate");
      // Minkowski sum of the segments [-grad h_j, +grad h_j]: enumerate sign
      // vertices, all-minus first so the first generator is deterministic.
      const std::size_t count = std::size_t{1} << tied.size();
      std::vector<Vec> out;
      out.reserve(count);
      for (std::size_t mask = 0; mask < count; ++mask) {
        Vec g = base;
        for (std::size_t j = 0; j < tied.size(); ++j) g += ((mask >> j) & 1U ? 1.0 : -1.0) * tied[j];
        out.push_back(std::move(g));
      }
      return out;
    }
    case Combiner::composite:
      return composite_generators(x, tol);
  }
  return {};
}

double evaluate(const PiecewiseSmoothFunction& f, const Vec& x) { return f.value(x); }

double default_tolerance(const PiecewiseSmoothFunction& f, const Vec& x) {
  return 1e-9 * (1.0 + std::abs(f.value(x)));
}

SubgradientSet clarke_generators(const PiecewiseSmoothFunction& f, const Vec& x, std::optional<double> tol_active) {
  const double tol = tol_active ? *tol_active : default_tolerance(f, x);
  if (tol < 0.0) throw std::invalid_argument("tol_active must be >= 0");
  return SubgradientSet{f.generators(x, tol), x, 0.0};
}

Vec select_subgradient(const PiecewiseSmoothFunction& f, const Vec& x, TieRule rule, Rng* rng) {
  auto gens = f.generators(x, default_tolerance(f, x));
  if (gens.empty()) throw std::logic_error(f.name + ": no active piece");
  if (rule == TieRule::random_vertex && rng != nullptr && gens.size() > 1)
    return std::move(gens[rng->index(gens.size())]);
  return std::move(gens.front());
}

Vec goldstein_sample(const PiecewiseSmoothFunction& f, const Vec& x, double r, std::size_t m, Rng& rng,
                     TieRule rule) {
  if (r < 0.0) throw std::invalid_argument("goldstein radius must be >= 0");
  if (m < 1) throw std::invalid_argument("goldstein sample count must be >= 1");
  if (r == 0.0) return select_subgradient(f, x, rule, &rng);
  const auto weights = rng.dirichlet(m);
  Vec u = Vec::Zero(x.size());
  for (std::size_t j = 0; j < m; ++j) {
    const Vec z = rng.in_ball(x, r);
    u += weights[j] * select_subgradient(f, z, rule, &rng);
  }
  return u;
}

SubgradientSet goldstein_generators(const PiecewiseSmoothFunction& f, const Vec& x, double r, std::size_t m,
                                    Rng& rng, bool include_center) {
  SubgradientSet out{{}, x, r};
  auto append = [&](const Vec& z) {
    for (auto& g : f.generators(z, default_tolerance(f, z))) out.generators.push_back(std::move(g));
  };
  if (r == 0.0 || include_center) append(x);
  if (r > 0.0)
    for (std::size_t j = 0; j < m; ++j) append(rng.in_ball(x, r));
  return out;
}

// Battery -----------------------------------------------------------------

namespace {

Vec unit(Eigen::Index n, Eigen::Index i, double s = 1.0) {
  Vec e = Vec::Zero(n);
  e[i] = s;
  return e;
}

}  // namespace

PiecewiseSmoothFunction make_abs_sum(Eigen::Index n) {
  PiecewiseSmoothFunction f;
  f.name = n == 1 ? "abs" : "abs_sum";
  f.dim = n;
  f.combiner = Combiner::sum_of_abs;
  for (Eigen::Index i = 0; i < n; ++i)
    f.pieces.push_back({[i](const Vec& x) { return x[i]; }, [i, n](const Vec&) { return unit(n, i); }});
  f.lipschitz_bound = std::sqrt(static_cast<double>(n));
  f.critical_set.points.push_back(Vec::Zero(n));
  return f;
}

PiecewiseSmoothFunction make_ridge(Eigen::Index n) {
  if (n < 1) throw std::invalid_argument("ridge needs n >= 1");
  PiecewiseSmoothFunction f;
  f.name = "ridge";
  f.dim = n;
  f.combiner = Combiner::sum_of_abs;
  f.pieces.push_back({[](const Vec& x) { return x[0]; }, [n](const Vec&) { return unit(n, 0); }});
  f.smooth.value = [](const Vec& x) { return x.tail(x.size() - 1).squaredNorm(); };
  f.smooth.gradient = [](const Vec& x) {
    Vec g = 2.0 * x;
    g[0] = 0.0;
    return g;
  };
  f.lipschitz_bound = std::sqrt(1.0 + 4.0 * f.box_radius * f.box_radius * static_cast<double>(n - 1));
  f.critical_set.points.push_back(Vec::Zero(n));
  return f;
}

PiecewiseSmoothFunction make_ring(Eigen::Index n) {
  PiecewiseSmoothFunction f;
  f.name = "ring";
  f.dim = n;
  f.combiner = Combiner::composite;
  f.composite_value = [](const Vec& x) { return std::abs(x.norm() - 1.0); };
  f.composite_generators = [n](const Vec& x, double tol) {
    const double r = x.norm();
    std::vector<Vec> out;
    if (r == 0.0) {
      // df(0) is the closed unit ball; its axis vertices carry the hull
      // information the methods need.
      for (Eigen::Index i = 0; i < n; ++i) {
        out.push_back(unit(n, i, -1.0));
        out.push_back(unit(n, i, 1.0));
      }
      return out;
    }
    const Vec u = x / r;
    if (std::abs(r - 1.0) <= tol) {
      out.push_back(-u);
      out.push_back(u);
    } else {
      out.push_back(r > 1.0 ? u : Vec(-u));
    }
    return out;
  };
  f.lipschitz_bound = 1.0;
  f.critical_set.points.push_back(Vec::Zero(n));
  f.critical_set.spheres.push_back({Vec::Zero(n), 1.0});
  return f;
}

PiecewiseSmoothFunction make_max_quad() {
  PiecewiseSmoothFunction f;
  f.name = "max_quad";
  f.dim = 2;
  f.combiner = Combiner::max;
  f.pieces.push_back({[](const Vec& x) { return x.squaredNorm(); }, [](const Vec& x) { return Vec(2.0 * x); }});
  f.pieces.push_back({[](const Vec& x) { return (x[0] - 1.0) * (x[0] - 1.0) + 1.0; },
                      [](const Vec& x) { return make_vec({2.0 * (x[0] - 1.0), 0.0}); }});
  const double R = f.box_radius;
  f.lipschitz_bound = 2.0 * std::sqrt((R + 1.0) * (R + 1.0) + R * R);
  f.critical_set.points.push_back(make_vec({1.0, 0.0}));
  return f;
}

PiecewiseSmoothFunction make_smooth_quad(Eigen::Index n) {
  PiecewiseSmoothFunction f;
  f.name = "smooth_quad";
  f.dim = n;
  f.combiner = Combiner::max;
  f.pieces.push_back({[](const Vec& x) { return x.squaredNorm(); }, [](const Vec& x) { return Vec(2.0 * x); }});
  f.lipschitz_bound = 2.0 * f.box_radius * std::sqrt(static_cast<double>(n));
  f.critical_set.points.push_back(Vec::Zero(n));
  return f;
}

PiecewiseSmoothFunction make_linear(Eigen::Index n) {
  PiecewiseSmoothFunction f;
  f.name = "linear";
  f.dim = n;
  f.combiner = Combiner::max;
  f.pieces.push_back({[](const Vec& x) { return x.sum(); }, [n](const Vec&) { return Vec(Vec::Ones(n)); }});
  f.lipschitz_bound = std::sqrt(static_cast<double>(n));
  return f;
}

std::vector<PiecewiseSmoothFunction> battery() {
  return {make_abs_sum(2), make_ridge(2), make_ring(2), make_max_quad(), make_smooth_quad(2)};
}

std::vector<std::string> function_names() {
  return {"abs_sum", "ridge", "ring", "max_quad", "smooth_quad", "abs", "linear"};
}

PiecewiseSmoothFunction find_function(const std::string& name, Eigen::Index dim) {
  if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
  if (name == "abs") return make_abs_sum(1);
  if (name == "abs_sum") return make_abs_sum(dim);
  if (name == "ridge") return make_ridge(dim);
  if (name == "ring") return make_ring(dim);
  if (name == "max_quad") {
    if (dim != 2) throw std::invalid_argument("max_quad is defined in R^2 only");
    return make_max_quad();
  }
  if (name == "smooth_quad") return make_smooth_quad(dim);
  if (name == "linear") return make_linear(dim);
  throw std::invalid_argument("unknown function '" + name + "'");
}

}  // namespace stratflow
