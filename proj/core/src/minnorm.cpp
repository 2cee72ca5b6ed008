#include "stratflow/minnorm.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stratflow {

namespace {

// Minimizer of |sum w_i p_i| over the affine hull of the active points:
// solve [G 1; 1^T 0][w; mu] = [0; 1] with G the Gram matrix.
Eigen::VectorXd affine_minimizer(const std::vector<const Vec*>& active) {
  const auto s = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(s + 1, s + 1);
  for (Eigen::Index i = 0; i < s; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double g = active[i]->dot(*active[j]);
      A(i, j) = g;
      A(j, i) = g;
    }
    A(i, s) = 1.0;
    A(s, i) = 1.0;
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(s + 1);
  rhs[s] = 1.0;
  Eigen::VectorXd sol = A.completeOrthogonalDecomposition().solve(rhs);
  return sol.head(s);
}

}  // namespace

MinNormResult min_norm_point(std::span<const Vec> points, double tol, std::size_t max_iterations) {
  if (points.empty()) throw std::invalid_argument("min_norm_point needs at least one point");
  const auto n = points.front().size();
  if (max_iterations == 0) max_iterations = 200 + 50 * points.size();

  // Start from the input point of least norm.
  std::size_t start = 0;
  for (std::size_t j = 1; j < points.size(); ++j)
    if (points[j].squaredNorm() < points[start].squaredNorm()) start = j;

  std::vector<std::size_t> active{start};
  std::vector<double> lambda{1.0};
  Vec x = points[start];

  MinNormResult result;
  std::size_t iter = 0;
  for (; iter < max_iterations; ++iter) {
    const double xx = x.squaredNorm();
    // The true distance lies in [0, |x|], so |x| <= tol already meets the
    // tolerance; this also stops rounding-level cycling when 0 is in the hull.
    if (xx <= tol * tol) {
      result.converged = true;
      break;
    }
    std::size_t best = 0;
    double best_dot = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < points.size(); ++j) {
      const double d = x.dot(points[j]);
      if (d < best_dot) {
        best_dot = d;
        best = j;
      }
    }
    // Every hull point z satisfies <x, z> >= best_dot, so the distance is at
    // least best_dot / |x| = |x| - gap / |x|.
    const double xnorm = std::sqrt(xx);
    if (xx - best_dot <= tol * xnorm) {
      result.converged = true;
      break;
    }
    if (std::find(active.begin(), active.end(), best) != active.end()) {
      // Degenerate progress: the best vertex is already active; accept.
      result.converged = (xx - best_dot) <= 1e3 * tol * xnorm;
      break;
    }
    active.push_back(best);
    lambda.push_back(0.0);

    // Minor cycle: move to the affine minimizer, clipping at the simplex
    // boundary and dropping vertices whose weight reaches zero.
    for (std::size_t minor = 0; minor < active.size() + 8; ++minor) {
      std::vector<const Vec*> pts;
      pts.reserve(active.size());
      for (auto idx : active) pts.push_back(&points[idx]);
      const Eigen::VectorXd w = affine_minimizer(pts);
      bool interior = true;
      for (Eigen::Index i = 0; i < w.size(); ++i)
        if (w[i] <= 1e-15) interior = false;
      if (interior) {
        for (std::size_t i = 0; i < active.size(); ++i) lambda[i] = w[static_cast<Eigen::Index>(i)];
        break;
      }
      double theta = 1.0;
      for (std::size_t i = 0; i < active.size(); ++i) {
        const double wi = w[static_cast<Eigen::Index>(i)];
        if (wi <= 1e-15) {
          const double denom = lambda[i] - wi;
          if (denom > 0.0) theta = std::min(theta, lambda[i] / denom);
        }
      }
      theta = std::clamp(theta, 0.0, 1.0);
      for (std::size_t i = 0; i < active.size(); ++i)
        lambda[i] = (1.0 - theta) * lambda[i] + theta * w[static_cast<Eigen::Index>(i)];
      std::vector<std::size_t> kept_idx;
      std::vector<double> kept_w;
      for (std::size_t i = 0; i < active.size(); ++i) {
        if (lambda[i] > 1e-15) {
          kept_idx.push_back(active[i]);
          kept_w.push_back(lambda[i]);
        }
      }
      if (kept_idx.empty()) {
        kept_idx.push_back(active.back());
        kept_w.push_back(1.0);
      }
      double total = 0.0;
      for (double v : kept_w) total += v;
      for (double& v : kept_w) v /= total;
      active = std::move(kept_idx);
      lambda = std::move(kept_w);
    }
    x = Vec::Zero(n);
    for (std::size_t i = 0; i < active.size(); ++i) x += lambda[i] * points[active[i]];
  }

  result.iterations = iter;
  result.point = x;
  result.distance = x.norm();
  result.weights.assign(points.size(), 0.0);
  for (std::size_t i = 0; i < active.size(); ++i) result.weights[active[i]] += lambda[i];
  return result;
}

MinNormResult hull_distance(const Vec& target, std::span<const Vec> points, double tol) {
  std::vector<Vec> shifted;
  shifted.reserve(points.size());
  for (const auto& p : points) shifted.push_back(p - target);
  return min_norm_point(shifted, tol);
}

}  // namespace stratflow
