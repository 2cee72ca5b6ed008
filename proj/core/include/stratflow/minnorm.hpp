#pragma once

#include "stratflow/vec.hpp"

#include <span>
#include <vector>

namespace stratflow {

struct MinNormResult {
  Vec point;                   // nearest point of the hull to the origin
  std::vector<double> weights;  // barycentric weights over the input points
  double distance = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Wolfe's minimum-norm-point algorithm over co{points}. Stops when the
/// optimality gap certifies the distance to within tol.
MinNormResult min_norm_point(std::span<const Vec> points, double tol = 1e-10, std::size_t max_iterations = 0);

/// Distance from target to co{points}.
MinNormResult hull_distance(const Vec& target, std::span<const Vec> points, double tol = 1e-10);

}  // namespace stratflow
