#pragma once

#include <Eigen/Core>

#include <cmath>
#include <span>
#include <vector>

namespace stratflow {

/// Points and directions in R^n. Dimension is fixed per experiment.
using Vec = Eigen::VectorXd;

inline bool all_finite(const Vec& x) { return x.allFinite(); }

inline double distance(const Vec& a, const Vec& b) { return (a - b).norm(); }

/// Signed power sgn(s)|s|^p.
inline double signed_pow(double s, double p) {
  if (s == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(s), p), s);
}

inline Vec make_vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline Vec make_vec(const std::vector<double>& xs) {
  return Eigen::Map<const Vec>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

inline std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace stratflow
