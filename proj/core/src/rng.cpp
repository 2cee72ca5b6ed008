#include "stratflow/rng.hpp"

#include <cmath>

namespace stratflow {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(RngHandle handle) : handle_(handle) {
  const std::uint64_t a = splitmix64(handle.seed);
  const std::uint64_t b = splitmix64(a ^ (static_cast<std::uint64_t>(handle.stream) << 32 | handle.stream));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    handle.stream};
  engine_.seed(seq);
}

std::size_t Rng::index(std::size_t n) {
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

Vec Rng::normal_vec(Eigen::Index n) {
  Vec z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = normal();
  return z;
}

Vec Rng::unit_direction(Eigen::Index n) {
  for (;;) {
    Vec z = normal_vec(n);
    const double r = z.norm();
    if (r > 1e-300) return z / r;
  }
}

Vec Rng::in_ball(const Vec& center, double radius) {
  const auto n = center.size();
  if (radius <= 0.0) return center;
  const double scale = radius * std::pow(uniform(), 1.0 / static_cast<double>(n));
  return center + scale * unit_direction(n);
}

std::vector<double> Rng::dirichlet(std::size_t m) {
  std::vector<double> w(m);
  double total = 0.0;
  for (auto& wi : w) {
    // Exponential(1) via inverse CDF; 1 - u avoids log(0).
    wi = -std::log(1.0 - uniform());
    total += wi;
  }
  if (total <= 0.0) {
    for (auto& wi : w) wi = 1.0 / static_cast<double>(m);
    return w;
  }
  for (auto& wi : w) wi /= total;
  return w;
}

}  // namespace stratflow
