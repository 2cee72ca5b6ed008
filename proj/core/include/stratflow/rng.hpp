#pragma once

#include "stratflow/vec.hpp"

#include <cstdint>
#include <random>

namespace stratflow {

/// Consumers of randomness within one experiment. Each gets its own
/// deterministic sub-stream of the root seed.
enum class Stream : std::uint32_t {
  noise = 1,
  goldstein = 2,
  init = 3,
  tie = 4,
  diagnostics = 5,
};

/// Identifies a reproducible draw sequence: identical (seed, stream) pairs
/// always produce identical sequences.
struct RngHandle {
  std::uint64_t seed = 0;
  std::uint32_t stream = 0;

  RngHandle() = default;
  RngHandle(std::uint64_t s, std::uint32_t id) : seed(s), stream(id) {}
  RngHandle(std::uint64_t s, Stream id) : seed(s), stream(static_cast<std::uint32_t>(id)) {}
};

class Rng {
 public:
  explicit Rng(RngHandle handle);
  Rng(std::uint64_t seed, Stream stream) : Rng(RngHandle{seed, stream}) {}

  const RngHandle& handle() const { return handle_; }

  double uniform() { return unit_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit_(engine_); }
  double normal() { return normal_(engine_); }
  std::size_t index(std::size_t n);
  bool coin() { return (engine_() >> 63) != 0; }

  /// Standard normal vector in R^n.
  Vec normal_vec(Eigen::Index n);
  /// Uniform point on the unit sphere S^{n-1}.
  Vec unit_direction(Eigen::Index n);
  /// Uniform point in the closed ball B(center, radius).
  Vec in_ball(const Vec& center, double radius);
  /// Flat Dirichlet weights of length m (nonnegative, sum to one).
  std::vector<double> dirichlet(std::size_t m);

  std::mt19937_64& engine() { return engine_; }

 private:
  RngHandle handle_;
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace stratflow
