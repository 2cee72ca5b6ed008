#pragma once

#include "stratflow/objectives.hpp"
#include "stratflow/rng.hpp"
#include "stratflow/schedule.hpp"
#include "stratflow/trajectory.hpp"

#include <functional>
#include <stdexcept>

namespace stratflow {

enum class NoiseMode { none, adversarial_bounded, custom };
enum class NoiseLaw { gaussian, rademacher, uniform_ball };

std::string to_string(NoiseMode mode);
std::string to_string(NoiseLaw law);
NoiseMode noise_mode_from_string(const std::string& name);
NoiseLaw noise_law_from_string(const std::string& name);

/// Raised when an iterate becomes non-finite or leaves the ball of radius
/// blowup_radius. Unbounded runs are reported, not analysed.
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(std::size_t step, const std::string& what) : std::runtime_error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

struct RunLimits {
  double blowup_radius = 1e9;
};

/// x_{k+1} = x_k - alpha_k u_k + e_k with u_k drawn from the Goldstein
/// enlargement of radius c_b alpha_k^xi.
struct InexactConfig {
  double c_b = 0.0;
  double xi = 1.0;
  double tau = 1.0;
  NoiseMode noise = NoiseMode::none;
  /// Goldstein samples per step; 0 selects 2n + 2.
  std::size_t samples = 0;
  TieRule tie = TieRule::first;
  /// Noise callback for NoiseMode::custom: (k, x_k, alpha_k, rng) -> e_k.
  std::function<Vec(std::size_t, const Vec&, double, Rng&)> custom_noise;

  void validate() const;
};

/// Zero-mean noise with E|eps|^2 = sigma^2 exactly.
struct StochasticNoise {
  double sigma = 0.0;
  NoiseLaw law = NoiseLaw::gaussian;
  TieRule tie = TieRule::first;

  void validate() const;
  Vec draw(Eigen::Index n, Rng& rng) const;
};

/// Heavy-ball style recursion with extrapolated subgradient evaluation.
struct MomentumConfig {
  double kappa = 0.5;
  double iota_m = 0.0;
  TieRule tie = TieRule::first;

  void validate() const;
};

/// Uniform start in the box [-radius, radius]^n drawn from the init stream.
Vec random_start(Eigen::Index n, std::uint64_t seed, double radius = 1.0);

Trajectory inexact_run(const PiecewiseSmoothFunction& f, const Vec& x0, const StepSchedule& s,
                       const InexactConfig& cfg, std::size_t K, std::uint64_t seed, RunLimits limits = {});
Trajectory stochastic_run(const PiecewiseSmoothFunction& f, const Vec& x0, const StepSchedule& s,
                          const StochasticNoise& noise, std::size_t K, std::uint64_t seed, RunLimits limits = {});
Trajectory momentum_run(const PiecewiseSmoothFunction& f, const Vec& x0, const StepSchedule& s,
                        const MomentumConfig& cfg, std::size_t K, std::uint64_t seed, RunLimits limits = {});

/// Streaming variants: every update is handed to sink, nothing is stored.
void inexact_stream(const PiecewiseSmoothFunction& f, const Vec& x0, const StepSchedule& s,
                    const InexactConfig& cfg, std::size_t K, std::uint64_t seed, StepSink& sink,
                    RunLimits limits = {});
void stochastic_stream(const PiecewiseSmoothFunction& f, const Vec& x0, const StepSchedule& s,
                       const StochasticNoise& noise, std::size_t K, std::uint64_t seed, StepSink& sink,
                       RunLimits limits = {});
void momentum_stream(const PiecewiseSmoothFunction& f, const Vec& x0, const StepSchedule& s,
                     const MomentumConfig& cfg, std::size_t K, std::uint64_t seed, StepSink& sink,
                     RunLimits limits = {});

MethodDescriptor describe(const PiecewiseSmoothFunction& f, const StepSchedule& s, const InexactConfig& cfg);
MethodDescriptor describe(const PiecewiseSmoothFunction& f, const StepSchedule& s, const StochasticNoise& noise);
MethodDescriptor describe(const PiecewiseSmoothFunction& f, const StepSchedule& s, const MomentumConfig& cfg);

/// Extrapolation points theta_k = x_k + iota (x_k - x_{k-1}) of a momentum
/// record, with x_{-1} = x_0.
std::vector<Vec> momentum_extrapolations(const Trajectory& t, double iota_m);

}  // namespace stratflow
