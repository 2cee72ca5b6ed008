#include "stratflow/methods.hpp"

#include <cmath>
#include <sstream>

namespace stratflow {

std::string to_string(NoiseMode mode) {
  switch (mode) {
    case NoiseMode::none: return "none";
    case NoiseMode::adversarial_bounded: return "adversarial_bounded";
    case NoiseMode::custom: return "custom";
  }
  return "none";
}

std::string to_string(NoiseLaw law) {
  switch (law) {
    case NoiseLaw::gaussian: return "gaussian";
    case NoiseLaw::rademacher: return "rademacher";
    case NoiseLaw::uniform_ball: return "uniform_ball";
  }
  return "gaussian";
}

NoiseMode noise_mode_from_string(const std::string& name) {
  if (name == "none") return NoiseMode::none;
  if (name == "adversarial_bounded" || name == "adversarial-bounded") return NoiseMode::adversarial_bounded;
  if (name == "custom") return NoiseMode::custom;
  throw std::invalid_argument("unknown noise mode '" + name + "'");
}

NoiseLaw noise_law_from_string(const std::string& name) {
  if (name == "gaussian") return NoiseLaw::gaussian;
  if (name == "rademacher" || name == "rademacher-scaled" || name == "rademacher_scaled") return NoiseLaw::rademacher;
  if (name == "uniform_ball" || name == "uniform-ball") return NoiseLaw::uniform_ball;
  throw std::invalid_argument("unknown noise distribution '" + name + "'");
}

void InexactConfig::validate() const {
  if (!(c_b >= 0.0)) throw std::invalid_argument("c_b must be >= 0");
  if (!(xi > 0.0)) throw std::invalid_argument("xi must be > 0");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be > 0");
  if (noise == NoiseMode::custom && !custom_noise) throw std::invalid_argument("custom noise mode needs a callback");
}

void StochasticNoise::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("sigma must be >= 0");
}

Vec StochasticNoise::draw(Eigen::Index n, Rng& rng) const {
  const double dn = static_cast<double>(n);
  switch (law) {
    case NoiseLaw::gaussian:
      // Per-coordinate variance sigma^2 / n, so E|eps|^2 = sigma^2.
      return (sigma / std::sqrt(dn)) * rng.normal_vec(n);
    case NoiseLaw::rademacher: {
      // |eps| = sigma on every draw.
      Vec z(n);
      for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.coin() ? 1.0 : -1.0;
      return (sigma / std::sqrt(dn)) * z;
    }
    case NoiseLaw::uniform_ball: {
      // Uniform on B(0, R) has E|eps|^2 = R^2 n / (n + 2).
      const double radius = sigma * std::sqrt((dn + 2.0) / dn);
      return rng.in_ball(Vec::Zero(n), radius);
    }
  }
  return Vec::Zero(n);
}

void MomentumConfig::validate() const {
  if (!(kappa > 0.0 && kappa < 1.0)) throw std::invalid_argument("kappa must lie strictly inside (0, 1)");
  if (!std::isfinite(iota_m)) throw std::invalid_argument("iota_m must be finite");
}

namespace {

void guard(const Vec& x, std::size_t k, const RunLimits& limits) {
  if (!all_finite(x)) {
    std::ostringstream msg;
    msg << "non-finite iterate at step " << k;
    throw BlowUpError(k, msg.str());
  }
  const double r = x.norm();
  if (r > limits.blowup_radius) {
    std::ostringstream msg;
    msg << "iterate norm " << r << " exceeds " << limits.blowup_radius << " at step " << k;
    throw BlowUpError(k, msg.str());
  }
}

void check_start(const PiecewiseSmoothFunction& f, const Vec& x0, std::size_t K) {
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  if (x0.size() != f.dim) throw std::invalid_argument("x0 dimension does not match " + f.name);
  if (!all_finite(x0)) throw std::invalid_argument("x0 must be finite");
}

void put_schedule(MethodDescriptor& d, const StepSchedule& s) {
  d.labels["schedule"] = to_string(s.kind());
  d.params["schedule_c"] = s.scale();
  d.params["schedule_p"] = s.exponent();
  d.params["schedule_k0"] = static_cast<double>(s.offset());
}

}  // namespace

MethodDescriptor describe(const PiecewiseSmoothFunction& f, const StepSchedule& s, const InexactConfig& cfg) {
  MethodDescriptor d;
  d.method = "inexact";
  d.function = f.name;
  d.params["c_b"] = cfg.c_b;
  d.params["xi"] = cfg.xi;
  d.params["tau"] = cfg.tau;
  d.params["m"] = static_cast<double>(cfg.samples == 0 ? default_goldstein_samples(f.dim) : cfg.samples);
  d.labels["noise"] = to_string(cfg.noise);
  d.labels["tie"] = to_string(cfg.tie);
  put_schedule(d, s);
  return d;
}

MethodDescriptor describe(const PiecewiseSmoothFunction& f, const StepSchedule& s, const StochasticNoise& noise) {
  MethodDescriptor d;
  d.method = "stochastic";
  d.function = f.name;
  d.params["sigma"] = noise.sigma;
  d.labels["distribution"] = to_string(noise.law);
  d.labels["tie"] = to_string(noise.tie);
  put_schedule(d, s);
  return d;
}

MethodDescriptor describe(const PiecewiseSmoothFunction& f, const StepSchedule& s, const MomentumConfig& cfg) {
  MethodDescriptor d;
  d.method = "momentum";
  d.function = f.name;
  d.params["kappa"] = cfg.kappa;
  d.params["iota_m"] = cfg.iota_m;
  d.labels["tie"] = to_string(cfg.tie);
  put_schedule(d, s);
  return d;
}

Vec random_start(Eigen::Index n, std::uint64_t seed, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("start radius must be > 0");
  Rng rng(seed, Stream::init);
  Vec x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.uniform(-radius, radius);
  return x;
}

void inexact_stream(const PiecewiseSmoothFunction& f, const Vec& x0, const StepSchedule& s,
                    const InexactConfig& cfg, std::size_t K, std::uint64_t seed, StepSink& sink, RunLimits limits) {
  cfg.validate();
  check_start(f, x0, K);
  const std::size_t m = cfg.samples == 0 ? default_goldstein_samples(f.dim) : cfg.samples;
  Rng sampling(seed, Stream::goldstein);
  Rng noise_rng(seed, Stream::noise);
  Vec x = x0;
  Vec zero = Vec::Zero(f.dim);
  sink.begin(x0);
  for (std::size_t k = 0; k < K; ++k) {
    const double alpha = s.value(k);
    const double radius = cfg.c_b > 0.0 ? cfg.c_b * std::pow(alpha, cfg.xi) : 0.0;
    const Vec v = goldstein_sample(f, x, radius, m, sampling, cfg.tie);
    Vec e = zero;
    switch (cfg.noise) {
      case NoiseMode::none:
        break;
      case NoiseMode::adversarial_bounded: {
        // Full budget alpha^tau, aimed against the descent direction.
        const double bound = std::pow(alpha, cfg.tau);
        const double vn = v.norm();
        e = vn > 0.0 ? Vec(bound / vn * v) : Vec(bound * noise_rng.unit_direction(f.dim));
        break;
      }
      case NoiseMode::custom:
        e = cfg.custom_noise(k, x, alpha, noise_rng);
        break;
    }
    Vec next = x - alpha * v + e;
    guard(next, k + 1, limits);
    sink.step(StepRecord{k, alpha, x, v, e, next});
    x = std::move(next);
  }
}

void stochastic_stream(const PiecewiseSmoothFunction& f, const Vec& x0, const StepSchedule& s,
                       const StochasticNoise& noise, std::size_t K, std::uint64_t seed, StepSink& sink,
                       RunLimits limits) {
  noise.validate();
  check_start(f, x0, K);
  Rng noise_rng(seed, Stream::noise);
  Rng tie_rng(seed, Stream::tie);
  Vec x = x0;
  sink.begin(x0);
  for (std::size_t k = 0; k < K; ++k) {
    const double alpha = s.value(k);
    const Vec v = select_subgradient(f, x, noise.tie, &tie_rng);
    const Vec e = noise.sigma > 0.0 ? Vec(-alpha * noise.draw(f.dim, noise_rng)) : Vec(Vec::Zero(f.dim));
    Vec next = x - alpha * v + e;
    guard(next, k + 1, limits);
    sink.step(StepRecord{k, alpha, x, v, e, next});
    x = std::move(next);
  }
}

void momentum_stream(const PiecewiseSmoothFunction& f, const Vec& x0, const StepSchedule& s,
                     const MomentumConfig& cfg, std::size_t K, std::uint64_t seed, StepSink& sink, RunLimits limits) {
  cfg.validate();
  check_start(f, x0, K);
  Rng tie_rng(seed, Stream::tie);
  Vec prev = x0;
  Vec x = x0;
  sink.begin(x0);
  for (std::size_t k = 0; k < K; ++k) {
    const double alpha = s.value(k);
    const Vec diff = x - prev;
    const Vec extrapolated = x + cfg.kappa * diff;
    const Vec probe = x + cfg.iota_m * diff;
    const Vec v = select_subgradient(f, probe, cfg.tie, &tie_rng);
    Vec next = extrapolated - alpha * v;
    // The carried momentum is the additive error relative to a plain step.
    const Vec e = cfg.kappa * diff;
    guard(next, k + 1, limits);
    sink.step(StepRecord{k, alpha, x, v, e, next});
    prev = std::move(x);
    x = std::move(next);
  }
}

Trajectory inexact_run(const PiecewiseSmoothFunction& f, const Vec& x0, const StepSchedule& s,
                       const InexactConfig& cfg, std::size_t K, std::uint64_t seed, RunLimits limits) {
  TrajectoryRecorder rec(K);
  inexact_stream(f, x0, s, cfg, K, seed, rec, limits);
  Trajectory t = rec.take();
  t.seed = seed;
  t.meta = describe(f, s, cfg);
  return t;
}

Trajectory stochastic_run(const PiecewiseSmoothFunction& f, const Vec& x0, const StepSchedule& s,
                          const StochasticNoise& noise, std::size_t K, std::uint64_t seed, RunLimits limits) {
  TrajectoryRecorder rec(K);
  stochastic_stream(f, x0, s, noise, K, seed, rec, limits);
  Trajectory t = rec.take();
  t.seed = seed;
  t.meta = describe(f, s, noise);
  return t;
}

Trajectory momentum_run(const PiecewiseSmoothFunction& f, const Vec& x0, const StepSchedule& s,
                        const MomentumConfig& cfg, std::size_t K, std::uint64_t seed, RunLimits limits) {
  TrajectoryRecorder rec(K);
  momentum_stream(f, x0, s, cfg, K, seed, rec, limits);
  Trajectory t = rec.take();
  t.seed = seed;
  t.meta = describe(f, s, cfg);
  return t;
}

std::vector<Vec> momentum_extrapolations(const Trajectory& t, double iota_m) {
  std::vector<Vec> out;
  out.reserve(t.steps());
  for (std::size_t k = 0; k < t.steps(); ++k) {
    const Vec& prev = k == 0 ? t.x[0] : t.x[k - 1];
    out.push_back(t.x[k] + iota_m * (t.x[k] - prev));
  }
  return out;
}

}  // namespace stratflow
