#pragma once

#include "stratflow/vec.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace stratflow {

/// Which scheme produced a record and with which constants.
struct MethodDescriptor {
  std::string method;    // inexact | stochastic | momentum | synthetic
  std::string function;  // battery name, empty for synthetic data
  std::map<std::string, double> params;
  std::map<std::string, std::string> labels;

  double param(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
};

/// One realization of x_{k+1} = x_k - alpha_k v_k + e_k.
///
/// x holds K+1 iterates; alpha, e and v hold K entries each. v_k is the
/// selected update direction (a subgradient or an averaged one) and e_k
/// collects everything else in the increment, so the update identity holds
/// up to rounding for every method.
struct Trajectory {
  std::vector<Vec> x;
  std::vector<double> alpha;
  std::vector<Vec> e;
  std::vector<Vec> v;
  std::uint64_t seed = 0;
  MethodDescriptor meta;

  std::size_t steps() const { return alpha.size(); }
  Eigen::Index dim() const { return x.empty() ? 0 : x.front().size(); }

  /// Step size at k, held at its last value beyond the recorded range.
  double alpha_at(std::size_t k) const { return alpha[std::min(k, alpha.size() - 1)]; }

  /// Throws std::logic_error if the length invariants are broken.
  void check_shape() const;
};

/// View of one update handed to streaming consumers.
struct StepRecord {
  std::size_t k;
  double alpha;
  const Vec& x;
  const Vec& v;
  const Vec& e;
  const Vec& x_next;
};

/// Streaming consumer of a run. Long runs can be analysed without keeping
/// the full record in memory.
class StepSink {
 public:
  virtual ~StepSink() = default;
  virtual void begin(const Vec& /*x0*/) {}
  virtual void step(const StepRecord& rec) = 0;
};

/// Sink that keeps every update.
class TrajectoryRecorder final : public StepSink {
 public:
  explicit TrajectoryRecorder(std::size_t reserve = 0) { reserve_ = reserve; }
  void begin(const Vec& x0) override;
  void step(const StepRecord& rec) override;
  Trajectory take() { return std::move(traj_); }
  Trajectory& trajectory() { return traj_; }

 private:
  std::size_t reserve_ = 0;
  Trajectory traj_;
};

/// Fans one stream out to several sinks.
class SinkTee final : public StepSink {
 public:
  explicit SinkTee(std::vector<StepSink*> sinks) : sinks_(std::move(sinks)) {}
  void begin(const Vec& x0) override {
    for (auto* s : sinks_) s->begin(x0);
  }
  void step(const StepRecord& rec) override {
    for (auto* s : sinks_) s->step(rec);
  }

 private:
  std::vector<StepSink*> sinks_;
};

/// Indices kept by checkpoint thinning: every m-th iterate plus the last
/// dense_tail iterates (and always the final one).
std::vector<std::size_t> thinned_indices(std::size_t K, std::size_t every, std::size_t dense_tail);

/// Writes the CSV record (header k,alpha,e_norm,x_0..x_{n-1}); the final
/// iterate row leaves alpha and e_norm empty.
void write_trajectory_csv(const Trajectory& t, const std::filesystem::path& path,
                          std::size_t thin_every = 1, std::size_t dense_tail = 0);

/// Writes the JSON sidecar with method metadata and seed.
void write_trajectory_sidecar(const Trajectory& t, const std::filesystem::path& path);

/// Full-precision text form of a double used by every writer.
std::string format_real(double value);

}  // namespace stratflow
