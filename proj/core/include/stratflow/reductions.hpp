#pragma once

#include "stratflow/objectives.hpp"
#include "stratflow/schedule.hpp"
#include "stratflow/trajectory.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace stratflow {

// Stochastic windowing ---------------------------------------------------------

/// Window starts s_0 = 0 < s_1 < ... with
/// s_{t+1} = inf{k > s_t : sum_{i=s_t}^{k} alpha_i > alpha_{s_t}^zeta}.
struct WindowPlan {
  double zeta = 0.5;
  /// Noise exponent of the windowed error check, zeta < gamma < 1/2.
  double gamma = 0.45;
  std::vector<std::size_t> s;

  /// Number of complete windows, s.size() - 1.
  std::size_t windows() const { return s.empty() ? 0 : s.size() - 1; }
};

/// x_{s_{t+1}} = x_{s_t} - a_t u_t + e_t.
struct WindowedSequence {
  std::vector<double> a;
  std::vector<Vec> u;
  std::vector<Vec> e;
};

/// The first T + 1 window starts of the literal recursion.
WindowPlan window_indices(const StepSchedule& s, double zeta, std::size_t T);

/// The longest plan whose last window ends at or before K.
WindowPlan window_indices_within(const StepSchedule& s, double zeta, std::size_t K);

/// Largest violation of the defining sandwich
/// sum_{s_t}^{s_{t+1}-1} alpha <= alpha_{s_t}^zeta < sum_{s_t}^{s_{t+1}} alpha
/// (0 when it holds at every t).
double window_sandwich_violation(const WindowPlan& plan, const StepSchedule& s);

/// Aggregates a recorded trajectory over the plan's windows. Throws
/// std::out_of_range when the plan runs past the trajectory.
WindowedSequence window_aggregate(const Trajectory& t, const WindowPlan& plan);

/// max_t |x_{s_{t+1}} - (x_{s_t} - a_t u_t + e_t)| / (1 + |x_{s_{t+1}} - x_{s_t}| + a_t |u_t| + |e_t|).
double window_reconstruction_error(const Trajectory& t, const WindowPlan& plan, const WindowedSequence& w);

struct WindowAsymptotics {
  bool applicable = true;  // false unless alpha_k = Theta(1/(k+1))
  double s_ratio_min = 0.0, s_ratio_max = 0.0;  // s_t / (t+1)^{1/zeta}
  double a_ratio_min = 0.0, a_ratio_max = 0.0;  // a_t (t+1)
  double s_band = 0.0, a_band = 0.0;            // max / min
  bool flagged = false;                         // a band wider than the factor or not applicable
  double band_factor = 3.0;
};

/// Ratio bands over t in [T/10, T]. Requires T >= 100.
WindowAsymptotics window_asymptotics(const WindowPlan& plan, const StepSchedule& s, double band_factor = 3.0);

/// Per-window statistics of a stochastic run.
struct WindowStats {
  std::size_t start = 0;
  double alpha_start = 0.0;
  double a = 0.0;
  /// sup over l in [s_t, s_{t+1}] of |sum_{k=s_t}^{l-1} e_k|.
  double noise_sup = 0.0;
  /// max over k in [s_t, s_{t+1}] of |x_k - x_{s_t}|.
  double deviation = 0.0;
};

/// Streaming sink collecting WindowStats, so runs with tens of millions of
/// steps need only O(T) memory.
class WindowAccumulator final : public StepSink {
 public:
  explicit WindowAccumulator(WindowPlan plan);
  void begin(const Vec& x0) override;
  void step(const StepRecord& rec) override;

  const std::vector<WindowStats>& stats() const { return stats_; }
  const WindowPlan& plan() const { return plan_; }
  /// True once every window of the plan has been closed.
  bool complete() const { return stats_.size() == plan_.windows(); }

 private:
  WindowPlan plan_;
  std::vector<WindowStats> stats_;
  std::size_t t_ = 0;
  Vec anchor_;
  Vec noise_;
  WindowStats open_;
};

std::vector<WindowStats> window_stats(const Trajectory& t, const WindowPlan& plan);

struct WindowErrorReport {
  std::size_t tail_start = 0;  // first window index of the tail [T/2, T)
  std::size_t tail_windows = 0;
  std::size_t violations = 0;
  double violation_fraction = 0.0;
  /// max over tail windows of deviation / a_t.
  double deviation_ratio = 0.0;
};

/// Fraction of windows t in [T/2, T) whose noise partial sums exceed
/// alpha_{s_t}^gamma.
WindowErrorReport window_error_check(std::span<const WindowStats> stats, double gamma);
WindowErrorReport window_error_check(const Trajectory& t, const WindowPlan& plan, double gamma);

/// c_b fitted as margin * max deviation ratio over the training tails, and
/// the number of held-out tail windows with deviation > c_b a_t.
struct GoldsteinRadiusFit {
  double c_b = 0.0;
  std::size_t holdout_windows = 0;
  std::size_t holdout_violations = 0;
};
GoldsteinRadiusFit fit_window_radius(std::span<const std::vector<WindowStats>> train,
                                     std::span<const std::vector<WindowStats>> holdout, double margin = 1.5);

// Momentum decomposition -------------------------------------------------------

/// x_{k+1} - x_k = -a_k u_k + e_k with a_k u_k the part of the unrolled
/// increment since the recent-window start T(k).
struct MomentumDecomposition {
  double kappa = 0.5;
  double zeta = 0.5;
  std::vector<double> b;
  std::vector<std::size_t> T;
  std::vector<double> a;
  std::vector<Vec> u;
  std::vector<Vec> e;
  /// Largest relative error of the unrolled increment identity.
  double increment_error = 0.0;
  /// Largest relative error of x_{k+1} - x_k = -a_k u_k + e_k.
  double reconstruction_error = 0.0;
};

/// Decomposes a momentum trajectory. T(k) is the infimum of the recent-window
/// definition; when b_k > 1 the defining set is empty and T(k) = k. Throws
/// std::runtime_error if the stored directions do not reproduce the
/// increments (relative error above 1e-8).
MomentumDecomposition momentum_decompose(const Trajectory& t, double kappa, double zeta);

struct MomentumCheckOptions {
  double L = 1.0;          // bound on |v_k|
  double xi = 0.5;         // exponent of the proximity radius C_xi b_k^xi
  double iota_m = 0.0;     // extrapolation of the subgradient probe
  std::size_t tail_start = 100;
  std::size_t band_start = 1000;
  double hull_tolerance = 1e-8;
  std::size_t hull_stride = 1;
};

struct MomentumCheckReport {
  std::size_t checked = 0;
  std::size_t a_violations = 0;
  std::size_t e_violations = 0;
  double b_ratio_min = 0.0, b_ratio_max = 0.0, b_band = 0.0;  // b_k (k+1)
  double c_xi = 0.0;
  std::size_t xi_violations = 0;
  double hull_distance_max = 0.0;
  std::size_t hull_violations = 0;
  /// -slope of log|e_k| against log(k+1) over the tail (NaN if undefined).
  double e_decay_exponent = 0.0;
};

/// Checks the bounds on the tail k >= tail_start. C_xi is fitted on the first
/// half of the tail and validated on the second. The hull check needs f; it
/// is skipped when f is null.
MomentumCheckReport momentum_bounds_check(const Trajectory& t, const MomentumDecomposition& d,
                                          const MomentumCheckOptions& opts,
                                          const PiecewiseSmoothFunction* f = nullptr);

}  // namespace stratflow
