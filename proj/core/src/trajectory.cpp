#include "stratflow/trajectory.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace stratflow {

void Trajectory::check_shape() const {
  const auto K = alpha.size();
  if (x.size() != K + 1 || e.size() != K || v.size() != K)
    throw std::logic_error("trajectory length invariant violated: len(x) must be len(alpha)+1 = len(e)+1 = len(v)+1");
}

void TrajectoryRecorder::begin(const Vec& x0) {
  traj_ = Trajectory{};
  if (reserve_ > 0) {
    traj_.x.reserve(reserve_ + 1);
    traj_.alpha.reserve(reserve_);
    traj_.e.reserve(reserve_);
    traj_.v.reserve(reserve_);
  }
  traj_.x.push_back(x0);
}

void TrajectoryRecorder::step(const StepRecord& rec) {
  traj_.alpha.push_back(rec.alpha);
  traj_.v.push_back(rec.v);
  traj_.e.push_back(rec.e);
  traj_.x.push_back(rec.x_next);
}

std::vector<std::size_t> thinned_indices(std::size_t K, std::size_t every, std::size_t dense_tail) {
  if (every == 0) every = 1;
  std::vector<std::size_t> idx;
  const std::size_t tail_start = dense_tail >= K ? 0 : K - dense_tail;
  for (std::size_t k = 0; k <= K; ++k)
    if (k % every == 0 || k >= tail_start || k == K) idx.push_back(k);
  return idx;
}

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_trajectory_csv(const Trajectory& t, const std::filesystem::path& path, std::size_t thin_every,
                          std::size_t dense_tail) {
  t.check_shape();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const auto n = t.dim();
  out << "k,alpha,e_norm";
  for (Eigen::Index i = 0; i < n; ++i) out << ",x_" << i;
  out << '\n';
  const auto K = t.steps();
  for (std::size_t k : thinned_indices(K, thin_every, dense_tail)) {
    out << k << ',';
    if (k < K) out << format_real(t.alpha[k]) << ',' << format_real(t.e[k].norm());
    else out << ',';
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_real(t.x[k][i]);
    out << '\n';
  }
}

void write_trajectory_sidecar(const Trajectory& t, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["method"] = t.meta.method;
  j["function"] = t.meta.function;
  j["seed"] = t.seed;
  j["K"] = t.steps();
  j["dim"] = t.dim();
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (const auto& [key, value] : t.meta.params) params[key] = value;
  j["params"] = params;
  nlohmann::ordered_json labels = nlohmann::ordered_json::object();
  for (const auto& [key, value] : t.meta.labels) labels[key] = value;
  j["labels"] = labels;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

}  // namespace stratflow
