#pragma once

#include "stratflow/vec.hpp"

#include <span>
#include <vector>

namespace stratflow {

/// Bounding-box tree over a point sequence in index order. Answers
/// "farthest point from p among indices [lo, hi)" with branch-and-bound;
/// index-contiguous trajectory pieces are spatially coherent, which keeps
/// the boxes tight.
class FarthestTree {
 public:
  explicit FarthestTree(std::span<const Vec> points, std::size_t leaf_size = 16);

  /// max over q in [lo, hi) of |p - q| when it exceeds floor, else floor.
  double farthest(const Vec& p, std::size_t lo, std::size_t hi, double floor = 0.0) const;

  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    std::size_t lo, hi;
    Vec min, max;
    int left = -1, right = -1;
  };

  int build(std::size_t lo, std::size_t hi);
  double corner_bound(const Node& node, const Vec& p) const;
  void search(int id, const Vec& p, std::size_t lo, std::size_t hi, double& best) const;

  std::span<const Vec> points_;
  std::size_t leaf_size_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

/// Exact running diameter of x[first], x[first+1], ... as points are appended
/// in index order. An enclosing ball filters appends that cannot raise the
/// diameter; the rest query the tree.
class RunningDiameter {
 public:
  RunningDiameter(const FarthestTree& tree, std::span<const Vec> points, std::size_t first);

  /// Appends the next index; returns the diameter of x[first..next].
  double advance();
  double value() const { return diameter_; }
  std::size_t last() const { return next_ - 1; }

 private:
  const FarthestTree& tree_;
  std::span<const Vec> points_;
  std::size_t first_;
  std::size_t next_;
  Vec center_;
  double radius_ = 0.0;
  double diameter_ = 0.0;
};

}  // namespace stratflow
