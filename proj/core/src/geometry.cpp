#include "stratflow/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace stratflow {

FarthestTree::FarthestTree(std::span<const Vec> points, std::size_t leaf_size)
    : points_(points), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
  if (!points_.empty()) {
    nodes_.reserve(2 * (points_.size() / leaf_size_ + 1));
    root_ = build(0, points_.size());
  }
}

int FarthestTree::build(std::size_t lo, std::size_t hi) {
  Node node;
  node.lo = lo;
  node.hi = hi;
  node.min = points_[lo];
  node.max = points_[lo];
  for (std::size_t i = lo + 1; i < hi; ++i) {
    node.min = node.min.cwiseMin(points_[i]);
    node.max = node.max.cwiseMax(points_[i]);
  }
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(std::move(node));
  if (hi - lo > leaf_size_) {
    const std::size_t mid = lo + (hi - lo) / 2;
    const int l = build(lo, mid);
    const int r = build(mid, hi);
    nodes_[static_cast<std::size_t>(id)].left = l;
    nodes_[static_cast<std::size_t>(id)].right = r;
  }
  return id;
}

double FarthestTree::corner_bound(const Node& node, const Vec& p) const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double a = std::abs(p[i] - node.min[i]);
    const double b = std::abs(node.max[i] - p[i]);
    const double m = std::max(a, b);
    s += m * m;
  }
  return std::sqrt(s);
}

void FarthestTree::search(int id, const Vec& p, std::size_t lo, std::size_t hi, double& best) const {
  const Node& node = nodes_[static_cast<std::size_t>(id)];
  if (node.hi <= lo || node.lo >= hi) return;
  if (corner_bound(node, p) <= best) return;
  if (node.left < 0) {
    const std::size_t a = std::max(lo, node.lo);
    const std::size_t b = std::min(hi, node.hi);
    for (std::size_t i = a; i < b; ++i) best = std::max(best, (p - points_[i]).norm());
    return;
  }
  const Node& l = nodes_[static_cast<std::size_t>(node.left)];
  const Node& r = nodes_[static_cast<std::size_t>(node.right)];
  if (corner_bound(l, p) >= corner_bound(r, p)) {
    search(node.left, p, lo, hi, best);
    search(node.right, p, lo, hi, best);
  } else {
    search(node.right, p, lo, hi, best);
    search(node.left, p, lo, hi, best);
  }
}

double FarthestTree::farthest(const Vec& p, std::size_t lo, std::size_t hi, double floor) const {
  double best = floor;
  if (root_ >= 0 && lo < hi) search(root_, p, lo, hi, best);
  return best;
}

RunningDiameter::RunningDiameter(const FarthestTree& tree, std::span<const Vec> points, std::size_t first)
    : tree_(tree), points_(points), first_(first), next_(first + 1), center_(points[first]) {}

double RunningDiameter::advance() {
  const Vec& p = points_[next_];
  const double to_center = (p - center_).norm();
  // Every earlier point lies in the ball, so |p - q| <= to_center + radius.
  if ((to_center + radius_) * (1.0 + 1e-12) > diameter_) diameter_ = tree_.farthest(p, first_, next_, diameter_);
  if (to_center > radius_) {
    // Smallest ball containing the old ball and p.
    const double new_radius = 0.5 * (radius_ + to_center);
    center_ += ((new_radius - radius_) / to_center) * (p - center_);
    radius_ = new_radius;
  }
  ++next_;
  return diameter_;
}

}  // namespace stratflow
