#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <vector>

namespace partfuse {

/// Static kd-tree over D-dimensional points, median split on the widest
/// axis, leaves of at most 16 points. Query results are ordered by
/// (squared distance, point index), so equal distances resolve to the
/// lowest index independently of the tree layout.
template <std::size_t D>
class KdTree {
 public:
  using Point = std::array<double, D>;

  struct Neighbor {
    std::uint32_t index;
    double dist2;

    friend bool operator<(const Neighbor& a, const Neighbor& b) {
      return a.dist2 != b.dist2 ? a.dist2 < b.dist2 : a.index < b.index;
    }
  };

  static constexpr std::size_t kLeafSize = 16;

  KdTree() = default;
  explicit KdTree(std::vector<Point> points) : points_(std::move(points)) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    if (!points_.empty()) build(0, static_cast<std::uint32_t>(points_.size()));
  }

  std::size_t size() const noexcept { return points_.size(); }
  const Point& point(std::uint32_t i) const { return points_[i]; }

  /// Indices of all points within `radius` (inclusive), ascending by index.
  std::vector<std::uint32_t> radius_search(const Point& q, double radius) const {
    std::vector<std::uint32_t> out;
    if (!nodes_.empty()) radius_rec(0, q, radius * radius, out);
    std::sort(out.begin(), out.end());
    return out;
  }

  /// The k nearest points sorted by (distance, index).
  std::vector<Neighbor> knn(const Point& q, std::size_t k) const {
    std::priority_queue<Neighbor> heap;  // max-heap on (dist2, index)
    if (k > 0 && !nodes_.empty()) knn_rec(0, q, k, heap);
    std::vector<Neighbor> out;
    out.reserve(heap.size());
    while (!heap.empty()) {
      out.push_back(heap.top());
      heap.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

  static double dist2(const Point& a, const Point& b) {
    double s = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
      const double t = a[d] - b[d];
      s += t * t;
    }
    return s;
  }

 private:
  struct Node {
    std::uint32_t begin = 0, end = 0;  // range in order_ for leaves
    std::uint32_t left = 0, right = 0;
    std::uint8_t axis = 0;
    double split = 0.0;
    bool leaf = true;
    Point lo{}, hi{};  // bounding box
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    Node node;
    node.begin = begin;
    node.end = end;
    node.lo.fill(std::numeric_limits<double>::infinity());
    node.hi.fill(-std::numeric_limits<double>::infinity());
    for (auto i = begin; i < end; ++i) {
      for (std::size_t d = 0; d < D; ++d) {
        node.lo[d] = std::min(node.lo[d], points_[order_[i]][d]);
        node.hi[d] = std::max(node.hi[d], points_[order_[i]][d]);
      }
    }
    if (end - begin > kLeafSize) {
      std::size_t axis = 0;
      for (std::size_t d = 1; d < D; ++d) {
        if (node.hi[d] - node.lo[d] > node.hi[axis] - node.lo[axis]) axis = d;
      }
      const auto mid = begin + (end - begin) / 2;
      std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                       [&](std::uint32_t a, std::uint32_t b) {
                         return points_[a][axis] != points_[b][axis] ? points_[a][axis] < points_[b][axis] : a < b;
                       });
      node.leaf = false;
      node.axis = static_cast<std::uint8_t>(axis);
      node.split = points_[order_[mid]][axis];
      node.left = build(begin, mid);
      node.right = build(mid, end);
    }
    nodes_[id] = node;
    return id;
  }

  double box_dist2(const Node& node, const Point& q) const {
    double s = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
      double t = 0.0;
      if (q[d] < node.lo[d]) t = node.lo[d] - q[d];
      if (q[d] > node.hi[d]) t = q[d] - node.hi[d];
      s += t * t;
    }
    return s;
  }

  void radius_rec(std::uint32_t id, const Point& q, double r2, std::vector<std::uint32_t>& out) const {
    const Node& node = nodes_[id];
    if (box_dist2(node, q) > r2) return;
    if (node.leaf) {
      for (auto i = node.begin; i < node.end; ++i) {
        if (dist2(points_[order_[i]], q) <= r2) out.push_back(order_[i]);
      }
      return;
    }
    radius_rec(node.left, q, r2, out);
    radius_rec(node.right, q, r2, out);
  }

  void knn_rec(std::uint32_t id, const Point& q, std::size_t k, std::priority_queue<Neighbor>& heap) const {
    const Node& node = nodes_[id];
    // Equal distance must still be visited so the index tie rule holds.
    if (heap.size() == k && box_dist2(node, q) > heap.top().dist2) return;
    if (node.leaf) {
      for (auto i = node.begin; i < node.end; ++i) {
        Neighbor cand{order_[i], dist2(points_[order_[i]], q)};
        if (heap.size() < k) {
          heap.push(cand);
        } else if (cand < heap.top()) {
          heap.pop();
          heap.push(cand);
        }
      }
      return;
    }
    const bool left_first = q[node.axis] < node.split;
    knn_rec(left_first ? node.left : node.right, q, k, heap);
    knn_rec(left_first ? node.right : node.left, q, k, heap);
  }

  std::vector<Point> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace partfuse
