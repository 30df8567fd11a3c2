#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

namespace dynagg {

/// Distance-squared / index pair ordered lexicographically, so equal
/// distances resolve to the lower index. This is the single tie rule the
/// whole indexing path relies on; the brute-force oracle sorts by the
/// same key.
struct Neighbor {
  double dist_sq;
  std::uint32_t index;

  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    if (a.dist_sq != b.dist_sq) return a.dist_sq < b.dist_sq;
    return a.index < b.index;
  }
};

/// Static kd-tree over 3D points supporting exact k-nearest queries.
class KdTree3 {
public:
  /// points: R x 3, one row per point. Rows are copied.
  explicit KdTree3(const Eigen::MatrixX3d& points);

  std::size_t size() const { return points_.rows(); }

  /// The k nearest points to `query`, sorted ascending by (dist_sq, index).
  /// k is capped at size(). Matches an exhaustive scan exactly, ties
  /// included.
  std::vector<Neighbor> knn(const Eigen::Vector3d& query, std::size_t k) const;

  /// Index of the single nearest point (lowest index on ties).
  std::uint32_t nearest(const Eigen::Vector3d& query) const;

private:
  struct Node {
    std::uint32_t point;  // row into points_
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint8_t axis = 0;
  };

  std::int32_t build(std::vector<std::uint32_t>& items, std::size_t begin,
                     std::size_t end, int depth);
  void search(std::int32_t node, const Eigen::Vector3d& query,
              std::size_t k, std::vector<Neighbor>& heap) const;

  Eigen::MatrixX3d points_;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
};

}  // namespace dynagg
