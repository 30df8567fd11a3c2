#include "dynagg/kdtree.hpp"

#include <algorithm>
#include <stdexcept>

namespace dynagg {

KdTree3::KdTree3(const Eigen::MatrixX3d& points) : points_(points) {
  if (points_.rows() == 0)
    throw std::invalid_argument("KdTree3: empty point set");
  std::vector<std::uint32_t> items(static_cast<std::size_t>(points_.rows()));
  for (std::size_t i = 0; i < items.size(); ++i)
    items[i] = static_cast<std::uint32_t>(i);
  nodes_.reserve(items.size());
  root_ = build(items, 0, items.size(), 0);
}

std::int32_t KdTree3::build(std::vector<std::uint32_t>& items,
                            std::size_t begin, std::size_t end, int depth) {
  if (begin >= end) return -1;
  const std::uint8_t axis = static_cast<std::uint8_t>(depth % 3);
  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(items.begin() + begin, items.begin() + mid,
                   items.begin() + end,
                   [this, axis](std::uint32_t a, std::uint32_t b) {
                     if (points_(a, axis) != points_(b, axis))
                       return points_(a, axis) < points_(b, axis);
                     return a < b;
                   });
  Node node;
  node.point = items[mid];
  node.axis = axis;
  const std::int32_t self = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(node);
  const std::int32_t left = build(items, begin, mid, depth + 1);
  const std::int32_t right = build(items, mid + 1, end, depth + 1);
  nodes_[self].left = left;
  nodes_[self].right = right;
  return self;
}

namespace {

// Max-heap on (dist_sq, index): the root is the worst kept neighbor.
inline bool heap_less(const Neighbor& a, const Neighbor& b) { return a < b; }

}  // namespace

void KdTree3::search(std::int32_t node_id, const Eigen::Vector3d& query,
                     std::size_t k, std::vector<Neighbor>& heap) const {
  const Node& node = nodes_[static_cast<std::size_t>(node_id)];
  const Eigen::Vector3d p = points_.row(node.point).transpose();
  const double d2 = (p - query).squaredNorm();
  const Neighbor cand{d2, node.point};

  if (heap.size() < k) {
    heap.push_back(cand);
    std::push_heap(heap.begin(), heap.end(), heap_less);
  } else if (cand < heap.front()) {
    std::pop_heap(heap.begin(), heap.end(), heap_less);
    heap.back() = cand;
    std::push_heap(heap.begin(), heap.end(), heap_less);
  }

  const double diff = query[node.axis] - points_(node.point, node.axis);
  const std::int32_t near = diff <= 0.0 ? node.left : node.right;
  const std::int32_t far = diff <= 0.0 ? node.right : node.left;

  if (near >= 0) search(near, query, k, heap);
  // The far half-space can still hold an equal-distance point with a
  // lower index, so pruning is strict.
  if (far >= 0 &&
      (heap.size() < k || diff * diff <= heap.front().dist_sq)) {
    search(far, query, k, heap);
  }
}

std::vector<Neighbor> KdTree3::knn(const Eigen::Vector3d& query,
                                   std::size_t k) const {
  if (k > static_cast<std::size_t>(points_.rows()))
    k = static_cast<std::size_t>(points_.rows());
  std::vector<Neighbor> heap;
  if (k == 0) return heap;
  heap.reserve(k + 1);
  search(root_, query, k, heap);
  std::sort_heap(heap.begin(), heap.end(), heap_less);
  return heap;
}

std::uint32_t KdTree3::nearest(const Eigen::Vector3d& query) const {
  return knn(query, 1).front().index;
}

}  // namespace dynagg
