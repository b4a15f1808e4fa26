#include "sgt/kdtree.hpp"

#include <algorithm>
#include <numeric>

#include "sgt/common.hpp"

namespace sgt::approx {

namespace {

/// Bounded sorted buffer of the best k candidates seen so far.
struct Best {
  Neighbor* slots;
  std::size_t k;
  std::size_t count = 0;

  bool full() const { return count == k; }
  double worst() const { return slots[count - 1].dist2; }

  void offer(const Neighbor& cand) {
    if (full() && !closer(cand, slots[count - 1])) return;
    std::size_t pos = full() ? count - 1 : count++;
    while (pos > 0 && closer(cand, slots[pos - 1])) {
      slots[pos] = slots[pos - 1];
      --pos;
    }
    slots[pos] = cand;
  }
};

}  // namespace

KdTree::KdTree(std::span<const double> points, std::size_t dim, std::size_t leaf_size)
    : dim_(dim), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
  if (dim == 0 || points.size() % dim != 0) throw Error(ErrorKind::InvalidInput, "point array does not match dimension");
  const std::size_t n = points.size() / dim;
  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);
  if (n > 0) build(0, static_cast<std::uint32_t>(n), perm, points);
  ids_ = perm;
  coords_.resize(points.size());
  for (std::size_t slot = 0; slot < n; ++slot)
    std::copy_n(points.begin() + static_cast<std::ptrdiff_t>(perm[slot] * dim), dim,
                coords_.begin() + static_cast<std::ptrdiff_t>(slot * dim));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end, std::vector<std::uint32_t>& perm,
                           std::span<const double> points) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end, -1, -1, 0, 0.0});
  if (end - begin <= leaf_size_) return id;

  // Split on the axis of largest spread at the median.
  std::size_t best_dim = 0;
  double best_spread = -1.0;
  for (std::size_t d = 0; d < dim_; ++d) {
    double lo = points[perm[begin] * dim_ + d];
    double hi = lo;
    for (std::uint32_t i = begin; i < end; ++i) {
      const double v = points[perm[i] * dim_ + d];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      best_dim = d;
    }
  }
  if (best_spread <= 0.0) return id;  // all points identical: keep as one leaf

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(perm.begin() + begin, perm.begin() + mid, perm.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) { return points[a * dim_ + best_dim] < points[b * dim_ + best_dim]; });
  const double split = points[perm[mid] * dim_ + best_dim];
  const std::int32_t left = build(begin, mid, perm, points);
  const std::int32_t right = build(mid, end, perm, points);
  nodes_[id].left = left;
  nodes_[id].right = right;
  nodes_[id].split_dim = static_cast<std::uint32_t>(best_dim);
  nodes_[id].split = split;
  return id;
}

std::size_t KdTree::knn(std::span<const double> query, std::size_t k, Neighbor* out) const {
  if (query.size() != dim_) throw Error(ErrorKind::InvalidInput, "query dimension mismatch");
  k = std::min(k, ids_.size());
  if (k == 0) return 0;
  Best best{out, k};

  // Explicit stack of (node, lower bound on squared distance).
  struct Pending {
    std::int32_t node;
    double bound;
  };
  Pending stack[128];
  std::size_t top = 0;
  stack[top++] = {0, 0.0};
  const double* q = query.data();
  while (top > 0) {
    const Pending cur = stack[--top];
    // Equal bounds must still be explored: a tie may carry a smaller index.
    if (best.full() && cur.bound > best.worst()) continue;
    const Node& node = nodes_[static_cast<std::size_t>(cur.node)];
    if (node.left < 0) {
      for (std::uint32_t slot = node.begin; slot < node.end; ++slot) {
        const double* p = &coords_[slot * dim_];
        double d2 = 0.0;
        for (std::size_t d = 0; d < dim_; ++d) {
          const double diff = q[d] - p[d];
          d2 += diff * diff;
        }
        best.offer({ids_[slot], d2});
      }
      continue;
    }
    const double diff = q[node.split_dim] - node.split;
    const double far_bound = std::max(cur.bound, diff * diff);
    const std::int32_t near_child = diff < 0.0 ? node.left : node.right;
    const std::int32_t far_child = diff < 0.0 ? node.right : node.left;
    // Push far first so the near side is searched first.
    stack[top++] = {far_child, far_bound};
    stack[top++] = {near_child, cur.bound};
  }
  return best.count;
}

}  // namespace sgt::approx
