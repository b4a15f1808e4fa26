#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace sgt::approx {

struct Neighbor {
  std::uint32_t index = 0;
  double dist2 = 0.0;
};

/// (dist2, index) lexicographic order: equal distances resolve to the
/// earlier-inserted point.
inline bool closer(const Neighbor& a, const Neighbor& b) {
  return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
}

inline constexpr std::size_t kMaxNeighbors = 64;

/// Static k-d tree over a flat row-major point array. Owns a reordered copy of
/// the points, so it stays valid independently of the caller's buffer.
class KdTree {
 public:
  KdTree() = default;
  KdTree(std::span<const double> points, std::size_t dim, std::size_t leaf_size = 8);

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }

  /// Writes the min(k, size()) nearest points to `out`, sorted by closer().
  /// The result is exactly the prefix of a full linear scan under the same order.
  std::size_t knn(std::span<const double> query, std::size_t k, Neighbor* out) const;

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t split_dim = 0;
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end, std::vector<std::uint32_t>& perm,
                     std::span<const double> points);

  std::size_t dim_ = 0;
  std::size_t leaf_size_ = 8;
  std::vector<Node> nodes_;
  std::vector<double> coords_;       // points in tree order
  std::vector<std::uint32_t> ids_;   // original index per tree slot
};

}  // namespace sgt::approx
