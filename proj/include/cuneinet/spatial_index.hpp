#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cuneinet/point_cloud.hpp"
#include "cuneinet/tensor.hpp"

namespace cuneinet {

struct Neighbor {
  double sq_dist = 0.0;
  PointIndex index = 0;
  // distance first, lower index wins ties
  auto operator<=>(const Neighbor&) const = default;
};

/// Squared Euclidean distance as every neighbor query evaluates it:
/// (dx*dx + dy*dy) + dz*dz in double precision.
double squared_distance(const Vec3f& a, const Vec3f& b);

/// Balanced kd-tree over a fixed point set. Exact queries; results are
/// sorted by (distance, index) and therefore identical to a brute-force scan.
class SpatialIndex {
 public:
  explicit SpatialIndex(std::span<const Vec3f> points, std::size_t leaf_size = 12);

  std::size_t size() const { return points_.size(); }
  const std::vector<Vec3f>& points() const { return points_; }

  /// k nearest points to `query`, optionally excluding one index. Throws
  /// InputError if fewer than k points are available.
  void knn(const Vec3f& query, std::size_t k, std::optional<PointIndex> exclude,
           std::vector<Neighbor>& out) const;

  /// k nearest neighbours of an indexed point, the point itself excluded.
  void knn_of(PointIndex i, std::size_t k, std::vector<Neighbor>& out) const;

 private:
  struct Node {
    std::uint32_t begin = 0, end = 0;  // range in order_
    std::int32_t left = -1, right = -1;
    std::uint8_t axis = 0;
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::int32_t node, const double q[3], std::size_t k, std::optional<PointIndex> exclude,
              std::vector<Neighbor>& heap, std::vector<double>& scratch) const;

  std::vector<Vec3f> points_;
  std::size_t leaf_size_;
  std::vector<PointIndex> order_;
  // coordinates in tree order, one array per axis, for the distance kernel
  std::vector<double> xs_, ys_, zs_;
  std::vector<Node> nodes_;
};

SpatialIndex build_index(std::span<const Vec3f> points);

}  // namespace cuneinet
