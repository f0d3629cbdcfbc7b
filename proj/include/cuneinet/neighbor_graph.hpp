#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "cuneinet/spatial_index.hpp"

namespace cuneinet {

/// k selected neighbours per point plus the mean distance to them.
struct NeighborGraph {
  std::size_t n_points = 0;
  std::size_t k = 0;
  std::size_t candidate_pool = 0;
  std::vector<PointIndex> neighbors;  // n_points x k, row-major
  std::vector<double> mean_dist;      // n_points
  // points that had fewer than k qualifying candidates and fell back to the
  // k farthest available points (tiny degenerate clouds only)
  std::size_t fallback_count = 0;

  std::span<const PointIndex> row(std::size_t i) const {
    return std::span<const PointIndex>(neighbors).subspan(i * k, k);
  }
};

/// Nearest-neighbour lists of fixed width for every point, nearest first.
/// Built once per cloud so repeated graph sampling can skip the tree queries;
/// graphs built with or without a table are identical.
struct NeighborTable {
  std::size_t n_points = 0;
  std::size_t width = 0;
  std::vector<PointIndex> entries;  // n_points x width

  std::span<const PointIndex> row(std::size_t i) const {
    return std::span<const PointIndex>(entries).subspan(i * width, width);
  }
};

/// width is clamped to N - 1.
NeighborTable build_neighbor_table(const SpatialIndex& index, std::size_t width);

/// The `pool` nearest neighbours of point i (self excluded), nearest first.
std::vector<PointIndex> candidate_pool(const SpatialIndex& index, PointIndex i, std::size_t pool);

/// The `pool` nearest points j with |p_j - p_i| >= min_dist, nearest first.
/// May return fewer when not enough points qualify. Found by repeatedly
/// doubling an exact k-NN query starting at 2*pool, capped at N-1.
std::vector<PointIndex> qualified_pool(const SpatialIndex& index, PointIndex i, double min_dist,
                                       std::size_t pool);

/// Per point: take the `pool` nearest, keep k of them chosen uniformly at
/// random. pool == k gives exact k-NN. The RNG stream of point i is derived
/// from (seed, i).
NeighborGraph sparse_edge_neighbors(const SpatialIndex& index, std::size_t k, std::size_t pool,
                                    std::uint64_t seed, const NeighborTable* table = nullptr);

/// As sparse_edge_neighbors, but candidates closer than min_dist[i] are
/// excluded (distance >= min_dist qualifies).
NeighborGraph min_distance_neighbors(const SpatialIndex& index, std::span<const double> min_dist,
                                     std::size_t k, std::size_t pool, std::uint64_t seed,
                                     const NeighborTable* table = nullptr);

/// Euclidean distance, consistent with squared_distance().
double point_distance(const Vec3f& a, const Vec3f& b);

/// Debug dump, one line per point: `i: j1 j2 ... jk | mean_dist`.
void write_graph_dump(std::ostream& os, const NeighborGraph& graph);

}  // namespace cuneinet
