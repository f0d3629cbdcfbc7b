#include "cuneinet/neighbor_graph.hpp"

#include <cmath>
#include <ostream>
#include <algorithm>
#include <random>

#include "cuneinet/errors.hpp"
#include "cuneinet/parallel.hpp"
#include "cuneinet/seeding.hpp"

namespace cuneinet {

double point_distance(const Vec3f& a, const Vec3f& b) { return std::sqrt(squared_distance(a, b)); }

std::vector<PointIndex> candidate_pool(const SpatialIndex& index, PointIndex i, std::size_t pool) {
  std::vector<Neighbor> nn;
  index.knn_of(i, pool, nn);
  std::vector<PointIndex> out;
  out.reserve(nn.size());
  for (const auto& n : nn) out.push_back(n.index);
  return out;
}

namespace {

// Qualifying candidates for point i, nearest first; `all` receives the last
// (largest) sorted query so the fallback can reuse it.
void qualified(const SpatialIndex& index, PointIndex i, double min_dist, std::size_t pool,
               std::vector<Neighbor>& all, std::vector<PointIndex>& out) {
  const std::size_t cap = index.size() - 1;
  std::size_t kq = std::min(2 * pool, cap);
  while (true) {
    index.knn_of(i, kq, all);
    out.clear();
    for (const auto& n : all) {
      if (std::sqrt(n.sq_dist) >= min_dist) {
        out.push_back(n.index);
        if (out.size() == pool) return;
      }
    }
    if (kq == cap) return;
    kq = std::min(2 * kq, cap);
  }
}

// Table-backed version of qualified(); returns false when the table row is
// too short to decide, in which case the caller queries the tree.
bool qualified_from_table(const SpatialIndex& index, const NeighborTable& table, PointIndex i,
                          double min_dist, std::size_t pool, std::vector<PointIndex>& out) {
  out.clear();
  const auto& pts = index.points();
  for (PointIndex j : table.row(i)) {
    if (std::sqrt(squared_distance(pts[i], pts[j])) >= min_dist) {
      out.push_back(j);
      if (out.size() == pool) return true;
    }
  }
  return table.width == index.size() - 1;
}

void check_table(const SpatialIndex& index, const NeighborTable* table) {
  if (table && table->n_points != index.size())
    throw DimensionError("neighbour table covers " + std::to_string(table->n_points) +
                         " points, the cloud has " + std::to_string(index.size()));
}

void check_sizes(const SpatialIndex& index, std::size_t k, std::size_t pool) {
  if (k == 0 || k > pool)
    throw ConfigError("neighbour count k=" + std::to_string(k) + " must be in [1, pool=" +
                      std::to_string(pool) + "]");
  if (index.size() <= pool)
    throw InputError("cloud of " + std::to_string(index.size()) + " points is too small for a " +
                     std::to_string(pool) + "-candidate pool; need at least " +
                     std::to_string(pool + 1) + " points");
}

// Chooses k of the candidates (all of them, in order, when there are exactly k)
// and fills row i of the graph.
void select_row(const SpatialIndex& index, PointIndex i, std::span<const PointIndex> cands,
                std::size_t k, std::uint64_t seed, NeighborGraph& g) {
  PointIndex* row = g.neighbors.data() + std::size_t(i) * k;
  if (cands.size() == k) {
    std::copy(cands.begin(), cands.end(), row);
  } else {
    std::vector<PointIndex> tmp(cands.begin(), cands.end());
    SplitMix64 rng(derive_seed(seed, i));
    for (std::size_t t = 0; t < k; ++t) {
      std::uniform_int_distribution<std::size_t> pick(t, tmp.size() - 1);
      std::swap(tmp[t], tmp[pick(rng)]);
      row[t] = tmp[t];
    }
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < k; ++t) sum += point_distance(index.points()[i], index.points()[row[t]]);
  g.mean_dist[i] = sum / static_cast<double>(k);
}

NeighborGraph empty_graph(const SpatialIndex& index, std::size_t k, std::size_t pool) {
  NeighborGraph g;
  g.n_points = index.size();
  g.k = k;
  g.candidate_pool = pool;
  g.neighbors.assign(g.n_points * k, 0);
  g.mean_dist.assign(g.n_points, 0.0);
  return g;
}

}  // namespace

std::vector<PointIndex> qualified_pool(const SpatialIndex& index, PointIndex i, double min_dist,
                                       std::size_t pool) {
  if (index.size() < 2) throw InputError("need at least two points for a neighbour query");
  std::vector<Neighbor> all;
  std::vector<PointIndex> out;
  qualified(index, i, min_dist, pool, all, out);
  return out;
}

NeighborTable build_neighbor_table(const SpatialIndex& index, std::size_t width) {
  NeighborTable t;
  t.n_points = index.size();
  t.width = std::min(width, index.size() - 1);
  t.entries.resize(t.n_points * t.width);
  parallel_for(
      t.n_points,
      [&](std::size_t begin, std::size_t end) {
        std::vector<Neighbor> nn;
        for (std::size_t i = begin; i < end; ++i) {
          index.knn_of(static_cast<PointIndex>(i), t.width, nn);
          for (std::size_t c = 0; c < t.width; ++c) t.entries[i * t.width + c] = nn[c].index;
        }
      },
      64);
  return t;
}

NeighborGraph sparse_edge_neighbors(const SpatialIndex& index, std::size_t k, std::size_t pool,
                                    std::uint64_t seed, const NeighborTable* table) {
  check_sizes(index, k, pool);
  check_table(index, table);
  const bool use_table = table && table->width >= pool;
  NeighborGraph g = empty_graph(index, k, pool);
  parallel_for(
      g.n_points,
      [&](std::size_t begin, std::size_t end) {
        std::vector<Neighbor> nn;
        std::vector<PointIndex> cands;
        for (std::size_t i = begin; i < end; ++i) {
          if (use_table) {
            select_row(index, static_cast<PointIndex>(i), table->row(i).first(pool), k, seed, g);
            continue;
          }
          index.knn_of(static_cast<PointIndex>(i), pool, nn);
          cands.clear();
          for (const auto& n : nn) cands.push_back(n.index);
          select_row(index, static_cast<PointIndex>(i), cands, k, seed, g);
        }
      },
      64);
  return g;
}

NeighborGraph min_distance_neighbors(const SpatialIndex& index, std::span<const double> min_dist,
                                     std::size_t k, std::size_t pool, std::uint64_t seed,
                                     const NeighborTable* table) {
  check_sizes(index, k, pool);
  check_table(index, table);
  if (min_dist.size() != index.size())
    throw DimensionError("min_dist has " + std::to_string(min_dist.size()) + " entries for " +
                         std::to_string(index.size()) + " points");
  NeighborGraph g = empty_graph(index, k, pool);
  std::vector<std::uint8_t> fell_back(g.n_points, 0);
  parallel_for(
      g.n_points,
      [&](std::size_t begin, std::size_t end) {
        std::vector<Neighbor> all;
        std::vector<PointIndex> cands;
        for (std::size_t i = begin; i < end; ++i) {
          const auto pi = static_cast<PointIndex>(i);
          if (table && qualified_from_table(index, *table, pi, min_dist[i], pool, cands)) {
            if (cands.size() < k) {
              const auto row = table->row(i);
              cands.assign(row.end() - static_cast<std::ptrdiff_t>(k), row.end());
              fell_back[i] = 1;
            }
            select_row(index, pi, cands, k, seed, g);
            continue;
          }
          qualified(index, pi, min_dist[i], pool, all, cands);
          if (cands.size() < k) {
            // `all` now holds every other point sorted by distance
            cands.clear();
            for (std::size_t t = all.size() - k; t < all.size(); ++t) cands.push_back(all[t].index);
            fell_back[i] = 1;
          }
          select_row(index, pi, cands, k, seed, g);
        }
      },
      64);
  for (auto f : fell_back) g.fallback_count += f;
  return g;
}

void write_graph_dump(std::ostream& os, const NeighborGraph& graph) {
  for (std::size_t i = 0; i < graph.n_points; ++i) {
    os << i << ':';
    for (PointIndex j : graph.row(i)) os << ' ' << j;
    os << " | " << graph.mean_dist[i] << '\n';
  }
}

}  // namespace cuneinet
