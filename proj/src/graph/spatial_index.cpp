#include "cuneinet/spatial_index.hpp"

#include <algorithm>
#include <cmath>

#include "cuneinet/errors.hpp"
#include "cuneinet/simd/kernels.hpp"

namespace cuneinet {

double squared_distance(const Vec3f& a, const Vec3f& b) {
  const double dx = static_cast<double>(a[0]) - static_cast<double>(b[0]);
  const double dy = static_cast<double>(a[1]) - static_cast<double>(b[1]);
  const double dz = static_cast<double>(a[2]) - static_cast<double>(b[2]);
  return (dx * dx + dy * dy) + dz * dz;
}

SpatialIndex::SpatialIndex(std::span<const Vec3f> points, std::size_t leaf_size)
    : points_(points.begin(), points.end()), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
  if (points_.empty()) throw InputError("cannot index an empty point set");
  if (points_.size() > std::size_t(UINT32_MAX)) throw InputError("too many points to index");
  for (const auto& p : points_)
    for (float c : p)
      if (!std::isfinite(c)) throw InputError("cannot index a non-finite coordinate");
  order_.resize(points_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<PointIndex>(i);
  nodes_.reserve(2 * (points_.size() / leaf_size_ + 1));
  build(0, static_cast<std::uint32_t>(points_.size()));
  xs_.resize(order_.size());
  ys_.resize(order_.size());
  zs_.resize(order_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) {
    const auto& p = points_[order_[i]];
    xs_[i] = p[0];
    ys_[i] = p[1];
    zs_[i] = p[2];
  }
}

std::int32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end, -1, -1, 0, 0.0});
  if (end - begin <= leaf_size_) return id;

  float lo[3] = {points_[order_[begin]][0], points_[order_[begin]][1], points_[order_[begin]][2]};
  float hi[3] = {lo[0], lo[1], lo[2]};
  for (std::uint32_t i = begin; i < end; ++i)
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], points_[order_[i]][a]);
      hi[a] = std::max(hi[a], points_[order_[i]][a]);
    }
  int axis = 0;
  for (int a = 1; a < 3; ++a)
    if (hi[a] - lo[a] > hi[axis] - lo[axis]) axis = a;
  if (hi[axis] == lo[axis]) return id;  // all coincident: keep as a leaf

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](PointIndex a, PointIndex b) {
                     return points_[a][axis] < points_[b][axis] ||
                            (points_[a][axis] == points_[b][axis] && a < b);
                   });
  // Left holds coordinates <= split, right >= split.
  nodes_[id].axis = static_cast<std::uint8_t>(axis);
  nodes_[id].split = points_[order_[mid]][axis];
  const std::int32_t l = build(begin, mid);
  const std::int32_t r = build(mid, end);
  nodes_[id].left = l;
  nodes_[id].right = r;
  return id;
}

void SpatialIndex::search(std::int32_t node_id, const double q[3], std::size_t k,
                          std::optional<PointIndex> exclude, std::vector<Neighbor>& heap,
                          std::vector<double>& scratch) const {
  const Node& node = nodes_[node_id];
  if (node.left < 0) {
    const std::size_t n = node.end - node.begin;
    scratch.resize(n);
    simd::squared_distance_kernel()(n, xs_.data() + node.begin, ys_.data() + node.begin,
                                    zs_.data() + node.begin, q, scratch.data());
    for (std::size_t t = 0; t < n; ++t) {
      const PointIndex idx = order_[node.begin + t];
      if (exclude && *exclude == idx) continue;
      const Neighbor cand{scratch[t], idx};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end());
      } else if (cand < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end());
      }
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const std::int32_t near = diff < 0 ? node.left : node.right;
  const std::int32_t far = diff < 0 ? node.right : node.left;
  search(near, q, k, exclude, heap, scratch);
  // Points across the plane are at least diff^2 away; equal distance may
  // still win on index, so only prune strictly.
  if (heap.size() < k || diff * diff <= heap.front().sq_dist)
    search(far, q, k, exclude, heap, scratch);
}

void SpatialIndex::knn(const Vec3f& query, std::size_t k, std::optional<PointIndex> exclude,
                       std::vector<Neighbor>& out) const {
  const std::size_t available = points_.size() - (exclude && *exclude < points_.size() ? 1 : 0);
  if (k > available)
    throw InputError("requested " + std::to_string(k) + " neighbours but only " +
                     std::to_string(available) + " points are available");
  out.clear();
  if (k == 0) return;
  out.reserve(k);
  const double q[3] = {query[0], query[1], query[2]};
  thread_local std::vector<double> scratch;
  search(0, q, k, exclude, out, scratch);
  std::sort_heap(out.begin(), out.end());
}

void SpatialIndex::knn_of(PointIndex i, std::size_t k, std::vector<Neighbor>& out) const {
  if (i >= points_.size()) throw InputError("query index out of range");
  knn(points_[i], k, i, out);
}

SpatialIndex build_index(std::span<const Vec3f> points) { return SpatialIndex(points); }

}  // namespace cuneinet
