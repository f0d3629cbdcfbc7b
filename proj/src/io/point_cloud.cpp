#include "cuneinet/point_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cuneinet/errors.hpp"

namespace cuneinet {

void validate(const PointCloud& cloud) {
  if (cloud.points.empty()) throw InputError("point cloud '" + cloud.source_id + "' is empty");
  if (!cloud.colors.empty() && cloud.colors.size() != cloud.points.size())
    throw InputError("point cloud '" + cloud.source_id + "' has " +
                     std::to_string(cloud.colors.size()) + " colours for " +
                     std::to_string(cloud.points.size()) + " points");
  for (const auto& p : cloud.points)
    for (float c : p)
      if (!std::isfinite(c))
        throw InputError("point cloud '" + cloud.source_id + "' has a non-finite coordinate");
}

std::vector<std::uint32_t> subsample_indices(std::size_t total, std::size_t n, std::uint64_t seed) {
  if (total < n)
    throw InputError("cannot subsample " + std::to_string(n) + " points from a cloud of " +
                     std::to_string(total));
  std::vector<std::uint32_t> all(total);
  std::iota(all.begin(), all.end(), 0u);
  std::vector<std::uint32_t> picked;
  picked.reserve(n);
  std::mt19937_64 rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(picked), n, rng);
  return picked;
}

PointCloud subsample(const PointCloud& cloud, std::size_t n, std::uint64_t seed) {
  const auto idx = subsample_indices(cloud.size(), n, seed);
  PointCloud out;
  out.source_id = cloud.source_id;
  out.points.reserve(n);
  for (auto i : idx) out.points.push_back(cloud.points[i]);
  if (cloud.has_colors()) {
    out.colors.reserve(n);
    for (auto i : idx) out.colors.push_back(cloud.colors[i]);
  }
  return out;
}

Vec3f Similarity::apply(const Vec3f& p) const {
  return {static_cast<float>((p[0] - center[0]) * scale),
          static_cast<float>((p[1] - center[1]) * scale),
          static_cast<float>((p[2] - center[2]) * scale)};
}

Vec3f Similarity::invert(const Vec3f& p) const {
  return {static_cast<float>(p[0] / scale + center[0]), static_cast<float>(p[1] / scale + center[1]),
          static_cast<float>(p[2] / scale + center[2])};
}

Similarity normalization_of(const PointCloud& cloud) {
  validate(cloud);
  Similarity s;
  for (const auto& p : cloud.points)
    for (int a = 0; a < 3; ++a) s.center[a] += p[a];
  for (double& c : s.center) c /= static_cast<double>(cloud.size());
  double r2 = 0.0;
  for (const auto& p : cloud.points) {
    double d = 0.0;
    for (int a = 0; a < 3; ++a) d += (p[a] - s.center[a]) * (p[a] - s.center[a]);
    r2 = std::max(r2, d);
  }
  if (!(r2 > 0.0))
    throw InputError("cannot normalize '" + cloud.source_id + "': all points are identical");
  s.scale = 1.0 / std::sqrt(r2);
  return s;
}

PointCloud normalize(const PointCloud& cloud) {
  const Similarity s = normalization_of(cloud);
  PointCloud out = cloud;
  for (auto& p : out.points) p = s.apply(p);
  return out;
}

}  // namespace cuneinet
