#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace cuneinet {

using Vec3f = std::array<float, 3>;

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

/// Fixed set of 3D points with optional per-point colours. Millimetres on
/// ingest, dimensionless after normalize().
struct PointCloud {
  std::vector<Vec3f> points;
  std::vector<Rgb> colors;  // empty, or one per point
  std::string source_id;

  std::size_t size() const { return points.size(); }
  bool has_colors() const { return !colors.empty(); }
};

/// Throws InputError if the cloud is empty, has a non-finite coordinate, or
/// a colour array of the wrong length.
void validate(const PointCloud& cloud);

/// Sorted indices of n distinct points drawn uniformly from [0, total).
std::vector<std::uint32_t> subsample_indices(std::size_t total, std::size_t n, std::uint64_t seed);

/// Uniform random selection of n distinct points, in input order.
PointCloud subsample(const PointCloud& cloud, std::size_t n, std::uint64_t seed);

/// Translation + uniform scale mapping a cloud to the centred unit sphere.
struct Similarity {
  std::array<double, 3> center{0, 0, 0};
  double scale = 1.0;  // multiply after subtracting center

  Vec3f apply(const Vec3f& p) const;
  Vec3f invert(const Vec3f& p) const;
};

/// Centroid to origin, farthest point at radius 1. Degenerate clouds throw InputError.
Similarity normalization_of(const PointCloud& cloud);
PointCloud normalize(const PointCloud& cloud);

}  // namespace cuneinet
