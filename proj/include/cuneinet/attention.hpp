#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cuneinet/network.hpp"
#include "cuneinet/point_cloud.hpp"

namespace cuneinet::attention {

enum class Color : std::uint8_t { Blue, Green, Red };

Rgb color_rgb(Color c);
std::string_view color_name(Color c);

struct AttentionOptions {
  double epsilon = 0.0;  // 0 picks 0.1 * std of the MaxPool vector, at least 1e-3
  double cutoff_fraction = 0.1;
  bool use_logit = false;  // measure the target logit instead of its probability
};

struct AttentionMap {
  std::vector<double> score;  // per point
  std::vector<Color> color;   // per point
  std::vector<double> channel_delta;  // per MaxPool channel
  std::size_t target_class = 0;
  double cutoff = 0.0;
  double epsilon = 0.0;

  std::size_t nonzero_count() const;
};

/// Logits of the classifier head for pooled vectors (avg may be empty).
using HeadFn =
    std::function<std::vector<double>(std::span<const double> avg, std::span<const double> max)>;

double default_epsilon(std::span<const double> max_vector);

/// Raises each MaxPool channel by epsilon, measures the change of the
/// target prediction and credits it to the point that won that channel.
AttentionMap max_attention(const HeadFn& head, const ForwardTrace& trace, std::size_t target_class,
                           const AttentionOptions& options = {});

template <typename T>
AttentionMap max_attention(const ModelParams<T>& params, const NetworkConfig& config,
                           const ForwardTrace& trace, std::size_t target_class,
                           const AttentionOptions& options = {});

/// Copy of the cloud coloured green / red / blue by the map.
PointCloud export_attention(const PointCloud& cloud, const AttentionMap& map);

/// `point_index\tscore\tcolor` per line.
std::string format_scores(const AttentionMap& map);

}  // namespace cuneinet::attention
