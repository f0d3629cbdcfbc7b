#include "cuneinet/attention.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cuneinet/errors.hpp"

namespace cuneinet::attention {

Rgb color_rgb(Color c) {
  switch (c) {
    case Color::Green: return {0, 255, 0};
    case Color::Red: return {255, 0, 0};
    case Color::Blue: break;
  }
  return {0, 0, 255};
}

std::string_view color_name(Color c) {
  switch (c) {
    case Color::Green: return "green";
    case Color::Red: return "red";
    case Color::Blue: break;
  }
  return "blue";
}

std::size_t AttentionMap::nonzero_count() const {
  return static_cast<std::size_t>(std::count_if(score.begin(), score.end(), [](double s) { return s != 0.0; }));
}

double default_epsilon(std::span<const double> m) {
  if (m.empty()) return 1e-3;
  double mean = 0.0;
  for (double v : m) mean += v;
  mean /= static_cast<double>(m.size());
  double var = 0.0;
  for (double v : m) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(m.size()));
  return std::max(0.1 * sd, 1e-3);
}

AttentionMap max_attention(const HeadFn& head, const ForwardTrace& trace, std::size_t target_class,
                           const AttentionOptions& options) {
  if (trace.max_vector.empty())
    throw ConfigError("maximum attention needs a model with the global MaxPool enabled");
  if (trace.max_argpoint.size() != trace.max_vector.size())
    throw DimensionError("trace records " + std::to_string(trace.max_argpoint.size()) +
                         " winners for " + std::to_string(trace.max_vector.size()) + " channels");
  if (!(options.epsilon >= 0.0) || !std::isfinite(options.epsilon))
    throw ConfigError("attention epsilon must be positive (0 selects the default)");
  if (!(options.cutoff_fraction >= 0.0 && options.cutoff_fraction <= 1.0))
    throw ConfigError("cutoff fraction must lie in [0, 1]");

  const std::size_t n = trace.graph1.n_points;
  AttentionMap map;
  map.target_class = target_class;
  map.epsilon = options.epsilon > 0.0 ? options.epsilon : default_epsilon(trace.max_vector);

  auto prediction = [&](std::span<const double> m) {
    const auto logits = head(trace.avg_vector, m);
    if (target_class >= logits.size())
      throw InputError("target class " + std::to_string(target_class) + " out of range for " +
                       std::to_string(logits.size()) + " classes");
    return options.use_logit ? logits[target_class] : softmax(logits)[target_class];
  };

  const double base = prediction(trace.max_vector);
  std::vector<double> m = trace.max_vector;
  map.channel_delta.resize(m.size());
  map.score.assign(n, 0.0);
  for (std::size_t d = 0; d < m.size(); ++d) {
    const double keep = m[d];
    m[d] = keep + map.epsilon;
    map.channel_delta[d] = (prediction(m) - base) / map.epsilon;
    m[d] = keep;
    const PointIndex p = trace.max_argpoint[d];
    if (p >= n) throw DimensionError("MaxPool winner " + std::to_string(p) + " out of range");
    map.score[p] += map.channel_delta[d];
  }

  double peak = 0.0;
  for (double s : map.score) peak = std::max(peak, std::abs(s));
  map.cutoff = options.cutoff_fraction * peak;
  map.color.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    const double s = map.score[p];
    map.color[p] = s > map.cutoff ? Color::Green : s < -map.cutoff ? Color::Red : Color::Blue;
  }
  return map;
}

template <typename T>
AttentionMap max_attention(const ModelParams<T>& params, const NetworkConfig& config,
                           const ForwardTrace& trace, std::size_t target_class,
                           const AttentionOptions& options) {
  if (!config.max_pool)
    throw ConfigError("maximum attention needs a model with the global MaxPool enabled");
  const HeadFn head = [&](std::span<const double> avg, std::span<const double> max) {
    return head_logits(params, config, avg, max);
  };
  return max_attention(head, trace, target_class, options);
}

template AttentionMap max_attention(const ModelParams<float>&, const NetworkConfig&,
                                    const ForwardTrace&, std::size_t, const AttentionOptions&);
template AttentionMap max_attention(const ModelParams<double>&, const NetworkConfig&,
                                    const ForwardTrace&, std::size_t, const AttentionOptions&);

PointCloud export_attention(const PointCloud& cloud, const AttentionMap& map) {
  if (cloud.size() != map.color.size())
    throw InputError("attention map has " + std::to_string(map.color.size()) +
                     " points but the cloud has " + std::to_string(cloud.size()));
  PointCloud out;
  out.points = cloud.points;
  out.source_id = cloud.source_id;
  out.colors.reserve(cloud.size());
  for (Color c : map.color) out.colors.push_back(color_rgb(c));
  return out;
}

std::string format_scores(const AttentionMap& map) {
  std::string out;
  char buf[64];
  for (std::size_t p = 0; p < map.score.size(); ++p) {
    std::snprintf(buf, sizeof buf, "%zu\t%.9g\t", p, map.score[p]);
    out += buf;
    out += color_name(map.color[p]);
    out += '\n';
  }
  return out;
}

}  // namespace cuneinet::attention
