#include "cuneinet/network.hpp"

#include <cmath>
#include <random>

#include "cuneinet/errors.hpp"
#include "cuneinet/seeding.hpp"

namespace cuneinet {

template <typename T>
bool ModelParams<T>::contains(std::string_view name) const {
  for (const auto& p : tensors_)
    if (p.name == name) return true;
  return false;
}

template <typename T>
const Tensor<T>& ModelParams<T>::get(std::string_view name) const {
  for (const auto& p : tensors_)
    if (p.name == name) return p.tensor;
  throw ConfigError("model has no parameter '" + std::string(name) + "'");
}

template <typename T>
Tensor<T>& ModelParams<T>::get(std::string_view name) {
  for (auto& p : tensors_)
    if (p.name == name) return p.tensor;
  throw ConfigError("model has no parameter '" + std::string(name) + "'");
}

template <typename T>
void ModelParams<T>::zero_grad() {
  for (auto& p : tensors_) p.tensor.zero_grad();
}

template <typename T>
std::size_t ModelParams<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : tensors_) n += p.tensor.numel();
  return n;
}

template class ModelParams<float>;
template class ModelParams<double>;

std::vector<std::pair<std::string, Shape>> parameter_layout(const NetworkConfig& cfg) {
  std::vector<std::pair<std::string, Shape>> out;
  auto conv = [&](const std::string& name, std::size_t in, std::size_t width) {
    out.push_back({name + ".weight", {in, width}});
    if (cfg.group_norm) {
      out.push_back({name + ".gamma", {width}});
      out.push_back({name + ".beta", {width}});
    }
  };
  conv("edge1", 6, cfg.c1);
  conv("edge2", 2 * cfg.c1, cfg.c2);
  if (cfg.max_pool) conv("embed", cfg.embed_inputs(), cfg.embed);
  out.push_back({"fc1.weight", {cfg.head_inputs(), cfg.fc_hidden}});
  out.push_back({"fc1.bias", {cfg.fc_hidden}});
  out.push_back({"fc2.weight", {cfg.fc_hidden, cfg.n_classes}});
  out.push_back({"fc2.bias", {cfg.n_classes}});
  return out;
}

template <typename T>
ModelParams<T> init_params(const NetworkConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  ParameterSet<T> set;
  std::size_t last_fan_in = 1;
  for (auto& [name, shape] : parameter_layout(config)) {
    std::vector<T> v(shape_numel(shape));
    const bool is_weight = name.ends_with(".weight");
    if (is_weight) last_fan_in = shape[0];
    if (name.ends_with(".gamma")) {
      std::fill(v.begin(), v.end(), T(1));
    } else if (!name.ends_with(".beta")) {
      // He-uniform for leaky-relu weights, 1/sqrt(fan_in) for biases
      const double fan = static_cast<double>(last_fan_in);
      const double slope2 = config.leaky_slope * config.leaky_slope;
      const double bound =
          is_weight ? std::sqrt(6.0 / ((1.0 + slope2) * fan)) : 1.0 / std::sqrt(fan);
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (T& x : v) x = static_cast<T>(dist(rng));
    }
    set.push_back({name, Tensor<T>(shape, std::move(v), true)});
  }
  return ModelParams<T>(std::move(set));
}

template ModelParams<float> init_params<float>(const NetworkConfig&, std::uint64_t);
template ModelParams<double> init_params<double>(const NetworkConfig&, std::uint64_t);

PointCloud prepare_input(const PointCloud& raw, const NetworkConfig& config) {
  validate(raw);
  PointCloud sub = subsample(raw, config.n_points, hash_string(raw.source_id));
  return config.normalize_input ? normalize(sub) : sub;
}

std::uint64_t eval_seed(const PointCloud& cloud) {
  return derive_seed(hash_string(cloud.source_id), 0x65766131);
}

namespace {

template <typename T>
void require_finite(const Tensor<T>& t, const char* layer) {
  if (!all_finite(t.values()))
    throw NumericError(std::string("non-finite activation in layer '") + layer + "'");
}

template <typename T>
std::vector<double> to_double(const Tensor<T>& t) {
  return {t.values().begin(), t.values().end()};
}

template <typename T>
Tensor<T> norm_act(const ModelParams<T>& params, const NetworkConfig& cfg, const std::string& name,
                   Tensor<T> x) {
  if (cfg.group_norm)
    x = ops::group_norm(x, cfg.groups, params.get(name + ".gamma"), params.get(name + ".beta"),
                        static_cast<T>(cfg.norm_eps));
  return ops::leaky_relu(x, static_cast<T>(cfg.leaky_slope));
}

// Shared MLP over edge features [f_i ; f_j - f_i], computed as
// f_i (W_center - W_offset) + f_j W_offset, then norm, activation and a
// max over the k neighbours.
template <typename T>
Tensor<T> edge_conv(const ModelParams<T>& params, const NetworkConfig& cfg, const std::string& name,
                    const Tensor<T>& feats, const NeighborGraph& graph) {
  const std::size_t c = feats.dim(1);
  const Tensor<T>& w = params.get(name + ".weight");
  const auto w_center = ops::slice(w, 0, 0, c);
  const auto w_offset = ops::slice(w, 0, c, 2 * c);
  const auto self_term = ops::matmul(feats, ops::sub(w_center, w_offset));
  const auto nbr_term = ops::matmul(feats, w_offset);
  const Tensor<T>* gamma = cfg.group_norm ? &params.get(name + ".gamma") : nullptr;
  const Tensor<T>* beta = cfg.group_norm ? &params.get(name + ".beta") : nullptr;
  auto pooled = ops::edge_max(self_term, nbr_term, graph.neighbors, graph.k, gamma, beta,
                              cfg.groups, static_cast<T>(cfg.norm_eps),
                              static_cast<T>(cfg.leaky_slope));
  require_finite(pooled, name.c_str());
  return pooled;
}

template <typename T>
Tensor<T> classifier(const ModelParams<T>& params, const NetworkConfig& cfg, const Tensor<T>& x,
                     Mode mode, std::uint64_t seed) {
  auto h = ops::add_row(ops::matmul(x, params.get("fc1.weight")), params.get("fc1.bias"));
  h = ops::leaky_relu(h, static_cast<T>(cfg.leaky_slope));
  if (mode == Mode::Train && cfg.dropout > 0.0)
    h = ops::dropout(h, static_cast<T>(cfg.dropout), derive_seed(seed, 3));
  auto logits = ops::add_row(ops::matmul(h, params.get("fc2.weight")), params.get("fc2.bias"));
  require_finite(logits, "fc2");
  return logits;
}

}  // namespace

std::size_t neighbor_table_width(const NetworkConfig& config) {
  return 2 * config.effective_pool();
}

template <typename T>
ForwardResult<T> forward(const ModelParams<T>& params, const PointCloud& cloud,
                         const NetworkConfig& cfg, Mode mode, std::uint64_t seed,
                         const NeighborTable* table) {
  cfg.validate();
  if (cloud.size() != cfg.n_points)
    throw InputError("cloud '" + cloud.source_id + "' has " + std::to_string(cloud.size()) +
                     " points, the network expects " + std::to_string(cfg.n_points));
  validate(cloud);
  const std::size_t n = cloud.size();
  const std::size_t pool = cfg.effective_pool();

  ForwardResult<T> res;
  auto& trace = res.trace;

  std::vector<T> xyz(n * 3);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < 3; ++a) xyz[i * 3 + a] = static_cast<T>(cloud.points[i][a]);
  const Tensor<T> positions({n, 3}, std::move(xyz));

  // Layer 1: SparseEdge neighbours in geometric space.
  const SpatialIndex index(cloud.points);
  trace.graph1 = sparse_edge_neighbors(index, cfg.k, pool, derive_seed(seed, 1), table);
  const auto f1 = edge_conv(params, cfg, "edge1", positions, trace.graph1);

  // Layer 2: geometric neighbours at least the layer-1 mean distance away.
  trace.graph2 = cfg.min_distance_rule
                     ? min_distance_neighbors(index, trace.graph1.mean_dist, cfg.k, pool,
                                              derive_seed(seed, 2), table)
                     : sparse_edge_neighbors(index, cfg.k, pool, derive_seed(seed, 2), table);
  const auto f2 = edge_conv(params, cfg, "edge2", f1, trace.graph2);

  const auto local = ops::concat(f1, f2, 1);
  const std::size_t lc = cfg.local_channels();

  Tensor<T> avg_row;
  if (cfg.avg_pool) {
    avg_row = ops::reshape(ops::reduce_mean(local, 0), {1, lc});
    trace.avg_vector = to_double(avg_row);
  }

  Tensor<T> max_row;
  if (cfg.max_pool) {
    // AvgPool-guided MaxPool: [F_p ; a] W = F_p W_local + a W_global for every point p.
    const Tensor<T>& w = params.get("embed.weight");
    auto h = ops::matmul(local, ops::slice(w, 0, 0, lc));
    if (cfg.avg_pool) h = ops::add_row(h, ops::matmul(avg_row, ops::slice(w, 0, lc, 2 * lc)));
    h = norm_act(params, cfg, "embed", h);
    require_finite(h, "embed");
    auto mx = ops::reduce_max_with_argmax(h, 0);
    max_row = ops::reshape(mx.values, {1, cfg.embed});
    trace.max_vector = to_double(max_row);
    trace.max_argpoint.assign(mx.argmax.begin(), mx.argmax.end());
    res.point_embedding = h;
  }

  Tensor<T> head_in;
  if (cfg.avg_pool && cfg.max_pool) head_in = ops::concat(avg_row, max_row, 1);
  else head_in = cfg.avg_pool ? avg_row : max_row;

  res.logits = classifier(params, cfg, head_in, mode, seed);
  trace.logits = to_double(res.logits);
  trace.probabilities = softmax(trace.logits);
  return res;
}

template <typename T>
std::vector<double> head_logits(const ModelParams<T>& params, const NetworkConfig& cfg,
                                std::span<const double> avg, std::span<const double> max) {
  const std::size_t want_avg = cfg.avg_pool ? cfg.local_channels() : 0;
  const std::size_t want_max = cfg.max_pool ? cfg.embed : 0;
  if (avg.size() != want_avg || max.size() != want_max)
    throw DimensionError("head expects " + std::to_string(want_avg) + " avg and " +
                         std::to_string(want_max) + " max features");
  std::vector<T> v;
  v.reserve(want_avg + want_max);
  v.insert(v.end(), avg.begin(), avg.end());
  v.insert(v.end(), max.begin(), max.end());
  const std::size_t width = v.size();
  const Tensor<T> x({1, width}, std::move(v));
  return to_double(classifier(params, cfg, x, Mode::Eval, 0));
}

template <typename T>
LossResult loss_and_grads(ModelParams<T>& params, const PointCloud& cloud, std::size_t label,
                          double class_weight, const NetworkConfig& config, std::uint64_t seed,
                          const NeighborTable* table) {
  if (label >= config.n_classes)
    throw InputError("label " + std::to_string(label) + " out of range for " +
                     std::to_string(config.n_classes) + " classes");
  params.zero_grad();
  auto fwd = forward(params, cloud, config, Mode::Train, seed, table);
  const auto loss = ops::weighted_cross_entropy(fwd.logits, label, static_cast<T>(class_weight));
  loss.backward();
  return {static_cast<double>(loss.item()), std::move(fwd.trace)};
}

#define INSTANTIATE(T)                                                                        \
  template ForwardResult<T> forward(const ModelParams<T>&, const PointCloud&,                 \
                                    const NetworkConfig&, Mode, std::uint64_t,                \
                                    const NeighborTable*);                                    \
  template std::vector<double> head_logits(const ModelParams<T>&, const NetworkConfig&,       \
                                           std::span<const double>, std::span<const double>); \
  template LossResult loss_and_grads(ModelParams<T>&, const PointCloud&, std::size_t, double, \
                                     const NetworkConfig&, std::uint64_t, const NeighborTable*);
INSTANTIATE(float)
INSTANTIATE(double)
#undef INSTANTIATE

}  // namespace cuneinet
