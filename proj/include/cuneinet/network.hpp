#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cuneinet/adam.hpp"
#include "cuneinet/neighbor_graph.hpp"
#include "cuneinet/point_cloud.hpp"
#include "cuneinet/tensor.hpp"

namespace cuneinet {

/// Architecture and ablation switches. Every field round-trips through
/// key=value text (checkpoints, run configs).
struct NetworkConfig {
  std::size_t n_points = 32768;
  std::size_t k = 20;
  std::size_t pool = 60;
  std::size_t c1 = 64;
  std::size_t c2 = 64;
  std::size_t embed = 256;
  std::size_t fc_hidden = 128;
  std::size_t n_classes = 2;
  std::size_t groups = 8;
  double leaky_slope = 0.2;
  double dropout = 0.5;
  double norm_eps = 1e-8;
  bool normalize_input = true;

  // ablation toggles; all on is the full model
  bool min_distance_rule = true;
  bool sparse_edge = true;
  bool max_pool = true;
  bool avg_pool = true;
  bool group_norm = true;

  /// Throws ConfigError on an inconsistent combination.
  void validate() const;

  /// Candidate pool actually used by the graph layers (k without SparseEdge).
  std::size_t effective_pool() const { return sparse_edge ? pool : k; }
  std::size_t local_channels() const { return c1 + c2; }
  std::size_t embed_inputs() const { return avg_pool ? 2 * local_channels() : local_channels(); }
  std::size_t head_inputs() const {
    return (avg_pool ? local_channels() : 0) + (max_pool ? embed : 0);
  }

  std::vector<std::pair<std::string, std::string>> to_key_values() const;
  /// Returns false if `key` is not a NetworkConfig key; throws ConfigError on a bad value.
  bool set(std::string_view key, std::string_view value);
};

/// Learnable weights in a fixed registration order.
template <typename T>
class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(ParameterSet<T> tensors) : tensors_(std::move(tensors)) {}

  ParameterSet<T>& tensors() { return tensors_; }
  const ParameterSet<T>& tensors() const { return tensors_; }

  bool contains(std::string_view name) const;
  const Tensor<T>& get(std::string_view name) const;
  Tensor<T>& get(std::string_view name);

  void zero_grad();
  std::size_t parameter_count() const;

  /// Deep copy, converted to another precision; the copy has no gradients.
  template <typename U>
  ModelParams<U> cast() const {
    ParameterSet<U> out;
    for (const auto& p : tensors_) {
      std::vector<U> v(p.tensor.values().begin(), p.tensor.values().end());
      out.push_back({p.name, Tensor<U>(p.tensor.shape(), std::move(v), true)});
    }
    return ModelParams<U>(std::move(out));
  }

 private:
  ParameterSet<T> tensors_;
};

/// Shapes of every parameter the config needs, in registration order.
std::vector<std::pair<std::string, Shape>> parameter_layout(const NetworkConfig& config);

/// He-uniform weights (leaky-relu gain), Uniform(+-1/sqrt(fan_in)) biases, unit gamma,
/// zero beta.
template <typename T>
ModelParams<T> init_params(const NetworkConfig& config, std::uint64_t seed);

enum class Mode { Train, Eval };

struct ForwardTrace {
  std::vector<double> logits;
  std::vector<double> probabilities;
  std::vector<double> avg_vector;          // c1 + c2, empty without AvgPool
  std::vector<double> max_vector;          // embed, empty without MaxPool
  std::vector<PointIndex> max_argpoint;    // point that won each MaxPool channel
  NeighborGraph graph1;
  NeighborGraph graph2;
};

template <typename T>
struct ForwardResult {
  Tensor<T> logits;           // [1 x n_classes], differentiable w.r.t. the params
  Tensor<T> point_embedding;  // [N x embed] input of the global MaxPool (MaxPool only)
  ForwardTrace trace;
};

/// Subsamples to config.n_points (seeded by the source id) and normalizes
/// when config.normalize_input is set.
PointCloud prepare_input(const PointCloud& raw, const NetworkConfig& config);

/// Fixed per-cloud seed used for evaluation-mode graph sampling.
std::uint64_t eval_seed(const PointCloud& cloud);

/// Width of the neighbour table that serves both graph layers of a config.
std::size_t neighbor_table_width(const NetworkConfig& config);

/// Full network pass. Graph sampling and dropout draw from `seed`; dropout
/// only runs in Train mode. An optional neighbour table of the cloud (see
/// neighbor_table_width) speeds up graph construction without changing it.
template <typename T>
ForwardResult<T> forward(const ModelParams<T>& params, const PointCloud& cloud,
                         const NetworkConfig& config, Mode mode, std::uint64_t seed,
                         const NeighborTable* table = nullptr);

/// Logits of the fully connected head for given pooled vectors (no dropout).
/// `avg` or `max` may be empty when the config disables that pool.
template <typename T>
std::vector<double> head_logits(const ModelParams<T>& params, const NetworkConfig& config,
                                std::span<const double> avg, std::span<const double> max);

struct LossResult {
  double loss = 0.0;
  ForwardTrace trace;
};

/// Zeroes the parameter gradients, runs a Train-mode forward and the
/// weighted cross entropy, and backpropagates into the parameters.
template <typename T>
LossResult loss_and_grads(ModelParams<T>& params, const PointCloud& cloud, std::size_t label,
                          double class_weight, const NetworkConfig& config, std::uint64_t seed,
                          const NeighborTable* table = nullptr);

struct Checkpoint {
  NetworkConfig config;
  std::vector<std::string> class_names;
  ModelParams<float> params;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cuneinet
