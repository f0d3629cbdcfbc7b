#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cuneinet {

using Shape = std::vector<std::size_t>;
using PointIndex = std::uint32_t;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> values;
  std::vector<T> grad;  // empty until something is accumulated
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward;

  std::span<T> grad_buffer() {
    if (grad.empty()) grad.assign(values.size(), T(0));
    return grad;
  }
};

}  // namespace detail

/// Dense row-major array with reverse-mode differentiation.
///
/// Copies share the underlying node; ops build a DAG of nodes which is freed
/// once the last Tensor referring into it goes away. Instantiated for float
/// (training) and double (gradient checks).
template <typename T>
class Tensor {
 public:
  using value_type = T;
  using NodePtr = std::shared_ptr<detail::Node<T>>;

  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t numel() const { return node_->values.size(); }

  std::span<const T> values() const { return node_->values; }
  // Direct write access, for initialisation and optimizer updates on leaves.
  std::span<T> mutable_values() { return node_->values; }
  T item() const;

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->grad_buffer(); }
  void zero_grad();

  /// Backpropagates from this single-element tensor (seed gradient 1).
  void backward() const;

  /// Copy of the values with no history.
  Tensor detach() const;

  const NodePtr& node() const { return node_; }
  static Tensor from_node(NodePtr node) {
    Tensor t;
    t.node_ = std::move(node);
    return t;
  }

 private:
  NodePtr node_;
};

namespace ops {

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);

/// x[M x C] + row, where row has C elements; the row is broadcast over M.
template <typename T>
Tensor<T> add_row(const Tensor<T>& x, const Tensor<T>& row);

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);

template <typename T>
Tensor<T> slice(const Tensor<T>& x, std::size_t axis, std::size_t begin, std::size_t end);

template <typename T>
Tensor<T> concat(const Tensor<T>& a, const Tensor<T>& b, std::size_t axis);

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope);

/// Normalizes each row (all leading dims flattened) over `groups` contiguous
/// channel groups of the last dim, then applies the per-channel affine.
template <typename T>
Tensor<T> group_norm(const Tensor<T>& x, std::size_t groups, const Tensor<T>& gamma,
                     const Tensor<T>& beta, T eps);

template <typename T>
struct MaxResult {
  Tensor<T> values;
  // One entry per output element: the winning index along the reduced axis.
  std::vector<std::size_t> argmax;
};

/// Max over `axis`; the axis is removed from the shape. Ties go to the lowest index.
template <typename T>
MaxResult<T> reduce_max_with_argmax(const Tensor<T>& x, std::size_t axis);

template <typename T>
Tensor<T> reduce_mean(const Tensor<T>& x, std::size_t axis);

/// out[i, t, :] = self_term[i, :] + neighbor_term[neighbors[i*k + t], :]  -> [N, k, C]
template <typename T>
Tensor<T> neighbor_gather_add(const Tensor<T>& self_term, const Tensor<T>& neighbor_term,
                              std::span<const PointIndex> neighbors, std::size_t k);

/// out[i, t, :] = [f_i ; f_j - f_i] with j = neighbors[i*k + t]  -> [N, k, 2C]
template <typename T>
Tensor<T> gather_edge_features(const Tensor<T>& features, std::span<const PointIndex> neighbors,
                               std::size_t k);

/// Fused edge block: each row self_term[i] + neighbor_term[neighbors[i*k + t]]
/// goes through group norm (skipped when gamma is null), a leaky relu, and a
/// channel-wise max over the k neighbours  -> [N, C]. Matches the composition
/// of neighbor_gather_add, group_norm, leaky_relu and reduce_max_with_argmax
/// but never stores the [N, k, C] edge tensor; backward recomputes rows.
template <typename T>
Tensor<T> edge_max(const Tensor<T>& self_term, const Tensor<T>& neighbor_term,
                   std::span<const PointIndex> neighbors, std::size_t k, const Tensor<T>* gamma,
                   const Tensor<T>* beta, std::size_t groups, T eps, T slope);

/// Inverted dropout with a mask drawn from `seed`; rate 0 is the identity.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, T rate, std::uint64_t seed);

/// weight * -log softmax(logits)[label]; logits has exactly C >= 2 elements.
template <typename T>
Tensor<T> weighted_cross_entropy(const Tensor<T>& logits, std::size_t label, T weight);

/// sum_i x_i * coeffs_i; coeffs are constants. Used to reduce to a scalar in checks.
template <typename T>
Tensor<T> weighted_sum(const Tensor<T>& x, std::span<const T> coeffs);

}  // namespace ops

/// Numerically stable softmax of a plain vector.
std::vector<double> softmax(std::span<const double> logits);

bool all_finite(std::span<const float> v);
bool all_finite(std::span<const double> v);

}  // namespace cuneinet
