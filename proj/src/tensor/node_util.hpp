#pragma once

#include <initializer_list>
#include <utility>

#include "cuneinet/tensor.hpp"

namespace cuneinet::detail {

// New result node; it requires grad iff some input does, and only then keeps
// its parents alive.
template <typename T>
std::shared_ptr<Node<T>> make_result(Shape shape, std::initializer_list<const Tensor<T>*> inputs) {
  auto node = std::make_shared<Node<T>>();
  node->values.assign(shape_numel(shape), T(0));
  node->shape = std::move(shape);
  for (const Tensor<T>* in : inputs) {
    if (in->requires_grad()) node->requires_grad = true;
  }
  if (node->requires_grad) {
    for (const Tensor<T>* in : inputs) node->parents.push_back(in->node());
  }
  return node;
}

struct AxisView {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

AxisView axis_view(const Shape& shape, std::size_t axis);

}  // namespace cuneinet::detail

#define CUNEINET_INSTANTIATE_FOR_REALS(MACRO) \
  MACRO(float)                                \
  MACRO(double)
