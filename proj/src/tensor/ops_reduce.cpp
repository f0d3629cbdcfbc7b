#include <algorithm>

#include "cuneinet/errors.hpp"
#include "node_util.hpp"

namespace cuneinet::ops {

using detail::make_result;
using detail::Node;

namespace {

Shape drop_axis(const Shape& shape, std::size_t axis) {
  Shape out;
  for (std::size_t i = 0; i < shape.size(); ++i)
    if (i != axis) out.push_back(shape[i]);
  if (out.empty()) out.push_back(1);
  return out;
}

}  // namespace

template <typename T>
MaxResult<T> reduce_max_with_argmax(const Tensor<T>& x, std::size_t axis) {
  const auto v = detail::axis_view(x.shape(), axis);
  if (v.extent == 0) throw DimensionError("reduce_max over empty axis");
  auto out = make_result<T>(drop_axis(x.shape(), axis), {&x});
  std::vector<std::size_t> argmax(v.outer * v.inner, 0);
  auto xv = x.values();
  for (std::size_t o = 0; o < v.outer; ++o) {
    const T* base = xv.data() + o * v.extent * v.inner;
    T* best = out->values.data() + o * v.inner;
    std::size_t* arg = argmax.data() + o * v.inner;
    std::copy_n(base, v.inner, best);
    for (std::size_t r = 1; r < v.extent; ++r) {
      const T* row = base + r * v.inner;
      for (std::size_t i = 0; i < v.inner; ++i) {
        // strict comparison keeps the lowest index on ties
        if (row[i] > best[i]) {
          best[i] = row[i];
          arg[i] = r;
        }
      }
    }
  }
  if (out->requires_grad) {
    out->backward = [v, argmax](Node<T>& self) {
      auto g = self.parents[0]->grad_buffer();
      for (std::size_t o = 0; o < v.outer; ++o)
        for (std::size_t i = 0; i < v.inner; ++i) {
          const std::size_t src = o * v.inner + i;
          g[(o * v.extent + argmax[src]) * v.inner + i] += self.grad[src];
        }
    };
  }
  return {Tensor<T>::from_node(out), std::move(argmax)};
}

template <typename T>
Tensor<T> reduce_mean(const Tensor<T>& x, std::size_t axis) {
  const auto v = detail::axis_view(x.shape(), axis);
  if (v.extent == 0) throw DimensionError("reduce_mean over empty axis");
  auto out = make_result<T>(drop_axis(x.shape(), axis), {&x});
  auto xv = x.values();
  std::vector<double> acc(v.inner);
  for (std::size_t o = 0; o < v.outer; ++o) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t r = 0; r < v.extent; ++r) {
      const T* row = xv.data() + (o * v.extent + r) * v.inner;
      for (std::size_t i = 0; i < v.inner; ++i) acc[i] += row[i];
    }
    for (std::size_t i = 0; i < v.inner; ++i)
      out->values[o * v.inner + i] = static_cast<T>(acc[i] / static_cast<double>(v.extent));
  }
  if (out->requires_grad) {
    out->backward = [v](Node<T>& self) {
      auto g = self.parents[0]->grad_buffer();
      const T scale = T(1) / static_cast<T>(v.extent);
      for (std::size_t o = 0; o < v.outer; ++o)
        for (std::size_t r = 0; r < v.extent; ++r)
          for (std::size_t i = 0; i < v.inner; ++i)
            g[(o * v.extent + r) * v.inner + i] += self.grad[o * v.inner + i] * scale;
    };
  }
  return Tensor<T>::from_node(out);
}

#define INSTANTIATE(T)                                                         \
  template MaxResult<T> reduce_max_with_argmax(const Tensor<T>&, std::size_t); \
  template Tensor<T> reduce_mean(const Tensor<T>&, std::size_t);
CUNEINET_INSTANTIATE_FOR_REALS(INSTANTIATE)
#undef INSTANTIATE

}  // namespace cuneinet::ops
