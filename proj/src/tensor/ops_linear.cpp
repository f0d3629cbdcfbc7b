#include <algorithm>
#include <cstring>

#include "cuneinet/errors.hpp"
#include "cuneinet/simd/kernels.hpp"
#include "node_util.hpp"

namespace cuneinet::ops {

using detail::make_result;
using detail::Node;

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw DimensionError("matmul shape mismatch: " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1), p = b.dim(1);
  auto out = make_result<T>({m, p}, {&a, &b});
  simd::gemm<T>(m, k, p, a.values(), b.values(), out->values, false);
  if (out->requires_grad) {
    out->backward = [m, k, p](Node<T>& self) {
      auto& pa = self.parents[0];
      auto& pb = self.parents[1];
      if (pa->requires_grad) {
        // dA = dC * B^T
        std::vector<T> bt(p * k);
        simd::transpose<T>(k, p, pb->values, bt);
        simd::gemm<T>(m, p, k, self.grad, bt, pa->grad_buffer(), true);
      }
      if (pb->requires_grad) {
        // dB = A^T * dC
        std::vector<T> at(k * m);
        simd::transpose<T>(m, k, pa->values, at);
        simd::gemm<T>(k, m, p, at, self.grad, pb->grad_buffer(), true);
      }
    };
  }
  return Tensor<T>::from_node(out);
}

namespace {

template <typename T>
Tensor<T> add_or_sub(const Tensor<T>& a, const Tensor<T>& b, T sign, const char* name) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(name) + " shape mismatch: " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  auto out = make_result<T>(a.shape(), {&a, &b});
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) out->values[i] = av[i] + sign * bv[i];
  if (out->requires_grad) {
    out->backward = [sign](Node<T>& self) {
      const auto& kt = simd::kernels<T>();
      if (self.parents[0]->requires_grad)
        kt.axpy(self.grad.size(), T(1), self.grad.data(), self.parents[0]->grad_buffer().data());
      if (self.parents[1]->requires_grad)
        kt.axpy(self.grad.size(), sign, self.grad.data(), self.parents[1]->grad_buffer().data());
    };
  }
  return Tensor<T>::from_node(out);
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return add_or_sub(a, b, T(1), "add");
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return add_or_sub(a, b, T(-1), "sub");
}

template <typename T>
Tensor<T> add_row(const Tensor<T>& x, const Tensor<T>& row) {
  const std::size_t c = x.shape().back();
  if (row.numel() != c)
    throw DimensionError("add_row: row of " + std::to_string(row.numel()) +
                         " elements cannot broadcast over " + shape_string(x.shape()));
  const std::size_t m = x.numel() / c;
  auto out = make_result<T>(x.shape(), {&x, &row});
  auto xv = x.values();
  auto rv = row.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < c; ++j) out->values[i * c + j] = xv[i * c + j] + rv[j];
  if (out->requires_grad) {
    out->backward = [m, c](Node<T>& self) {
      if (self.parents[0]->requires_grad)
        simd::kernels<T>().axpy(self.grad.size(), T(1), self.grad.data(),
                                self.parents[0]->grad_buffer().data());
      if (self.parents[1]->requires_grad) {
        auto g = self.parents[1]->grad_buffer();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < c; ++j) g[j] += self.grad[i * c + j];
      }
    };
  }
  return Tensor<T>::from_node(out);
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (shape_numel(shape) != x.numel())
    throw DimensionError("cannot reshape " + shape_string(x.shape()) + " to " + shape_string(shape));
  auto out = make_result<T>(std::move(shape), {&x});
  std::copy(x.values().begin(), x.values().end(), out->values.begin());
  if (out->requires_grad) {
    out->backward = [](Node<T>& self) {
      simd::kernels<T>().axpy(self.grad.size(), T(1), self.grad.data(),
                              self.parents[0]->grad_buffer().data());
    };
  }
  return Tensor<T>::from_node(out);
}

template <typename T>
Tensor<T> slice(const Tensor<T>& x, std::size_t axis, std::size_t begin, std::size_t end) {
  const auto v = detail::axis_view(x.shape(), axis);
  if (begin >= end || end > v.extent)
    throw DimensionError("slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") invalid for axis " + std::to_string(axis) + " of " +
                         shape_string(x.shape()));
  Shape shape = x.shape();
  shape[axis] = end - begin;
  auto out = make_result<T>(shape, {&x});
  const std::size_t len = (end - begin) * v.inner;
  auto xv = x.values();
  for (std::size_t o = 0; o < v.outer; ++o)
    std::copy_n(xv.data() + (o * v.extent + begin) * v.inner, len, out->values.data() + o * len);
  if (out->requires_grad) {
    out->backward = [v, begin, len](Node<T>& self) {
      auto g = self.parents[0]->grad_buffer();
      const auto& kt = simd::kernels<T>();
      for (std::size_t o = 0; o < v.outer; ++o)
        kt.axpy(len, T(1), self.grad.data() + o * len, g.data() + (o * v.extent + begin) * v.inner);
    };
  }
  return Tensor<T>::from_node(out);
}

template <typename T>
Tensor<T> concat(const Tensor<T>& a, const Tensor<T>& b, std::size_t axis) {
  bool compatible = a.rank() == b.rank() && axis < a.rank();
  for (std::size_t i = 0; compatible && i < a.rank(); ++i)
    if (i != axis && a.dim(i) != b.dim(i)) compatible = false;
  if (!compatible)
    throw DimensionError("concat along axis " + std::to_string(axis) + " of incompatible shapes " +
                         shape_string(a.shape()) + " and " + shape_string(b.shape()));
  const auto va = detail::axis_view(a.shape(), axis);
  const auto vb = detail::axis_view(b.shape(), axis);
  Shape shape = a.shape();
  shape[axis] = va.extent + vb.extent;
  auto out = make_result<T>(shape, {&a, &b});
  const std::size_t la = va.extent * va.inner, lb = vb.extent * vb.inner;
  for (std::size_t o = 0; o < va.outer; ++o) {
    std::copy_n(a.values().data() + o * la, la, out->values.data() + o * (la + lb));
    std::copy_n(b.values().data() + o * lb, lb, out->values.data() + o * (la + lb) + la);
  }
  if (out->requires_grad) {
    out->backward = [outer = va.outer, la, lb](Node<T>& self) {
      const auto& kt = simd::kernels<T>();
      if (self.parents[0]->requires_grad) {
        auto g = self.parents[0]->grad_buffer();
        for (std::size_t o = 0; o < outer; ++o)
          kt.axpy(la, T(1), self.grad.data() + o * (la + lb), g.data() + o * la);
      }
      if (self.parents[1]->requires_grad) {
        auto g = self.parents[1]->grad_buffer();
        for (std::size_t o = 0; o < outer; ++o)
          kt.axpy(lb, T(1), self.grad.data() + o * (la + lb) + la, g.data() + o * lb);
      }
    };
  }
  return Tensor<T>::from_node(out);
}

template <typename T>
Tensor<T> weighted_sum(const Tensor<T>& x, std::span<const T> coeffs) {
  if (coeffs.size() != x.numel())
    throw DimensionError("weighted_sum: " + std::to_string(coeffs.size()) +
                         " coefficients for " + shape_string(x.shape()));
  auto out = make_result<T>({1}, {&x});
  T s = 0;
  auto xv = x.values();
  for (std::size_t i = 0; i < xv.size(); ++i) s += coeffs[i] * xv[i];
  out->values[0] = s;
  if (out->requires_grad) {
    out->backward = [c = std::vector<T>(coeffs.begin(), coeffs.end())](Node<T>& self) {
      simd::kernels<T>().axpy(c.size(), self.grad[0], c.data(),
                              self.parents[0]->grad_buffer().data());
    };
  }
  return Tensor<T>::from_node(out);
}

#define INSTANTIATE(T)                                                                   \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> add_row(const Tensor<T>&, const Tensor<T>&);                        \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                   \
  template Tensor<T> slice(const Tensor<T>&, std::size_t, std::size_t, std::size_t);     \
  template Tensor<T> concat(const Tensor<T>&, const Tensor<T>&, std::size_t);            \
  template Tensor<T> weighted_sum(const Tensor<T>&, std::span<const T>);
CUNEINET_INSTANTIATE_FOR_REALS(INSTANTIATE)
#undef INSTANTIATE

}  // namespace cuneinet::ops
