#include <algorithm>
#include <cmath>
#include <random>

#include "cuneinet/errors.hpp"
#include "cuneinet/simd/kernels.hpp"
#include "node_util.hpp"

namespace cuneinet::ops {

using detail::make_result;
using detail::Node;

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope) {
  auto out = make_result<T>(x.shape(), {&x});
  simd::kernels<T>().leaky_relu(x.numel(), slope, x.values().data(), out->values.data());
  if (out->requires_grad) {
    out->backward = [slope](Node<T>& self) {
      auto& p = self.parents[0];
      simd::kernels<T>().leaky_relu_backward(self.grad.size(), slope, p->values.data(),
                                             self.grad.data(), p->grad_buffer().data());
    };
  }
  return Tensor<T>::from_node(out);
}

template <typename T>
Tensor<T> group_norm(const Tensor<T>& x, std::size_t groups, const Tensor<T>& gamma,
                     const Tensor<T>& beta, T eps) {
  const std::size_t c = x.shape().back();
  if (groups == 0 || c % groups != 0)
    throw ConfigError("group_norm: " + std::to_string(c) + " channels are not divisible into " +
                      std::to_string(groups) + " groups");
  if (gamma.numel() != c || beta.numel() != c)
    throw DimensionError("group_norm: affine parameters must have " + std::to_string(c) +
                         " elements");
  const std::size_t rows = x.numel() / c;
  const std::size_t gsize = c / groups;
  auto out = make_result<T>(x.shape(), {&x, &gamma, &beta});

  std::vector<T> xhat(x.numel());
  std::vector<T> inv_std(rows * groups);
  const auto& kt = simd::kernels<T>();
  kt.group_norm(rows, c, gsize, x.values().data(), gamma.values().data(), beta.values().data(),
                eps, xhat.data(), inv_std.data(), out->values.data());

  if (out->requires_grad) {
    out->backward = [rows, c, gsize, xhat = std::move(xhat),
                     inv_std = std::move(inv_std)](Node<T>& self) {
      auto& px = self.parents[0];
      auto& pg = self.parents[1];
      auto& pb = self.parents[2];
      std::vector<double> dgamma(c, 0.0), dbeta(c, 0.0);
      T* gx = px->requires_grad ? px->grad_buffer().data() : nullptr;
      simd::kernels<T>().group_norm_backward(
          rows, c, gsize, self.grad.data(), xhat.data(), inv_std.data(), pg->values.data(), gx,
          pg->requires_grad ? dgamma.data() : nullptr, pb->requires_grad ? dbeta.data() : nullptr);
      if (pg->requires_grad) {
        auto gg = pg->grad_buffer();
        for (std::size_t j = 0; j < c; ++j) gg[j] += static_cast<T>(dgamma[j]);
      }
      if (pb->requires_grad) {
        auto gb = pb->grad_buffer();
        for (std::size_t j = 0; j < c; ++j) gb[j] += static_cast<T>(dbeta[j]);
      }
    };
  }
  return Tensor<T>::from_node(out);
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, T rate, std::uint64_t seed) {
  if (!(rate >= T(0) && rate < T(1)))
    throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  auto out = make_result<T>(x.shape(), {&x});
  std::vector<T> mask(x.numel(), T(1));
  if (rate > T(0)) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution keep(1.0 - static_cast<double>(rate));
    const T scale = T(1) / (T(1) - rate);
    for (T& m : mask) m = keep(rng) ? scale : T(0);
  }
  auto xv = x.values();
  for (std::size_t i = 0; i < mask.size(); ++i) out->values[i] = xv[i] * mask[i];
  if (out->requires_grad) {
    out->backward = [mask = std::move(mask)](Node<T>& self) {
      auto g = self.parents[0]->grad_buffer();
      for (std::size_t i = 0; i < mask.size(); ++i) g[i] += self.grad[i] * mask[i];
    };
  }
  return Tensor<T>::from_node(out);
}

template <typename T>
Tensor<T> weighted_cross_entropy(const Tensor<T>& logits, std::size_t label, T weight) {
  const std::size_t c = logits.numel();
  if (c < 2) throw DimensionError("cross entropy needs at least 2 classes, got " + std::to_string(c));
  if (label >= c)
    throw InputError("label " + std::to_string(label) + " out of range for " + std::to_string(c) +
                     " classes");
  if (!(weight > T(0))) throw InputError("class weight must be positive");
  std::vector<double> z(logits.values().begin(), logits.values().end());
  const auto prob = softmax(z);
  const double mx = *std::max_element(z.begin(), z.end());
  double lse = 0.0;
  for (double v : z) lse += std::exp(v - mx);
  lse = mx + std::log(lse);

  auto out = make_result<T>({1}, {&logits});
  out->values[0] = static_cast<T>(static_cast<double>(weight) * (lse - z[label]));
  if (out->requires_grad) {
    out->backward = [prob, label, weight](Node<T>& self) {
      auto g = self.parents[0]->grad_buffer();
      const double up = static_cast<double>(self.grad[0]) * static_cast<double>(weight);
      for (std::size_t i = 0; i < prob.size(); ++i)
        g[i] += static_cast<T>(up * (prob[i] - (i == label ? 1.0 : 0.0)));
    };
  }
  return Tensor<T>::from_node(out);
}

#define INSTANTIATE(T)                                                                        \
  template Tensor<T> leaky_relu(const Tensor<T>&, T);                                         \
  template Tensor<T> group_norm(const Tensor<T>&, std::size_t, const Tensor<T>&,              \
                                const Tensor<T>&, T);                                         \
  template Tensor<T> dropout(const Tensor<T>&, T, std::uint64_t);                             \
  template Tensor<T> weighted_cross_entropy(const Tensor<T>&, std::size_t, T);
CUNEINET_INSTANTIATE_FOR_REALS(INSTANTIATE)
#undef INSTANTIATE

}  // namespace cuneinet::ops
