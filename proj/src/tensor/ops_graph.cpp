#include <cstdint>

#include "cuneinet/errors.hpp"
#include "cuneinet/parallel.hpp"
#include "cuneinet/simd/kernels.hpp"
#include "node_util.hpp"

namespace cuneinet::ops {

using detail::make_result;
using detail::Node;

namespace {

void check_neighbors(std::span<const PointIndex> neighbors, std::size_t n, std::size_t k) {
  if (k == 0 || neighbors.size() != n * k)
    throw DimensionError("neighbor list of " + std::to_string(neighbors.size()) +
                         " entries does not match " + std::to_string(n) + " points x k=" +
                         std::to_string(k));
  for (PointIndex j : neighbors)
    if (j >= n) throw DimensionError("neighbor index " + std::to_string(j) + " out of range");
}

}  // namespace

template <typename T>
Tensor<T> neighbor_gather_add(const Tensor<T>& self_term, const Tensor<T>& neighbor_term,
                              std::span<const PointIndex> neighbors, std::size_t k) {
  if (self_term.rank() != 2 || self_term.shape() != neighbor_term.shape())
    throw DimensionError("neighbor_gather_add needs two equal [N x C] inputs, got " +
                         shape_string(self_term.shape()) + " and " +
                         shape_string(neighbor_term.shape()));
  const std::size_t n = self_term.dim(0), c = self_term.dim(1);
  check_neighbors(neighbors, n, k);
  auto out = make_result<T>({n, k, c}, {&self_term, &neighbor_term});
  auto sv = self_term.values();
  auto nv = neighbor_term.values();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < k; ++t) {
      const T* s = sv.data() + i * c;
      const T* o = nv.data() + std::size_t(neighbors[i * k + t]) * c;
      T* dst = out->values.data() + (i * k + t) * c;
      for (std::size_t j = 0; j < c; ++j) dst[j] = s[j] + o[j];
    }
  if (out->requires_grad) {
    out->backward = [n, k, c, idx = std::vector<PointIndex>(neighbors.begin(), neighbors.end())](
                        Node<T>& self) {
      auto& ps = self.parents[0];
      auto& pn = self.parents[1];
      if (ps->requires_grad) {
        auto g = ps->grad_buffer();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t t = 0; t < k; ++t)
            for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[(i * k + t) * c + j];
      }
      if (pn->requires_grad) {
        auto g = pn->grad_buffer();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t t = 0; t < k; ++t) {
            T* dst = g.data() + std::size_t(idx[i * k + t]) * c;
            const T* src = self.grad.data() + (i * k + t) * c;
            for (std::size_t j = 0; j < c; ++j) dst[j] += src[j];
          }
      }
    };
  }
  return Tensor<T>::from_node(out);
}

template <typename T>
Tensor<T> gather_edge_features(const Tensor<T>& features, std::span<const PointIndex> neighbors,
                               std::size_t k) {
  if (features.rank() != 2)
    throw DimensionError("gather_edge_features needs [N x C], got " + shape_string(features.shape()));
  const std::size_t n = features.dim(0), c = features.dim(1);
  check_neighbors(neighbors, n, k);
  auto out = make_result<T>({n, k, 2 * c}, {&features});
  auto fv = features.values();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < k; ++t) {
      const T* fi = fv.data() + i * c;
      const T* fj = fv.data() + std::size_t(neighbors[i * k + t]) * c;
      T* dst = out->values.data() + (i * k + t) * 2 * c;
      for (std::size_t j = 0; j < c; ++j) {
        dst[j] = fi[j];
        dst[c + j] = fj[j] - fi[j];
      }
    }
  if (out->requires_grad) {
    out->backward = [n, k, c, idx = std::vector<PointIndex>(neighbors.begin(), neighbors.end())](
                        Node<T>& self) {
      auto g = self.parents[0]->grad_buffer();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < k; ++t) {
          const T* src = self.grad.data() + (i * k + t) * 2 * c;
          T* gi = g.data() + i * c;
          T* gj = g.data() + std::size_t(idx[i * k + t]) * c;
          for (std::size_t j = 0; j < c; ++j) {
            gi[j] += src[j] - src[c + j];
            gj[j] += src[c + j];
          }
        }
    };
  }
  return Tensor<T>::from_node(out);
}

namespace {

template <typename T>
struct EdgeRows {
  std::vector<T> rows, xhat, inv, pre, act;

  void resize(std::size_t k, std::size_t c, std::size_t groups) {
    rows.resize(k * c);
    xhat.resize(k * c);
    inv.resize(k * groups);
    pre.resize(k * c);
    act.resize(k * c);
  }
};

// Builds the k edge rows of point i and runs them through norm and activation.
template <typename T>
void edge_rows(EdgeRows<T>& b, std::size_t i, std::size_t k, std::size_t c, const T* sv,
               const T* nv, const PointIndex* nbr, const T* gamma, const T* beta,
               std::size_t groups, T eps, T slope, bool activate = true) {
  const auto& kt = simd::kernels<T>();
  const T* s = sv + i * c;
  for (std::size_t t = 0; t < k; ++t) {
    const T* o = nv + std::size_t(nbr[i * k + t]) * c;
    T* dst = b.rows.data() + t * c;
    for (std::size_t j = 0; j < c; ++j) dst[j] = s[j] + o[j];
  }
  const T* pre = b.rows.data();
  if (gamma) {
    kt.group_norm(k, c, c / groups, b.rows.data(), gamma, beta, eps, b.xhat.data(), b.inv.data(),
                  b.pre.data());
    pre = b.pre.data();
  }
  if (activate) kt.leaky_relu(k * c, slope, pre, b.act.data());
}

}  // namespace

template <typename T>
Tensor<T> edge_max(const Tensor<T>& self_term, const Tensor<T>& neighbor_term,
                   std::span<const PointIndex> neighbors, std::size_t k, const Tensor<T>* gamma,
                   const Tensor<T>* beta, std::size_t groups, T eps, T slope) {
  if (self_term.rank() != 2 || self_term.shape() != neighbor_term.shape())
    throw DimensionError("edge_max needs two equal [N x C] inputs, got " +
                         shape_string(self_term.shape()) + " and " +
                         shape_string(neighbor_term.shape()));
  const std::size_t n = self_term.dim(0), c = self_term.dim(1);
  check_neighbors(neighbors, n, k);
  if (k > UINT16_MAX) throw DimensionError("edge_max supports at most 65535 neighbours");
  if ((gamma == nullptr) != (beta == nullptr))
    throw DimensionError("edge_max needs both or neither of gamma and beta");
  if (gamma) {
    if (groups == 0 || c % groups != 0)
      throw ConfigError("edge_max: " + std::to_string(c) + " channels are not divisible into " +
                        std::to_string(groups) + " groups");
    if (gamma->numel() != c || beta->numel() != c)
      throw DimensionError("edge_max: affine parameters must have " + std::to_string(c) +
                           " elements");
  } else {
    groups = 1;
  }

  auto out = gamma ? make_result<T>({n, c}, {&self_term, &neighbor_term, gamma, beta})
                   : make_result<T>({n, c}, {&self_term, &neighbor_term});
  std::vector<std::uint16_t> winner(n * c, 0);
  const T* sv = self_term.values().data();
  const T* nv = neighbor_term.values().data();
  const T* gv = gamma ? gamma->values().data() : nullptr;
  const T* bv = beta ? beta->values().data() : nullptr;
  parallel_for(
      n,
      [&](std::size_t begin, std::size_t end) {
        EdgeRows<T> b;
        b.resize(k, c, groups);
        for (std::size_t i = begin; i < end; ++i) {
          edge_rows(b, i, k, c, sv, nv, neighbors.data(), gv, bv, groups, eps, slope);
          T* dst = out->values.data() + i * c;
          std::uint16_t* win = winner.data() + i * c;
          std::copy_n(b.act.data(), c, dst);
          for (std::size_t t = 1; t < k; ++t) {
            const T* row = b.act.data() + t * c;
            for (std::size_t j = 0; j < c; ++j)
              if (row[j] > dst[j]) {
                dst[j] = row[j];
                win[j] = static_cast<std::uint16_t>(t);
              }
          }
        }
      },
      64);

  if (out->requires_grad) {
    out->backward = [n, k, c, groups, eps, slope, winner = std::move(winner),
                     idx = std::vector<PointIndex>(neighbors.begin(), neighbors.end())](
                        Node<T>& self) {
      const auto& kt = simd::kernels<T>();
      auto& ps = self.parents[0];
      auto& pn = self.parents[1];
      const bool norm = self.parents.size() == 4;
      const T* gv = norm ? self.parents[2]->values.data() : nullptr;
      const T* bv = norm ? self.parents[3]->values.data() : nullptr;
      const bool want_affine =
          norm && (self.parents[2]->requires_grad || self.parents[3]->requires_grad);
      T* gs = ps->requires_grad ? ps->grad_buffer().data() : nullptr;
      T* gn = pn->requires_grad ? pn->grad_buffer().data() : nullptr;
      std::vector<double> dgamma(c, 0.0), dbeta(c, 0.0);
      EdgeRows<T> b;
      b.resize(k, c, groups);
      std::vector<T> g_pre(k * c), g_rows(k * c);
      for (std::size_t i = 0; i < n; ++i) {
        edge_rows(b, i, k, c, ps->values.data(), pn->values.data(), idx.data(), gv, bv, groups,
                  eps, slope, false);
        // only the winning edge of each channel receives gradient
        const T* pre = norm ? b.pre.data() : b.rows.data();
        std::fill(g_pre.begin(), g_pre.end(), T(0));
        for (std::size_t j = 0; j < c; ++j) {
          const std::size_t at = std::size_t(winner[i * c + j]) * c + j;
          const T gy = self.grad[i * c + j];
          g_pre[at] = pre[at] > T(0) ? gy : slope * gy;
        }
        const T* g_edge = g_pre.data();
        if (norm) {
          std::fill(g_rows.begin(), g_rows.end(), T(0));
          kt.group_norm_backward(k, c, c / groups, g_pre.data(), b.xhat.data(), b.inv.data(), gv,
                                 (gs || gn) ? g_rows.data() : nullptr,
                                 want_affine ? dgamma.data() : nullptr,
                                 want_affine ? dbeta.data() : nullptr);
          g_edge = g_rows.data();
        }
        for (std::size_t t = 0; t < k; ++t) {
          const T* src = g_edge + t * c;
          if (gs)
            for (std::size_t j = 0; j < c; ++j) gs[i * c + j] += src[j];
          if (gn) {
            T* dst = gn + std::size_t(idx[i * k + t]) * c;
            for (std::size_t j = 0; j < c; ++j) dst[j] += src[j];
          }
        }
      }
      if (norm && self.parents[2]->requires_grad) {
        auto gg = self.parents[2]->grad_buffer();
        for (std::size_t j = 0; j < c; ++j) gg[j] += static_cast<T>(dgamma[j]);
      }
      if (norm && self.parents[3]->requires_grad) {
        auto gb = self.parents[3]->grad_buffer();
        for (std::size_t j = 0; j < c; ++j) gb[j] += static_cast<T>(dbeta[j]);
      }
    };
  }
  return Tensor<T>::from_node(out);
}

#define INSTANTIATE(T)                                                                        \
  template Tensor<T> neighbor_gather_add(const Tensor<T>&, const Tensor<T>&,                  \
                                         std::span<const PointIndex>, std::size_t);           \
  template Tensor<T> gather_edge_features(const Tensor<T>&, std::span<const PointIndex>,      \
                                          std::size_t);                                   \
  template Tensor<T> edge_max(const Tensor<T>&, const Tensor<T>&, std::span<const PointIndex>, \
                              std::size_t, const Tensor<T>*, const Tensor<T>*, std::size_t, T, T);
CUNEINET_INSTANTIATE_FOR_REALS(INSTANTIATE)
#undef INSTANTIATE

}  // namespace cuneinet::ops
