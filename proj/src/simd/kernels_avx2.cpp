// Built with -mavx2 -mfma on x86-64; only reached after a runtime CPU check.
#include "cuneinet/simd/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <type_traits>
#include <vector>

namespace cuneinet::simd::avx2 {
namespace {

struct F32 {
  using T = float;
  using V = __m256;
  static constexpr std::size_t W = 8;
  static V zero() { return _mm256_setzero_ps(); }
  static V set1(T v) { return _mm256_set1_ps(v); }
  static V load(const T* p) { return _mm256_loadu_ps(p); }
  static void store(T* p, V v) { _mm256_storeu_ps(p, v); }
  static V fmadd(V a, V b, V c) { return _mm256_fmadd_ps(a, b, c); }
  static V mul(V a, V b) { return _mm256_mul_ps(a, b); }
  static V add(V a, V b) { return _mm256_add_ps(a, b); }
  static V select_positive(V x, V pos, V neg) {
    return _mm256_blendv_ps(neg, pos, _mm256_cmp_ps(x, zero(), _CMP_GT_OQ));
  }
};

struct F64 {
  using T = double;
  using V = __m256d;
  static constexpr std::size_t W = 4;
  static V zero() { return _mm256_setzero_pd(); }
  static V set1(T v) { return _mm256_set1_pd(v); }
  static V load(const T* p) { return _mm256_loadu_pd(p); }
  static void store(T* p, V v) { _mm256_storeu_pd(p, v); }
  static V fmadd(V a, V b, V c) { return _mm256_fmadd_pd(a, b, c); }
  static V mul(V a, V b) { return _mm256_mul_pd(a, b); }
  static V add(V a, V b) { return _mm256_add_pd(a, b); }
  static V select_positive(V x, V pos, V neg) {
    return _mm256_blendv_pd(neg, pos, _mm256_cmp_pd(x, zero(), _CMP_GT_OQ));
  }
};

// R rows x 2 vectors of C held in registers while k runs.
template <typename Ops, std::size_t R>
inline void gemm_block(std::size_t k, std::size_t p, const typename Ops::T* a, std::size_t lda,
                       const typename Ops::T* b, typename Ops::T* c, bool accumulate) {
  using V = typename Ops::V;
  constexpr std::size_t W = Ops::W;
  V acc[R][2];
  for (std::size_t r = 0; r < R; ++r) {
    acc[r][0] = accumulate ? Ops::load(c + r * p) : Ops::zero();
    acc[r][1] = accumulate ? Ops::load(c + r * p + W) : Ops::zero();
  }
  for (std::size_t kk = 0; kk < k; ++kk) {
    const V b0 = Ops::load(b + kk * p);
    const V b1 = Ops::load(b + kk * p + W);
    for (std::size_t r = 0; r < R; ++r) {
      const V av = Ops::set1(a[r * lda + kk]);
      acc[r][0] = Ops::fmadd(av, b0, acc[r][0]);
      acc[r][1] = Ops::fmadd(av, b1, acc[r][1]);
    }
  }
  for (std::size_t r = 0; r < R; ++r) {
    Ops::store(c + r * p, acc[r][0]);
    Ops::store(c + r * p + W, acc[r][1]);
  }
}

template <typename Ops, std::size_t R>
inline void gemm_rows(std::size_t k, std::size_t p, const typename Ops::T* a,
                      const typename Ops::T* b, typename Ops::T* c, bool accumulate) {
  using T = typename Ops::T;
  using V = typename Ops::V;
  constexpr std::size_t W = Ops::W;
  std::size_t j = 0;
  for (; j + 2 * W <= p; j += 2 * W) gemm_block<Ops, R>(k, p, a, k, b + j, c + j, accumulate);
  for (; j + W <= p; j += W) {
    for (std::size_t r = 0; r < R; ++r) {
      V acc = accumulate ? Ops::load(c + r * p + j) : Ops::zero();
      for (std::size_t kk = 0; kk < k; ++kk)
        acc = Ops::fmadd(Ops::set1(a[r * k + kk]), Ops::load(b + kk * p + j), acc);
      Ops::store(c + r * p + j, acc);
    }
  }
  for (; j < p; ++j) {
    for (std::size_t r = 0; r < R; ++r) {
      T s = accumulate ? c[r * p + j] : T(0);
      for (std::size_t kk = 0; kk < k; ++kk) s = std::fma(a[r * k + kk], b[kk * p + j], s);
      c[r * p + j] = s;
    }
  }
}

template <typename Ops>
void gemm(std::size_t m, std::size_t k, std::size_t p, const typename Ops::T* a,
          const typename Ops::T* b, typename Ops::T* c, bool accumulate) {
  constexpr std::size_t R = 4;
  std::size_t i = 0;
  for (; i + R <= m; i += R) gemm_rows<Ops, R>(k, p, a + i * k, b, c + i * p, accumulate);
  for (; i < m; ++i) gemm_rows<Ops, 1>(k, p, a + i * k, b, c + i * p, accumulate);
}

template <typename Ops>
void axpy(std::size_t n, typename Ops::T alpha, const typename Ops::T* x, typename Ops::T* y) {
  constexpr std::size_t W = Ops::W;
  const auto av = Ops::set1(alpha);
  std::size_t i = 0;
  for (; i + W <= n; i += W) Ops::store(y + i, Ops::add(Ops::load(y + i), Ops::mul(av, Ops::load(x + i))));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

template <typename Ops>
void leaky_relu(std::size_t n, typename Ops::T slope, const typename Ops::T* x,
                typename Ops::T* y) {
  constexpr std::size_t W = Ops::W;
  const auto sv = Ops::set1(slope);
  std::size_t i = 0;
  for (; i + W <= n; i += W) {
    const auto xv = Ops::load(x + i);
    Ops::store(y + i, Ops::select_positive(xv, xv, Ops::mul(sv, xv)));
  }
  for (; i < n; ++i) y[i] = x[i] > 0 ? x[i] : slope * x[i];
}

template <typename Ops>
void leaky_relu_backward(std::size_t n, typename Ops::T slope, const typename Ops::T* x,
                         const typename Ops::T* gy, typename Ops::T* gx) {
  constexpr std::size_t W = Ops::W;
  const auto sv = Ops::set1(slope);
  std::size_t i = 0;
  for (; i + W <= n; i += W) {
    const auto g = Ops::load(gy + i);
    const auto contrib = Ops::select_positive(Ops::load(x + i), g, Ops::mul(sv, g));
    Ops::store(gx + i, Ops::add(Ops::load(gx + i), contrib));
  }
  for (; i < n; ++i) gx[i] += x[i] > 0 ? gy[i] : slope * gy[i];
}

inline float hsum(__m256 v) {
  __m128 lo = _mm_add_ps(_mm256_castps256_ps128(v), _mm256_extractf128_ps(v, 1));
  __m128 sh = _mm_movehdup_ps(lo);
  __m128 s = _mm_add_ps(lo, sh);
  sh = _mm_movehl_ps(sh, s);
  return _mm_cvtss_f32(_mm_add_ss(s, sh));
}

// Vector path for float groups that are a whole number of registers;
// statistics in float.
template <typename Ops>
void group_norm(std::size_t rows, std::size_t c, std::size_t gsize, const typename Ops::T* x,
                const typename Ops::T* gamma, const typename Ops::T* beta, typename Ops::T eps,
                typename Ops::T* xhat, typename Ops::T* inv_std, typename Ops::T* out) {
  if constexpr (std::is_same_v<typename Ops::T, float>) {
    if (gsize % 8 == 0) {
      const std::size_t groups = c / gsize;
      const float scale = 1.0f / static_cast<float>(gsize);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t q = 0; q < groups; ++q) {
          const std::size_t off = r * c + q * gsize;
          __m256 acc = _mm256_setzero_ps();
          for (std::size_t j = 0; j < gsize; j += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + off + j));
          const __m256 mean = _mm256_set1_ps(hsum(acc) * scale);
          acc = _mm256_setzero_ps();
          for (std::size_t j = 0; j < gsize; j += 8) {
            const __m256 d = _mm256_sub_ps(_mm256_loadu_ps(x + off + j), mean);
            acc = _mm256_fmadd_ps(d, d, acc);
          }
          const float inv = 1.0f / std::sqrt(hsum(acc) * scale + eps);
          inv_std[r * groups + q] = inv;
          const __m256 iv = _mm256_set1_ps(inv);
          for (std::size_t j = 0; j < gsize; j += 8) {
            const __m256 h = _mm256_mul_ps(_mm256_sub_ps(_mm256_loadu_ps(x + off + j), mean), iv);
            _mm256_storeu_ps(xhat + off + j, h);
            _mm256_storeu_ps(out + off + j,
                             _mm256_fmadd_ps(_mm256_loadu_ps(gamma + q * gsize + j), h,
                                             _mm256_loadu_ps(beta + q * gsize + j)));
          }
        }
      }
      return;
    }
  }
  scalar::table<typename Ops::T>().group_norm(rows, c, gsize, x, gamma, beta, eps, xhat, inv_std,
                                              out);
}

template <typename Ops>
void group_norm_backward(std::size_t rows, std::size_t c, std::size_t gsize,
                         const typename Ops::T* gy, const typename Ops::T* xhat,
                         const typename Ops::T* inv_std, const typename Ops::T* gamma,
                         typename Ops::T* gx, double* dgamma, double* dbeta) {
  if constexpr (std::is_same_v<typename Ops::T, float>) {
    if (gsize % 8 == 0) {
      const std::size_t groups = c / gsize;
      const float scale = 1.0f / static_cast<float>(gsize);
      // float partial sums over blocks of rows, flushed into the double totals
      constexpr std::size_t kBlock = 128;
      std::vector<float> part_g(c), part_b(c);
      for (std::size_t r0 = 0; r0 < rows; r0 += kBlock) {
        const std::size_t r1 = std::min(rows, r0 + kBlock);
        std::fill(part_g.begin(), part_g.end(), 0.0f);
        std::fill(part_b.begin(), part_b.end(), 0.0f);
        for (std::size_t r = r0; r < r1; ++r) {
          for (std::size_t j = 0; j < c; j += 8) {
            const __m256 g = _mm256_loadu_ps(gy + r * c + j);
            const __m256 h = _mm256_loadu_ps(xhat + r * c + j);
            _mm256_storeu_ps(part_g.data() + j,
                             _mm256_fmadd_ps(g, h, _mm256_loadu_ps(part_g.data() + j)));
            _mm256_storeu_ps(part_b.data() + j, _mm256_add_ps(g, _mm256_loadu_ps(part_b.data() + j)));
          }
          if (!gx) continue;
          for (std::size_t q = 0; q < groups; ++q) {
            const std::size_t off = r * c + q * gsize;
            __m256 sd = _mm256_setzero_ps(), sdh = _mm256_setzero_ps();
            for (std::size_t j = 0; j < gsize; j += 8) {
              const __m256 d = _mm256_mul_ps(_mm256_loadu_ps(gy + off + j),
                                             _mm256_loadu_ps(gamma + q * gsize + j));
              sd = _mm256_add_ps(sd, d);
              sdh = _mm256_fmadd_ps(d, _mm256_loadu_ps(xhat + off + j), sdh);
            }
            const __m256 mean_d = _mm256_set1_ps(hsum(sd) * scale);
            const __m256 mean_dh = _mm256_set1_ps(hsum(sdh) * scale);
            const __m256 iv = _mm256_set1_ps(inv_std[r * groups + q]);
            for (std::size_t j = 0; j < gsize; j += 8) {
              const __m256 d = _mm256_mul_ps(_mm256_loadu_ps(gy + off + j),
                                             _mm256_loadu_ps(gamma + q * gsize + j));
              const __m256 h = _mm256_loadu_ps(xhat + off + j);
              const __m256 t = _mm256_sub_ps(_mm256_sub_ps(d, mean_d), _mm256_mul_ps(h, mean_dh));
              _mm256_storeu_ps(gx + off + j, _mm256_fmadd_ps(iv, t, _mm256_loadu_ps(gx + off + j)));
            }
          }
        }
        for (std::size_t j = 0; j < c; ++j) {
          if (dgamma) dgamma[j] += part_g[j];
          if (dbeta) dbeta[j] += part_b[j];
        }
      }
      return;
    }
  }
  scalar::table<typename Ops::T>().group_norm_backward(rows, c, gsize, gy, xhat, inv_std, gamma,
                                                       gx, dgamma, dbeta);
}

template <typename Ops>
constexpr KernelTable<typename Ops::T> kTable{
    &gemm<Ops>,       &axpy<Ops>, &leaky_relu<Ops>, &leaky_relu_backward<Ops>,
    &group_norm<Ops>, &group_norm_backward<Ops>};

}  // namespace

template <>
const KernelTable<float>& table<float>() {
  return kTable<F32>;
}
template <>
const KernelTable<double>& table<double>() {
  return kTable<F64>;
}

void squared_distances(std::size_t n, const double* xs, const double* ys, const double* zs,
                       const double q[3], double* out) {
  const __m256d qx = _mm256_set1_pd(q[0]);
  const __m256d qy = _mm256_set1_pd(q[1]);
  const __m256d qz = _mm256_set1_pd(q[2]);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), qx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + i), qy);
    const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(zs + i), qz);
    const __m256d xy = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
    _mm256_storeu_pd(out + i, _mm256_add_pd(xy, _mm256_mul_pd(dz, dz)));
  }
  for (; i < n; ++i) {
    const double dx = xs[i] - q[0];
    const double dy = ys[i] - q[1];
    const double dz = zs[i] - q[2];
    out[i] = (dx * dx + dy * dy) + dz * dz;
  }
}

}  // namespace cuneinet::simd::avx2

#else

#include "cuneinet/errors.hpp"

namespace cuneinet::simd::avx2 {

template <typename T>
const KernelTable<T>& table() {
  throw ConfigError("AVX2 kernels were not compiled into this build");
}
template const KernelTable<float>& table<float>();
template const KernelTable<double>& table<double>();

void squared_distances(std::size_t, const double*, const double*, const double*, const double*,
                       double*) {
  throw ConfigError("AVX2 kernels were not compiled into this build");
}

}  // namespace cuneinet::simd::avx2

#endif
