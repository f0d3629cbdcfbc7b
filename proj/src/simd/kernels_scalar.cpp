#include "cuneinet/simd/kernels.hpp"

#include <cmath>

namespace cuneinet::simd::scalar {
namespace {

template <typename T>
void gemm(std::size_t m, std::size_t k, std::size_t p, const T* a, const T* b, T* c,
          bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * p;
    if (!accumulate) {
      for (std::size_t j = 0; j < p; ++j) crow[j] = T(0);
    }
    const T* arow = a + i * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const T aik = arow[kk];
      const T* brow = b + kk * p;
      for (std::size_t j = 0; j < p; ++j) crow[j] += aik * brow[j];
    }
  }
}

template <typename T>
void axpy(std::size_t n, T alpha, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void leaky_relu(std::size_t n, T slope, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : slope * x[i];
}

template <typename T>
void leaky_relu_backward(std::size_t n, T slope, const T* x, const T* gy, T* gx) {
  for (std::size_t i = 0; i < n; ++i) gx[i] += x[i] > T(0) ? gy[i] : slope * gy[i];
}

template <typename T>
void group_norm(std::size_t rows, std::size_t c, std::size_t gsize, const T* x, const T* gamma,
                const T* beta, T eps, T* xhat, T* inv_std, T* out) {
  const std::size_t groups = c / gsize;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t q = 0; q < groups; ++q) {
      const std::size_t off = r * c + q * gsize;
      double mean = 0.0;
      for (std::size_t j = 0; j < gsize; ++j) mean += x[off + j];
      mean /= static_cast<double>(gsize);
      double var = 0.0;
      for (std::size_t j = 0; j < gsize; ++j) {
        const double d = x[off + j] - mean;
        var += d * d;
      }
      var /= static_cast<double>(gsize);
      const double inv = 1.0 / std::sqrt(var + static_cast<double>(eps));
      inv_std[r * groups + q] = static_cast<T>(inv);
      for (std::size_t j = 0; j < gsize; ++j) {
        const T h = static_cast<T>((x[off + j] - mean) * inv);
        xhat[off + j] = h;
        out[off + j] = gamma[q * gsize + j] * h + beta[q * gsize + j];
      }
    }
  }
}

template <typename T>
void group_norm_backward(std::size_t rows, std::size_t c, std::size_t gsize, const T* gy,
                         const T* xhat, const T* inv_std, const T* gamma, T* gx, double* dgamma,
                         double* dbeta) {
  const std::size_t groups = c / gsize;
  if (dgamma || dbeta) {
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < c; ++j) {
        if (dgamma) dgamma[j] += static_cast<double>(gy[r * c + j]) * xhat[r * c + j];
        if (dbeta) dbeta[j] += gy[r * c + j];
      }
  }
  if (!gx) return;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t q = 0; q < groups; ++q) {
      const std::size_t off = r * c + q * gsize;
      double mean_d = 0.0, mean_dh = 0.0;
      for (std::size_t j = 0; j < gsize; ++j) {
        const double d = static_cast<double>(gy[off + j]) * gamma[q * gsize + j];
        mean_d += d;
        mean_dh += d * xhat[off + j];
      }
      mean_d /= static_cast<double>(gsize);
      mean_dh /= static_cast<double>(gsize);
      const double inv = inv_std[r * groups + q];
      for (std::size_t j = 0; j < gsize; ++j) {
        const double d = static_cast<double>(gy[off + j]) * gamma[q * gsize + j];
        gx[off + j] += static_cast<T>(inv * (d - mean_d - xhat[off + j] * mean_dh));
      }
    }
  }
}

template <typename T>
constexpr KernelTable<T> kTable{&gemm<T>,       &axpy<T>,
                                &leaky_relu<T>, &leaky_relu_backward<T>,
                                &group_norm<T>, &group_norm_backward<T>};

}  // namespace

template <typename T>
const KernelTable<T>& table() {
  return kTable<T>;
}

template const KernelTable<float>& table<float>();
template const KernelTable<double>& table<double>();

void squared_distances(std::size_t n, const double* xs, const double* ys, const double* zs,
                       const double q[3], double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - q[0];
    const double dy = ys[i] - q[1];
    const double dz = zs[i] - q[2];
    out[i] = (dx * dx + dy * dy) + dz * dz;
  }
}

}  // namespace cuneinet::simd::scalar
