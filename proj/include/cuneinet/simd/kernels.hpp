#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace cuneinet::simd {

enum class Backend { Scalar, Avx2 };

std::string_view backend_name(Backend b);
bool backend_supported(Backend b);

/// Backend picked on first use: AVX2+FMA when the CPU has it, unless the
/// CUNEINET_SIMD environment variable is set to "scalar".
Backend active_backend();

/// Overrides the runtime choice. Throws ConfigError if the CPU lacks the ISA.
void set_backend(Backend b);

template <typename T>
struct KernelTable {
  // c[m x p] = a[m x k] * b[k x p] (+ c if accumulate); row-major, k ascending per element
  void (*gemm)(std::size_t m, std::size_t k, std::size_t p, const T* a, const T* b, T* c,
               bool accumulate);
  // y += alpha * x
  void (*axpy)(std::size_t n, T alpha, const T* x, T* y);
  void (*leaky_relu)(std::size_t n, T slope, const T* x, T* y);
  // gx += gy * (x > 0 ? 1 : slope)
  void (*leaky_relu_backward)(std::size_t n, T slope, const T* x, const T* gy, T* gx);
  // Standardizes each run of gsize channels within every row of a rows x c
  // matrix; writes the standardized values, one inverse std per (row, group)
  // and the affine output.
  void (*group_norm)(std::size_t rows, std::size_t c, std::size_t gsize, const T* x,
                     const T* gamma, const T* beta, T eps, T* xhat, T* inv_std, T* out);
  // gx += input gradient (skipped if null); dgamma/dbeta += affine gradients
  // (skipped if null).
  void (*group_norm_backward)(std::size_t rows, std::size_t c, std::size_t gsize, const T* gy,
                              const T* xhat, const T* inv_std, const T* gamma, T* gx,
                              double* dgamma, double* dbeta);
};

// Squared distances from q to n points stored as separate coordinate arrays.
// Evaluated as (dx*dx + dy*dy) + dz*dz in every backend, so results are bit-identical.
using SquaredDistanceFn = void (*)(std::size_t n, const double* xs, const double* ys,
                                   const double* zs, const double q[3], double* out);

namespace scalar {
template <typename T>
const KernelTable<T>& table();
void squared_distances(std::size_t n, const double* xs, const double* ys, const double* zs,
                       const double q[3], double* out);
}  // namespace scalar

namespace avx2 {
template <typename T>
const KernelTable<T>& table();
void squared_distances(std::size_t n, const double* xs, const double* ys, const double* zs,
                       const double q[3], double* out);
}  // namespace avx2

template <typename T>
const KernelTable<T>& kernels();
SquaredDistanceFn squared_distance_kernel();

// Span front-ends used by the rest of the library.

template <typename T>
void gemm(std::size_t m, std::size_t k, std::size_t p, std::span<const T> a, std::span<const T> b,
          std::span<T> c, bool accumulate);

template <typename T>
void axpy(T alpha, std::span<const T> x, std::span<T> y) {
  kernels<T>().axpy(x.size(), alpha, x.data(), y.data());
}

/// Writes the transpose of a row-major rows x cols matrix into out (cols x rows).
template <typename T>
void transpose(std::size_t rows, std::size_t cols, std::span<const T> in, std::span<T> out);

}  // namespace cuneinet::simd
