#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <vector>

#include "cuneinet/errors.hpp"
#include "cuneinet/parallel.hpp"
#include "cuneinet/simd/kernels.hpp"

namespace cuneinet::simd {
namespace {

bool cpu_has_avx2() {
#if defined(CUNEINET_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend initial_backend() {
  if (const char* env = std::getenv("CUNEINET_SIMD"); env && std::string(env) == "scalar")
    return Backend::Scalar;
  return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& backend_slot() {
  static std::atomic<Backend> slot{initial_backend()};
  return slot;
}

}  // namespace

std::string_view backend_name(Backend b) {
  return b == Backend::Avx2 ? "avx2" : "scalar";
}

bool backend_supported(Backend b) {
  return b == Backend::Scalar || cpu_has_avx2();
}

Backend active_backend() {
  return backend_slot().load(std::memory_order_relaxed);
}

void set_backend(Backend b) {
  if (!backend_supported(b))
    throw ConfigError("SIMD backend '" + std::string(backend_name(b)) + "' is not supported here");
  backend_slot().store(b, std::memory_order_relaxed);
}

template <typename T>
const KernelTable<T>& kernels() {
  return active_backend() == Backend::Avx2 ? avx2::table<T>() : scalar::table<T>();
}

template const KernelTable<float>& kernels<float>();
template const KernelTable<double>& kernels<double>();

SquaredDistanceFn squared_distance_kernel() {
  return active_backend() == Backend::Avx2 ? &avx2::squared_distances
                                           : &scalar::squared_distances;
}

template <typename T>
void gemm(std::size_t m, std::size_t k, std::size_t p, std::span<const T> a, std::span<const T> b,
          std::span<T> c, bool accumulate) {
  const auto& kt = kernels<T>();
  // Rows are independent, so splitting them never changes a result.
  const std::size_t min_rows = std::max<std::size_t>(16, 65536 / std::max<std::size_t>(1, k * p));
  parallel_for(
      m,
      [&](std::size_t begin, std::size_t end) {
        kt.gemm(end - begin, k, p, a.data() + begin * k, b.data(), c.data() + begin * p,
                accumulate);
      },
      min_rows);
}

template void gemm<float>(std::size_t, std::size_t, std::size_t, std::span<const float>,
                          std::span<const float>, std::span<float>, bool);
template void gemm<double>(std::size_t, std::size_t, std::size_t, std::span<const double>,
                           std::span<const double>, std::span<double>, bool);

template <typename T>
void transpose(std::size_t rows, std::size_t cols, std::span<const T> in, std::span<T> out) {
  constexpr std::size_t B = 32;
  for (std::size_t i0 = 0; i0 < rows; i0 += B)
    for (std::size_t j0 = 0; j0 < cols; j0 += B)
      for (std::size_t i = i0; i < std::min(rows, i0 + B); ++i)
        for (std::size_t j = j0; j < std::min(cols, j0 + B); ++j) out[j * rows + i] = in[i * cols + j];
}

template void transpose<float>(std::size_t, std::size_t, std::span<const float>, std::span<float>);
template void transpose<double>(std::size_t, std::size_t, std::span<const double>,
                                std::span<double>);

}  // namespace cuneinet::simd
