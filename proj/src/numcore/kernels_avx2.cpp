// Compiled with -mavx2 -mfma; only reached through the runtime dispatcher
// after a CPU feature check.
#include <immintrin.h>

#include <cmath>

#include "nmt/numcore/kernels.hpp"

namespace nmt::num::kernels {
namespace {

template <typename T>
struct Vec;

template <>
struct Vec<float> {
  using reg = __m256;
  static constexpr std::size_t width = 8;
  static reg zero() { return _mm256_setzero_ps(); }
  static reg load(const float* p) { return _mm256_loadu_ps(p); }
  static void store(float* p, reg v) { _mm256_storeu_ps(p, v); }
  static reg broadcast(float x) { return _mm256_set1_ps(x); }
  static reg fma(reg a, reg b, reg c) { return _mm256_fmadd_ps(a, b, c); }
  static reg add(reg a, reg b) { return _mm256_add_ps(a, b); }
  static float hsum(reg v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 shuf = _mm_movehdup_ps(lo);
    __m128 sums = _mm_add_ps(lo, shuf);
    shuf = _mm_movehl_ps(shuf, sums);
    sums = _mm_add_ss(sums, shuf);
    return _mm_cvtss_f32(sums);
  }
};

template <>
struct Vec<double> {
  using reg = __m256d;
  static constexpr std::size_t width = 4;
  static reg zero() { return _mm256_setzero_pd(); }
  static reg load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, reg v) { _mm256_storeu_pd(p, v); }
  static reg broadcast(double x) { return _mm256_set1_pd(x); }
  static reg fma(reg a, reg b, reg c) { return _mm256_fmadd_pd(a, b, c); }
  static reg add(reg a, reg b) { return _mm256_add_pd(a, b); }
  static double hsum(reg v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d high64 = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, high64));
  }
};

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
  using V = Vec<T>;
  constexpr std::size_t w = V::width;
  auto acc0 = V::zero(), acc1 = V::zero(), acc2 = V::zero(), acc3 = V::zero();
  std::size_t i = 0;
  for (; i + 4 * w <= n; i += 4 * w) {
    acc0 = V::fma(V::load(a + i), V::load(b + i), acc0);
    acc1 = V::fma(V::load(a + i + w), V::load(b + i + w), acc1);
    acc2 = V::fma(V::load(a + i + 2 * w), V::load(b + i + 2 * w), acc2);
    acc3 = V::fma(V::load(a + i + 3 * w), V::load(b + i + 3 * w), acc3);
  }
  for (; i + w <= n; i += w) acc0 = V::fma(V::load(a + i), V::load(b + i), acc0);
  T acc = V::hsum(V::add(V::add(acc0, acc1), V::add(acc2, acc3)));
  for (; i < n; ++i) acc = std::fma(a[i], b[i], acc);
  return acc;
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
  using V = Vec<T>;
  constexpr std::size_t w = V::width;
  const auto va = V::broadcast(alpha);
  std::size_t i = 0;
  for (; i + w <= n; i += w) V::store(y + i, V::fma(va, V::load(x + i), V::load(y + i)));
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

// Column-blocked: each C lane stays in a register while k runs, so every
// element is a sequential fused multiply-add chain over k.
template <typename T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t p, std::size_t q, std::size_t r) {
  using V = Vec<T>;
  constexpr std::size_t w = V::width;
  for (std::size_t i = 0; i < p; ++i) {
    const T* arow = a + i * q;
    T* crow = c + i * r;
    std::size_t j = 0;
    for (; j + 2 * w <= r; j += 2 * w) {
      auto c0 = V::load(crow + j), c1 = V::load(crow + j + w);
      for (std::size_t k = 0; k < q; ++k) {
        const auto av = V::broadcast(arow[k]);
        c0 = V::fma(av, V::load(b + k * r + j), c0);
        c1 = V::fma(av, V::load(b + k * r + j + w), c1);
      }
      V::store(crow + j, c0);
      V::store(crow + j + w, c1);
    }
    for (; j + w <= r; j += w) {
      auto c0 = V::load(crow + j);
      for (std::size_t k = 0; k < q; ++k) c0 = V::fma(V::broadcast(arow[k]), V::load(b + k * r + j), c0);
      V::store(crow + j, c0);
    }
    for (; j < r; ++j) {
      T acc = crow[j];
      for (std::size_t k = 0; k < q; ++k) acc = std::fma(arow[k], b[k * r + j], acc);
      crow[j] = acc;
    }
  }
}

template <typename T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t p, std::size_t q, std::size_t r) {
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < r; ++j) c[i * r + j] += dot(a + i * q, b + j * q, q);
}

template <typename T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t p, std::size_t q, std::size_t r) {
  using V = Vec<T>;
  constexpr std::size_t w = V::width;
  for (std::size_t i = 0; i < p; ++i) {
    T* crow = c + i * r;
    std::size_t j = 0;
    for (; j + w <= r; j += w) {
      auto c0 = V::load(crow + j);
      for (std::size_t k = 0; k < q; ++k) c0 = V::fma(V::broadcast(a[k * p + i]), V::load(b + k * r + j), c0);
      V::store(crow + j, c0);
    }
    for (; j < r; ++j) {
      T acc = crow[j];
      for (std::size_t k = 0; k < q; ++k) acc = std::fma(a[k * p + i], b[k * r + j], acc);
      crow[j] = acc;
    }
  }
}

template <typename T>
constexpr KernelTable<T> make_table() {
  return {Backend::Avx2, &dot<T>, &axpy<T>, &gemm_nn<T>, &gemm_nt<T>, &gemm_tn<T>};
}

constexpr KernelTable<float> kFloatTable = make_table<float>();
constexpr KernelTable<double> kDoubleTable = make_table<double>();

}  // namespace

const KernelTable<float>* avx2_float_table() noexcept { return &kFloatTable; }
const KernelTable<double>* avx2_double_table() noexcept { return &kDoubleTable; }

}  // namespace nmt::num::kernels
