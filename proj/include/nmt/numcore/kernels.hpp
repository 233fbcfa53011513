#pragma once

#include <cstddef>
#include <string_view>

// Inner-loop kernels behind the tensor ops. Every kernel has a scalar
// reference implementation; an AVX2+FMA variant is selected at runtime when
// the CPU supports it. All matrix arguments are dense row-major.
//
// Each output element is accumulated in a fixed order that depends only on
// the inner dimension, never on how many rows or columns surround it, so
// adding padding rows/columns to an operand leaves existing entries bit-identical.

namespace nmt::num::kernels {

enum class Backend { Scalar, Avx2 };

std::string_view to_string(Backend backend) noexcept;

template <typename T>
struct KernelTable {
  Backend backend;
  /// sum_i a[i] * b[i]
  T (*dot)(const T* a, const T* b, std::size_t n);
  /// y += alpha * x
  void (*axpy)(T alpha, const T* x, T* y, std::size_t n);
  /// C[p x r] += A[p x q] * B[q x r]
  void (*gemm_nn)(const T* a, const T* b, T* c, std::size_t p, std::size_t q, std::size_t r);
  /// C[p x r] += A[p x q] * B[r x q]^T
  void (*gemm_nt)(const T* a, const T* b, T* c, std::size_t p, std::size_t q, std::size_t r);
  /// C[p x r] += A[q x p]^T * B[q x r]
  void (*gemm_tn)(const T* a, const T* b, T* c, std::size_t p, std::size_t q, std::size_t r);
};

template <typename T>
const KernelTable<T>& scalar_table() noexcept;

/// nullptr when the binary was built without AVX2 support or the CPU lacks it.
template <typename T>
const KernelTable<T>* avx2_table() noexcept;

/// Table used by all tensor ops. Chosen once from CPU features; the
/// environment variable NMT_KERNELS=scalar forces the reference path.
template <typename T>
const KernelTable<T>& active() noexcept;

Backend active_backend() noexcept;

/// Override the runtime choice (tests, benchmarking). Requesting Avx2 on a
/// machine without it returns false and leaves the selection unchanged.
bool select_backend(Backend backend) noexcept;

bool cpu_supports_avx2() noexcept;

}  // namespace nmt::num::kernels
