#include "nmt/numcore/kernels.hpp"

namespace nmt::num::kernels {
namespace {

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t p, std::size_t q, std::size_t r) {
  for (std::size_t i = 0; i < p; ++i) {
    T* crow = c + i * r;
    for (std::size_t k = 0; k < q; ++k) axpy(a[i * q + k], b + k * r, crow, r);
  }
}

template <typename T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t p, std::size_t q, std::size_t r) {
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < r; ++j) c[i * r + j] += dot(a + i * q, b + j * q, q);
}

template <typename T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t p, std::size_t q, std::size_t r) {
  for (std::size_t k = 0; k < q; ++k)
    for (std::size_t i = 0; i < p; ++i) axpy(a[k * p + i], b + k * r, c + i * r, r);
}

template <typename T>
constexpr KernelTable<T> make_table() {
  return {Backend::Scalar, &dot<T>, &axpy<T>, &gemm_nn<T>, &gemm_nt<T>, &gemm_tn<T>};
}

constexpr KernelTable<float> kFloatTable = make_table<float>();
constexpr KernelTable<double> kDoubleTable = make_table<double>();

}  // namespace

template <>
const KernelTable<float>& scalar_table<float>() noexcept {
  return kFloatTable;
}
template <>
const KernelTable<double>& scalar_table<double>() noexcept {
  return kDoubleTable;
}

}  // namespace nmt::num::kernels
