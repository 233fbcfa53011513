#include <atomic>
#include <cstdlib>
#include <string>

#include "nmt/numcore/kernels.hpp"

namespace nmt::num::kernels {

#if defined(NMT_HAVE_AVX2_KERNELS)
const KernelTable<float>* avx2_float_table() noexcept;
const KernelTable<double>* avx2_double_table() noexcept;
#endif

namespace {

Backend initial_backend() noexcept {
  if (const char* env = std::getenv("NMT_KERNELS"); env != nullptr && std::string(env) == "scalar") {
    return Backend::Scalar;
  }
  return cpu_supports_avx2() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& selected() noexcept {
  static std::atomic<Backend> backend{initial_backend()};
  return backend;
}

}  // namespace

std::string_view to_string(Backend backend) noexcept {
  return backend == Backend::Avx2 ? "avx2" : "scalar";
}

bool cpu_supports_avx2() noexcept {
#if defined(NMT_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return supported;
#else
  return false;
#endif
}

template <>
const KernelTable<float>* avx2_table<float>() noexcept {
#if defined(NMT_HAVE_AVX2_KERNELS)
  return cpu_supports_avx2() ? avx2_float_table() : nullptr;
#else
  return nullptr;
#endif
}

template <>
const KernelTable<double>* avx2_table<double>() noexcept {
#if defined(NMT_HAVE_AVX2_KERNELS)
  return cpu_supports_avx2() ? avx2_double_table() : nullptr;
#else
  return nullptr;
#endif
}

Backend active_backend() noexcept { return selected().load(std::memory_order_relaxed); }

bool select_backend(Backend backend) noexcept {
  if (backend == Backend::Avx2 && !cpu_supports_avx2()) return false;
  selected().store(backend, std::memory_order_relaxed);
  return true;
}

template <typename T>
const KernelTable<T>& active() noexcept {
  if (active_backend() == Backend::Avx2) {
    if (const auto* table = avx2_table<T>()) return *table;
  }
  return scalar_table<T>();
}

template const KernelTable<float>& active<float>() noexcept;
template const KernelTable<double>& active<double>() noexcept;

}  // namespace nmt::num::kernels
