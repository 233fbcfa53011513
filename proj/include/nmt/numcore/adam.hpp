#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>

#include "nmt/numcore/tape.hpp"

namespace nmt::num {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moments are keyed by parameter name, so a model copy can continue from
/// the same optimizer state.
template <typename T>
class AdamState {
 public:
  explicit AdamState(AdamConfig config = {}) : config_(config) {}

  const AdamConfig& config() const noexcept { return config_; }
  std::uint64_t step() const noexcept { return step_; }

  struct Moments {
    Tensor<T> first;
    Tensor<T> second;
  };
  const Moments* moments(const std::string& name) const {
    auto it = moments_.find(name);
    return it == moments_.end() ? nullptr : &it->second;
  }

  /// Bias-corrected Adam update of every parameter in `params`; parameters
  /// without a recorded gradient are treated as having a zero gradient.
  void apply(std::span<Parameter<T>* const> params, const Gradients<T>& grads);

 private:
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::unordered_map<std::string, Moments> moments_;
};

template <typename T>
void adam_step(std::span<Parameter<T>* const> params, const Gradients<T>& grads, AdamState<T>& state) {
  state.apply(params, grads);
}

}  // namespace nmt::num
