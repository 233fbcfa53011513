#include "nmt/numcore/adam.hpp"

#include <cmath>

namespace nmt::num {

template <typename T>
void AdamState<T>::apply(std::span<Parameter<T>* const> params, const Gradients<T>& grads) {
  for (Parameter<T>* p : params) {
    if (const Tensor<T>* g = grads.find(*p); g != nullptr && !g->same_shape(p->value)) {
      fail(ErrorKind::ShapeError, "adam: gradient shape " + shape_string(g->shape()) + " does not match parameter " +
                                      p->name + " " + shape_string(p->value.shape()));
    }
    if (auto it = moments_.find(p->name); it != moments_.end() && !it->second.first.same_shape(p->value)) {
      fail(ErrorKind::ShapeError, "adam: moment shape does not match parameter " + p->name);
    }
  }

  ++step_;
  const double t = static_cast<double>(step_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  const T b1 = static_cast<T>(config_.beta1);
  const T b2 = static_cast<T>(config_.beta2);

  for (Parameter<T>* p : params) {
    auto [it, inserted] = moments_.try_emplace(p->name);
    Moments& m = it->second;
    if (inserted) {
      m.first = Tensor<T>::zeros_like(p->value);
      m.second = Tensor<T>::zeros_like(p->value);
    }
    const Tensor<T>* g = grads.find(*p);
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const T gi = g ? (*g)[i] : T{0};
      m.first[i] = b1 * m.first[i] + (T(1) - b1) * gi;
      m.second[i] = b2 * m.second[i] + (T(1) - b2) * gi * gi;
      const double m_hat = static_cast<double>(m.first[i]) / c1;
      const double v_hat = static_cast<double>(m.second[i]) / c2;
      p->value[i] -= static_cast<T>(config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon));
    }
  }
}

template class AdamState<float>;
template class AdamState<double>;

}  // namespace nmt::num
