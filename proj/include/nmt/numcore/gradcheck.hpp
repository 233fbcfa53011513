#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "nmt/numcore/tape.hpp"

namespace nmt::num {

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string parameter;      ///< name of the parameter holding the worst coordinate
  std::size_t coordinate = 0; ///< flat index into that parameter
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates_checked = 0;
};

/// Builds the scalar loss on a fresh tape from the current parameter values.
template <typename T>
using LossBuilder = std::function<Var<T>(Tape<T>&)>;

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

/// Compares the tape gradient of `build` against central differences
/// (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate of every parameter.
/// Parameters are restored exactly afterwards.
template <typename T>
GradCheckReport finite_diff_check(const LossBuilder<T>& build, std::span<Parameter<T>* const> params, double h = 1e-4) {
  if (!(h > 0.0)) fail(ErrorKind::NumericalError, "finite-difference step must be positive");

  Gradients<T> analytic;
  {
    Tape<T> tape;
    Var<T> loss = build(tape);
    analytic = tape.backward(loss);
  }
  auto evaluate = [&build]() {
    Tape<T> tape;
    const double value = static_cast<double>(build(tape).value()[0]);
    if (!std::isfinite(value)) fail(ErrorKind::NumericalError, "loss evaluation is not finite");
    return value;
  };

  GradCheckReport report;
  for (Parameter<T>* p : params) {
    const Tensor<T> grad = analytic.of(*p);
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const T original = p->value[i];
      p->value[i] = static_cast<T>(original + h);
      const double plus = evaluate();
      p->value[i] = static_cast<T>(original - h);
      const double minus = evaluate();
      p->value[i] = original;

      const double numeric = (plus - minus) / (2.0 * h);
      const double err = relative_error(static_cast<double>(grad[i]), numeric);
      ++report.coordinates_checked;
      if (report.coordinates_checked == 1 || err > report.max_relative_error) {
        report.max_relative_error = err;
        report.parameter = p->name;
        report.coordinate = i;
        report.analytic = static_cast<double>(grad[i]);
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace nmt::num
