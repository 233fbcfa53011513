#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nmt/numcore/gradcheck.hpp"

namespace nmt::train {

struct GradientCase {
  std::string loss;  // "L_N", "L_S" or "L_total"
  std::uint64_t seed = 0;
  num::GradCheckReport report;
};

struct GradientSuiteReport {
  std::vector<GradientCase> cases;
  double max_relative_error = 0;
  const GradientCase* worst() const;
};

/// Finite-difference checks in 64-bit arithmetic on `instances` random
/// toy instances per loss (m, l <= 12, d <= 16), seeds seed, seed + 1, ...
/// L_N covers projections and both embedding inputs under random masks,
/// L_S the self-attention head and classifier, L_total a whole training
/// batch (encoder included) of alternating protein-wise and pair tasks.
GradientSuiteReport run_gradient_suite(std::uint64_t seed = 0, std::size_t instances = 20);

}  // namespace nmt::train
