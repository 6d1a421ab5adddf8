#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kpam/terms.hpp"

namespace kpam {

struct GradientCheckReport {
  struct VariantResult {
    std::string variant;
    int trials = 0;
    double max_relative_error = 0.0;
    bool passed = false;
  };
  std::vector<VariantResult> variants;
  double max_relative_error = 0.0;
  bool passed = false;
};

// Compares every term variant's analytic Jacobian against central finite
// differences of its residual under the 6-dim local perturbation, on
// randomized transforms, keypoints and term parameters.
GradientCheckReport check_term_jacobians(int trials_per_variant = 100,
                                         std::uint64_t seed = 20240601,
                                         double fd_step = 1e-6, double tolerance = 1e-5);

}  // namespace kpam
