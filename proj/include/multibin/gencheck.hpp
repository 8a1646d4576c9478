#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace multibin {

// One randomized network/ensemble configuration checked against central
// finite differences. rel err = |analytic - fd| / max(1, |analytic|, |fd|).
struct GradCheckCase {
  std::string description;
  std::size_t parameter_count = 0;
  double max_rel_err = 0.0;
  bool pass = false;
};

struct GradCheckReport {
  std::vector<GradCheckCase> cases;
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  bool all_pass = false;
};

// Sweeps every parameter of n_cases seeded random configurations (all head
// modes, trunk depths 0-2, with and without L2) and compares the analytic
// gradient of the total loss against (f(p+eps) - f(p-eps)) / (2 eps).
GradCheckReport run_gradient_checks(std::size_t n_cases = 12, uint64_t seed = 2024,
                                    double epsilon = 1e-5, double tolerance = 1e-4);

}  // namespace multibin
