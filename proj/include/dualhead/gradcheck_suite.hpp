#pragma once

#include "dualhead/grad_check.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dualhead {

struct GradSuiteCase {
  std::string name;
  GradCheckReport report;
};

struct GradSuiteResult {
  std::vector<GradSuiteCase> cases;
  bool passed = false;
};

inline constexpr double kPrimitiveTolerance = 1e-5;
inline constexpr double kModelTolerance = 1e-4;

// Finite-difference checks of every primitive (tolerance 1e-5) and of the
// full dual-head model on the gradcheck encoder profile, with and without
// the head residual (tolerance 1e-4).
GradSuiteResult run_gradient_suite(std::uint64_t seed = 7);

std::vector<GradSuiteCase> primitive_gradient_cases(std::uint64_t seed);
GradSuiteCase model_gradient_case(bool residual, std::uint64_t seed);

}  // namespace dualhead
