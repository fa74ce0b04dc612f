#pragma once

#include "dualhead/tensor.hpp"

#include <functional>
#include <string>
#include <vector>

namespace dualhead {

struct GradCheckEntry {
  std::string name;
  std::size_t worst_index = 0;
  double max_rel_error = 0.0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;

  const GradCheckEntry& worst() const;
};

struct GradCheckOptions {
  double eps = 1e-6;
  double tolerance = 1e-5;
  // Relative error is |a - n| / max(|a|, |n|, floor): below the floor the
  // check degrades to an absolute one so near-zero gradients are not judged
  // on finite-difference round-off.
  double floor = 1e-3;
};

// Compares the tape gradient of the scalar f() against central differences
// for every element of every input. f must read the inputs through the given
// handles; they are perturbed in place and restored afterwards.
GradCheckReport grad_check(const std::function<Tensor()>& f, std::vector<NamedTensor> inputs,
                           const GradCheckOptions& options = {});

GradCheckReport grad_check(const std::function<Tensor()>& f, const std::vector<Tensor>& inputs,
                           const GradCheckOptions& options = {});

double relative_error(double analytic, double numeric, double floor);

}  // namespace dualhead
