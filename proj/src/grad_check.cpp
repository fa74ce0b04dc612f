#include "dualhead/grad_check.hpp"

#include "dualhead/error.hpp"
#include "dualhead/tape.hpp"

#include <algorithm>
#include <cmath>

namespace dualhead {

const GradCheckEntry& GradCheckReport::worst() const {
  if (entries.empty()) throw Error("gradient check report has no entries");
  return *std::max_element(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.max_rel_error < b.max_rel_error;
  });
}

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

GradCheckReport grad_check(const std::function<Tensor()>& f, std::vector<NamedTensor> inputs,
                           const GradCheckOptions& options) {
  if (!(options.eps > 0.0)) throw ConfigError("grad_check: eps must be positive");

  std::vector<bool> had_grad;
  for (auto& input : inputs) {
    had_grad.push_back(input.tensor.requires_grad());
    input.tensor.set_requires_grad(true);
    input.tensor.zero_grad();
  }

  Tape tape;
  {
    TapeScope scope(tape);
    Tensor loss = f();
    tape.backward(loss);
  }
  std::vector<Eigen::VectorXd> analytic;
  for (auto& input : inputs) analytic.push_back(input.tensor.grad());
  tape.reset();

  GradCheckReport report;
  report.tolerance = options.tolerance;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    auto& values = inputs[t].tensor.data();
    GradCheckEntry entry;
    entry.name = inputs[t].name;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      const double original = values[i];
      values[i] = original + options.eps;
      const double plus = f().item();
      values[i] = original - options.eps;
      const double minus = f().item();
      values[i] = original;
      const double numeric = (plus - minus) / (2.0 * options.eps);
      const double err = relative_error(analytic[t][i], numeric, options.floor);
      if (err > entry.max_rel_error || i == 0) {
        entry.max_rel_error = err;
        entry.worst_index = static_cast<std::size_t>(i);
        entry.analytic = analytic[t][i];
        entry.numeric = numeric;
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.entries.push_back(std::move(entry));
  }
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    inputs[t].tensor.zero_grad();
    if (!had_grad[t]) inputs[t].tensor.set_requires_grad(false);
  }
  report.passed = report.max_rel_error <= options.tolerance;
  return report;
}

GradCheckReport grad_check(const std::function<Tensor()>& f, const std::vector<Tensor>& inputs,
                           const GradCheckOptions& options) {
  std::vector<NamedTensor> named;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    named.push_back({"input" + std::to_string(i), inputs[i]});
  }
  return grad_check(f, std::move(named), options);
}

}  // namespace dualhead
