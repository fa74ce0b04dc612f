#include "dualhead/optimizer.hpp"

#include "dualhead/error.hpp"

#include <cmath>

namespace dualhead {

void optimizer_step(std::span<const NamedTensor> params, OptimizerState& state, double learning_rate,
                    double weight_decay, const AdamWConfig& config) {
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) throw Error("optimizer: parameter '" + p.name + "' has no gradient");
  }
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.push_back(Eigen::VectorXd::Zero(p.tensor.data().size()));
      state.second_moment.push_back(Eigen::VectorXd::Zero(p.tensor.data().size()));
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw DimensionError("optimizer: state holds " + std::to_string(state.first_moment.size()) +
                         " moments for " + std::to_string(params.size()) + " parameters");
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction_1 = 1.0 - std::pow(config.beta1, t);
  const double correction_2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor tensor = params[i].tensor;
    auto& value = tensor.data();
    const auto& grad = tensor.grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    if (m.size() != value.size()) {
      throw DimensionError("optimizer: moment shape mismatch for '" + params[i].name + "'");
    }
    m = config.beta1 * m + (1.0 - config.beta1) * grad;
    v = config.beta2 * v + (1.0 - config.beta2) * grad.cwiseProduct(grad);
    value *= 1.0 - learning_rate * weight_decay;
    value.array() -= learning_rate * (m.array() / correction_1) /
                     ((v.array() / correction_2).sqrt() + config.epsilon);
  }
}

double global_grad_norm(std::span<const NamedTensor> params) {
  double total = 0.0;
  for (const auto& p : params) {
    if (p.tensor.has_grad()) total += p.tensor.grad().squaredNorm();
  }
  return std::sqrt(total);
}

double clip_grad_norm(std::span<const NamedTensor> params, double max_norm) {
  if (!(max_norm > 0.0)) throw ConfigError("grad clip must be positive");
  const double norm = global_grad_norm(params);
  if (norm > max_norm) {
    const double factor = max_norm / norm;
    for (const auto& p : params) {
      Tensor tensor = p.tensor;
      if (tensor.has_grad()) tensor.grad() *= factor;
    }
  }
  return norm;
}

}  // namespace dualhead
