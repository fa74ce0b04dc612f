#pragma once

#include "dualhead/tensor.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace dualhead {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  std::vector<Eigen::VectorXd> first_moment;
  std::vector<Eigen::VectorXd> second_moment;
  std::size_t step = 0;
};

// Adaptive-moment step with decoupled weight decay and bias correction:
//   p <- p - lr * wd * p - lr * m_hat / (sqrt(v_hat) + eps).
// Gradients are read from the tensors; a tensor without one is an error.
void optimizer_step(std::span<const NamedTensor> params, OptimizerState& state, double learning_rate,
                    double weight_decay, const AdamWConfig& config = {});

double global_grad_norm(std::span<const NamedTensor> params);

// Rescales all gradients so their joint L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_grad_norm(std::span<const NamedTensor> params, double max_norm);

}  // namespace dualhead
