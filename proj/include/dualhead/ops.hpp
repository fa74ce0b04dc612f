#pragma once

#include "dualhead/rng.hpp"
#include "dualhead/tape.hpp"
#include "dualhead/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dualhead {

// Differentiable primitives. Each checks its shapes, rejects non-finite
// results with a NumericError naming the op, and records its gradient rule
// when a tape is active and an input requires a gradient.

Tensor matmul(const Tensor& a, const Tensor& b);

// y = x * weight + bias over the last axis of x: [.. x in] -> [.. x out].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// Exact GELU, x * Phi(x).
Tensor gelu(const Tensor& x);

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps);

// Inverted dropout. Identity (the same tensor) when !training or p == 0.
Tensor dropout(const Tensor& x, double p, bool training, RngState& rng);

// Mean over rows of -log softmax(logits)[label].
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

// Gathers rows of table [V x d]; the result has shape leading + {d}.
Tensor embedding(const Tensor& table, std::span<const int> ids, const Shape& leading);

// x [b x L x d] -> [b x d], the hidden state at `position` of every sequence.
Tensor select_position(const Tensor& x, std::size_t position);

// Multi-head scaled dot-product attention. q, k, v are [b x L x H] with H
// split into `heads` contiguous slices; key_mask is [b x L] (1 = attend).
// Masked keys receive exactly zero weight. When `probabilities` is non-null
// it receives the b*heads attention matrices, index batch * heads + head.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v,
                 std::span<const std::uint8_t> key_mask, std::size_t heads,
                 std::vector<RowMatrix>* probabilities = nullptr);

// Row-wise softmax of a [b x C] tensor; not recorded.
RowMatrix softmax_rows(const Tensor& logits);

double standard_normal_cdf(double x);

namespace fault {

// Test hook: when set, gelu records a wrong derivative so the gradient
// checker's negative control can be exercised end to end.
void set_gelu_derivative_fault(bool on) noexcept;
bool gelu_derivative_fault() noexcept;

}  // namespace fault

}  // namespace dualhead
