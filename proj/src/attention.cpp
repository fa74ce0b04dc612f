#include "dualhead/error.hpp"
#include "dualhead/ops.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <string>

namespace dualhead {

namespace {

using Stride = Eigen::OuterStride<>;
using ConstBlock = Eigen::Map<const RowMatrix, 0, Stride>;
using Block = Eigen::Map<RowMatrix, 0, Stride>;

}  // namespace

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v,
                 std::span<const std::uint8_t> key_mask, std::size_t heads,
                 std::vector<RowMatrix>* probabilities) {
  if (q.rank() != 3 || k.shape() != q.shape() || v.shape() != q.shape()) {
    throw DimensionError("attention: q " + to_string(q.shape()) + ", k " + to_string(k.shape()) +
                         ", v " + to_string(v.shape()));
  }
  const auto batch = static_cast<Eigen::Index>(q.dim(0));
  const auto length = static_cast<Eigen::Index>(q.dim(1));
  const auto hidden = static_cast<Eigen::Index>(q.dim(2));
  if (heads == 0 || q.dim(2) % heads != 0) {
    throw DimensionError("attention: hidden size " + std::to_string(hidden) +
                         " not divisible into " + std::to_string(heads) + " heads");
  }
  if (key_mask.size() != static_cast<std::size_t>(batch * length)) {
    throw DimensionError("attention: mask has " + std::to_string(key_mask.size()) +
                         " entries for " + to_string(q.shape()));
  }
  const auto nheads = static_cast<Eigen::Index>(heads);
  const auto head_dim = hidden / nheads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();

  auto probs = std::make_shared<std::vector<RowMatrix>>(static_cast<std::size_t>(batch * nheads));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(batch * length * hidden);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const auto* mask = key_mask.data() + b * length;
    bool any_key = false;
    for (Eigen::Index j = 0; j < length; ++j) any_key = any_key || mask[j] != 0;
    if (!any_key) {
      throw DimensionError("attention: sequence " + std::to_string(b) + " has no unmasked keys");
    }
    for (Eigen::Index h = 0; h < nheads; ++h) {
      const auto offset = b * length * hidden + h * head_dim;
      ConstBlock qb(q.data().data() + offset, length, head_dim, Stride(hidden));
      ConstBlock kb(k.data().data() + offset, length, head_dim, Stride(hidden));
      ConstBlock vb(v.data().data() + offset, length, head_dim, Stride(hidden));
      RowMatrix scores = (qb * kb.transpose()) * scale;
      for (Eigen::Index j = 0; j < length; ++j) {
        if (mask[j] == 0) scores.col(j).setConstant(neg_inf);
      }
      for (Eigen::Index i = 0; i < length; ++i) {
        const double m = scores.row(i).maxCoeff();
        scores.row(i) = (scores.row(i).array() - m).exp().matrix();
      }
      for (Eigen::Index j = 0; j < length; ++j) {
        if (mask[j] == 0) scores.col(j).setZero();
      }
      for (Eigen::Index i = 0; i < length; ++i) scores.row(i) /= scores.row(i).sum();
      Block ob(out.data() + offset, length, head_dim, Stride(hidden));
      ob.noalias() = scores * vb;
      (*probs)[static_cast<std::size_t>(b * nheads + h)] = std::move(scores);
    }
  }
  if (!out.allFinite()) throw NumericError("non-finite value produced by 'attention'");
  Tensor result(q.shape(), std::move(out));
  if (probabilities != nullptr) *probabilities = *probs;

  if (detail::should_record({&q, &k, &v})) {
    detail::record_op(
        "attention", {q, k, v}, result,
        [q, k, v, probs, batch, length, hidden, nheads, head_dim, scale](const Eigen::VectorXd& g) {
          Eigen::VectorXd dq = Eigen::VectorXd::Zero(g.size());
          Eigen::VectorXd dk = Eigen::VectorXd::Zero(g.size());
          Eigen::VectorXd dv = Eigen::VectorXd::Zero(g.size());
          for (Eigen::Index b = 0; b < batch; ++b) {
            for (Eigen::Index h = 0; h < nheads; ++h) {
              const auto offset = b * length * hidden + h * head_dim;
              const auto& p = (*probs)[static_cast<std::size_t>(b * nheads + h)];
              ConstBlock gb(g.data() + offset, length, head_dim, Stride(hidden));
              ConstBlock qb(q.data().data() + offset, length, head_dim, Stride(hidden));
              ConstBlock kb(k.data().data() + offset, length, head_dim, Stride(hidden));
              ConstBlock vb(v.data().data() + offset, length, head_dim, Stride(hidden));
              Block(dv.data() + offset, length, head_dim, Stride(hidden)).noalias() =
                  p.transpose() * gb;
              const RowMatrix dp = gb * vb.transpose();
              const Eigen::VectorXd row_dot = dp.cwiseProduct(p).rowwise().sum();
              const RowMatrix ds =
                  ((dp.array().colwise() - row_dot.array()) * p.array()).matrix() * scale;
              Block(dq.data() + offset, length, head_dim, Stride(hidden)).noalias() = ds * kb;
              Block(dk.data() + offset, length, head_dim, Stride(hidden)).noalias() =
                  ds.transpose() * qb;
            }
          }
          detail::accumulate_grad(q, dq);
          detail::accumulate_grad(k, dk);
          detail::accumulate_grad(v, dv);
        });
  }
  return result;
}

}  // namespace dualhead
