#include "dualhead/ops.hpp"

#include "dualhead/error.hpp"

#include <atomic>
#include <cmath>
#include <numbers>
#include <string>

namespace dualhead {

namespace fault {
namespace {
std::atomic<bool> gelu_fault{false};
}
void set_gelu_derivative_fault(bool on) noexcept { gelu_fault.store(on); }
bool gelu_derivative_fault() noexcept { return gelu_fault.load(); }
}  // namespace fault

namespace {

using detail::accumulate_grad;

Tensor finish(std::string_view op, Shape shape, Eigen::VectorXd data) {
  if (!data.allFinite()) {
    throw NumericError("non-finite value produced by '" + std::string(op) + "'");
  }
  return Tensor(std::move(shape), std::move(data));
}

Eigen::Map<const Eigen::VectorXd> flat(const RowMatrix& m) {
  return {m.data(), m.size()};
}

void require_same_shape(std::string_view op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
}

}  // namespace

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: cannot multiply " + to_string(a.shape()) + " by " +
                         to_string(b.shape()));
  }
  const auto m = static_cast<Eigen::Index>(a.dim(0));
  const auto n = static_cast<Eigen::Index>(b.dim(1));
  Eigen::VectorXd out(m * n);
  MatrixMap(out.data(), m, n).noalias() = a.matrix() * b.matrix();
  auto result = finish("matmul", {a.dim(0), b.dim(1)}, std::move(out));
  if (detail::should_record({&a, &b})) {
    detail::record_op("matmul", {a, b}, result, [a, b, m, n](const Eigen::VectorXd& g) {
      ConstMatrixMap grad(g.data(), m, n);
      if (a.requires_grad()) {
        RowMatrix da = grad * b.matrix().transpose();
        accumulate_grad(a, flat(da));
      }
      if (b.requires_grad()) {
        RowMatrix db = a.matrix().transpose() * grad;
        accumulate_grad(b, flat(db));
      }
    });
  }
  return result;
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (weight.rank() != 2 || x.rank() == 0 || x.shape().back() != weight.dim(0) ||
      bias.rank() != 1 || bias.dim(0) != weight.dim(1)) {
    throw DimensionError("linear: input " + to_string(x.shape()) + ", weight " +
                         to_string(weight.shape()) + ", bias " + to_string(bias.shape()));
  }
  Shape out_shape = x.shape();
  out_shape.back() = weight.dim(1);
  const auto rows = x.matrix().rows();
  const auto cols = static_cast<Eigen::Index>(weight.dim(1));
  Eigen::VectorXd out(rows * cols);
  MatrixMap y(out.data(), rows, cols);
  y.noalias() = x.matrix() * weight.matrix();
  y.rowwise() += bias.data().transpose();
  auto result = finish("linear", std::move(out_shape), std::move(out));
  if (detail::should_record({&x, &weight, &bias})) {
    detail::record_op("linear", {x, weight, bias}, result,
                      [x, weight, bias, rows, cols](const Eigen::VectorXd& g) {
                        ConstMatrixMap grad(g.data(), rows, cols);
                        if (x.requires_grad()) {
                          RowMatrix dx = grad * weight.matrix().transpose();
                          accumulate_grad(x, flat(dx));
                        }
                        if (weight.requires_grad()) {
                          RowMatrix dw = x.matrix().transpose() * grad;
                          accumulate_grad(weight, flat(dw));
                        }
                        if (bias.requires_grad()) {
                          Eigen::VectorXd db = grad.colwise().sum().transpose();
                          accumulate_grad(bias, db);
                        }
                      });
  }
  return result;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  auto result = finish("add", a.shape(), a.data() + b.data());
  if (detail::should_record({&a, &b})) {
    detail::record_op("add", {a, b}, result, [a, b](const Eigen::VectorXd& g) {
      accumulate_grad(a, g);
      accumulate_grad(b, g);
    });
  }
  return result;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  auto result = finish("mul", a.shape(), a.data().cwiseProduct(b.data()));
  if (detail::should_record({&a, &b})) {
    detail::record_op("mul", {a, b}, result, [a, b](const Eigen::VectorXd& g) {
      if (a.requires_grad()) accumulate_grad(a, g.cwiseProduct(b.data()));
      if (b.requires_grad()) accumulate_grad(b, g.cwiseProduct(a.data()));
    });
  }
  return result;
}

Tensor scale(const Tensor& x, double factor) {
  auto result = finish("scale", x.shape(), x.data() * factor);
  if (detail::should_record({&x})) {
    detail::record_op("scale", {x}, result,
                      [x, factor](const Eigen::VectorXd& g) { accumulate_grad(x, g * factor); });
  }
  return result;
}

Tensor sum(const Tensor& x) {
  auto result = finish("sum", {}, Eigen::VectorXd::Constant(1, x.data().sum()));
  if (detail::should_record({&x})) {
    const auto n = x.data().size();
    detail::record_op("sum", {x}, result, [x, n](const Eigen::VectorXd& g) {
      accumulate_grad(x, Eigen::VectorXd::Constant(n, g[0]));
    });
  }
  return result;
}

Tensor mean(const Tensor& x) {
  const auto n = x.data().size();
  auto result = finish("mean", {}, Eigen::VectorXd::Constant(1, x.data().sum() / double(n)));
  if (detail::should_record({&x})) {
    detail::record_op("mean", {x}, result, [x, n](const Eigen::VectorXd& g) {
      accumulate_grad(x, Eigen::VectorXd::Constant(n, g[0] / double(n)));
    });
  }
  return result;
}

Tensor gelu(const Tensor& x) {
  const auto& in = x.data();
  Eigen::VectorXd out(in.size());
  for (Eigen::Index i = 0; i < in.size(); ++i) out[i] = in[i] * standard_normal_cdf(in[i]);
  auto result = finish("gelu", x.shape(), std::move(out));
  if (detail::should_record({&x})) {
    const bool faulty = fault::gelu_derivative_fault();
    detail::record_op("gelu", {x}, result, [x, faulty](const Eigen::VectorXd& g) {
      const auto& v = x.data();
      Eigen::VectorXd dx(v.size());
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double pdf = std::exp(-0.5 * v[i] * v[i]) * (std::numbers::inv_sqrtpi / std::numbers::sqrt2);
        const double derivative = faulty ? standard_normal_cdf(v[i])
                                         : standard_normal_cdf(v[i]) + v[i] * pdf;
        dx[i] = g[i] * derivative;
      }
      accumulate_grad(x, dx);
    });
  }
  return result;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  if (x.rank() == 0) throw DimensionError("layer_norm: input has no feature dimension");
  if (!(eps > 0.0)) throw ConfigError("layer_norm: eps must be positive");
  const auto d = x.shape().back();
  if (d == 0) throw DimensionError("layer_norm: empty feature dimension");
  if (gain.shape() != Shape{d} || bias.shape() != Shape{d}) {
    throw DimensionError("layer_norm: input " + to_string(x.shape()) + " with gain " +
                         to_string(gain.shape()) + " and bias " + to_string(bias.shape()));
  }
  const auto in = x.matrix();
  const auto rows = in.rows();
  const auto cols = in.cols();
  RowMatrix normalized(rows, cols);
  Eigen::VectorXd inv_std(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double mu = in.row(r).mean();
    auto centered = (in.row(r).array() - mu).matrix();
    const double var = centered.squaredNorm() / double(cols);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    normalized.row(r) = centered * inv_std[r];
  }
  Eigen::VectorXd out(rows * cols);
  MatrixMap y(out.data(), rows, cols);
  y = (normalized.array().rowwise() * gain.data().transpose().array()).matrix();
  y.rowwise() += bias.data().transpose();
  auto result = finish("layer_norm", x.shape(), std::move(out));
  if (detail::should_record({&x, &gain, &bias})) {
    detail::record_op(
        "layer_norm", {x, gain, bias}, result,
        [x, gain, bias, normalized = std::move(normalized), inv_std = std::move(inv_std), rows,
         cols](const Eigen::VectorXd& g) {
          ConstMatrixMap grad(g.data(), rows, cols);
          if (gain.requires_grad()) {
            Eigen::VectorXd dgain = grad.cwiseProduct(normalized).colwise().sum().transpose();
            accumulate_grad(gain, dgain);
          }
          if (bias.requires_grad()) {
            Eigen::VectorXd dbias = grad.colwise().sum().transpose();
            accumulate_grad(bias, dbias);
          }
          if (x.requires_grad()) {
            RowMatrix dnorm = (grad.array().rowwise() * gain.data().transpose().array()).matrix();
            RowMatrix dx(rows, cols);
            for (Eigen::Index r = 0; r < rows; ++r) {
              const double mean_d = dnorm.row(r).mean();
              const double mean_dn = dnorm.row(r).dot(normalized.row(r)) / double(cols);
              dx.row(r) = inv_std[r] * (dnorm.row(r).array() - mean_d -
                                        normalized.row(r).array() * mean_dn)
                                           .matrix();
            }
            accumulate_grad(x, flat(dx));
          }
        });
  }
  return result;
}

Tensor dropout(const Tensor& x, double p, bool training, RngState& rng) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw InvalidProbability("dropout: probability " + std::to_string(p) + " outside [0, 1)");
  }
  if (!training || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  Eigen::VectorXd mask(x.data().size());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask[i] = rng.uniform() < p ? 0.0 : keep_scale;
  auto result = finish("dropout", x.shape(), x.data().cwiseProduct(mask));
  if (detail::should_record({&x})) {
    detail::record_op("dropout", {x}, result, [x, mask = std::move(mask)](const Eigen::VectorXd& g) {
      accumulate_grad(x, g.cwiseProduct(mask));
    });
  }
  return result;
}

RowMatrix softmax_rows(const Tensor& logits) {
  const auto in = logits.matrix();
  RowMatrix probs(in.rows(), in.cols());
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    const double m = in.row(r).maxCoeff();
    probs.row(r) = (in.row(r).array() - m).exp().matrix();
    probs.row(r) /= probs.row(r).sum();
  }
  return probs;
}

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2) {
    throw DimensionError("softmax_cross_entropy: logits must be [batch x classes], got " +
                         to_string(logits.shape()));
  }
  const auto rows = static_cast<Eigen::Index>(logits.dim(0));
  const auto classes = static_cast<Eigen::Index>(logits.dim(1));
  if (labels.size() != logits.dim(0)) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(rows) + " rows");
  }
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] < 0 || labels[r] >= classes) {
      throw LabelError("label " + std::to_string(labels[r]) + " out of range [0, " +
                       std::to_string(classes) + ") at row " + std::to_string(r));
    }
  }
  const auto in = logits.matrix();
  RowMatrix probs(rows, classes);
  double total = 0.0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    Eigen::Index top = 0;
    const double m = in.row(r).maxCoeff(&top);
    probs.row(r) = (in.row(r).array() - m).exp().matrix();
    const double rest = probs.row(r).sum() - probs(r, top);
    probs.row(r) /= (1.0 + rest);
    // (max - target) + log(sum exp(x - max)), both terms non-negative.
    total += (m - in(r, labels[r])) + std::log1p(rest);
  }
  auto result = finish("softmax_cross_entropy", {}, Eigen::VectorXd::Constant(1, total / double(rows)));
  if (detail::should_record({&logits})) {
    std::vector<int> targets(labels.begin(), labels.end());
    detail::record_op("softmax_cross_entropy", {logits}, result,
                      [logits, probs = std::move(probs), targets = std::move(targets),
                       rows](const Eigen::VectorXd& g) {
                        RowMatrix d = probs;
                        for (Eigen::Index r = 0; r < rows; ++r) d(r, targets[r]) -= 1.0;
                        d *= g[0] / double(rows);
                        accumulate_grad(logits, flat(d));
                      });
  }
  return result;
}

Tensor embedding(const Tensor& table, std::span<const int> ids, const Shape& leading) {
  if (table.rank() != 2) {
    throw DimensionError("embedding: table must be [vocab x dim], got " + to_string(table.shape()));
  }
  if (numel(leading) != ids.size()) {
    throw DimensionError("embedding: " + std::to_string(ids.size()) + " ids for leading shape " +
                         to_string(leading));
  }
  const auto vocab = static_cast<int>(table.dim(0));
  const auto width = static_cast<Eigen::Index>(table.dim(1));
  for (int id : ids) {
    if (id < 0 || id >= vocab) {
      throw DimensionError("embedding: id " + std::to_string(id) + " out of range [0, " +
                           std::to_string(vocab) + ")");
    }
  }
  const auto rows = static_cast<Eigen::Index>(ids.size());
  Eigen::VectorXd out(rows * width);
  MatrixMap y(out.data(), rows, width);
  const auto source = table.matrix();
  for (Eigen::Index r = 0; r < rows; ++r) y.row(r) = source.row(ids[r]);
  Shape out_shape = leading;
  out_shape.push_back(table.dim(1));
  auto result = finish("embedding", std::move(out_shape), std::move(out));
  if (detail::should_record({&table})) {
    std::vector<int> index(ids.begin(), ids.end());
    detail::record_op("embedding", {table}, result,
                      [table, index = std::move(index), rows, width](const Eigen::VectorXd& g) {
                        ConstMatrixMap grad(g.data(), rows, width);
                        RowMatrix d = RowMatrix::Zero(table.matrix().rows(), width);
                        for (Eigen::Index r = 0; r < rows; ++r) d.row(index[r]) += grad.row(r);
                        accumulate_grad(table, flat(d));
                      });
  }
  return result;
}

Tensor select_position(const Tensor& x, std::size_t position) {
  if (x.rank() != 3) {
    throw DimensionError("select_position: expected [batch x length x dim], got " +
                         to_string(x.shape()));
  }
  const auto batch = x.dim(0);
  const auto length = x.dim(1);
  const auto width = static_cast<Eigen::Index>(x.dim(2));
  if (position >= length) {
    throw DimensionError("select_position: position " + std::to_string(position) +
                         " beyond length " + std::to_string(length));
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(batch) * width);
  const auto in = x.matrix();
  for (std::size_t b = 0; b < batch; ++b) {
    out.segment(static_cast<Eigen::Index>(b) * width, width) =
        in.row(static_cast<Eigen::Index>(b * length + position)).transpose();
  }
  auto result = finish("select_position", {batch, x.dim(2)}, std::move(out));
  if (detail::should_record({&x})) {
    detail::record_op("select_position", {x}, result,
                      [x, batch, length, width, position](const Eigen::VectorXd& g) {
                        Eigen::VectorXd d = Eigen::VectorXd::Zero(x.data().size());
                        for (std::size_t b = 0; b < batch; ++b) {
                          d.segment(static_cast<Eigen::Index>(b * length + position) * width, width) =
                              g.segment(static_cast<Eigen::Index>(b) * width, width);
                        }
                        accumulate_grad(x, d);
                      });
  }
  return result;
}

}  // namespace dualhead
