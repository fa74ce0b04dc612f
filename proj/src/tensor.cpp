#include "dualhead/tensor.hpp"

#include "dualhead/error.hpp"

#include <sstream>

namespace dualhead {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto extent : shape) n *= extent;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << " x ";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

bool all_finite(const Eigen::VectorXd& values) { return values.allFinite(); }

Tensor::Tensor(Shape shape, Eigen::VectorXd data) {
  for (auto extent : shape) {
    if (extent == 0) throw DimensionError("tensor shape " + to_string(shape) + " has a zero extent");
  }
  if (static_cast<std::size_t>(data.size()) != numel(shape)) {
    throw DimensionError("tensor shape " + to_string(shape) + " does not match " +
                         std::to_string(data.size()) + " values");
  }
  node_ = std::make_shared<detail::TensorNode>();
  node_->shape = std::move(shape);
  node_->data = std::move(data);
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  const auto n = static_cast<Eigen::Index>(numel(shape));
  return Tensor(std::move(shape), Eigen::VectorXd::Constant(n, value));
}

Tensor Tensor::from(Shape shape, std::initializer_list<double> values) {
  return from(std::move(shape), std::vector<double>(values));
}

Tensor Tensor::from(Shape shape, const std::vector<double>& values) {
  Eigen::VectorXd data =
      Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  return Tensor(std::move(shape), std::move(data));
}

Tensor Tensor::scalar(double value) { return Tensor({}, Eigen::VectorXd::Constant(1, value)); }

detail::TensorNode& Tensor::checked() const {
  if (!node_) throw Error("use of an undefined tensor");
  return *node_;
}

const Shape& Tensor::shape() const { return checked().shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " + to_string(s));
  }
  return s[axis];
}

std::size_t Tensor::size() const { return static_cast<std::size_t>(checked().data.size()); }

const Eigen::VectorXd& Tensor::data() const { return checked().data; }
Eigen::VectorXd& Tensor::data() { return checked().data; }

double Tensor::item() const {
  const auto& node = checked();
  if (node.data.size() != 1) {
    throw DimensionError("item() on non-scalar tensor " + to_string(node.shape));
  }
  return node.data[0];
}

namespace {
std::pair<Eigen::Index, Eigen::Index> matrix_extent(const detail::TensorNode& node) {
  const Eigen::Index cols = node.shape.empty() ? 1 : static_cast<Eigen::Index>(node.shape.back());
  return {node.data.size() / cols, cols};
}
}  // namespace

ConstMatrixMap Tensor::matrix() const {
  const auto& node = checked();
  const auto [rows, cols] = matrix_extent(node);
  return ConstMatrixMap(node.data.data(), rows, cols);
}

MatrixMap Tensor::matrix() {
  auto& node = checked();
  const auto [rows, cols] = matrix_extent(node);
  return MatrixMap(node.data.data(), rows, cols);
}

bool Tensor::requires_grad() const { return checked().requires_grad; }

Tensor& Tensor::set_requires_grad(bool on) {
  auto& node = checked();
  node.requires_grad = on;
  if (on && node.grad.size() == 0) node.grad = Eigen::VectorXd::Zero(node.data.size());
  if (!on) node.grad.resize(0);
  return *this;
}

bool Tensor::has_grad() const { return checked().grad.size() != 0; }

const Eigen::VectorXd& Tensor::grad() const {
  const auto& node = checked();
  if (node.grad.size() == 0) throw Error("tensor " + to_string(node.shape) + " has no gradient");
  return node.grad;
}

Eigen::VectorXd& Tensor::grad() {
  auto& node = checked();
  if (node.grad.size() == 0) throw Error("tensor " + to_string(node.shape) + " has no gradient");
  return node.grad;
}

void Tensor::zero_grad() {
  auto& node = checked();
  node.grad = Eigen::VectorXd::Zero(node.data.size());
}

void Tensor::clear_grad() { checked().grad.resize(0); }

Tensor Tensor::clone() const {
  const auto& node = checked();
  Tensor copy(node.shape, node.data);
  if (node.requires_grad) copy.set_requires_grad(true);
  return copy;
}

}  // namespace dualhead
