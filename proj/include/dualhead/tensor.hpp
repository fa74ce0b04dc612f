#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

namespace dualhead {

using Shape = std::vector<std::size_t>;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

struct TapeState;

namespace detail {

struct TensorNode {
  Shape shape;
  Eigen::VectorXd data;
  // Empty means "no gradient"; a present gradient always has data.size().
  Eigen::VectorXd grad;
  bool requires_grad = false;
  std::weak_ptr<TapeState> tape;
};

}  // namespace detail

// Shared handle to a float64 n-d array stored row-major. Copies of a Tensor
// alias the same storage; use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, Eigen::VectorXd data);

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor from(Shape shape, std::initializer_list<double> values);
  static Tensor from(Shape shape, const std::vector<double>& values);
  static Tensor scalar(double value);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const;

  const Eigen::VectorXd& data() const;
  Eigen::VectorXd& data();
  double item() const;

  // View with the last axis as columns and every leading axis folded into rows.
  ConstMatrixMap matrix() const;
  MatrixMap matrix();

  bool requires_grad() const;
  // Turning gradients on allocates a zero gradient buffer.
  Tensor& set_requires_grad(bool on = true);
  bool has_grad() const;
  const Eigen::VectorXd& grad() const;
  Eigen::VectorXd& grad();
  void zero_grad();
  void clear_grad();

  Tensor clone() const;
  bool same_node(const Tensor& other) const noexcept { return node_ == other.node_; }

  const std::shared_ptr<detail::TensorNode>& node() const noexcept { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}
  detail::TensorNode& checked() const;

  std::shared_ptr<detail::TensorNode> node_;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

bool all_finite(const Eigen::VectorXd& values);

}  // namespace dualhead
