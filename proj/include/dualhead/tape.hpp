#pragma once

#include "dualhead/tensor.hpp"

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace dualhead {

// Receives the gradient of the recorded output and accumulates into the
// op's inputs via accumulate_grad().
using BackwardFn = std::function<void(const Eigen::VectorXd& output_grad)>;

struct TapeRecord {
  std::string op;
  std::vector<Tensor> inputs;
  Tensor output;
  BackwardFn backward;
};

struct TapeState {
  std::vector<TapeRecord> records;
  bool consumed = false;
};

// Ordered log of primitive ops. Ops record onto the tape made active on the
// current thread by a TapeScope; with no active tape nothing is recorded.
class Tape {
 public:
  Tape();

  void record(std::string_view op, std::vector<Tensor> inputs, const Tensor& output,
              BackwardFn backward);

  // Runs every record once, newest first. A second call before reset() is an error.
  void backward(const Tensor& loss);
  void reset();

  std::size_t size() const { return state_->records.size(); }
  bool consumed() const { return state_->consumed; }
  std::vector<std::string> op_names() const;

 private:
  std::shared_ptr<TapeState> state_;
};

class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape() noexcept;

// Backpropagates through the tape that produced `loss`.
void backward(const Tensor& loss);

namespace detail {

void accumulate_grad(const Tensor& target, const Eigen::Ref<const Eigen::VectorXd>& delta);

// Records `output` on the active tape when any input requires a gradient.
void record_op(std::string_view op, std::vector<Tensor> inputs, const Tensor& output,
               BackwardFn backward);

bool should_record(std::initializer_list<const Tensor*> inputs);

}  // namespace detail

}  // namespace dualhead
