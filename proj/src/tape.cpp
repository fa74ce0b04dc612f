#include "dualhead/tape.hpp"

#include "dualhead/error.hpp"

namespace dualhead {

namespace {
thread_local Tape* current_tape = nullptr;

void run_backward(TapeState& state, const Tensor& loss) {
  if (loss.size() != 1) {
    throw DimensionError("backward() needs a scalar loss, got " + to_string(loss.shape()));
  }
  if (state.consumed) throw TapeError("backward() called twice without reset()");
  state.consumed = true;

  detail::accumulate_grad(loss, Eigen::VectorXd::Ones(1));
  for (auto it = state.records.rbegin(); it != state.records.rend(); ++it) {
    const auto& node = *it->output.node();
    if (node.grad.size() == 0) continue;
    it->backward(node.grad);
    for (const auto& input : it->inputs) {
      const auto& grad = input.node()->grad;
      if (grad.size() != 0 && !grad.allFinite()) {
        throw NumericError("non-finite gradient produced by backward of '" + it->op + "'");
      }
    }
  }
}

}  // namespace

Tape::Tape() : state_(std::make_shared<TapeState>()) {}

void Tape::record(std::string_view op, std::vector<Tensor> inputs, const Tensor& output,
                  BackwardFn backward) {
  if (state_->consumed) throw TapeError("recording '" + std::string(op) + "' on a consumed tape");
  output.node()->requires_grad = true;
  output.node()->tape = state_;
  state_->records.push_back({std::string(op), std::move(inputs), output, std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
  if (loss.node()->tape.lock() != state_) throw TapeError("loss was not recorded on this tape");
  run_backward(*state_, loss);
}

void Tape::reset() {
  state_->records.clear();
  state_->consumed = false;
}

std::vector<std::string> Tape::op_names() const {
  std::vector<std::string> names;
  names.reserve(state_->records.size());
  for (const auto& record : state_->records) names.push_back(record.op);
  return names;
}

TapeScope::TapeScope(Tape& tape) : previous_(current_tape) { current_tape = &tape; }
TapeScope::~TapeScope() { current_tape = previous_; }

Tape* active_tape() noexcept { return current_tape; }

void backward(const Tensor& loss) {
  auto state = loss.node()->tape.lock();
  if (!state) throw TapeError("loss is not on a live tape");
  run_backward(*state, loss);
}

namespace detail {

void accumulate_grad(const Tensor& target, const Eigen::Ref<const Eigen::VectorXd>& delta) {
  auto& node = *target.node();
  if (!node.requires_grad) return;
  if (node.grad.size() == 0) {
    node.grad = delta;
  } else {
    node.grad += delta;
  }
}

bool should_record(std::initializer_list<const Tensor*> inputs) {
  if (current_tape == nullptr) return false;
  for (const auto* input : inputs) {
    if (input->requires_grad()) return true;
  }
  return false;
}

void record_op(std::string_view op, std::vector<Tensor> inputs, const Tensor& output,
               BackwardFn backward) {
  if (current_tape == nullptr) return;
  current_tape->record(op, std::move(inputs), output, std::move(backward));
}

}  // namespace detail

}  // namespace dualhead
