#include "deepair/numerics/tape.hpp"

#include <algorithm>
#include <stdexcept>

namespace deepair {

std::span<double> Variable::grad_buffer() {
  if (grad_.empty()) grad_.assign(value_.numel(), 0.0);
  return grad_;
}

Tensor Variable::grad_tensor() const {
  if (grad_.empty()) return Tensor(value_.shape(), 0.0);
  return Tensor(value_.shape(), grad_);
}

void Variable::zero_grad() { std::fill(grad_.begin(), grad_.end(), 0.0); }

Var make_var(Tensor value, bool requires_grad) {
  return std::make_shared<Variable>(std::move(value), requires_grad);
}

void Tape::record(const Var& output, BackwardFn backward) {
  if (!enabled_ || !output->requires_grad()) return;
  nodes_.push_back(Node{output, std::move(backward)});
}

void Tape::backward(const Var& loss) {
  if (loss->numel() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got shape " + shape_string(loss->shape()));
  }
  if (!loss->requires_grad()) {
    throw std::invalid_argument("backward: loss does not depend on any trainable tensor");
  }
  for (auto& node : nodes_) node.output->clear_grad();
  loss->grad_buffer()[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->output->has_grad()) it->backward();
  }
}

}  // namespace deepair
