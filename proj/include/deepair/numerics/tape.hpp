#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "deepair/numerics/tensor.hpp"

namespace deepair {

// A tensor that can take part in reverse-mode differentiation. The gradient
// buffer is allocated lazily on the first accumulation.
class Variable {
 public:
  Variable(Tensor value, bool requires_grad) : value_(std::move(value)), requires_grad_(requires_grad) {}

  const Tensor& value() const { return value_; }
  Tensor& mutable_value() { return value_; }
  const Shape& shape() const { return value_.shape(); }
  std::size_t numel() const { return value_.numel(); }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool on) { requires_grad_ = on; }

  bool has_grad() const { return !grad_.empty(); }
  std::span<const double> grad() const { return grad_; }
  // Allocates a zeroed buffer on first use.
  std::span<double> grad_buffer();
  Tensor grad_tensor() const;
  void zero_grad();
  void clear_grad() { grad_.clear(); }

 private:
  Tensor value_;
  bool requires_grad_;
  std::vector<double> grad_;
};

using Var = std::shared_ptr<Variable>;

Var make_var(Tensor value, bool requires_grad = false);
inline Var constant(Tensor value) { return make_var(std::move(value), false); }

// Ordered record of executed operations. Nodes are appended as operations
// run, so every node's inputs were produced by earlier nodes (or are leaves).
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Disabled tapes record nothing; used for inference.
  static Tape inference() {
    Tape t;
    t.enabled_ = false;
    return t;
  }
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  bool enabled() const { return enabled_; }

  // Records `backward` if the tape is enabled and `output` needs a gradient.
  void record(const Var& output, BackwardFn backward);

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  // Reverse traversal from a scalar loss. Intermediate gradients are reset
  // first; leaf gradients accumulate across calls.
  void backward(const Var& loss);

 private:
  struct Node {
    Var output;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  bool enabled_ = true;
};

inline void backward(const Var& loss, Tape& tape) { tape.backward(loss); }

}  // namespace deepair
