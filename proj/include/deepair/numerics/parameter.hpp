#pragma once

#include <string>
#include <vector>

#include "deepair/numerics/rng.hpp"
#include "deepair/numerics/tape.hpp"

namespace deepair {

struct Parameter {
  std::string name;  // dotted path, e.g. "airres.unit1.conv0.weight"
  Var var;
};

// Ordered collection of trainable tensors with unique names. Order is the
// registration order and is what checkpoints serialize.
class ParameterSet {
 public:
  Var add(std::string name, Tensor init);

  const std::vector<Parameter>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  std::size_t scalar_count() const;

  const Parameter* find(const std::string& name) const;
  Var get(const std::string& name) const;

  void zero_grad();

 private:
  std::vector<Parameter> items_;
};

// Uniform in +-sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

// p <- p - lr * grad(p), then grads are zeroed. A trainable parameter
// without a gradient buffer is an error: it means backward never reached it.
void sgd_step(ParameterSet& params, double learning_rate);

}  // namespace deepair
