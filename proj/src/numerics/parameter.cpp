#include "deepair/numerics/parameter.hpp"

#include <cmath>
#include <stdexcept>

namespace deepair {

Var ParameterSet::add(std::string name, Tensor init) {
  if (find(name)) throw std::invalid_argument("ParameterSet: duplicate parameter name '" + name + "'");
  Var v = make_var(std::move(init), true);
  items_.push_back(Parameter{std::move(name), v});
  return v;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : items_) n += p.var->numel();
  return n;
}

const Parameter* ParameterSet::find(const std::string& name) const {
  for (const auto& p : items_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

Var ParameterSet::get(const std::string& name) const {
  const Parameter* p = find(name);
  if (!p) throw std::out_of_range("ParameterSet: no parameter '" + name + "'");
  return p->var;
}

void ParameterSet::zero_grad() {
  for (auto& p : items_) p.var->zero_grad();
}

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(-limit, limit);
  return t;
}

void sgd_step(ParameterSet& params, double learning_rate) {
  for (const auto& p : params.items()) {
    if (p.var->requires_grad() && !p.var->has_grad()) {
      throw std::logic_error("sgd_step: parameter '" + p.name + "' has no gradient");
    }
  }
  for (const auto& p : params.items()) {
    if (!p.var->requires_grad()) continue;
    auto value = p.var->mutable_value().data();
    const auto grad = p.var->grad();
    for (std::size_t i = 0; i < value.size(); ++i) value[i] -= learning_rate * grad[i];
    p.var->zero_grad();
  }
}

}  // namespace deepair
