#include "ppjudge/params.hpp"

#include <cmath>

#include "ppjudge/error.hpp"
#include "ppjudge/rng.hpp"

namespace ppjudge {

Tensor ParamStore::add_param(const std::string& name, Tensor t) {
  if (index_.count(name)) throw ContractError("duplicate parameter name: " + name);
  t.set_requires_grad(true);
  index_[name] = params_.size();
  params_.push_back(Parameter{name, t});
  return t;
}

Tensor ParamStore::create_linear(const std::string& name, const Shape& shape,
                                 std::size_t fan_in) {
  if (fan_in == 0) throw ContractError("create_linear: zero fan_in for " + name);
  Rng rng(derive_seed(seed_, name));
  double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> vals(shape_numel(shape));
  for (double& v : vals) v = rng.uniform(-bound, bound);
  return add_param(name, Tensor::from_values(shape, std::move(vals)));
}

Tensor ParamStore::create_constant(const std::string& name, const Shape& shape,
                                   double value) {
  return add_param(name, Tensor::full(shape, value));
}

Tensor ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter: " + name);
  return params_[it->second].tensor;
}

std::size_t ParamStore::count_elements() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.numel();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& p : params_) p.tensor.zero_grad();
}

}  // namespace ppjudge
