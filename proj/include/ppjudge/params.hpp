#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ppjudge/tensor.hpp"

namespace ppjudge {

struct Parameter {
  std::string name;
  Tensor tensor;
};

/// Ordered, name-addressable set of trainable tensors. Initialisation is
/// derived from a global seed and the parameter name alone, so adding or
/// reordering unrelated parameters does not change existing ones.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  Tensor create_linear(const std::string& name, const Shape& shape, std::size_t fan_in);

  /// Constant init (biases, norm gains).
  Tensor create_constant(const std::string& name, const Shape& shape, double value);

  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  Tensor get(const std::string& name) const;

  const std::vector<Parameter>& all() const { return params_; }
  std::size_t size() const { return params_.size(); }

  /// Total number of scalar elements across all parameters.
  std::size_t count_elements() const;

  void zero_grads();

 private:
  Tensor add_param(const std::string& name, Tensor t);

  std::uint64_t seed_;
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace ppjudge
