#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ppjudge/params.hpp"

namespace ppjudge {

enum class OptimKind { adamw, adam };

/// Adam-style optimizer state. `adamw` applies decoupled weight decay,
/// `adam` is the same update with the decay term absent.
struct OptimizerState {
  OptimKind kind{OptimKind::adamw};
  double lr{1e-4};
  double beta1{0.9};
  double beta2{0.999};
  double eps{1e-8};
  double weight_decay{0.01};
  std::uint64_t step{0};
  // first and second moment buffers, keyed by parameter name
  std::map<std::string, std::vector<double>> m;
  std::map<std::string, std::vector<double>> v;
};

OptimizerState make_pretrain_optimizer(double lr = 1e-4);
OptimizerState make_finetune_optimizer(double lr = 1e-5);

/// One in-place update over every parameter in the store. Each parameter must
/// carry an accumulated gradient; a missing gradient is a contract violation.
void optimizer_step(ParamStore& params, OptimizerState& state);

}  // namespace ppjudge
