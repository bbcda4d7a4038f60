#include "ppjudge/optim.hpp"

#include <cmath>

#include "ppjudge/error.hpp"

namespace ppjudge {

OptimizerState make_pretrain_optimizer(double lr) {
  OptimizerState st;
  st.kind = OptimKind::adamw;
  st.lr = lr;
  st.weight_decay = 0.01;
  return st;
}

OptimizerState make_finetune_optimizer(double lr) {
  OptimizerState st;
  st.kind = OptimKind::adam;
  st.lr = lr;
  st.weight_decay = 0.0;
  return st;
}

void optimizer_step(ParamStore& params, OptimizerState& st) {
  // validate everything first: a throw must leave weights and step untouched
  for (const auto& p : params.all()) {
    if (p.tensor.grad().empty()) {
      throw ContractError("optimizer_step: parameter '" + p.name + "' has no gradient");
    }
  }
  st.step += 1;
  double t = static_cast<double>(st.step);
  double bc1 = 1.0 - std::pow(st.beta1, t);
  double bc2 = 1.0 - std::pow(st.beta2, t);
  for (auto& p : params.all()) {
    const auto& g = p.tensor.grad();
    auto& m = st.m[p.name];
    auto& v = st.v[p.name];
    if (m.size() != g.size()) m.assign(g.size(), 0.0);
    if (v.size() != g.size()) v.assign(g.size(), 0.0);
    Tensor handle = p.tensor;  // cheap shared-node handle
    auto& w = handle.values_mut();
    bool decay = st.kind == OptimKind::adamw && st.weight_decay != 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      m[i] = st.beta1 * m[i] + (1.0 - st.beta1) * g[i];
      v[i] = st.beta2 * v[i] + (1.0 - st.beta2) * g[i] * g[i];
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      double upd = mhat / (std::sqrt(vhat) + st.eps);
      if (decay) upd += st.weight_decay * w[i];
      w[i] -= st.lr * upd;
    }
  }
}

}  // namespace ppjudge
