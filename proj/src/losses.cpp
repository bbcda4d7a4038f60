#include "ppjudge/losses.hpp"

#include <cmath>
#include <cstdio>

#include "ppjudge/error.hpp"

namespace ppjudge {

Tensor alpha_schedule(std::size_t n_layers) {
  if (n_layers == 0) throw ContractError("alpha_schedule: layer count must be positive");
  std::vector<double> a(n_layers);
  double denom = std::exp(1.0) - 1.0;
  for (std::size_t l = 1; l <= n_layers; ++l) {
    a[l - 1] = 0.8 * (std::exp(static_cast<double>(l) / static_cast<double>(n_layers)) - 1.0) /
               denom;
  }
  return Tensor::from_values({n_layers}, std::move(a));
}

Tensor style_loss_layer(const Tensor& o_se, const Tensor& w_proj,
                        const Tensor& e_style) {
  Tensor o = o_se;
  if (o.shape().size() == 1) o = reshape(o, {1, o.numel()});
  if (o.rows() != 1 || o.cols() != w_proj.rows()) {
    throw DimensionError("style_loss_layer: feature " + shape_str(o_se.shape()) +
                         " vs projection " + shape_str(w_proj.shape()));
  }
  Tensor proj = matmul(o, w_proj);
  double norm2 = 0.0;
  for (double v : proj.values()) norm2 += v * v;
  if (std::sqrt(norm2) < 1e-12) {
    std::fprintf(stderr,
                 "warning: degenerate zero-norm projected style feature; "
                 "treating as orthogonal (loss 1.0)\n");
    return Tensor::scalar(1.0);
  }
  return sub(Tensor::scalar(1.0), cosine_similarity(e_style, proj));
}

Tensor style_loss_total(const std::vector<Tensor>& shared_outputs,
                        const Tensor& w_proj, const Tensor& e_style,
                        const Tensor& alpha, std::vector<double>* per_layer_out) {
  if (shared_outputs.size() != alpha.numel()) {
    throw DimensionError("style_loss_total: " + std::to_string(shared_outputs.size()) +
                         " layer outputs vs " + std::to_string(alpha.numel()) +
                         " weights");
  }
  if (per_layer_out) per_layer_out->clear();
  Tensor total = Tensor::scalar(0.0);
  const auto& av = alpha.values();
  for (std::size_t l = 0; l < shared_outputs.size(); ++l) {
    Tensor layer = style_loss_layer(shared_outputs[l], w_proj, e_style);
    if (per_layer_out) per_layer_out->push_back(layer.item());
    total = add(total, scale(layer, av[l]));
  }
  return total;
}

Tensor score_loss(const Tensor& pred, const Tensor& label) {
  if (pred.numel() != label.numel() || pred.numel() == 0) {
    throw DimensionError("score_loss: " + shape_str(pred.shape()) + " vs " +
                         shape_str(label.shape()));
  }
  return mean(square(sub(pred, label)));
}

Tensor total_loss(const Tensor& style, const Tensor& score) {
  return add(style, scale(score, kScoreLossWeight));
}

}  // namespace ppjudge
