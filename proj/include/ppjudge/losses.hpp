#pragma once

#include <cstddef>
#include <vector>

#include "ppjudge/tensor.hpp"

namespace ppjudge {

/// Weight of the score term inside the total training loss.
inline constexpr double kScoreLossWeight = 10.0;

/// Per-layer weights for the style loss: alpha_l = 0.8*(e^(l/L)-1)/(e-1) for
/// l = 1..L. Strictly increasing, always ending exactly at 0.8.
Tensor alpha_schedule(std::size_t n_layers);

/// 1 - cosine(E_style, O_se * W_proj) in [0, 2]. A zero-norm projected vector
/// is treated as orthogonal: the call warns on stderr and returns a constant
/// 1.0 so the training total stays finite.
Tensor style_loss_layer(const Tensor& o_se, const Tensor& w_proj,
                        const Tensor& e_style);

/// Weighted sum of the per-layer style losses. If `per_layer_out` is non-null
/// it receives the unweighted per-layer values.
Tensor style_loss_total(const std::vector<Tensor>& shared_outputs,
                        const Tensor& w_proj, const Tensor& e_style,
                        const Tensor& alpha, std::vector<double>* per_layer_out = nullptr);

/// Mean squared error over the attribute vector: (1/n) * sum (y - y_hat)^2.
Tensor score_loss(const Tensor& pred, const Tensor& label);

/// style + kScoreLossWeight * score.
Tensor total_loss(const Tensor& style, const Tensor& score);

/// Scalar views of one sample's loss terms, as logged per training step.
struct LossBreakdown {
  double style_total{0.0};
  std::vector<double> style_per_layer;
  double score{0.0};
  double total{0.0};
};

}  // namespace ppjudge
