#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ppjudge/params.hpp"
#include "ppjudge/tensor.hpp"

namespace ppjudge {

/// Mixture layout: always-active shared experts plus a pool of routed experts
/// whose depths follow a histogram. `expert_hidden` is the bottleneck width;
/// an expert of depth k applies k hidden layers (k+1 affine maps
/// d_model -> h -> ... -> h -> d_model) with SiLU after every map but the last.
struct MoeConfig {
  std::size_t d_model{0};
  std::size_t shared_count{2};
  std::size_t shared_depth{1};
  std::map<std::size_t, std::size_t> routed_depth_histogram{
      {1, 16}, {2, 6}, {3, 4}, {4, 2}, {5, 2}};
  std::size_t top_k{4};
  std::size_t expert_hidden{0};

  std::size_t routed_count() const;
  void validate() const;

  bool operator==(const MoeConfig&) const = default;
};

struct Expert {
  std::size_t depth{1};          // hidden layer count
  std::vector<Tensor> weights;   // depth+1 affine maps
  std::vector<Tensor> biases;

  Tensor forward(const Tensor& x) const;  // [n, d_model] -> [n, d_model]
};

struct RouterDecision {
  std::size_t token{0};
  std::vector<std::size_t> experts;  // top_k distinct indices, by falling probability
  std::vector<double> weights;       // positive, sum to 1
};

/// Selection counters accumulated across forward passes.
struct UsageStats {
  std::vector<std::uint64_t> expert_counts;           // per routed expert
  std::map<std::size_t, std::uint64_t> depth_counts;  // per expert depth
  std::uint64_t tokens_routed{0};
  std::uint64_t selections{0};  // == tokens_routed * top_k
  std::vector<std::uint64_t> attr_representative;     // per attribute, set by heatmap
};

/// Top-k routing from raw logits. Selection sorts the full softmax
/// distribution (ties toward the lower expert index); the returned weights
/// are the softmax of the selected logits alone, which equals the
/// renormalized full softmax exactly.
std::vector<RouterDecision> route(const Tensor& tokens, const Tensor& router_weight,
                                  std::size_t top_k);

/// Attribute-by-depth usage frequencies over representative tokens.
struct Heatmap {
  std::vector<std::size_t> depths;         // sorted distinct depths
  std::vector<std::vector<double>> rows;   // [n_attributes][n_depths], each sums to 1
};

/// Counts final-layer routing events of representative tokens (attribution
/// weight > threshold) per attribute, grouped by expert depth, and normalizes
/// each attribute row. If no token clears the threshold for an attribute, the
/// single highest-weight token stands in (ties toward the lower token index)
/// so rows always sum to 1.
Heatmap usage_heatmap(const std::vector<RouterDecision>& decisions,
                      const std::vector<std::size_t>& expert_depth,
                      const std::vector<std::vector<double>>& attribution,
                      double threshold = 0.5, UsageStats* stats = nullptr);

void write_heatmap_csv(const std::string& path, const Heatmap& heatmap,
                       const std::vector<std::string>& attribute_names);

/// One mixture-of-experts sublayer with its parameters registered in a store.
class MoeLayer {
 public:
  MoeLayer(const std::string& prefix, const MoeConfig& cfg, ParamStore& store);

  struct Output {
    Tensor output;            // residual_base + shared sum + weighted routed sum
    Tensor shared_sum;        // O_se on the residual stream
    Tensor shared_sum_style;  // O_se recomputed on detached input (style loss path)
    std::vector<RouterDecision> decisions;
  };

  /// `tokens` feeds the experts and router; `residual_base` receives the
  /// expert deltas. The canonical single-input form passes the same tensor
  /// for both. `want_style_path` additionally evaluates the shared experts on
  /// a detached copy of `tokens` so the style loss reaches shared-expert and
  /// projection weights only.
  Output forward(const Tensor& residual_base, const Tensor& tokens,
                 bool want_style_path = false, UsageStats* stats = nullptr) const;

  const MoeConfig& config() const { return cfg_; }
  const std::vector<Expert>& routed_experts() const { return routed_; }
  const std::vector<Expert>& shared_experts() const { return shared_; }
  const std::vector<std::size_t>& routed_depths() const { return routed_depth_; }
  Tensor router_weight() const { return router_; }

 private:
  MoeConfig cfg_;
  std::vector<Expert> shared_;
  std::vector<Expert> routed_;       // ordered by depth, then intra-depth index
  std::vector<std::size_t> routed_depth_;
  Tensor router_;                    // [d_model, routed_count], bias-free
};

/// Canonical single-input mixture evaluation:
/// output = tokens + sum(shared) + sum(weight_e * routed_e), exposing O_se.
MoeLayer::Output moe_forward(const MoeLayer& layer, const Tensor& tokens,
                             UsageStats* stats = nullptr);

}  // namespace ppjudge
