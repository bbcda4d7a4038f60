#include "ppjudge/moe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "ppjudge/error.hpp"

namespace ppjudge {

std::size_t MoeConfig::routed_count() const {
  std::size_t n = 0;
  for (const auto& [depth, count] : routed_depth_histogram) n += count;
  return n;
}

void MoeConfig::validate() const {
  if (d_model == 0) throw ConfigError("moe: d_model must be positive");
  if (expert_hidden == 0) throw ConfigError("moe: expert_hidden must be positive");
  if (shared_count > 0 && shared_depth == 0) {
    throw ConfigError("moe: shared_depth must be positive");
  }
  std::size_t routed = routed_count();
  if (routed == 0) throw ConfigError("moe: at least one routed expert required");
  for (const auto& [depth, count] : routed_depth_histogram) {
    if (depth == 0) throw ConfigError("moe: expert depth must be at least 1");
  }
  if (top_k == 0 || top_k > routed) {
    throw ConfigError("moe: top_k " + std::to_string(top_k) + " for " +
                      std::to_string(routed) + " routed experts");
  }
}

Tensor Expert::forward(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    h = add_rowvec(matmul(h, weights[l]), biases[l]);
    if (l + 1 < weights.size()) h = silu(h);
  }
  return h;
}

namespace {

Expert make_expert(const std::string& prefix, std::size_t depth, std::size_t d_model,
                   std::size_t hidden, ParamStore& store) {
  Expert e;
  e.depth = depth;
  std::size_t in = d_model;
  for (std::size_t l = 0; l <= depth; ++l) {
    std::size_t out = (l == depth) ? d_model : hidden;
    std::string base = prefix + "/l" + std::to_string(l);
    e.weights.push_back(store.create_linear(base + "/w", {in, out}, in));
    e.biases.push_back(store.create_constant(base + "/b", {out}, 0.0));
    in = out;
  }
  return e;
}

}  // namespace

MoeLayer::MoeLayer(const std::string& prefix, const MoeConfig& cfg, ParamStore& store)
    : cfg_(cfg) {
  cfg_.validate();
  for (std::size_t s = 0; s < cfg_.shared_count; ++s) {
    shared_.push_back(make_expert(prefix + "/shared" + std::to_string(s),
                                  cfg_.shared_depth, cfg_.d_model, cfg_.expert_hidden,
                                  store));
  }
  std::size_t idx = 0;
  for (const auto& [depth, count] : cfg_.routed_depth_histogram) {
    for (std::size_t c = 0; c < count; ++c) {
      routed_.push_back(make_expert(prefix + "/routed" + std::to_string(idx), depth,
                                    cfg_.d_model, cfg_.expert_hidden, store));
      routed_depth_.push_back(depth);
      ++idx;
    }
  }
  router_ = store.create_linear(prefix + "/router/w", {cfg_.d_model, routed_.size()},
                                cfg_.d_model);
}

std::vector<RouterDecision> route(const Tensor& tokens, const Tensor& router_weight,
                                  std::size_t top_k) {
  std::size_t routed = router_weight.cols();
  if (top_k == 0 || top_k > routed) {
    throw ConfigError("route: top_k " + std::to_string(top_k) + " for " +
                      std::to_string(routed) + " experts");
  }
  Tensor logits;
  {
    NoGradGuard ng;  // selection is a value-level decision
    logits = matmul(tokens, router_weight);
  }
  std::size_t n = logits.rows();
  const auto& lv = logits.values();
  std::vector<RouterDecision> decisions(n);
  std::vector<std::size_t> order(routed);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = lv.data() + i * routed;
    std::iota(order.begin(), order.end(), 0);
    // Stable sort on descending logit keeps ties at the lower index. Sorting
    // logits orders probabilities identically (softmax is monotone).
    std::stable_sort(order.begin(), order.end(),
                     [row](std::size_t a, std::size_t b) { return row[a] > row[b]; });
    RouterDecision& d = decisions[i];
    d.token = i;
    d.experts.assign(order.begin(), order.begin() + top_k);
    // Weights: softmax over the selected logits. Equal to renormalizing the
    // full softmax, but numerically independent of unselected experts.
    double mx = row[d.experts[0]];
    double z = 0.0;
    d.weights.resize(top_k);
    for (std::size_t s = 0; s < top_k; ++s) {
      d.weights[s] = std::exp(row[d.experts[s]] - mx);
      z += d.weights[s];
    }
    for (double& w : d.weights) w /= z;
  }
  return decisions;
}

MoeLayer::Output MoeLayer::forward(const Tensor& residual_base, const Tensor& tokens,
                                   bool want_style_path, UsageStats* stats) const {
  std::size_t n = tokens.rows();
  if (tokens.cols() != cfg_.d_model || residual_base.shape() != tokens.shape()) {
    throw DimensionError("moe forward: tokens " + shape_str(tokens.shape()) +
                         ", base " + shape_str(residual_base.shape()) + ", d_model " +
                         std::to_string(cfg_.d_model));
  }
  Output out;
  out.decisions = route(tokens, router_, cfg_.top_k);

  // Differentiable selected weights: gather selected logits per token and
  // softmax across the k slots.
  Tensor logits = matmul(tokens, router_);
  std::vector<std::size_t> sel_flat(n * cfg_.top_k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < cfg_.top_k; ++s) {
      sel_flat[i * cfg_.top_k + s] = i * routed_.size() + out.decisions[i].experts[s];
    }
  }
  Tensor sel_logits = reshape(gather_elements(logits, sel_flat), {n, cfg_.top_k});
  Tensor sel_weights = softmax(sel_logits, 1);
  Tensor weights_flat = reshape(sel_weights, {n * cfg_.top_k});

  // Shared experts on the residual stream.
  Tensor shared_sum = Tensor::zeros({n, cfg_.d_model});
  for (const auto& e : shared_) shared_sum = add(shared_sum, e.forward(tokens));
  out.shared_sum = shared_sum;

  if (want_style_path) {
    // Same values, but gradients stop at the expert input so style
    // supervision reaches shared-expert and projection weights only.
    Tensor cut = detach(tokens);
    Tensor style_sum = Tensor::zeros({n, cfg_.d_model});
    for (const auto& e : shared_) style_sum = add(style_sum, e.forward(cut));
    out.shared_sum_style = style_sum;
  }

  Tensor acc = add(residual_base, shared_sum);

  // Token batching per expert: gather each expert's tokens, run the expert
  // once, scale rows by their routing weights, scatter back.
  std::vector<std::vector<std::size_t>> expert_tokens(routed_.size());
  std::vector<std::vector<std::size_t>> expert_wpos(routed_.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < cfg_.top_k; ++s) {
      std::size_t e = out.decisions[i].experts[s];
      expert_tokens[e].push_back(i);
      expert_wpos[e].push_back(i * cfg_.top_k + s);
    }
  }
  for (std::size_t e = 0; e < routed_.size(); ++e) {
    if (expert_tokens[e].empty()) continue;
    Tensor xin = gather_rows(tokens, expert_tokens[e]);
    Tensor y = routed_[e].forward(xin);
    Tensor w = gather_elements(weights_flat, expert_wpos[e]);
    acc = scatter_add_rows(acc, expert_tokens[e], mul_rowwise(y, w));
  }
  out.output = acc;

  if (stats) {
    if (stats->expert_counts.size() != routed_.size()) {
      stats->expert_counts.assign(routed_.size(), 0);
    }
    for (std::size_t e = 0; e < routed_.size(); ++e) {
      stats->expert_counts[e] += expert_tokens[e].size();
      stats->depth_counts[routed_depth_[e]] += expert_tokens[e].size();
    }
    stats->tokens_routed += n;
    stats->selections += n * cfg_.top_k;
  }
  return out;
}

MoeLayer::Output moe_forward(const MoeLayer& layer, const Tensor& tokens,
                             UsageStats* stats) {
  return layer.forward(tokens, tokens, false, stats);
}

Heatmap usage_heatmap(const std::vector<RouterDecision>& decisions,
                      const std::vector<std::size_t>& expert_depth,
                      const std::vector<std::vector<double>>& attribution,
                      double threshold, UsageStats* stats) {
  if (attribution.empty()) throw ContractError("usage_heatmap: empty attribution");
  std::size_t n_attr = attribution[0].size();
  if (n_attr == 0) throw ContractError("usage_heatmap: zero attributes");
  for (const auto& row : attribution) {
    if (row.size() != n_attr) throw DimensionError("usage_heatmap: ragged attribution");
  }

  Heatmap hm;
  for (std::size_t d : expert_depth) {
    if (std::find(hm.depths.begin(), hm.depths.end(), d) == hm.depths.end()) {
      hm.depths.push_back(d);
    }
  }
  std::sort(hm.depths.begin(), hm.depths.end());
  std::vector<std::size_t> depth_slot(expert_depth.size());
  for (std::size_t e = 0; e < expert_depth.size(); ++e) {
    depth_slot[e] = static_cast<std::size_t>(
        std::find(hm.depths.begin(), hm.depths.end(), expert_depth[e]) - hm.depths.begin());
  }

  hm.rows.assign(n_attr, std::vector<double>(hm.depths.size(), 0.0));
  if (stats) stats->attr_representative.assign(n_attr, 0);

  for (std::size_t a = 0; a < n_attr; ++a) {
    auto& row = hm.rows[a];
    std::size_t representative = 0;
    for (const auto& dec : decisions) {
      if (dec.token >= attribution.size()) {
        throw RangeError("usage_heatmap: decision token " + std::to_string(dec.token));
      }
      if (attribution[dec.token][a] <= threshold) continue;
      ++representative;
      for (std::size_t e : dec.experts) row[depth_slot[e]] += 1.0;
    }
    if (representative == 0) {
      // Fallback: the single highest-weight token represents the attribute.
      std::size_t best = 0;
      for (std::size_t t = 1; t < attribution.size(); ++t) {
        if (attribution[t][a] > attribution[best][a]) best = t;
      }
      for (const auto& dec : decisions) {
        if (dec.token != best) continue;
        ++representative;
        for (std::size_t e : dec.experts) row[depth_slot[e]] += 1.0;
      }
    }
    if (stats) stats->attr_representative[a] = representative;
    double total = 0.0;
    for (double v : row) total += v;
    if (total > 0.0) {
      for (double& v : row) v /= total;
    }
  }
  return hm;
}

void write_heatmap_csv(const std::string& path, const Heatmap& heatmap,
                       const std::vector<std::string>& attribute_names) {
  if (attribute_names.size() != heatmap.rows.size()) {
    throw DimensionError("heatmap csv: " + std::to_string(attribute_names.size()) +
                         " names for " + std::to_string(heatmap.rows.size()) + " rows");
  }
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write heatmap: " + path);
  os << "attribute";
  for (std::size_t d : heatmap.depths) os << ",depth_" << d;
  os << "\n";
  char buf[64];
  for (std::size_t a = 0; a < heatmap.rows.size(); ++a) {
    os << attribute_names[a];
    for (double v : heatmap.rows[a]) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << ',' << buf;
    }
    os << "\n";
  }
  if (!os) throw IoError("failed writing heatmap: " + path);
}

}  // namespace ppjudge
