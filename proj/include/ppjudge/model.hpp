#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ppjudge/image.hpp"
#include "ppjudge/moe.hpp"
#include "ppjudge/params.hpp"
#include "ppjudge/rope.hpp"
#include "ppjudge/tensor.hpp"
#include "ppjudge/vision.hpp"

namespace ppjudge {

/// Full model hyperparameters. The default values are the desk-scale
/// configuration used for CPU training; `reference()` is the full-size
/// configuration exercised only by shape and parameter-count tests.
struct PPJudgeConfig {
  std::size_t n_blocks{8};
  std::size_t d_model{64};
  std::size_t n_heads{4};
  std::size_t image_size{64};  // frames are square image_size x image_size
  std::size_t channels{3};
  std::size_t patch_size{8};
  std::size_t d_style{64};
  std::size_t n_attributes{8};
  std::size_t max_frames{10};
  double rope_base{10000.0};
  double rope_beta{0.5};
  double rope_gamma{1.0};
  double embedder_bias{0.7};  // palette pull strength of the mock embedder

  std::size_t shared_count{2};
  std::size_t shared_depth{1};
  std::map<std::size_t, std::size_t> routed_histogram{
      {1, 8}, {2, 3}, {3, 2}, {4, 1}, {5, 1}};
  std::size_t top_k{4};
  std::size_t expert_hidden{64};

  std::vector<std::string> styles{"watercolor", "oil", "sketch", "digital"};

  static PPJudgeConfig desk();
  static PPJudgeConfig reference();

  void validate() const;

  std::size_t grid_side() const { return image_size / patch_size; }
  std::size_t tokens_per_frame() const { return grid_side() * grid_side(); }
  std::size_t patch_dim() const { return patch_size * patch_size * channels; }
  std::size_t head_dim() const { return d_model / n_heads; }
  MoeConfig moe() const;
  RopeConfig rope() const;

  /// Human-readable key=value file; `load` round-trips exactly.
  void save(const std::string& path) const;
  static PPJudgeConfig load(const std::string& path);

  bool operator==(const PPJudgeConfig&) const = default;
};

/// What a painting process is judged against: either a finished reference
/// image or a text prompt describing the intended result.
struct Reference {
  bool is_prompt{false};
  Frame image;
  std::string prompt;

  static Reference from_image(Frame f);
  static Reference from_prompt(std::string text);
};

struct ModelOutput {
  Tensor scores;                       // [n_attributes], raw (unclamped)
  std::vector<Tensor> shared_outputs;  // per block: token-pooled O_se, [d_model]
  Tensor pooled_feature;               // [d_model]
};

/// Append-only attention state for incremental scoring. Keys are stored
/// post-rotation (a token's rotation never changes), values as produced, and
/// the final-layer normalised token outputs are kept so pooling covers the
/// whole prefix without re-encoding old frames.
struct KVCache {
  PPJudgeConfig cfg;
  std::size_t frames_cached{0};
  std::vector<Tensor> keys;         // per block: [n_cached, d_model]
  std::vector<Tensor> values;       // per block: [n_cached, d_model]
  std::vector<Tensor> shared_sums;  // per block: [d_model], summed over tokens
  Tensor final_tokens;              // [n_cached, d_model]

  std::size_t cached_tokens() const;
};

class PPJudgeModel {
 public:
  /// Builds parameters from `seed` alone. The style embedder stands in for a
  /// frozen pretrained network and is identical for every model with the same
  /// configuration, so checkpoints restore behaviour regardless of seed.
  explicit PPJudgeModel(const PPJudgeConfig& cfg, std::uint64_t seed = 0);
  PPJudgeModel(const PPJudgeConfig& cfg, std::uint64_t seed,
               std::shared_ptr<const StyleEmbedder> embedder);

  const PPJudgeConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const StyleEmbedder& embedder() const { return *embedder_; }
  const StylePrototypeTable& prototypes() const { return prototypes_; }

  /// Classified style of a reference: (style index, unit-norm prototype
  /// embedding used as the style supervision target).
  std::pair<std::size_t, Tensor> reference_style(const Reference& ref) const;

  /// Optional taps into a full forward pass.
  struct ForwardHooks {
    /// Fill shared_outputs from the gradient-isolated path, so style
    /// supervision reaches shared experts and the projection only.
    bool style_path{false};
    UsageStats* stats{nullptr};
    std::vector<RouterDecision>* final_decisions{nullptr};  // last block
    Tensor* embedded_tokens{nullptr};  // block-0 input tokens [n, d_model]
    Tensor* final_tokens{nullptr};     // post-norm outputs [n, d_model]
  };

  ModelOutput forward_full(const std::vector<Frame>& frames,
                           const Reference& ref) const;
  ModelOutput forward_full(const std::vector<Frame>& frames, const Reference& ref,
                           const ForwardHooks& hooks) const;

  /// Encodes the reference token; frames are appended one by one. Inference
  /// only: runs with gradients disabled.
  KVCache make_cache(const Reference& ref) const;
  ModelOutput forward_incremental(KVCache& cache, const Frame& frame) const;

  /// 3-layer MLP head, SiLU after the first two layers; raw outputs.
  Tensor classify(const Tensor& pooled_feature) const;

  /// Evaluation-time range rule: elementwise clamp to [1, 10].
  static Tensor clamp_scores(const Tensor& raw);

  std::size_t count_parameters() const { return params_.count_elements(); }

 private:
  struct Block {
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
    Tensor ln1_g, ln1_b, ln2_g, ln2_b;
    std::unique_ptr<MoeLayer> moe;
  };

  Tensor reference_token(const Reference& ref) const;
  Tensor embed_frame(const Frame& frame) const;
  void check_frame(const Frame& frame) const;

  PPJudgeConfig cfg_;
  ParamStore params_;
  std::shared_ptr<const StyleEmbedder> embedder_;
  StylePrototypeTable prototypes_;
  RotationPlan plan_;
  std::vector<Block> blocks_;
  Tensor w_embed_, b_embed_;  // patch -> token
  Tensor w_ref_, b_ref_;      // style embedding -> reference token
  Tensor final_g_, final_b_;
  Tensor head_w1_, head_b1_, head_w2_, head_b2_, head_w3_, head_b3_;
  Tensor w_proj_;  // [d_model, d_style], shared across layers by the style loss
};

}  // namespace ppjudge
