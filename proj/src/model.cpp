#include "ppjudge/model.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ppjudge/error.hpp"
#include "ppjudge/rng.hpp"

namespace ppjudge {

namespace {

// The embedder stands in for a frozen pretrained network, so it is seeded by
// a fixed constant rather than the model seed: two models with the same
// configuration always agree on reference embeddings.
constexpr std::uint64_t kEmbedderSeed = 0x5745a11c0ffee001ULL;

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

PPJudgeConfig PPJudgeConfig::desk() { return PPJudgeConfig{}; }

PPJudgeConfig PPJudgeConfig::reference() {
  PPJudgeConfig cfg;
  cfg.d_model = 512;
  cfg.n_heads = 8;
  cfg.d_style = 512;
  cfg.expert_hidden = 32;
  cfg.routed_histogram = {{1, 16}, {2, 6}, {3, 4}, {4, 2}, {5, 2}};
  return cfg;
}

MoeConfig PPJudgeConfig::moe() const {
  MoeConfig m;
  m.d_model = d_model;
  m.shared_count = shared_count;
  m.shared_depth = shared_depth;
  m.routed_depth_histogram = routed_histogram;
  m.top_k = top_k;
  m.expert_hidden = expert_hidden;
  return m;
}

RopeConfig PPJudgeConfig::rope() const {
  RopeConfig r;
  r.head_dim = head_dim();
  r.base = rope_base;
  r.beta = rope_beta;
  r.gamma = rope_gamma;
  r.t_max = max_frames;
  return r;
}

void PPJudgeConfig::validate() const {
  if (n_blocks == 0) throw ConfigError("config: n_blocks must be positive");
  if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) {
    throw ConfigError("config: d_model " + std::to_string(d_model) +
                      " not divisible by n_heads " + std::to_string(n_heads));
  }
  if (n_attributes != 8) {
    throw ConfigError("config: n_attributes must be 8, got " +
                      std::to_string(n_attributes));
  }
  if (channels != 1 && channels != 3) {
    throw ConfigError("config: channels must be 1 or 3");
  }
  if (patch_size == 0 || image_size == 0 || image_size % patch_size != 0) {
    throw ConfigError("config: image_size " + std::to_string(image_size) +
                      " not divisible by patch_size " + std::to_string(patch_size));
  }
  if (max_frames == 0) throw ConfigError("config: max_frames must be positive");
  if (styles.size() < 2) throw ConfigError("config: at least two styles required");
  if (d_style < styles.size()) {
    throw ConfigError("config: d_style must be at least the style count");
  }
  if (embedder_bias < 0.0 || embedder_bias > 1.0) {
    throw ConfigError("config: embedder_bias must lie in [0,1]");
  }
  moe().validate();
  rope().validate();
}

void PPJudgeConfig::save(const std::string& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write config: " + path);
  os << "n_blocks=" << n_blocks << "\n";
  os << "d_model=" << d_model << "\n";
  os << "n_heads=" << n_heads << "\n";
  os << "image_size=" << image_size << "\n";
  os << "channels=" << channels << "\n";
  os << "patch_size=" << patch_size << "\n";
  os << "d_style=" << d_style << "\n";
  os << "n_attributes=" << n_attributes << "\n";
  os << "max_frames=" << max_frames << "\n";
  os << "rope_base=" << fmt_double(rope_base) << "\n";
  os << "rope_beta=" << fmt_double(rope_beta) << "\n";
  os << "rope_gamma=" << fmt_double(rope_gamma) << "\n";
  os << "embedder_bias=" << fmt_double(embedder_bias) << "\n";
  os << "shared_count=" << shared_count << "\n";
  os << "shared_depth=" << shared_depth << "\n";
  os << "routed=";
  bool first = true;
  for (const auto& [depth, count] : routed_histogram) {
    if (!first) os << ',';
    os << depth << ':' << count;
    first = false;
  }
  os << "\n";
  os << "top_k=" << top_k << "\n";
  os << "expert_hidden=" << expert_hidden << "\n";
  os << "styles=";
  for (std::size_t i = 0; i < styles.size(); ++i) {
    if (i) os << ',';
    os << styles[i];
  }
  os << "\n";
  if (!os) throw IoError("failed writing config: " + path);
}

namespace {

std::size_t parse_size(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<std::size_t>(x);
  } catch (const std::exception&) {
    throw ParseError("config: bad integer for " + key + ": '" + v + "'");
  }
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ParseError("config: bad number for " + key + ": '" + v + "'");
  }
}

std::vector<std::string> split_commas(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(v);
  while (std::getline(is, cur, ',')) out.push_back(cur);
  return out;
}

}  // namespace

PPJudgeConfig PPJudgeConfig::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config: " + path);
  PPJudgeConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    if (key == "n_blocks") cfg.n_blocks = parse_size(val, key);
    else if (key == "d_model") cfg.d_model = parse_size(val, key);
    else if (key == "n_heads") cfg.n_heads = parse_size(val, key);
    else if (key == "image_size") cfg.image_size = parse_size(val, key);
    else if (key == "channels") cfg.channels = parse_size(val, key);
    else if (key == "patch_size") cfg.patch_size = parse_size(val, key);
    else if (key == "d_style") cfg.d_style = parse_size(val, key);
    else if (key == "n_attributes") cfg.n_attributes = parse_size(val, key);
    else if (key == "max_frames") cfg.max_frames = parse_size(val, key);
    else if (key == "rope_base") cfg.rope_base = parse_double(val, key);
    else if (key == "rope_beta") cfg.rope_beta = parse_double(val, key);
    else if (key == "rope_gamma") cfg.rope_gamma = parse_double(val, key);
    else if (key == "embedder_bias") cfg.embedder_bias = parse_double(val, key);
    else if (key == "shared_count") cfg.shared_count = parse_size(val, key);
    else if (key == "shared_depth") cfg.shared_depth = parse_size(val, key);
    else if (key == "top_k") cfg.top_k = parse_size(val, key);
    else if (key == "expert_hidden") cfg.expert_hidden = parse_size(val, key);
    else if (key == "styles") {
      cfg.styles = split_commas(val);
    } else if (key == "routed") {
      cfg.routed_histogram.clear();
      for (const std::string& part : split_commas(val)) {
        auto colon = part.find(':');
        if (colon == std::string::npos) {
          throw ParseError("config: bad routed entry '" + part + "'");
        }
        std::size_t depth = parse_size(part.substr(0, colon), "routed depth");
        std::size_t count = parse_size(part.substr(colon + 1), "routed count");
        cfg.routed_histogram[depth] = count;
      }
    } else {
      throw ParseError("config line " + std::to_string(line_no) + ": unknown key '" +
                       key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

Reference Reference::from_image(Frame f) {
  Reference r;
  r.is_prompt = false;
  r.image = std::move(f);
  return r;
}

Reference Reference::from_prompt(std::string text) {
  Reference r;
  r.is_prompt = true;
  r.prompt = std::move(text);
  return r;
}

std::size_t KVCache::cached_tokens() const {
  if (keys.empty() || !keys[0].defined()) return 0;
  return keys[0].rows();
}

PPJudgeModel::PPJudgeModel(const PPJudgeConfig& cfg, std::uint64_t seed)
    : PPJudgeModel(cfg, seed,
                   std::make_shared<MockStyleEmbedder>(kEmbedderSeed, cfg.d_style,
                                                       cfg.styles, cfg.embedder_bias)) {}

PPJudgeModel::PPJudgeModel(const PPJudgeConfig& cfg, std::uint64_t seed,
                           std::shared_ptr<const StyleEmbedder> embedder)
    : cfg_(cfg), params_(seed), embedder_(std::move(embedder)) {
  cfg_.validate();
  if (!embedder_) throw ContractError("model: null embedder");
  if (embedder_->d_style() != cfg_.d_style) {
    throw ConfigError("model: embedder d_style " +
                      std::to_string(embedder_->d_style()) + " != config " +
                      std::to_string(cfg_.d_style));
  }
  prototypes_ = build_prototype_table(cfg_.styles, *embedder_);
  plan_ = make_rotation_plan(cfg_.rope());

  std::size_t d = cfg_.d_model;
  w_embed_ = params_.create_linear("embed/w", {cfg_.patch_dim(), d}, cfg_.patch_dim());
  b_embed_ = params_.create_constant("embed/b", {d}, 0.0);
  w_ref_ = params_.create_linear("ref/w", {cfg_.d_style, d}, cfg_.d_style);
  b_ref_ = params_.create_constant("ref/b", {d}, 0.0);

  MoeConfig moe_cfg = cfg_.moe();
  blocks_.resize(cfg_.n_blocks);
  for (std::size_t b = 0; b < cfg_.n_blocks; ++b) {
    std::string p = "block" + std::to_string(b) + "/";
    Block& blk = blocks_[b];
    blk.wq = params_.create_linear(p + "attn/wq", {d, d}, d);
    blk.bq = params_.create_constant(p + "attn/bq", {d}, 0.0);
    blk.wk = params_.create_linear(p + "attn/wk", {d, d}, d);
    blk.bk = params_.create_constant(p + "attn/bk", {d}, 0.0);
    blk.wv = params_.create_linear(p + "attn/wv", {d, d}, d);
    blk.bv = params_.create_constant(p + "attn/bv", {d}, 0.0);
    blk.wo = params_.create_linear(p + "attn/wo", {d, d}, d);
    blk.bo = params_.create_constant(p + "attn/bo", {d}, 0.0);
    blk.ln1_g = params_.create_constant(p + "ln1/g", {d}, 1.0);
    blk.ln1_b = params_.create_constant(p + "ln1/b", {d}, 0.0);
    blk.ln2_g = params_.create_constant(p + "ln2/g", {d}, 1.0);
    blk.ln2_b = params_.create_constant(p + "ln2/b", {d}, 0.0);
    blk.moe = std::make_unique<MoeLayer>(p + "moe", moe_cfg, params_);
  }

  final_g_ = params_.create_constant("final/g", {d}, 1.0);
  final_b_ = params_.create_constant("final/b", {d}, 0.0);
  head_w1_ = params_.create_linear("head/w1", {d, d}, d);
  head_b1_ = params_.create_constant("head/b1", {d}, 0.0);
  head_w2_ = params_.create_linear("head/w2", {d, d}, d);
  head_b2_ = params_.create_constant("head/b2", {d}, 0.0);
  head_w3_ = params_.create_linear("head/w3", {d, cfg_.n_attributes}, d);
  head_b3_ = params_.create_constant("head/b3", {cfg_.n_attributes}, 0.0);
  w_proj_ = params_.create_linear("style/w_proj", {d, cfg_.d_style}, d);
}

void PPJudgeModel::check_frame(const Frame& frame) const {
  if (frame.width != cfg_.image_size || frame.height != cfg_.image_size ||
      frame.channels != cfg_.channels) {
    throw DimensionError("frame " + std::to_string(frame.width) + "x" +
                         std::to_string(frame.height) + "x" +
                         std::to_string(frame.channels) + " does not match config " +
                         std::to_string(cfg_.image_size) + "x" +
                         std::to_string(cfg_.image_size) + "x" +
                         std::to_string(cfg_.channels));
  }
}

Tensor PPJudgeModel::reference_token(const Reference& ref) const {
  Tensor e;
  if (ref.is_prompt) {
    e = embedder_->embed_text(ref.prompt);
  } else {
    check_frame(ref.image);
    e = embedder_->embed_image(ref.image);
  }
  return add_rowvec(matmul(reshape(e, {1, cfg_.d_style}), w_ref_), b_ref_);
}

Tensor PPJudgeModel::embed_frame(const Frame& frame) const {
  check_frame(frame);
  return add_rowvec(matmul(patchify(frame, cfg_.patch_size), w_embed_), b_embed_);
}

std::pair<std::size_t, Tensor> PPJudgeModel::reference_style(const Reference& ref) const {
  NoGradGuard ng;
  Tensor e = ref.is_prompt ? embedder_->embed_text(ref.prompt)
                           : (check_frame(ref.image), embedder_->embed_image(ref.image));
  return classify_style_embedding(e, prototypes_);
}

Tensor PPJudgeModel::classify(const Tensor& pooled_feature) const {
  Tensor x = pooled_feature;
  if (x.shape().size() == 1) x = reshape(x, {1, x.numel()});
  if (x.rows() != 1 || x.cols() != cfg_.d_model) {
    throw DimensionError("classify: feature " + shape_str(pooled_feature.shape()) +
                         ", expected [" + std::to_string(cfg_.d_model) + "]");
  }
  Tensor h1 = silu(add_rowvec(matmul(x, head_w1_), head_b1_));
  Tensor h2 = silu(add_rowvec(matmul(h1, head_w2_), head_b2_));
  Tensor out = add_rowvec(matmul(h2, head_w3_), head_b3_);
  return reshape(out, {cfg_.n_attributes});
}

Tensor PPJudgeModel::clamp_scores(const Tensor& raw) {
  std::vector<double> v = raw.values();
  for (double& x : v) x = std::min(10.0, std::max(1.0, x));
  return Tensor::from_values(raw.shape(), std::move(v));
}

ModelOutput PPJudgeModel::forward_full(const std::vector<Frame>& frames,
                                       const Reference& ref) const {
  return forward_full(frames, ref, ForwardHooks{});
}

ModelOutput PPJudgeModel::forward_full(const std::vector<Frame>& frames,
                                       const Reference& ref,
                                       const ForwardHooks& hooks) const {
  if (frames.empty()) throw ContractError("forward: empty frame sequence");
  if (frames.size() > cfg_.max_frames) {
    throw RangeError("forward: " + std::to_string(frames.size()) +
                     " frames exceeds max_frames " + std::to_string(cfg_.max_frames));
  }
  std::size_t tpf = cfg_.tokens_per_frame();
  std::size_t n = 1 + frames.size() * tpf;

  std::vector<Tensor> parts;
  parts.reserve(frames.size() + 1);
  parts.push_back(reference_token(ref));
  for (const Frame& f : frames) parts.push_back(embed_frame(f));
  Tensor x = concat_rows(parts);
  if (hooks.embedded_tokens) *hooks.embedded_tokens = x;

  // Token 0 is the reference (spatial 0, frame 0 -- zero temporal offset);
  // spatial positions restart at 0 inside every frame.
  std::vector<std::size_t> spatial(n), frame_idx(n), row_end(n);
  spatial[0] = 0;
  frame_idx[0] = 0;
  row_end[0] = 0;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    for (std::size_t t = 0; t < tpf; ++t) {
      std::size_t i = 1 + f * tpf + t;
      spatial[i] = t;
      frame_idx[i] = f;
      row_end[i] = (f + 1) * tpf;  // last token of the own frame
    }
  }
  std::vector<double> angles = angle_rows(plan_, spatial, frame_idx);

  ModelOutput out;
  out.shared_outputs.reserve(cfg_.n_blocks);
  for (std::size_t b = 0; b < cfg_.n_blocks; ++b) {
    const Block& blk = blocks_[b];
    Tensor h = layer_norm(x, blk.ln1_g, blk.ln1_b);
    Tensor q = rotate_pairs(add_rowvec(matmul(h, blk.wq), blk.bq), angles, cfg_.n_heads);
    Tensor k = rotate_pairs(add_rowvec(matmul(h, blk.wk), blk.bk), angles, cfg_.n_heads);
    Tensor v = add_rowvec(matmul(h, blk.wv), blk.bv);
    Tensor attn = prefix_attention(q, k, v, cfg_.n_heads, row_end);
    Tensor a = add(x, add_rowvec(matmul(attn, blk.wo), blk.bo));

    auto moe_out = blk.moe->forward(a, layer_norm(a, blk.ln2_g, blk.ln2_b),
                                    hooks.style_path, hooks.stats);
    x = moe_out.output;
    out.shared_outputs.push_back(
        mean_rows(hooks.style_path ? moe_out.shared_sum_style : moe_out.shared_sum));
    if (hooks.final_decisions && b + 1 == cfg_.n_blocks) {
      *hooks.final_decisions = std::move(moe_out.decisions);
    }
  }

  Tensor finals = layer_norm(x, final_g_, final_b_);
  if (hooks.final_tokens) *hooks.final_tokens = finals;
  out.pooled_feature = mean_rows(finals);
  out.scores = classify(out.pooled_feature);
  return out;
}

KVCache PPJudgeModel::make_cache(const Reference& ref) const {
  NoGradGuard ng;
  KVCache cache;
  cache.cfg = cfg_;
  cache.frames_cached = 0;
  cache.keys.resize(cfg_.n_blocks);
  cache.values.resize(cfg_.n_blocks);
  cache.shared_sums.resize(cfg_.n_blocks);

  Tensor x = reference_token(ref);
  std::vector<double> angles = angle_rows(plan_, {0}, {0});
  std::vector<std::size_t> row_end{0};
  for (std::size_t b = 0; b < cfg_.n_blocks; ++b) {
    const Block& blk = blocks_[b];
    Tensor h = layer_norm(x, blk.ln1_g, blk.ln1_b);
    Tensor q = rotate_pairs(add_rowvec(matmul(h, blk.wq), blk.bq), angles, cfg_.n_heads);
    Tensor k = rotate_pairs(add_rowvec(matmul(h, blk.wk), blk.bk), angles, cfg_.n_heads);
    Tensor v = add_rowvec(matmul(h, blk.wv), blk.bv);
    Tensor attn = prefix_attention(q, k, v, cfg_.n_heads, row_end);
    Tensor a = add(x, add_rowvec(matmul(attn, blk.wo), blk.bo));
    auto moe_out = blk.moe->forward(a, layer_norm(a, blk.ln2_g, blk.ln2_b));
    x = moe_out.output;
    cache.keys[b] = k;
    cache.values[b] = v;
    cache.shared_sums[b] = scale(mean_rows(moe_out.shared_sum),
                                 static_cast<double>(moe_out.shared_sum.rows()));
  }
  cache.final_tokens = layer_norm(x, final_g_, final_b_);
  return cache;
}

ModelOutput PPJudgeModel::forward_incremental(KVCache& cache, const Frame& frame) const {
  if (!(cache.cfg == cfg_)) {
    throw ContractError("incremental: cache built for a different configuration");
  }
  if (cache.cached_tokens() == 0) {
    throw ContractError("incremental: cache missing reference token");
  }
  if (cache.frames_cached >= cfg_.max_frames) {
    throw RangeError("incremental: cache already holds max_frames = " +
                     std::to_string(cfg_.max_frames));
  }
  NoGradGuard ng;
  std::size_t tpf = cfg_.tokens_per_frame();
  std::size_t f = cache.frames_cached;
  std::size_t n_total = cache.cached_tokens() + tpf;

  Tensor x = embed_frame(frame);
  std::vector<std::size_t> spatial(tpf), frame_idx(tpf, f);
  for (std::size_t t = 0; t < tpf; ++t) spatial[t] = t;
  std::vector<double> angles = angle_rows(plan_, spatial, frame_idx);
  std::vector<std::size_t> row_end(tpf, n_total - 1);  // full cached prefix

  ModelOutput out;
  out.shared_outputs.reserve(cfg_.n_blocks);
  for (std::size_t b = 0; b < cfg_.n_blocks; ++b) {
    const Block& blk = blocks_[b];
    Tensor h = layer_norm(x, blk.ln1_g, blk.ln1_b);
    Tensor q = rotate_pairs(add_rowvec(matmul(h, blk.wq), blk.bq), angles, cfg_.n_heads);
    Tensor k = rotate_pairs(add_rowvec(matmul(h, blk.wk), blk.bk), angles, cfg_.n_heads);
    Tensor v = add_rowvec(matmul(h, blk.wv), blk.bv);
    Tensor k_all = concat_rows({cache.keys[b], k});
    Tensor v_all = concat_rows({cache.values[b], v});
    Tensor attn = prefix_attention(q, k_all, v_all, cfg_.n_heads, row_end);
    Tensor a = add(x, add_rowvec(matmul(attn, blk.wo), blk.bo));
    auto moe_out = blk.moe->forward(a, layer_norm(a, blk.ln2_g, blk.ln2_b));
    x = moe_out.output;
    cache.keys[b] = k_all;
    cache.values[b] = v_all;
    cache.shared_sums[b] =
        add(cache.shared_sums[b], scale(mean_rows(moe_out.shared_sum),
                                        static_cast<double>(moe_out.shared_sum.rows())));
    out.shared_outputs.push_back(
        scale(cache.shared_sums[b], 1.0 / static_cast<double>(n_total)));
  }

  cache.final_tokens =
      concat_rows({cache.final_tokens, layer_norm(x, final_g_, final_b_)});
  cache.frames_cached = f + 1;
  out.pooled_feature = mean_rows(cache.final_tokens);
  out.scores = classify(out.pooled_feature);
  return out;
}

}  // namespace ppjudge
