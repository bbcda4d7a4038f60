#include "ppjudge/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ppjudge/checkpoint.hpp"
#include "ppjudge/data.hpp"
#include "ppjudge/error.hpp"
#include "ppjudge/image.hpp"
#include "ppjudge/keyframe.hpp"
#include "ppjudge/losses.hpp"
#include "ppjudge/metrics.hpp"
#include "ppjudge/model.hpp"
#include "ppjudge/moe.hpp"
#include "ppjudge/rng.hpp"
#include "ppjudge/synth.hpp"
#include "ppjudge/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ppjudge {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

PPJudgeConfig resolve_config(const std::string& config_path,
                             const std::string& checkpoint_path) {
  if (!config_path.empty()) return PPJudgeConfig::load(config_path);
  if (!checkpoint_path.empty() && fs::exists(checkpoint_path + ".config")) {
    return PPJudgeConfig::load(checkpoint_path + ".config");
  }
  return PPJudgeConfig::desk();
}

/// Frame files of a directory ordered by the last digit run in the name
/// (frame_2 before frame_10), then lexicographically.
std::vector<std::string> list_frame_files(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  struct Entry {
    long long num;
    std::string name;
    std::string path;
  };
  std::vector<Entry> entries;
  for (const auto& de : fs::directory_iterator(dir)) {
    if (!de.is_regular_file()) continue;
    std::string ext = de.path().extension().string();
    if (ext != ".png" && ext != ".ppm" && ext != ".pgm") continue;
    std::string stem = de.path().stem().string();
    long long num = -1;
    auto end = stem.find_last_of("0123456789");
    if (end != std::string::npos) {
      auto begin = stem.find_last_not_of("0123456789", end);
      begin = (begin == std::string::npos) ? 0 : begin + 1;
      num = std::stoll(stem.substr(begin, end - begin + 1));
    }
    entries.push_back({num, de.path().filename().string(), de.path().string()});
  }
  if (entries.empty()) throw IoError("no frame images (.png/.ppm/.pgm) in " + dir);
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.num != b.num) return a.num < b.num;
    return a.name < b.name;
  });
  std::vector<std::string> out;
  for (const auto& e : entries) out.push_back(e.path);
  return out;
}

std::vector<Frame> load_frames(const std::vector<std::string>& paths) {
  std::vector<Frame> frames;
  frames.reserve(paths.size());
  for (const auto& p : paths) frames.push_back(load_frame(p));
  return frames;
}

json scores_to_json(const Tensor& scores) {
  json j;
  for (std::size_t a = 0; a < AttributeScores::kCount; ++a) {
    j[AttributeScores::names()[a]] = scores.values()[a];
  }
  return j;
}

void print_scores(const Tensor& scores) {
  for (std::size_t a = 0; a < AttributeScores::kCount; ++a) {
    std::cout << AttributeScores::names()[a] << ": " << fmt(scores.values()[a]) << "\n";
  }
}

// ---- synth ----

struct SynthArgs {
  std::string out;
  std::size_t count = 200;
  std::size_t test_count = 50;
  std::uint64_t seed = 42;
  double prompt_frac = 0.25;
  std::size_t frames_min = 3;
  std::size_t frames_max = 6;
  double color_jump_max = 0.5;
  double style_jump_max = 0.4;
  double layout_jump_max = 0.45;
  double regression_max = 0.45;
  double corruption_max = 1.0;
};

void cmd_synth(const SynthArgs& args) {
  if (args.frames_min == 0 || args.frames_min > args.frames_max) {
    throw ConfigError("synth: need 1 <= frames-min <= frames-max");
  }
  PPJudgeConfig cfg = PPJudgeConfig::desk();
  fs::create_directories(fs::path(args.out) / "frames");

  std::vector<ProcessSample> records;
  std::size_t total = args.count + args.test_count;
  for (std::size_t idx = 0; idx < total; ++idx) {
    char id_buf[32];
    std::snprintf(id_buf, sizeof id_buf, "synth-%06zu", idx);
    std::string id = id_buf;

    Rng kr(derive_seed(args.seed, "knobs/" + std::to_string(idx)));
    SynthProfile prof;
    prof.seed = derive_seed(args.seed, "sample/" + std::to_string(idx));
    prof.style_index = kr.uniform_index(cfg.styles.size());
    prof.n_frames = args.frames_min + kr.uniform_index(args.frames_max - args.frames_min + 1);
    prof.color_jump_prob = kr.uniform(0.0, args.color_jump_max);
    prof.style_jump_prob = kr.uniform(0.0, args.style_jump_max);
    prof.layout_jump_prob = kr.uniform(0.0, args.layout_jump_max);
    prof.regression_prob = kr.uniform(0.0, args.regression_max);
    prof.detail_growth_rate = kr.uniform();
    prof.palette_growth_rate = kr.uniform();
    prof.layout_growth_rate = kr.uniform();
    prof.prompt_reference = kr.uniform() < args.prompt_frac;
    prof.reference_corruption =
        prof.prompt_reference ? 0.0 : kr.uniform(0.0, args.corruption_max);

    SynthSample sample = synth_generate(prof, cfg.styles);

    std::string rel_dir = "frames/" + id;
    fs::create_directories(fs::path(args.out) / rel_dir);
    ProcessSample rec;
    rec.id = id;
    for (std::size_t f = 0; f < sample.frames.size(); ++f) {
      char name[32];
      std::snprintf(name, sizeof name, "frame_%03zu.png", f);
      std::string rel = rel_dir + "/" + name;
      save_frame((fs::path(args.out) / rel).string(), sample.frames[f]);
      rec.frame_paths.push_back(rel);
    }
    if (sample.prompt_reference) {
      rec.reference.is_prompt = true;
      rec.reference.prompt = sample.prompt;
    } else {
      std::string rel = rel_dir + "/reference.png";
      save_frame((fs::path(args.out) / rel).string(), sample.reference_image);
      rec.reference.image_path = rel;
    }
    rec.scores = sample.scores;
    rec.split = idx < args.count ? Split::train : Split::test;
    rec.source = Source::synthetic;
    records.push_back(std::move(rec));
  }

  std::string manifest = (fs::path(args.out) / "manifest.jsonl").string();
  save_manifest(manifest, records);

  std::cout << "wrote " << records.size() << " samples (" << args.count << " train, "
            << args.test_count << " test) to " << manifest << "\n";
  std::cout << "rounded score histograms (1..10):\n";
  for (std::size_t a = 0; a < AttributeScores::kCount; ++a) {
    std::array<std::size_t, 11> hist{};
    for (const auto& rec : records) {
      int r = static_cast<int>(round_half_away_from_zero(rec.scores.as_array()[a]));
      hist[static_cast<std::size_t>(std::clamp(r, 1, 10))]++;
    }
    std::cout << "  " << AttributeScores::names()[a] << ":";
    for (int v = 1; v <= 10; ++v) {
      if (hist[static_cast<std::size_t>(v)] > 0) {
        std::cout << " " << v << ":" << hist[static_cast<std::size_t>(v)];
      }
    }
    std::cout << "\n";
  }
}

// ---- train ----

struct TrainArgs {
  std::string data;
  std::string out;
  std::string config;
  std::string resume;
  std::string log;
  std::string phase = "pretrain";
  std::size_t epochs = 30;
  std::size_t batch = 16;
  double lr = 0.0;  // 0 = phase default
  std::uint64_t seed = 42;
};

void cmd_train(const TrainArgs& args) {
  PPJudgeConfig cfg =
      args.config.empty() && !args.resume.empty() && fs::exists(args.resume + ".config")
          ? PPJudgeConfig::load(args.resume + ".config")
          : resolve_config(args.config, "");
  PPJudgeModel model(cfg, args.seed);
  OptimizerState opt = args.phase == "finetune"
                           ? make_finetune_optimizer(args.lr > 0 ? args.lr : 1e-5)
                           : make_pretrain_optimizer(args.lr > 0 ? args.lr : 1e-4);
  if (!args.resume.empty()) load_checkpoint(args.resume, model.params(), &opt);

  std::vector<ProcessSample> manifest = load_manifest(args.data);
  std::vector<TrainSample> samples =
      load_samples(manifest, parent_dir(args.data), model, Split::train);
  if (samples.empty()) throw ContractError("train: manifest has no train-split samples");

  TrainOptions opts;
  opts.epochs = args.epochs;
  opts.batch_size = args.batch;
  opts.seed = args.seed;
  opts.step_log_path = args.log.empty() ? args.out + ".loss.csv" : args.log;

  // the loss log is opened mid-training, so both parents must exist up front
  for (const std::string& p : {args.out, opts.step_log_path}) {
    if (auto dir = fs::path(p).parent_path(); !dir.empty()) fs::create_directories(dir);
  }

  TrainResult result = train_model(model, opt, samples, opts);

  save_checkpoint(args.out, model.params(), &opt);
  cfg.save(args.out + ".config");

  std::cout << "trained " << result.steps << " steps over " << result.epochs.size()
            << " epochs on " << samples.size() << " samples\n";
  for (std::size_t e = 0; e < result.epochs.size(); ++e) {
    const EpochStats& s = result.epochs[e];
    std::cout << "epoch " << e << ": style " << fmt(s.style) << " score " << fmt(s.score)
              << " total " << fmt(s.total) << "\n";
  }
  std::cout << "checkpoint: " << args.out << "\n";
}

// ---- eval ----

struct EvalArgs {
  std::string data;
  std::string checkpoint;
  std::string config;
  std::string out;
  std::string split = "test";
  bool oracle_passthrough = false;
  std::size_t limit = 0;
  std::uint64_t seed = 42;
};

void cmd_eval(const EvalArgs& args) {
  std::vector<ProcessSample> manifest = load_manifest(args.data);
  Split split = split_from_string(args.split);

  EvalReport report;
  if (args.oracle_passthrough) {
    std::vector<std::array<double, 8>> labels;
    for (const auto& rec : manifest) {
      if (rec.split != split) continue;
      labels.push_back(rec.scores.as_array());
      if (args.limit > 0 && labels.size() == args.limit) break;
    }
    if (labels.empty()) throw ContractError("eval: no samples in split " + args.split);
    report = compute_report(labels, labels);
  } else {
    if (args.checkpoint.empty()) throw ConfigError("eval: --checkpoint required");
    PPJudgeConfig cfg = resolve_config(args.config, args.checkpoint);
    PPJudgeModel model(cfg, args.seed);
    load_checkpoint(args.checkpoint, model.params());
    std::vector<TrainSample> samples =
        load_samples(manifest, parent_dir(args.data), model, split);
    if (samples.empty()) throw ContractError("eval: no samples in split " + args.split);
    report = compute_report(predict(model, samples, args.limit),
                            labels_of(samples, args.limit));
  }

  std::cout << "attribute,srcc,pcc,mse,acc\n";
  for (std::size_t a = 0; a < AttributeScores::kCount; ++a) {
    std::cout << AttributeScores::names()[a] << "," << fmt(report.srcc[a]) << ","
              << fmt(report.pcc[a]) << "," << fmt(report.mse[a]) << ","
              << fmt(report.acc[a]) << "\n";
  }
  std::cout << "mean," << fmt(report.mean_srcc) << "," << fmt(report.mean_pcc) << ","
            << fmt(report.mean_mse) << "," << fmt(report.mean_acc) << "\n";
  if (!args.out.empty()) write_metrics_csv(args.out, report);
}

// ---- score ----

struct ScoreArgs {
  std::string frames;
  std::string reference;
  std::string checkpoint;
  std::string config;
  std::string out;
  bool incremental = false;
  std::uint64_t seed = 42;
};

void cmd_score(const ScoreArgs& args) {
  if (args.checkpoint.empty()) throw ConfigError("score: --checkpoint required");
  PPJudgeConfig cfg = resolve_config(args.config, args.checkpoint);
  PPJudgeModel model(cfg, args.seed);
  load_checkpoint(args.checkpoint, model.params());

  std::vector<Frame> frames = load_frames(list_frame_files(args.frames));
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].width != cfg.image_size || frames[i].height != cfg.image_size ||
        frames[i].channels != cfg.channels) {
      throw ContractError("score: frame " + std::to_string(i) +
                          " size does not match the model configuration");
    }
  }
  Reference ref = fs::exists(args.reference)
                      ? Reference::from_image(load_frame(args.reference))
                      : Reference::from_prompt(args.reference);

  json j;
  Tensor final_scores;
  if (args.incremental) {
    KVCache cache = model.make_cache(ref);
    json traj = json::array();
    for (std::size_t i = 0; i < frames.size(); ++i) {
      ModelOutput out = model.forward_incremental(cache, frames[i]);
      Tensor clamped = PPJudgeModel::clamp_scores(out.scores);
      json step;
      step["frame"] = i;
      step["scores"] = scores_to_json(clamped);
      traj.push_back(step);
      final_scores = clamped;
    }
    j["trajectory"] = traj;
  } else {
    NoGradGuard ng;
    ModelOutput out = model.forward_full(frames, ref);
    final_scores = PPJudgeModel::clamp_scores(out.scores);
  }
  j["scores"] = scores_to_json(final_scores);

  print_scores(final_scores);
  if (args.out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream os(args.out, std::ios::trunc);
    if (!os) throw IoError("cannot write " + args.out);
    os << j.dump(2) << "\n";
  }
}

// ---- keyframes ----

struct KeyframeArgs {
  std::string frames;
  std::string list;
  std::string out;
  std::string copy_to;
  std::size_t stride = 5;
  std::size_t n_min = 5;
  std::size_t n_max = 20;
  double scale = 1.0;
};

void cmd_keyframes(const KeyframeArgs& args) {
  std::vector<std::string> paths;
  if (!args.list.empty()) {
    std::ifstream is(args.list);
    if (!is) throw IoError("cannot read frame list: " + args.list);
    std::string line;
    while (std::getline(is, line)) {
      if (!line.empty()) paths.push_back(line);
    }
    if (paths.empty()) throw IoError("frame list is empty: " + args.list);
  } else if (!args.frames.empty()) {
    paths = list_frame_files(args.frames);
  } else {
    throw ConfigError("keyframes: pass --frames or --list");
  }
  std::vector<Frame> video = load_frames(paths);

  KeyframeParams params;
  params.stride = args.stride;
  params.n_min = args.n_min;
  params.n_max = args.n_max;
  params.threshold_scale = args.scale;
  std::vector<std::size_t> indices = select_keyframes(video, params);

  json j = json::array();
  for (std::size_t i : indices) j.push_back(i);
  std::cout << j.dump() << "\n";
  if (!args.out.empty()) {
    std::ofstream os(args.out, std::ios::trunc);
    if (!os) throw IoError("cannot write " + args.out);
    os << j.dump() << "\n";
  }
  if (!args.copy_to.empty()) {
    fs::create_directories(args.copy_to);
    for (std::size_t i : indices) {
      fs::path src(paths[i]);
      fs::copy_file(src, fs::path(args.copy_to) / src.filename(),
                    fs::copy_options::overwrite_existing);
    }
  }
}

// ---- heatmap ----

struct HeatmapArgs {
  std::string data;
  std::string checkpoint;
  std::string config;
  std::string out;
  std::string split = "test";
  std::size_t limit = 100;
  std::uint64_t seed = 42;
};

void cmd_heatmap(const HeatmapArgs& args) {
  if (args.checkpoint.empty()) throw ConfigError("heatmap: --checkpoint required");
  PPJudgeConfig cfg = resolve_config(args.config, args.checkpoint);
  PPJudgeModel model(cfg, args.seed);
  load_checkpoint(args.checkpoint, model.params());

  std::vector<ProcessSample> manifest = load_manifest(args.data);
  std::vector<TrainSample> samples =
      load_samples(manifest, parent_dir(args.data), model, split_from_string(args.split));
  if (samples.empty()) throw ContractError("heatmap: no samples in split " + args.split);
  std::size_t n_samples = samples.size();
  if (args.limit > 0 && args.limit < n_samples) n_samples = args.limit;

  // Final-layer routing decisions of every sample, concatenated, with token
  // ids shifted onto one attribution table.
  std::vector<RouterDecision> all_decisions;
  std::vector<std::vector<double>> attribution;
  for (std::size_t si = 0; si < n_samples; ++si) {
    PPJudgeModel::ForwardHooks hooks;
    Tensor tokens;
    std::vector<RouterDecision> decisions;
    hooks.embedded_tokens = &tokens;
    hooks.final_decisions = &decisions;
    ModelOutput out = model.forward_full(samples[si].frames, samples[si].reference, hooks);

    std::size_t n_tok = tokens.rows();
    std::size_t d = tokens.cols();
    std::vector<std::vector<double>> sal(n_tok,
                                         std::vector<double>(AttributeScores::kCount, 0.0));
    for (std::size_t a = 0; a < AttributeScores::kCount; ++a) {
      Tensor root = gather_elements(out.scores, {a});
      zero_graph_grads(root);
      backward(root);
      const auto& g = tokens.grad();
      const auto& v = tokens.values();
      for (std::size_t t = 0; t < n_tok; ++t) {
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k) acc += g[t * d + k] * v[t * d + k];
        sal[t][a] = std::fabs(acc);
      }
    }
    std::size_t base = attribution.size();
    for (auto& row : sal) {
      double total = 0.0;
      for (double x : row) total += x;
      if (total > 0.0) {
        for (double& x : row) x /= total;
      }
      attribution.push_back(std::move(row));
    }
    for (RouterDecision& dec : decisions) {
      dec.token += base;
      all_decisions.push_back(std::move(dec));
    }
    model.params().zero_grads();
  }

  const MoeConfig moe_cfg = cfg.moe();
  std::vector<std::size_t> expert_depth;
  for (const auto& [depth, count] : moe_cfg.routed_depth_histogram) {
    for (std::size_t c = 0; c < count; ++c) expert_depth.push_back(depth);
  }
  Heatmap hm = usage_heatmap(all_decisions, expert_depth, attribution);

  std::vector<std::string> names(AttributeScores::names().begin(),
                                 AttributeScores::names().end());
  if (!args.out.empty()) write_heatmap_csv(args.out, hm, names);
  std::cout << "attribute";
  for (std::size_t dpt : hm.depths) std::cout << ",depth_" << dpt;
  std::cout << "\n";
  for (std::size_t a = 0; a < hm.rows.size(); ++a) {
    std::cout << names[a];
    for (double v : hm.rows[a]) std::cout << "," << fmt(v);
    std::cout << "\n";
  }
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"ppjudge: painting process assessment toolkit"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "generate a synthetic oracle dataset");
  synth->add_option("--out", synth_args.out, "output directory")->required();
  synth->add_option("--count", synth_args.count, "train sample count");
  synth->add_option("--test-count", synth_args.test_count, "test sample count");
  synth->add_option("--seed", synth_args.seed, "generation seed");
  synth->add_option("--prompt-frac", synth_args.prompt_frac,
                    "fraction of prompt references");
  synth->add_option("--frames-min", synth_args.frames_min, "minimum frames per sample");
  synth->add_option("--frames-max", synth_args.frames_max, "maximum frames per sample");
  synth->add_option("--color-jump-max", synth_args.color_jump_max,
                    "upper bound of the per-sample color jump probability");
  synth->add_option("--style-jump-max", synth_args.style_jump_max,
                    "upper bound of the per-sample style jump probability");
  synth->add_option("--layout-jump-max", synth_args.layout_jump_max,
                    "upper bound of the per-sample layout jump probability");
  synth->add_option("--regression-max", synth_args.regression_max,
                    "upper bound of the per-sample regression probability");
  synth->add_option("--corruption-max", synth_args.corruption_max,
                    "upper bound of the reference corruption");
  synth->callback([&] { cmd_synth(synth_args); });

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "train a model on a manifest");
  train->add_option("--data", train_args.data, "manifest path")->required();
  train->add_option("--out", train_args.out, "checkpoint output path")->required();
  train->add_option("--config", train_args.config, "model config file");
  train->add_option("--resume", train_args.resume, "checkpoint to resume from");
  train->add_option("--log", train_args.log, "step-loss CSV path");
  train->add_option("--phase", train_args.phase, "training phase")
      ->check(CLI::IsMember({"pretrain", "finetune"}));
  train->add_option("--epochs", train_args.epochs, "epochs to run");
  train->add_option("--batch", train_args.batch, "batch size");
  train->add_option("--lr", train_args.lr, "learning rate (0 = phase default)");
  train->add_option("--seed", train_args.seed, "seed");
  train->callback([&] { cmd_train(train_args); });

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--data", eval_args.data, "manifest path")->required();
  eval->add_option("--checkpoint", eval_args.checkpoint, "checkpoint path");
  eval->add_option("--config", eval_args.config, "model config file");
  eval->add_option("--out", eval_args.out, "metrics CSV path");
  eval->add_option("--split", eval_args.split, "split to evaluate")
      ->check(CLI::IsMember({"train", "test"}));
  eval->add_flag("--oracle-passthrough", eval_args.oracle_passthrough,
                 "score labels against themselves (pipeline check)");
  eval->add_option("--limit", eval_args.limit, "evaluate at most N samples");
  eval->add_option("--seed", eval_args.seed, "seed");
  eval->callback([&] { cmd_eval(eval_args); });

  ScoreArgs score_args;
  auto* score = app.add_subcommand("score", "score one painting process");
  score->add_option("--frames", score_args.frames, "directory of frame images")
      ->required();
  score->add_option("--reference", score_args.reference,
                    "reference image path or prompt text")
      ->required();
  score->add_option("--checkpoint", score_args.checkpoint, "checkpoint path");
  score->add_option("--config", score_args.config, "model config file");
  score->add_option("--out", score_args.out, "write score JSON here");
  score->add_flag("--incremental", score_args.incremental,
                  "feed frames through the KV cache and emit the trajectory");
  score->add_option("--seed", score_args.seed, "seed");
  score->callback([&] { cmd_score(score_args); });

  KeyframeArgs kf_args;
  auto* keyframes = app.add_subcommand("keyframes", "select key frames from a video");
  keyframes->add_option("--frames", kf_args.frames, "directory of frame images");
  keyframes->add_option("--list", kf_args.list, "file listing frame paths");
  keyframes->add_option("--k", kf_args.stride, "subsampling stride");
  keyframes->add_option("--n-min", kf_args.n_min, "minimum keyframes");
  keyframes->add_option("--n-max", kf_args.n_max, "maximum keyframes");
  keyframes->add_option("--scale", kf_args.scale, "threshold scale");
  keyframes->add_option("--out", kf_args.out, "write indices JSON here");
  keyframes->add_option("--copy-to", kf_args.copy_to, "copy selected frames here");
  keyframes->callback([&] { cmd_keyframes(kf_args); });

  HeatmapArgs heat_args;
  auto* heatmap = app.add_subcommand("heatmap", "attribute-by-depth expert usage");
  heatmap->add_option("--data", heat_args.data, "manifest path")->required();
  heatmap->add_option("--checkpoint", heat_args.checkpoint, "checkpoint path");
  heatmap->add_option("--config", heat_args.config, "model config file");
  heatmap->add_option("--out", heat_args.out, "CSV output path");
  heatmap->add_option("--split", heat_args.split, "split to read")
      ->check(CLI::IsMember({"train", "test"}));
  heatmap->add_option("--limit", heat_args.limit, "sample cap");
  heatmap->add_option("--seed", heat_args.seed, "seed");
  heatmap->callback([&] { cmd_heatmap(heat_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace ppjudge
