#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <ppjudge/checkpoint.hpp>
#include <ppjudge/data.hpp>
#include <ppjudge/error.hpp>
#include <ppjudge/image.hpp>
#include <ppjudge/model.hpp>
#include <ppjudge/optim.hpp>
#include <ppjudge/rng.hpp>
#include <ppjudge/train.hpp>
#include <ppjudge/vision.hpp>

using namespace ppjudge;
namespace fs = std::filesystem;

namespace {

PPJudgeConfig tiny() {
  PPJudgeConfig cfg;
  cfg.n_blocks = 2;
  cfg.d_model = 16;
  cfg.n_heads = 2;
  cfg.image_size = 16;
  cfg.channels = 3;
  cfg.patch_size = 8;
  cfg.d_style = 8;
  cfg.max_frames = 5;
  cfg.shared_count = 1;
  cfg.shared_depth = 1;
  cfg.routed_histogram = {{1, 3}};
  cfg.top_k = 2;
  cfg.expert_hidden = 8;
  cfg.styles = {"watercolor", "oil"};
  return cfg;
}

std::shared_ptr<MockStyleEmbedder> tiny_embedder(const PPJudgeConfig& cfg) {
  return std::make_shared<MockStyleEmbedder>(1, cfg.d_style, cfg.styles,
                                             cfg.embedder_bias);
}

// pixel values that survive the 8-bit image files bit-exactly
Frame lattice_frame(std::size_t salt) {
  Frame f = make_frame(16, 16, 3);
  for (std::size_t y = 0; y < 16; ++y) {
    for (std::size_t x = 0; x < 16; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        f.at(y, x, c) = static_cast<double>((y * 13 + x * 7 + c * 3 + salt * 29) % 256) /
                        255.0;
      }
    }
  }
  return f;
}

struct DiskDataset {
  fs::path dir;
  std::vector<ProcessSample> manifest;
  ~DiskDataset() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
};

DiskDataset write_dataset(const std::string& tag, std::size_t n_train,
                          std::size_t n_test) {
  DiskDataset ds;
  ds.dir = fs::temp_directory_path() / ("ppjudge_train_" + tag);
  fs::create_directories(ds.dir / "img");
  Rng rng(7);
  for (std::size_t i = 0; i < n_train + n_test; ++i) {
    ProcessSample rec;
    rec.id = "s" + std::to_string(i);
    rec.split = i < n_train ? Split::train : Split::test;
    rec.source = Source::synthetic;
    std::size_t n_frames = 2 + i % 3;
    for (std::size_t f = 0; f < n_frames; ++f) {
      std::string rel = "img/s" + std::to_string(i) + "_f" + std::to_string(f) + ".ppm";
      save_frame((ds.dir / rel).string(), lattice_frame(i * 11 + f));
      rec.frame_paths.push_back(rel);
    }
    if (i % 2 == 0) {
      std::string rel = "img/s" + std::to_string(i) + "_ref.ppm";
      save_frame((ds.dir / rel).string(), lattice_frame(i * 11 + 97));
      rec.reference.is_prompt = false;
      rec.reference.image_path = rel;
    } else {
      rec.reference.is_prompt = true;
      rec.reference.prompt = "This is a oil painting.";
    }
    std::array<double, 8> sc;
    for (auto& v : sc) v = 1.0 + 9.0 * rng.uniform();
    rec.scores = AttributeScores::from_array(sc);
    ds.manifest.push_back(rec);
  }
  save_manifest((ds.dir / "manifest.jsonl").string(), ds.manifest);
  return ds;
}

bool params_bit_equal(const ParamStore& a, const ParamStore& b) {
  auto pa = a.all();
  auto pb = b.all();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].name != pb[i].name) return false;
    if (pa[i].tensor.values() != pb[i].tensor.values()) return false;
  }
  return true;
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream is(p);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("sample loading resolves paths, labels, and style targets") {
  DiskDataset ds = write_dataset("load", 3, 2);
  PPJudgeConfig cfg = tiny();
  PPJudgeModel model(cfg, 5, tiny_embedder(cfg));

  auto manifest = load_manifest((ds.dir / "manifest.jsonl").string());
  auto train = load_samples(manifest, ds.dir.string(), model, Split::train);
  auto test = load_samples(manifest, ds.dir.string(), model, Split::test);
  REQUIRE(train.size() == 3);
  REQUIRE(test.size() == 2);

  for (std::size_t i = 0; i < train.size(); ++i) {
    const TrainSample& s = train[i];
    CHECK(s.id == ds.manifest[i].id);
    REQUIRE(s.frames.size() == ds.manifest[i].frame_paths.size());
    for (std::size_t f = 0; f < s.frames.size(); ++f) {
      CHECK(s.frames[f].width == 16);
      CHECK(s.frames[f].channels == 3);
      CHECK(s.frames[f].pixels == lattice_frame(i * 11 + f).pixels);
    }
    REQUIRE(s.label.shape() == Shape{8});
    auto want = ds.manifest[i].scores.as_array();
    for (std::size_t a = 0; a < 8; ++a) CHECK(s.label.at(a) == want[a]);
    CHECK(s.scores.as_array() == want);

    // the frozen style target is exactly what the model would compute
    Tensor again = model.reference_style(s.reference).second;
    CHECK(s.style_target.values() == again.values());
  }
  CHECK(train[1].reference.is_prompt);
  CHECK_FALSE(train[0].reference.is_prompt);

  // too-long videos are rejected up front, naming the sample
  auto long_manifest = manifest;
  for (int f = 0; f < 6; ++f) {
    long_manifest[0].frame_paths.push_back(long_manifest[0].frame_paths[0]);
  }
  CHECK_THROWS_AS(load_samples(long_manifest, ds.dir.string(), model, Split::train),
                  RangeError);
}

TEST_CASE("training reduces the loss and reports per-epoch means") {
  DiskDataset ds = write_dataset("learn", 6, 0);
  PPJudgeConfig cfg = tiny();
  PPJudgeModel model(cfg, 9, tiny_embedder(cfg));
  auto manifest = load_manifest((ds.dir / "manifest.jsonl").string());
  auto samples = load_samples(manifest, ds.dir.string(), model, Split::train);

  OptimizerState opt = make_pretrain_optimizer(1e-3);
  TrainOptions topt;
  topt.epochs = 10;
  topt.batch_size = 4;
  topt.seed = 42;
  TrainResult res = train_model(model, opt, samples, topt);

  REQUIRE(res.epochs.size() == 10);
  CHECK(res.steps == 20);  // ceil(6/4) = 2 steps per epoch
  CHECK(opt.step == 20);
  for (const EpochStats& e : res.epochs) {
    CHECK(std::isfinite(e.total));
    CHECK(e.style >= 0.0);
    CHECK(e.score >= 0.0);
    CHECK(e.total == doctest::Approx(e.style + 10.0 * e.score).epsilon(1e-12));
  }
  CHECK(res.epochs.back().total < res.epochs.front().total);
  CHECK(res.epochs.back().score < res.epochs.front().score);
}

TEST_CASE("the step log is a csv that continues across calls") {
  DiskDataset ds = write_dataset("steplog", 5, 0);
  PPJudgeConfig cfg = tiny();
  PPJudgeModel model(cfg, 11, tiny_embedder(cfg));
  auto samples = load_samples(load_manifest((ds.dir / "manifest.jsonl").string()),
                              ds.dir.string(), model, Split::train);

  fs::path log = ds.dir / "steps.csv";
  OptimizerState opt = make_pretrain_optimizer(1e-4);
  TrainOptions topt;
  topt.epochs = 2;
  topt.batch_size = 3;
  topt.step_log_path = log.string();
  train_model(model, opt, samples, topt);  // 2 steps/epoch -> 4 steps

  auto lines = read_lines(log);
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] == "step,style_total,score,total");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::istringstream ss(lines[i]);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    REQUIRE(fields.size() == 4);
    CHECK(std::stoull(fields[0]) == i);
    double style = std::stod(fields[1]), score = std::stod(fields[2]),
           total = std::stod(fields[3]);
    CHECK(std::isfinite(total));
    CHECK(total == doctest::Approx(style + 10.0 * score).epsilon(1e-12));
  }

  // a second call appends instead of truncating, without repeating the header
  train_model(model, opt, samples, topt);
  lines = read_lines(log);
  REQUIRE(lines.size() == 9);
  CHECK(std::stoull(read_lines(log).back().substr(0, 1)) == 8);
  std::size_t headers = 0;
  for (const auto& l : lines) headers += l == "step,style_total,score,total" ? 1 : 0;
  CHECK(headers == 1);

  TrainOptions bad = topt;
  bad.step_log_path = "/nonexistent_dir_ppjudge/steps.csv";
  OptimizerState fresh = make_pretrain_optimizer(1e-4);
  CHECK_THROWS_AS(train_model(model, fresh, samples, bad), IoError);
}

TEST_CASE("training input validation") {
  PPJudgeConfig cfg = tiny();
  PPJudgeModel model(cfg, 2, tiny_embedder(cfg));
  OptimizerState opt = make_pretrain_optimizer();
  TrainOptions topt;

  CHECK_THROWS_AS(train_model(model, opt, {}, topt), ContractError);

  TrainSample s;
  s.id = "hand";
  s.frames = {lattice_frame(0)};
  s.reference = Reference::from_prompt("This is a oil painting.");
  s.style_target = model.reference_style(s.reference).second;
  s.label = Tensor::full({8}, 5.0);
  s.scores = AttributeScores::from_array({5, 5, 5, 5, 5, 5, 5, 5});

  TrainOptions zero_batch = topt;
  zero_batch.batch_size = 0;
  CHECK_THROWS_AS(train_model(model, opt, {s}, zero_batch), ConfigError);

  // a non-finite loss aborts before any parameter update
  TrainSample poisoned = s;
  poisoned.label = Tensor::full({8}, std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(train_model(model, opt, {poisoned}, topt), DegenerateInputError);

  // the optimizer refuses parameters that never received a gradient (a fresh
  // model: the aborted runs above already materialized this model's buffers)
  PPJudgeModel untouched(cfg, 3, tiny_embedder(cfg));
  OptimizerState lone = make_pretrain_optimizer();
  CHECK_THROWS_AS(optimizer_step(untouched.params(), lone), ContractError);
}

TEST_CASE("checkpoints restore parameters and optimizer state bit-exactly") {
  DiskDataset ds = write_dataset("ckpt", 4, 0);
  PPJudgeConfig cfg = tiny();
  PPJudgeModel a(cfg, 21, tiny_embedder(cfg));
  auto samples = load_samples(load_manifest((ds.dir / "manifest.jsonl").string()),
                              ds.dir.string(), a, Split::train);

  OptimizerState opt_a = make_pretrain_optimizer(1e-4);
  TrainOptions topt;
  topt.epochs = 2;
  topt.batch_size = 2;
  train_model(a, opt_a, samples, topt);

  fs::path ck = ds.dir / "model.ckpt";
  save_checkpoint(ck.string(), a.params(), &opt_a);

  // different seed, so every weight starts different — the file must win
  PPJudgeModel b(cfg, 22, tiny_embedder(cfg));
  REQUIRE_FALSE(params_bit_equal(a.params(), b.params()));
  OptimizerState opt_b;
  load_checkpoint(ck.string(), b.params(), &opt_b);
  CHECK(params_bit_equal(a.params(), b.params()));
  CHECK(opt_b.step == opt_a.step);
  CHECK(opt_b.lr == opt_a.lr);
  CHECK(opt_b.m == opt_a.m);
  CHECK(opt_b.v == opt_a.v);

  ModelOutput oa = a.forward_full(samples[0].frames, samples[0].reference);
  ModelOutput ob = b.forward_full(samples[0].frames, samples[0].reference);
  CHECK(oa.scores.values() == ob.scores.values());

  // identical states serialize to byte-identical files
  fs::path ck2 = ds.dir / "model2.ckpt";
  save_checkpoint(ck2.string(), b.params(), &opt_b);
  std::ifstream f1(ck, std::ios::binary), f2(ck2, std::ios::binary);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());

  CHECK_THROWS_AS(load_checkpoint((ds.dir / "nope.ckpt").string(), b.params(), nullptr),
                  IoError);

  // a checkpoint without optimizer state cannot resume one
  fs::path weights_only = ds.dir / "weights.ckpt";
  save_checkpoint(weights_only.string(), a.params());
  OptimizerState opt_c;
  CHECK_NOTHROW(load_checkpoint(weights_only.string(), b.params(), nullptr));
  CHECK_THROWS_AS(load_checkpoint(weights_only.string(), b.params(), &opt_c),
                  ContractError);

  // the store must match the file's parameter set exactly
  PPJudgeConfig other = cfg;
  other.n_blocks = 1;
  PPJudgeModel c(other, 5, tiny_embedder(other));
  CHECK_THROWS_AS(load_checkpoint(ck.string(), c.params(), nullptr), ContractError);

  fs::path garbage = ds.dir / "garbage.ckpt";
  std::ofstream(garbage) << "not a checkpoint at all";
  CHECK_THROWS_AS(load_checkpoint(garbage.string(), b.params(), nullptr), ParseError);
}

TEST_CASE("resuming from a checkpoint replays the uninterrupted run bit-exactly") {
  DiskDataset ds = write_dataset("resume", 6, 0);
  PPJudgeConfig cfg = tiny();

  auto make = [&](std::uint64_t seed) {
    return PPJudgeModel(cfg, seed, tiny_embedder(cfg));
  };
  TrainOptions topt;
  topt.batch_size = 4;
  topt.seed = 13;

  // A: one uninterrupted 4-epoch run
  PPJudgeModel a = make(3);
  auto samples = load_samples(load_manifest((ds.dir / "manifest.jsonl").string()),
                              ds.dir.string(), a, Split::train);
  OptimizerState opt_a = make_pretrain_optimizer(3e-4);
  topt.epochs = 4;
  TrainResult res_a = train_model(a, opt_a, samples, topt);

  // B: the same run split into 2 + 2 epochs on the live objects
  PPJudgeModel b = make(3);
  OptimizerState opt_b = make_pretrain_optimizer(3e-4);
  topt.epochs = 2;
  TrainResult res_b1 = train_model(b, opt_b, samples, topt);
  TrainResult res_b2 = train_model(b, opt_b, samples, topt);
  CHECK(params_bit_equal(a.params(), b.params()));
  CHECK(opt_b.step == opt_a.step);

  // C: interrupted by a checkpoint round trip between the halves
  PPJudgeModel c1 = make(3);
  OptimizerState opt_c1 = make_pretrain_optimizer(3e-4);
  train_model(c1, opt_c1, samples, topt);
  fs::path ck = ds.dir / "half.ckpt";
  save_checkpoint(ck.string(), c1.params(), &opt_c1);

  PPJudgeModel c2 = make(777);  // init is irrelevant, the file overwrites it
  OptimizerState opt_c2;
  load_checkpoint(ck.string(), c2.params(), &opt_c2);
  TrainResult res_c2 = train_model(c2, opt_c2, samples, topt);

  CHECK(params_bit_equal(a.params(), c2.params()));
  CHECK(opt_c2.step == opt_a.step);
  CHECK(opt_c2.m == opt_a.m);
  CHECK(opt_c2.v == opt_a.v);

  // the recorded epoch means line up with the uninterrupted run
  REQUIRE(res_a.epochs.size() == 4);
  REQUIRE(res_b1.epochs.size() == 2);
  CHECK(res_b1.epochs[0].total == res_a.epochs[0].total);
  CHECK(res_b1.epochs[1].total == res_a.epochs[1].total);
  CHECK(res_b2.epochs[0].total == res_a.epochs[2].total);
  CHECK(res_b2.epochs[1].total == res_a.epochs[3].total);
  CHECK(res_c2.epochs[0].total == res_a.epochs[2].total);
  CHECK(res_c2.epochs[1].total == res_a.epochs[3].total);
}

TEST_CASE("prediction clamps scores and aligns with the labels") {
  DiskDataset ds = write_dataset("pred", 5, 0);
  PPJudgeConfig cfg = tiny();
  PPJudgeModel model(cfg, 31, tiny_embedder(cfg));
  auto samples = load_samples(load_manifest((ds.dir / "manifest.jsonl").string()),
                              ds.dir.string(), model, Split::train);

  auto preds = predict(model, samples);
  REQUIRE(preds.size() == 5);
  for (const auto& row : preds) {
    for (double v : row) {
      CHECK(v >= 1.0);
      CHECK(v <= 10.0);
    }
  }
  CHECK(predict(model, samples, 2).size() == 2);
  CHECK(predict(model, samples, 99).size() == 5);

  auto labels = labels_of(samples);
  REQUIRE(labels.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(labels[i] == samples[i].scores.as_array());
  }
  CHECK(labels_of(samples, 3).size() == 3);

  // deterministic: the same model scores the same samples identically
  CHECK(predict(model, samples) == preds);

  CHECK_THROWS_AS(compute_report(preds, labels_of(samples, 3)), DimensionError);
}

TEST_CASE("the evaluation report runs each metric per attribute") {
  // dyadic values: every entry is exact and label - pred is exactly 1.0
  std::vector<std::array<double, 8>> preds(4), labels(4);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t a = 0; a < 8; ++a) {
      preds[i][a] = 1.0 + static_cast<double>(i) + static_cast<double>(a) * 0.25;
      labels[i][a] = 2.0 + static_cast<double>(i) + static_cast<double>(a) * 0.25;
    }
  }
  EvalReport rep = compute_report(preds, labels);
  for (std::size_t a = 0; a < 8; ++a) {
    CHECK(rep.srcc[a] == 1.0);
    CHECK(rep.pcc[a] == 1.0);
    CHECK(rep.mse[a] == 1.0);
    CHECK(rep.acc[a] == 0.0);
  }
  CHECK(rep.mean_srcc == 1.0);
  CHECK(rep.mean_pcc == 1.0);
  CHECK(rep.mean_mse == 1.0);
  CHECK(rep.mean_acc == 0.0);
}

TEST_CASE("metrics csv layout") {
  EvalReport rep;
  for (std::size_t a = 0; a < 8; ++a) {
    rep.srcc[a] = 1.0;
    rep.pcc[a] = 1.0;
    rep.mse[a] = 0.25;
    rep.acc[a] = 0.5;
  }
  rep.mean_srcc = 1.0;
  rep.mean_pcc = 1.0;
  rep.mean_mse = 0.25;
  rep.mean_acc = 0.5;

  fs::path p = fs::temp_directory_path() / "ppjudge_metrics_test.csv";
  write_metrics_csv(p.string(), rep);
  auto lines = read_lines(p);
  REQUIRE(lines.size() == 10);
  CHECK(lines[0] == "attribute,srcc,pcc,mse,acc");
  for (std::size_t a = 0; a < 8; ++a) {
    CHECK(lines[1 + a] == AttributeScores::names()[a] + ",1,1,0.25,0.5");
  }
  CHECK(lines[9] == "mean,1,1,0.25,0.5");
  fs::remove(p);

  CHECK_THROWS_AS(write_metrics_csv("/nonexistent_dir_ppjudge/m.csv", rep), IoError);
}
