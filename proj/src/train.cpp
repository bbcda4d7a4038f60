#include "ppjudge/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "ppjudge/error.hpp"
#include "ppjudge/losses.hpp"
#include "ppjudge/metrics.hpp"
#include "ppjudge/rng.hpp"

namespace ppjudge {

std::vector<TrainSample> load_samples(const std::vector<ProcessSample>& manifest,
                                      const std::string& base_dir,
                                      const PPJudgeModel& model, Split split) {
  std::vector<TrainSample> out;
  for (const ProcessSample& rec : manifest) {
    if (rec.split != split) continue;
    TrainSample s;
    s.id = rec.id;
    if (rec.frame_paths.size() > model.config().max_frames) {
      throw RangeError("sample " + rec.id + ": " +
                       std::to_string(rec.frame_paths.size()) +
                       " frames exceeds max_frames " +
                       std::to_string(model.config().max_frames));
    }
    for (const std::string& rel : rec.frame_paths) {
      s.frames.push_back(load_frame(join_path(base_dir, rel)));
    }
    if (rec.reference.is_prompt) {
      s.reference = Reference::from_prompt(rec.reference.prompt);
    } else {
      s.reference =
          Reference::from_image(load_frame(join_path(base_dir, rec.reference.image_path)));
    }
    s.scores = rec.scores;
    s.label = rec.scores.tensor();
    s.style_target = model.reference_style(s.reference).second;
    out.push_back(std::move(s));
  }
  return out;
}

TrainResult train_model(PPJudgeModel& model, OptimizerState& opt,
                        const std::vector<TrainSample>& samples,
                        const TrainOptions& opts) {
  if (samples.empty()) throw ContractError("train: no samples");
  if (opts.batch_size == 0) throw ConfigError("train: batch_size must be positive");

  std::ofstream log;
  if (!opts.step_log_path.empty()) {
    log.open(opts.step_log_path, opt.step == 0 ? std::ios::trunc : std::ios::app);
    if (!log) throw IoError("cannot write step log: " + opts.step_log_path);
    if (opt.step == 0) log << "step,style_total,score,total\n";
  }
  char buf[256];

  std::size_t n = samples.size();
  std::size_t steps_per_epoch = (n + opts.batch_size - 1) / opts.batch_size;
  Tensor alpha = alpha_schedule(model.config().n_blocks);
  Tensor w_proj = model.params().get("style/w_proj");

  TrainResult result;
  for (std::size_t e = 0; e < opts.epochs; ++e) {
    // Absolute epoch index survives checkpoint resume, so the shuffle
    // sequence matches an uninterrupted run.
    std::size_t epoch_index = opt.step / steps_per_epoch;
    Rng shuffle_rng(derive_seed(opts.seed, "shuffle/epoch" + std::to_string(epoch_index)));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n; i > 1; --i) {
      std::size_t j = shuffle_rng.uniform_index(i);
      std::swap(order[i - 1], order[j]);
    }

    EpochStats epoch{};
    for (std::size_t start = 0; start < n; start += opts.batch_size) {
      std::size_t count = std::min(opts.batch_size, n - start);
      model.params().zero_grads();
      double b_style = 0.0, b_score = 0.0, b_total = 0.0;
      for (std::size_t k = 0; k < count; ++k) {
        const TrainSample& s = samples[order[start + k]];
        PPJudgeModel::ForwardHooks hooks;
        hooks.style_path = true;
        ModelOutput out = model.forward_full(s.frames, s.reference, hooks);
        Tensor style = style_loss_total(out.shared_outputs, w_proj, s.style_target, alpha);
        Tensor score = score_loss(out.scores, s.label);
        Tensor total = total_loss(style, score);
        double tv = total.item();
        if (!std::isfinite(tv)) {
          throw DegenerateInputError("training diverged: non-finite loss at step " +
                                     std::to_string(opt.step) + " (sample " + s.id + ")");
        }
        backward(total, 1.0 / static_cast<double>(count));
        b_style += style.item();
        b_score += score.item();
        b_total += tv;
      }
      optimizer_step(model.params(), opt);
      ++result.steps;
      b_style /= static_cast<double>(count);
      b_score /= static_cast<double>(count);
      b_total /= static_cast<double>(count);
      if (log.is_open()) {
        std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g,%.17g\n",
                      static_cast<unsigned long long>(opt.step), b_style, b_score,
                      b_total);
        log << buf;
      }
      epoch.style += b_style * static_cast<double>(count);
      epoch.score += b_score * static_cast<double>(count);
      epoch.total += b_total * static_cast<double>(count);
    }
    epoch.style /= static_cast<double>(n);
    epoch.score /= static_cast<double>(n);
    epoch.total /= static_cast<double>(n);
    result.epochs.push_back(epoch);
  }
  return result;
}

std::vector<std::array<double, 8>> predict(const PPJudgeModel& model,
                                           const std::vector<TrainSample>& samples,
                                           std::size_t limit) {
  NoGradGuard ng;
  std::size_t n = samples.size();
  if (limit > 0 && limit < n) n = limit;
  std::vector<std::array<double, 8>> preds(n);
  for (std::size_t i = 0; i < n; ++i) {
    ModelOutput out = model.forward_full(samples[i].frames, samples[i].reference);
    Tensor clamped = PPJudgeModel::clamp_scores(out.scores);
    for (std::size_t a = 0; a < 8; ++a) preds[i][a] = clamped.values()[a];
  }
  return preds;
}

std::vector<std::array<double, 8>> labels_of(const std::vector<TrainSample>& samples,
                                             std::size_t limit) {
  std::size_t n = samples.size();
  if (limit > 0 && limit < n) n = limit;
  std::vector<std::array<double, 8>> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = samples[i].scores.as_array();
  return labels;
}

EvalReport compute_report(const std::vector<std::array<double, 8>>& preds,
                          const std::vector<std::array<double, 8>>& labels) {
  if (preds.size() != labels.size()) {
    throw DimensionError("compute_report: " + std::to_string(preds.size()) +
                         " predictions vs " + std::to_string(labels.size()) + " labels");
  }
  EvalReport rep;
  for (std::size_t a = 0; a < 8; ++a) {
    std::vector<double> p(preds.size()), l(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
      p[i] = preds[i][a];
      l[i] = labels[i][a];
    }
    rep.srcc[a] = srcc(p, l);
    rep.pcc[a] = pcc(p, l);
    rep.mse[a] = mse(p, l);
    rep.acc[a] = acc(p, l);
    rep.mean_srcc += rep.srcc[a] / 8.0;
    rep.mean_pcc += rep.pcc[a] / 8.0;
    rep.mean_mse += rep.mse[a] / 8.0;
    rep.mean_acc += rep.acc[a] / 8.0;
  }
  return rep;
}

void write_metrics_csv(const std::string& path, const EvalReport& report) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write metrics: " + path);
  os << "attribute,srcc,pcc,mse,acc\n";
  char buf[256];
  for (std::size_t a = 0; a < 8; ++a) {
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g\n",
                  AttributeScores::names()[a].c_str(), report.srcc[a], report.pcc[a],
                  report.mse[a], report.acc[a]);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "mean,%.17g,%.17g,%.17g,%.17g\n", report.mean_srcc,
                report.mean_pcc, report.mean_mse, report.mean_acc);
  os << buf;
  if (!os) throw IoError("failed writing metrics: " + path);
}

}  // namespace ppjudge
