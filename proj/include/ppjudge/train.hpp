#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ppjudge/data.hpp"
#include "ppjudge/image.hpp"
#include "ppjudge/model.hpp"
#include "ppjudge/optim.hpp"
#include "ppjudge/tensor.hpp"

namespace ppjudge {

/// One sample fully loaded into memory: decoded frames, resolved reference,
/// label vector, and the frozen style supervision target.
struct TrainSample {
  std::string id;
  std::vector<Frame> frames;
  Reference reference;
  Tensor label;         // [8] attribute scores
  Tensor style_target;  // [d_style] unit-norm prototype of the reference style
  AttributeScores scores;
};

/// Decodes every sample of `split`, resolving frame paths against `base_dir`
/// (the manifest's directory).
std::vector<TrainSample> load_samples(const std::vector<ProcessSample>& manifest,
                                      const std::string& base_dir,
                                      const PPJudgeModel& model, Split split);

struct TrainOptions {
  std::size_t epochs{30};
  std::size_t batch_size{16};
  std::uint64_t seed{42};
  std::string step_log_path;  // per-step CSV: step,style_total,score,total
};

struct EpochStats {
  double style{0.0};
  double score{0.0};
  double total{0.0};
};

struct TrainResult {
  std::vector<EpochStats> epochs;  // per-epoch means
  std::size_t steps{0};            // optimizer steps taken in this call
};

/// Mini-batch training with per-sample backward passes (gradients accumulate
/// scaled by 1/batch). Shuffling is derived from (seed, absolute epoch index),
/// and the absolute epoch index continues from the optimizer step count, so
/// resuming from a checkpoint replays the exact trajectory of an uninterrupted
/// run. A non-finite loss aborts with a DegenerateInputError naming the step.
TrainResult train_model(PPJudgeModel& model, OptimizerState& opt,
                        const std::vector<TrainSample>& samples,
                        const TrainOptions& opts);

/// Clamped predictions for every sample, in order.
std::vector<std::array<double, 8>> predict(const PPJudgeModel& model,
                                           const std::vector<TrainSample>& samples,
                                           std::size_t limit = 0);

/// Per-attribute metric table over aligned prediction/label rows.
struct EvalReport {
  std::array<double, 8> srcc{}, pcc{}, mse{}, acc{};
  double mean_srcc{0}, mean_pcc{0}, mean_mse{0}, mean_acc{0};
};

EvalReport compute_report(const std::vector<std::array<double, 8>>& preds,
                          const std::vector<std::array<double, 8>>& labels);

std::vector<std::array<double, 8>> labels_of(const std::vector<TrainSample>& samples,
                                             std::size_t limit = 0);

/// CSV: attribute,srcc,pcc,mse,acc rows in attribute order plus a final
/// "mean" row.
void write_metrics_csv(const std::string& path, const EvalReport& report);

}  // namespace ppjudge
