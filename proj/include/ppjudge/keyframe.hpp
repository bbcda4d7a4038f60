#pragma once

#include <cstddef>
#include <vector>

#include "ppjudge/image.hpp"

namespace ppjudge {

struct KeyframeParams {
  std::size_t stride{5};  // sample one frame every `stride` frames
  std::size_t n_min{5};
  std::size_t n_max{20};
  double threshold_scale{1.0};

  void validate() const;
};

/// Mean absolute per-pixel difference over all channels; symmetric, zero only
/// for identical frames, 1.0 for all-black vs all-white.
double frame_diff(const Frame& a, const Frame& b);

/// Key-frame selection: subsample every `stride`-th frame (plus the final
/// frame), then greedily keep a frame when its difference from the last kept
/// frame exceeds tau. tau starts at threshold_scale * (sum of consecutive
/// subsampled differences) / n_max and adapts by factors of 1.5 until the
/// kept count lands inside [n_min, n_max]: raised while too many, lowered
/// while too few. Lowering floors tau at exactly 0 (every nonzero change then
/// qualifies), which is terminal: a video without enough distinct frames ends
/// below n_min — in the limit, identical frames yield [first, last].
/// The first frame is always kept and the final frame force-appended.
/// Returns strictly increasing frame indices; `tau_out`, when given, receives
/// the final threshold.
std::vector<std::size_t> select_keyframes(const std::vector<Frame>& video,
                                          const KeyframeParams& params = {},
                                          double* tau_out = nullptr);

}  // namespace ppjudge
