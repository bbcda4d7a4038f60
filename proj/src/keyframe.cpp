#include "ppjudge/keyframe.hpp"

#include <cmath>
#include <string>

#include "ppjudge/error.hpp"

namespace ppjudge {

void KeyframeParams::validate() const {
  if (stride == 0) throw ConfigError("keyframe: stride must be positive");
  if (n_min == 0) throw ConfigError("keyframe: n_min must be positive");
  if (n_min > n_max) {
    throw ConfigError("keyframe: n_min " + std::to_string(n_min) + " > n_max " +
                      std::to_string(n_max));
  }
  if (n_max < 2) throw ConfigError("keyframe: n_max must be at least 2");
  if (!(threshold_scale > 0.0)) {
    throw ConfigError("keyframe: threshold_scale must be positive");
  }
}

double frame_diff(const Frame& a, const Frame& b) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
    throw DimensionError("frame_diff: " + std::to_string(a.width) + "x" +
                         std::to_string(a.height) + "x" + std::to_string(a.channels) +
                         " vs " + std::to_string(b.width) + "x" +
                         std::to_string(b.height) + "x" + std::to_string(b.channels));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    acc += std::fabs(a.pixels[i] - b.pixels[i]);
  }
  return acc / static_cast<double>(a.pixels.size());
}

std::vector<std::size_t> select_keyframes(const std::vector<Frame>& video,
                                          const KeyframeParams& params,
                                          double* tau_out) {
  params.validate();
  if (video.empty()) throw ContractError("select_keyframes: empty video");
  for (std::size_t i = 1; i < video.size(); ++i) {
    if (video[i].width != video[0].width || video[i].height != video[0].height ||
        video[i].channels != video[0].channels) {
      throw DimensionError("select_keyframes: frame " + std::to_string(i) +
                           " shape differs from frame 0");
    }
  }

  std::vector<std::size_t> sub;
  for (std::size_t i = 0; i < video.size(); i += params.stride) sub.push_back(i);
  if (sub.back() != video.size() - 1) sub.push_back(video.size() - 1);

  double total = 0.0;
  for (std::size_t j = 1; j < sub.size(); ++j) {
    total += frame_diff(video[sub[j - 1]], video[sub[j]]);
  }
  double tau = params.threshold_scale * total / static_cast<double>(params.n_max);

  auto scan = [&](double threshold) {
    std::vector<std::size_t> kept{sub[0]};
    for (std::size_t j = 1; j < sub.size(); ++j) {
      if (frame_diff(video[sub[j]], video[kept.back()]) > threshold) {
        kept.push_back(sub[j]);
      }
    }
    if (kept.back() != sub.back()) kept.push_back(sub.back());
    return kept;
  };

  std::vector<std::size_t> kept = scan(tau);
  for (int iter = 0; iter < 100; ++iter) {
    if (kept.size() > params.n_max) {
      tau *= 1.5;
    } else if (kept.size() < params.n_min) {
      if (tau == 0.0) break;  // every nonzero change already qualifies
      tau /= 1.5;
      if (tau < total * 1e-15) tau = 0.0;
    } else {
      break;
    }
    kept = scan(tau);
  }
  if (tau_out) *tau_out = tau;
  return kept;
}

}  // namespace ppjudge
