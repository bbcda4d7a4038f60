#include "ppjudge/rope.hpp"

#include <cmath>

#include "ppjudge/error.hpp"

namespace ppjudge {

void RopeConfig::validate() const {
  if (head_dim == 0 || head_dim % 2 != 0) {
    throw ConfigError("rope: head_dim must be even and positive, got " +
                      std::to_string(head_dim));
  }
  if (!(base > 0.0) || !std::isfinite(base)) throw ConfigError("rope: base must be positive");
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw ConfigError("rope: beta must be non-negative and finite");
  }
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("rope: gamma must be positive");
  if (t_max < 1) throw ConfigError("rope: t_max must be at least 1");
}

namespace {

std::vector<double> make_freqs(const RopeConfig& cfg) {
  std::size_t half = cfg.head_dim / 2;
  std::vector<double> freqs(half);
  for (std::size_t i = 0; i < half; ++i) {
    freqs[i] = std::pow(cfg.base, -2.0 * static_cast<double>(i) /
                                      static_cast<double>(cfg.head_dim));
  }
  return freqs;
}

}  // namespace

RotationPlan make_rotation_plan(const RopeConfig& cfg) {
  cfg.validate();
  RotationPlan plan;
  plan.cfg = cfg;
  plan.freqs = make_freqs(cfg);
  std::size_t half = cfg.head_dim / 2;
  plan.offsets.resize(cfg.t_max * half);
  for (std::size_t t = 0; t < cfg.t_max; ++t) {
    auto off = temporal_offset(t, cfg);
    std::copy(off.begin(), off.end(), plan.offsets.begin() + t * half);
  }
  return plan;
}

std::vector<double> temporal_offset(std::size_t t, const RopeConfig& cfg) {
  cfg.validate();
  if (t > cfg.t_max) {
    throw RangeError("temporal_offset: frame " + std::to_string(t) + " beyond t_max " +
                     std::to_string(cfg.t_max));
  }
  auto freqs = make_freqs(cfg);
  double frac = static_cast<double>(t) / static_cast<double>(cfg.t_max);
  double s = cfg.beta * std::pow(frac, cfg.gamma);
  std::vector<double> off(freqs.size());
  for (std::size_t i = 0; i < freqs.size(); ++i) off[i] = -s * freqs[i];
  return off;
}

Tensor rotate(const Tensor& vec, std::size_t spatial_pos, std::size_t t,
              const RopeConfig& cfg) {
  cfg.validate();
  if (vec.numel() != cfg.head_dim || vec.shape().size() != 1) {
    throw DimensionError("rotate: vector " + shape_str(vec.shape()) + " for head_dim " +
                         std::to_string(cfg.head_dim));
  }
  auto freqs = make_freqs(cfg);
  auto off = temporal_offset(t, cfg);
  std::size_t half = cfg.head_dim / 2;
  std::vector<double> angles(half);
  for (std::size_t i = 0; i < half; ++i) {
    angles[i] = static_cast<double>(spatial_pos) * freqs[i] + off[i];
  }
  Tensor row = reshape(vec, {1, cfg.head_dim});
  Tensor rotated = rotate_pairs(row, angles, 1);
  return reshape(rotated, {cfg.head_dim});
}

std::vector<double> attention_angle(long long q_pos, std::size_t q_t, long long k_pos,
                                    std::size_t k_t, const RopeConfig& cfg) {
  cfg.validate();
  auto freqs = make_freqs(cfg);
  auto off_q = temporal_offset(q_t, cfg);
  auto off_k = temporal_offset(k_t, cfg);
  std::vector<double> angle(freqs.size());
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    angle[i] = static_cast<double>(q_pos - k_pos) * freqs[i] + (off_q[i] - off_k[i]);
  }
  return angle;
}

std::vector<double> angle_rows(const RotationPlan& plan,
                               const std::vector<std::size_t>& spatial_pos,
                               const std::vector<std::size_t>& frame_index) {
  if (spatial_pos.size() != frame_index.size()) {
    throw DimensionError("angle_rows: position/frame length mismatch");
  }
  std::size_t half = plan.cfg.head_dim / 2;
  std::vector<double> rows(spatial_pos.size() * half);
  for (std::size_t r = 0; r < spatial_pos.size(); ++r) {
    if (frame_index[r] >= plan.cfg.t_max) {
      throw RangeError("angle_rows: frame " + std::to_string(frame_index[r]) +
                       " beyond plan t_max " + std::to_string(plan.cfg.t_max));
    }
    const double* off = plan.offsets.data() + frame_index[r] * half;
    double p = static_cast<double>(spatial_pos[r]);
    for (std::size_t i = 0; i < half; ++i) {
      rows[r * half + i] = p * plan.freqs[i] + off[i];
    }
  }
  return rows;
}

}  // namespace ppjudge
