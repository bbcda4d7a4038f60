#pragma once

#include <cstddef>
#include <vector>

#include "ppjudge/tensor.hpp"

namespace ppjudge {

/// Rotary position encoding with a per-frame temporal angle correction.
/// Spatial positions restart at 0 inside every frame; frame order is encoded
/// purely by the (negative, non-increasing) temporal offset added to each
/// dimension's angle.
struct RopeConfig {
  std::size_t head_dim{0};  // even
  double base{10000.0};
  double beta{0.5};
  double gamma{1.0};
  std::size_t t_max{1};  // fixed maximum frame count; offsets use t/t_max

  void validate() const;
};

/// Precomputed per-dimension frequencies and per-frame offsets.
/// freqs[i] = base^(-2i/d); offsets row t (t in [0, t_max)) is
/// -beta * freqs[i] * (t/t_max)^gamma, so row 0 is all zeros.
struct RotationPlan {
  RopeConfig cfg;
  std::vector<double> freqs;    // [d/2]
  std::vector<double> offsets;  // [t_max, d/2] row-major
};

RotationPlan make_rotation_plan(const RopeConfig& cfg);

/// Per-dimension temporal offset -beta * freqs * (t/t_max)^gamma for
/// 0 <= t <= t_max (the endpoint is queryable even though the plan table
/// stores only rows for frames 0..t_max-1).
std::vector<double> temporal_offset(std::size_t t, const RopeConfig& cfg);

/// Rotates one head-dim vector: pair (2i, 2i+1) turns by
/// spatial_pos * freqs[i] + temporal_offset(t)[i]. Norm-preserving.
Tensor rotate(const Tensor& vec, std::size_t spatial_pos, std::size_t t,
              const RopeConfig& cfg);

/// Effective relative angle between a query and key position:
/// (q_pos - k_pos) * freqs[i] + (offset(q_t)[i] - offset(k_t)[i]).
std::vector<double> attention_angle(long long q_pos, std::size_t q_t, long long k_pos,
                                    std::size_t k_t, const RopeConfig& cfg);

/// Batched angle table for rotate_pairs: one row per token, combining the
/// token's spatial position with its frame's offset row from the plan.
std::vector<double> angle_rows(const RotationPlan& plan,
                               const std::vector<std::size_t>& spatial_pos,
                               const std::vector<std::size_t>& frame_index);

}  // namespace ppjudge
