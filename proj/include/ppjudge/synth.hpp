#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ppjudge/data.hpp"
#include "ppjudge/image.hpp"

namespace ppjudge {

/// Knobs controlling one procedurally generated painting process. Scores are
/// a fixed function of the realized events (see score_from_events), so the
/// dataset carries its own exact oracle labels.
struct SynthProfile {
  std::uint64_t seed{0};
  std::size_t style_index{0};
  std::size_t n_frames{5};

  // Per-transition defect probabilities.
  double color_jump_prob{0.0};   // recolor by rotating color channels
  double style_jump_prob{0.0};   // repaint everything in another style palette
  double layout_jump_prob{0.0};  // displace the whole composition
  double regression_prob{0.0};   // erase recently painted shapes

  // Growth rates in [0,1] (values above 1 saturate the depth rules).
  double detail_growth_rate{1.0};   // extra shapes per transition
  double palette_growth_rate{1.0};  // how much of the palette gets unlocked
  double layout_growth_rate{1.0};   // how far the composition spreads

  double reference_corruption{0.0};  // alien shapes + noise on the reference
  bool prompt_reference{false};      // text reference instead of an image

  void validate() const;
};

/// The realized event log of one generated sample — everything the scoring
/// rules look at.
struct SynthEvents {
  std::size_t n_frames{0};
  std::size_t color_jumps{0};
  std::size_t style_jumps{0};
  std::size_t layout_jumps{0};
  std::size_t regressions{0};
  double detail_rate{0.0};
  double palette_rate{0.0};
  double layout_rate{0.0};
  double reference_corruption{0.0};
};

/// Fixed oracle rules mapping events to scores, with T = max(n_frames-1, 1):
///   each stability     = clamp(10 - 9 * events / T, 1, 10)
///   each depth         = 1 + 9 * clamp(rate, 0, 1)
///   consistency        = clamp(10 - 9 * reference_corruption, 1, 10)
AttributeScores score_from_events(const SynthEvents& ev);

struct SynthSample {
  std::vector<Frame> frames;
  Frame reference_image;  // defined unless prompt_reference
  std::string prompt;     // set when prompt_reference
  bool prompt_reference{false};
  std::size_t style_index{0};
  SynthEvents events;
  AttributeScores scores;
};

/// Renders a staged 64x64 painting process: shapes accumulate around a
/// drifting cluster centre, palettes unlock gradually, and defect events
/// inject the scored violations. Deterministic in profile.seed; styles supply
/// the prompt text and bound style_index.
SynthSample synth_generate(const SynthProfile& profile,
                           const std::vector<std::string>& styles);

}  // namespace ppjudge
