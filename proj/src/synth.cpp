#include "ppjudge/synth.hpp"

#include <algorithm>
#include <cmath>

#include "ppjudge/error.hpp"
#include "ppjudge/rng.hpp"
#include "ppjudge/vision.hpp"

namespace ppjudge {

namespace {

constexpr std::size_t kCanvas = 64;
constexpr double kTwoPi = 6.283185307179586476925286766559;

struct Mark {
  int kind{0};  // 0 circle, 1 rectangle, 2 triangle, 3 stroke
  double x{0}, y{0};
  double a{1};  // radius / half-width / vertex distance / half-length
  double b{1};  // half-height (rectangle) or thickness (stroke)
  double angle{0};
  double tcoord{0};  // palette coordinate in [0,3]
  std::array<double, 3> color{};
};

std::array<double, 3> palette_color(std::size_t style, double t, int rot) {
  const auto& pal = style_palette(style % style_palette_count());
  t = std::clamp(t, 0.0, 3.0);
  std::size_t i0 = std::min<std::size_t>(static_cast<std::size_t>(t), 2);
  double frac = t - static_cast<double>(i0);
  std::array<double, 3> c{};
  for (std::size_t k = 0; k < 3; ++k) {
    c[k] = pal[i0][k] * (1.0 - frac) + pal[i0 + 1][k] * frac;
  }
  std::array<double, 3> out{};
  for (std::size_t k = 0; k < 3; ++k) out[k] = c[(k + static_cast<std::size_t>(rot)) % 3];
  return out;
}

bool inside(const Mark& s, double px, double py) {
  double dx = px - s.x, dy = py - s.y;
  switch (s.kind) {
    case 0:
      return dx * dx + dy * dy <= s.a * s.a;
    case 1:
      return std::fabs(dx) <= s.a && std::fabs(dy) <= s.b;
    case 2: {
      double v[3][2];
      for (int i = 0; i < 3; ++i) {
        double ang = s.angle + kTwoPi * i / 3.0;
        v[i][0] = s.x + s.a * std::cos(ang);
        v[i][1] = s.y + s.a * std::sin(ang);
      }
      double sgn[3];
      for (int i = 0; i < 3; ++i) {
        int j = (i + 1) % 3;
        sgn[i] = (v[j][0] - v[i][0]) * (py - v[i][1]) - (v[j][1] - v[i][1]) * (px - v[i][0]);
      }
      bool neg = sgn[0] < 0 || sgn[1] < 0 || sgn[2] < 0;
      bool pos = sgn[0] > 0 || sgn[1] > 0 || sgn[2] > 0;
      return !(neg && pos);
    }
    default: {  // stroke: distance to the center segment
      double ux = std::cos(s.angle), uy = std::sin(s.angle);
      double t = std::clamp(dx * ux + dy * uy, -s.a, s.a);
      double qx = dx - t * ux, qy = dy - t * uy;
      return qx * qx + qy * qy <= s.b * s.b;
    }
  }
}

void draw_shape(Frame& f, const Mark& s) {
  double reach = std::max(s.a, s.b) + 1.0;
  long y0 = std::max(0L, static_cast<long>(std::floor(s.y - reach)));
  long y1 = std::min<long>(kCanvas - 1, static_cast<long>(std::ceil(s.y + reach)));
  long x0 = std::max(0L, static_cast<long>(std::floor(s.x - reach)));
  long x1 = std::min<long>(kCanvas - 1, static_cast<long>(std::ceil(s.x + reach)));
  for (long y = y0; y <= y1; ++y) {
    for (long x = x0; x <= x1; ++x) {
      if (!inside(s, x + 0.5, y + 0.5)) continue;
      for (std::size_t c = 0; c < 3; ++c) {
        f.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c) = s.color[c];
      }
    }
  }
}

Frame render(const std::vector<Mark>& shapes) {
  Frame f = make_frame(kCanvas, kCanvas, 3, 1.0);
  for (const Mark& s : shapes) draw_shape(f, s);
  return f;
}

}  // namespace

void SynthProfile::validate() const {
  auto check_prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ConfigError(std::string("synth: ") + name + " must lie in [0,1]");
    }
  };
  check_prob(color_jump_prob, "color_jump_prob");
  check_prob(style_jump_prob, "style_jump_prob");
  check_prob(layout_jump_prob, "layout_jump_prob");
  check_prob(regression_prob, "regression_prob");
  check_prob(reference_corruption, "reference_corruption");
  if (detail_growth_rate < 0 || palette_growth_rate < 0 || layout_growth_rate < 0) {
    throw ConfigError("synth: growth rates must be non-negative");
  }
  if (n_frames == 0) throw ConfigError("synth: n_frames must be positive");
}

AttributeScores score_from_events(const SynthEvents& ev) {
  double t = ev.n_frames > 1 ? static_cast<double>(ev.n_frames - 1) : 1.0;
  auto stab = [t](std::size_t e) {
    return std::clamp(10.0 - 9.0 * static_cast<double>(e) / t, 1.0, 10.0);
  };
  auto depth = [](double r) { return 1.0 + 9.0 * std::clamp(r, 0.0, 1.0); };
  AttributeScores s;
  s.consistency = std::clamp(10.0 - 9.0 * ev.reference_corruption, 1.0, 10.0);
  s.style_stability = stab(ev.style_jumps);
  s.color_stability = stab(ev.color_jumps);
  s.composition_stability = stab(ev.layout_jumps);
  s.process_stability = stab(ev.regressions);
  s.detail_depth = depth(ev.detail_rate);
  s.color_depth = depth(ev.palette_rate);
  s.composition_depth = depth(ev.layout_rate);
  return s;
}

SynthSample synth_generate(const SynthProfile& profile,
                           const std::vector<std::string>& styles) {
  profile.validate();
  if (styles.empty() || profile.style_index >= styles.size()) {
    throw ConfigError("synth: style_index " + std::to_string(profile.style_index) +
                      " for " + std::to_string(styles.size()) + " styles");
  }

  Rng rng(derive_seed(profile.seed, "synth"));
  std::size_t n = profile.n_frames;
  double transitions = n > 1 ? static_cast<double>(n - 1) : 1.0;
  double detail = std::clamp(profile.detail_growth_rate, 0.0, 1.0);
  double palette = std::clamp(profile.palette_growth_rate, 0.0, 1.0);
  double layout = std::clamp(profile.layout_growth_rate, 0.0, 1.0);

  SynthSample out;
  out.style_index = profile.style_index;
  out.prompt_reference = profile.prompt_reference;
  out.events.n_frames = n;
  out.events.detail_rate = detail;
  out.events.palette_rate = palette;
  out.events.layout_rate = layout;

  std::size_t cur_style = profile.style_index;
  int rot = 0;
  double cx = kCanvas / 2.0, cy = kCanvas / 2.0;
  std::vector<Mark> shapes;

  // Composition spreads and the palette unlocks linearly in frame progress.
  auto place_radius = [&](std::size_t f) {
    return 6.0 + layout * (static_cast<double>(f) / transitions) * 26.0;
  };
  auto unlock = [&](std::size_t f) {
    return palette * (static_cast<double>(f) / transitions) * 3.0;
  };
  // Cumulative extra shapes beyond the one-per-transition baseline.
  auto extra_total = [&](std::size_t f) {
    return static_cast<long>(std::llround(detail * 3.0 * static_cast<double>(f)));
  };
  auto recolor_all = [&] {
    for (Mark& s : shapes) s.color = palette_color(cur_style, s.tcoord, rot);
  };
  auto add_shape = [&](std::size_t f) {
    Mark s;
    s.kind = static_cast<int>(rng.uniform_index(4));
    double ang = rng.uniform(0.0, kTwoPi);
    double rr = place_radius(f) * std::sqrt(rng.uniform());
    s.x = std::clamp(cx + rr * std::cos(ang), 3.0, kCanvas - 3.0);
    s.y = std::clamp(cy + rr * std::sin(ang), 3.0, kCanvas - 3.0);
    s.a = 2.0 + 4.0 * rng.uniform();
    if (s.kind == 1) {
      s.b = 1.5 + 3.0 * rng.uniform();
    } else if (s.kind == 3) {
      s.a *= 1.6;  // strokes are long and thin
      s.b = 1.0 + 0.8 * rng.uniform();
    } else {
      s.b = s.a;
    }
    s.angle = rng.uniform(0.0, kTwoPi);
    s.tcoord = rng.uniform() * unlock(f);
    s.color = palette_color(cur_style, s.tcoord, rot);
    shapes.push_back(s);
  };

  add_shape(0);
  add_shape(0);
  out.frames.reserve(n);
  out.frames.push_back(render(shapes));

  for (std::size_t f = 1; f < n; ++f) {
    if (rng.uniform() < profile.style_jump_prob && styles.size() > 1) {
      cur_style = (cur_style + 1 + rng.uniform_index(styles.size() - 1)) % styles.size();
      recolor_all();
      ++out.events.style_jumps;
    }
    if (rng.uniform() < profile.color_jump_prob) {
      rot = (rot + 1) % 3;
      recolor_all();
      ++out.events.color_jumps;
    }
    if (rng.uniform() < profile.layout_jump_prob) {
      double nx = kCanvas / 4.0 + (kCanvas / 2.0) * rng.uniform();
      double ny = kCanvas / 4.0 + (kCanvas / 2.0) * rng.uniform();
      double dx = (nx - cx) * 0.6, dy = (ny - cy) * 0.6;
      for (Mark& s : shapes) {
        s.x = std::clamp(s.x + dx, 3.0, kCanvas - 3.0);
        s.y = std::clamp(s.y + dy, 3.0, kCanvas - 3.0);
      }
      cx += dx;
      cy += dy;
      ++out.events.layout_jumps;
    }
    if (rng.uniform() < profile.regression_prob && shapes.size() > 1) {
      std::size_t remove = std::max<std::size_t>(1, shapes.size() / 3);
      remove = std::min(remove, shapes.size() - 1);  // never empty the canvas
      shapes.resize(shapes.size() - remove);
      ++out.events.regressions;
    }
    long want = 1 + (extra_total(f) - extra_total(f - 1));
    for (long i = 0; i < want; ++i) add_shape(f);
    out.frames.push_back(render(shapes));
  }

  if (profile.prompt_reference) {
    // Prompt references describe the intended result; nothing to corrupt.
    out.prompt = "This is a " + styles[profile.style_index] + " painting.";
    out.events.reference_corruption = 0.0;
  } else {
    double corruption = profile.reference_corruption;
    out.events.reference_corruption = corruption;
    Frame ref = out.frames.back();
    std::size_t alien = static_cast<std::size_t>(std::llround(corruption * 6.0));
    for (std::size_t i = 0; i < alien; ++i) {
      Mark s;
      s.kind = static_cast<int>(rng.uniform_index(4));
      s.x = 4.0 + (kCanvas - 8.0) * rng.uniform();
      s.y = 4.0 + (kCanvas - 8.0) * rng.uniform();
      s.a = 3.0 + 4.0 * rng.uniform();
      s.b = s.kind == 3 ? 1.2 : s.a * 0.8;
      s.angle = rng.uniform(0.0, kTwoPi);
      s.tcoord = 3.0 * rng.uniform();
      s.color = palette_color(profile.style_index + 1, s.tcoord, 0);
      draw_shape(ref, s);
    }
    double sigma = 0.35 * corruption;
    if (sigma > 0.0) {
      for (double& p : ref.pixels) {
        p = std::clamp(p + rng.normal(0.0, sigma), 0.0, 1.0);
      }
    }
    out.reference_image = std::move(ref);
  }

  out.scores = score_from_events(out.events);
  return out;
}

}  // namespace ppjudge
