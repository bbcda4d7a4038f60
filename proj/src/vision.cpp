#include "ppjudge/vision.hpp"

#include <algorithm>
#include <cmath>

#include "ppjudge/error.hpp"
#include "ppjudge/rng.hpp"

namespace ppjudge {

Tensor patchify(const Frame& frame, std::size_t patch_size) {
  if (frame.empty()) throw DegenerateInputError("patchify: empty frame");
  if (patch_size == 0 || frame.height % patch_size != 0 || frame.width % patch_size != 0) {
    throw DimensionError("patchify: " + std::to_string(frame.height) + "x" +
                         std::to_string(frame.width) + " not divisible by patch size " +
                         std::to_string(patch_size));
  }
  std::size_t gr = frame.height / patch_size;
  std::size_t gc = frame.width / patch_size;
  std::size_t pd = patch_size * patch_size * frame.channels;
  std::vector<double> out(gr * gc * pd);
  std::size_t row = 0;
  for (std::size_t pr = 0; pr < gr; ++pr) {
    for (std::size_t pc = 0; pc < gc; ++pc) {
      double* dst = out.data() + row * pd;
      std::size_t o = 0;
      for (std::size_t y = 0; y < patch_size; ++y) {
        for (std::size_t x = 0; x < patch_size; ++x) {
          for (std::size_t c = 0; c < frame.channels; ++c) {
            dst[o++] = frame.at(pr * patch_size + y, pc * patch_size + x, c);
          }
        }
      }
      ++row;
    }
  }
  return Tensor::from_values({gr * gc, pd}, std::move(out));
}

Frame unpatchify(const Tensor& patches, std::size_t height, std::size_t width,
                 std::size_t channels, std::size_t patch_size) {
  std::size_t gr = height / patch_size;
  std::size_t gc = width / patch_size;
  std::size_t pd = patch_size * patch_size * channels;
  if (patches.rows() != gr * gc || patches.cols() != pd) {
    throw DimensionError("unpatchify: patches " + shape_str(patches.shape()) +
                         " do not tile " + std::to_string(height) + "x" +
                         std::to_string(width));
  }
  Frame f = make_frame(width, height, channels);
  const auto& pv = patches.values();
  std::size_t row = 0;
  for (std::size_t pr = 0; pr < gr; ++pr) {
    for (std::size_t pc = 0; pc < gc; ++pc) {
      const double* src = pv.data() + row * pd;
      std::size_t o = 0;
      for (std::size_t y = 0; y < patch_size; ++y) {
        for (std::size_t x = 0; x < patch_size; ++x) {
          for (std::size_t c = 0; c < channels; ++c) {
            f.at(pr * patch_size + y, pc * patch_size + x, c) = src[o++];
          }
        }
      }
      ++row;
    }
  }
  return f;
}

TokenGrid embed_tokens(const Tensor& patches, const Tensor& projection,
                       const Tensor& bias, std::size_t frame_index,
                       std::size_t grid_rows, std::size_t grid_cols) {
  if (projection.rows() != patches.cols()) {
    throw DimensionError("embed_tokens: projection " + shape_str(projection.shape()) +
                         " for patches " + shape_str(patches.shape()));
  }
  if (patches.rows() != grid_rows * grid_cols) {
    throw DimensionError("embed_tokens: grid " + std::to_string(grid_rows) + "x" +
                         std::to_string(grid_cols) + " does not match " +
                         std::to_string(patches.rows()) + " patches");
  }
  TokenGrid grid;
  grid.frame_index = frame_index;
  grid.tokens = add_rowvec(matmul(patches, projection), bias);
  grid.spatial_positions.reserve(patches.rows());
  for (std::size_t r = 0; r < grid_rows; ++r)
    for (std::size_t c = 0; c < grid_cols; ++c) grid.spatial_positions.emplace_back(r, c);
  return grid;
}

StylePrototypeTable build_prototype_table(const std::vector<std::string>& styles,
                                          const StyleEmbedder& embedder) {
  if (styles.size() < 2) throw ConfigError("prototype table needs at least 2 styles");
  StylePrototypeTable table;
  table.styles = styles;
  std::vector<double> rows;
  rows.reserve(styles.size() * embedder.d_style());
  for (const auto& s : styles) {
    Tensor e = embedder.embed_text("This is a " + s + " painting.");
    rows.insert(rows.end(), e.values().begin(), e.values().end());
  }
  table.embeddings =
      Tensor::from_values({styles.size(), embedder.d_style()}, std::move(rows));
  return table;
}

std::pair<std::size_t, Tensor> classify_style_embedding(const Tensor& embedding,
                                                        const StylePrototypeTable& table) {
  std::size_t s_count = table.embeddings.rows();
  std::size_t d = table.embeddings.cols();
  if (s_count == 0) throw ContractError("classify_style: empty prototype table");
  if (embedding.numel() != d) {
    throw DimensionError("classify_style: embedding " + shape_str(embedding.shape()) +
                         " vs prototypes " + shape_str(table.embeddings.shape()));
  }
  const auto& ev = embedding.values();
  double enorm = 0.0;
  for (double v : ev) enorm += v * v;
  enorm = std::sqrt(enorm);
  if (enorm < 1e-12) throw DegenerateInputError("classify_style: zero-norm embedding");

  std::size_t best = 0;
  double best_score = -2.0;
  const auto& tv = table.embeddings.values();
  for (std::size_t s = 0; s < s_count; ++s) {
    double dot = 0.0, pn = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      dot += ev[j] * tv[s * d + j];
      pn += tv[s * d + j] * tv[s * d + j];
    }
    double score = dot / (enorm * std::sqrt(pn));
    if (score > best_score) {
      best_score = score;
      best = s;
    }
  }
  Tensor proto = Tensor::from_values(
      {d}, std::vector<double>(tv.begin() + best * d, tv.begin() + (best + 1) * d));
  return {best, proto};
}

std::pair<std::size_t, Tensor> classify_style(const Frame& reference,
                                              const StylePrototypeTable& table,
                                              const StyleEmbedder& embedder) {
  return classify_style_embedding(embedder.embed_image(reference), table);
}

const std::array<std::array<double, 3>, 4>& style_palette(std::size_t style_index) {
  // Hue-separated families: blues, reds, grays, greens.
  static const std::array<std::array<std::array<double, 3>, 4>, 4> palettes = {{
      {{{0.15, 0.35, 0.80}, {0.25, 0.50, 0.90}, {0.10, 0.60, 0.85}, {0.35, 0.45, 0.95}}},
      {{{0.80, 0.25, 0.10}, {0.70, 0.15, 0.20}, {0.90, 0.45, 0.15}, {0.75, 0.35, 0.05}}},
      {{{0.20, 0.20, 0.20}, {0.40, 0.40, 0.40}, {0.55, 0.55, 0.55}, {0.30, 0.30, 0.30}}},
      {{{0.10, 0.65, 0.25}, {0.20, 0.80, 0.35}, {0.05, 0.55, 0.30}, {0.30, 0.75, 0.20}}},
  }};
  if (style_index >= palettes.size()) {
    throw RangeError("style_palette: index " + std::to_string(style_index));
  }
  return palettes[style_index];
}

std::size_t style_palette_count() { return 4; }

namespace {

void normalize_inplace(std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (n < 1e-12) throw DegenerateInputError("cannot normalize zero vector");
  for (double& x : v) x /= n;
}

constexpr std::size_t kPoolGrid = 8;                          // downsample resolution
constexpr std::size_t kFeatDim = kPoolGrid * kPoolGrid * 3 + 1;  // +1 constant term

}  // namespace

MockStyleEmbedder::MockStyleEmbedder(std::uint64_t seed, std::size_t d_style,
                                     std::vector<std::string> styles, double bias_strength)
    : seed_(seed),
      d_style_(d_style),
      styles_(std::move(styles)),
      bias_strength_(bias_strength) {
  if (d_style_ < styles_.size()) {
    throw ConfigError("mock embedder: d_style " + std::to_string(d_style_) +
                      " smaller than style count " + std::to_string(styles_.size()));
  }
  if (bias_strength_ < 0.0 || bias_strength_ > 1.0) {
    throw ConfigError("mock embedder: bias strength must be in [0,1]");
  }
  // Orthonormal prototypes: Gram-Schmidt over seeded Gaussian rows.
  Rng rng(derive_seed(seed_, "mock-embedder/prototypes"));
  prototypes_.resize(styles_.size());
  for (std::size_t s = 0; s < styles_.size(); ++s) {
    auto& row = prototypes_[s];
    row.resize(d_style_);
    for (double& v : row) v = rng.normal();
    for (std::size_t p = 0; p < s; ++p) {
      double dot = 0.0;
      for (std::size_t j = 0; j < d_style_; ++j) dot += row[j] * prototypes_[p][j];
      for (std::size_t j = 0; j < d_style_; ++j) row[j] -= dot * prototypes_[p][j];
    }
    normalize_inplace(row);
  }
  Rng prng(derive_seed(seed_, "mock-embedder/projection"));
  projection_.resize(d_style_ * kFeatDim);
  for (double& v : projection_) v = prng.normal();
}

Tensor MockStyleEmbedder::prototype(std::size_t style_index) const {
  if (style_index >= prototypes_.size()) {
    throw RangeError("prototype index " + std::to_string(style_index));
  }
  return Tensor::from_values({d_style_}, prototypes_[style_index]);
}

Tensor MockStyleEmbedder::embed_image(const Frame& frame) const {
  if (frame.empty()) throw DegenerateInputError("embed_image: empty frame");
  // Box-average the frame into an 8x8x3 grid; single-channel frames replicate.
  std::vector<double> feat(kFeatDim, 0.0);
  std::vector<double> counts(kPoolGrid * kPoolGrid, 0.0);
  for (std::size_t y = 0; y < frame.height; ++y) {
    std::size_t gy = y * kPoolGrid / frame.height;
    for (std::size_t x = 0; x < frame.width; ++x) {
      std::size_t gx = x * kPoolGrid / frame.width;
      std::size_t cell = gy * kPoolGrid + gx;
      counts[cell] += 1.0;
      for (std::size_t c = 0; c < 3; ++c) {
        double v = frame.channels == 3 ? frame.at(y, x, c) : frame.at(y, x, 0);
        feat[cell * 3 + c] += v;
      }
    }
  }
  for (std::size_t cell = 0; cell < counts.size(); ++cell) {
    if (counts[cell] > 0) {
      for (std::size_t c = 0; c < 3; ++c) feat[cell * 3 + c] /= counts[cell];
    }
  }
  feat[kFeatDim - 1] = 1.0;  // constant term keeps the projection nonzero

  std::vector<double> proj(d_style_, 0.0);
  for (std::size_t i = 0; i < d_style_; ++i) {
    const double* row = projection_.data() + i * kFeatDim;
    double s = 0.0;
    for (std::size_t j = 0; j < kFeatDim; ++j) s += row[j] * feat[j];
    proj[i] = s;
  }
  normalize_inplace(proj);

  // Palette vote: each inked pixel picks the nearest color across all style
  // palettes; the winning style's prototype pulls the embedding.
  if (bias_strength_ > 0.0 && !styles_.empty()) {
    std::size_t families = std::min<std::size_t>(styles_.size(), style_palette_count());
    std::vector<std::size_t> votes(families, 0);
    std::size_t inked = 0;
    for (std::size_t y = 0; y < frame.height; ++y) {
      for (std::size_t x = 0; x < frame.width; ++x) {
        double r = frame.channels == 3 ? frame.at(y, x, 0) : frame.at(y, x, 0);
        double g = frame.channels == 3 ? frame.at(y, x, 1) : frame.at(y, x, 0);
        double b = frame.channels == 3 ? frame.at(y, x, 2) : frame.at(y, x, 0);
        double dw = (1 - r) * (1 - r) + (1 - g) * (1 - g) + (1 - b) * (1 - b);
        if (dw < 0.25 * 0.25) continue;  // near-white background
        ++inked;
        double best = 1e18;
        std::size_t best_style = 0;
        for (std::size_t s = 0; s < families; ++s) {
          for (const auto& col : style_palette(s)) {
            double d = (r - col[0]) * (r - col[0]) + (g - col[1]) * (g - col[1]) +
                       (b - col[2]) * (b - col[2]);
            if (d < best) {
              best = d;
              best_style = s;
            }
          }
        }
        ++votes[best_style];
      }
    }
    if (inked > 0) {
      std::size_t winner = 0;
      for (std::size_t s = 1; s < families; ++s)
        if (votes[s] > votes[winner]) winner = s;
      const auto& proto = prototypes_[winner];
      for (std::size_t j = 0; j < d_style_; ++j) {
        proj[j] = (1.0 - bias_strength_) * proj[j] + bias_strength_ * proto[j];
      }
      normalize_inplace(proj);
    }
  }
  return Tensor::from_values({d_style_}, std::move(proj));
}

Tensor MockStyleEmbedder::embed_text(const std::string& text) const {
  for (std::size_t s = 0; s < styles_.size(); ++s) {
    if (text == "This is a " + styles_[s] + " painting.") {
      return Tensor::from_values({d_style_}, prototypes_[s]);
    }
  }
  Rng rng(derive_seed(seed_, "mock-embedder/text:" + text));
  std::vector<double> v(d_style_);
  for (double& x : v) x = 0.35 * rng.normal();
  for (std::size_t s = 0; s < styles_.size(); ++s) {
    if (text.find(styles_[s]) != std::string::npos) {
      for (std::size_t j = 0; j < d_style_; ++j) v[j] += prototypes_[s][j];
    }
  }
  normalize_inplace(v);
  return Tensor::from_values({d_style_}, std::move(v));
}

}  // namespace ppjudge
