#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ppjudge/image.hpp"
#include "ppjudge/tensor.hpp"

namespace ppjudge {

/// Patch tokens of one frame plus their grid coordinates.
struct TokenGrid {
  std::size_t frame_index{0};
  Tensor tokens;  // [m, d_model]
  std::vector<std::pair<std::size_t, std::size_t>> spatial_positions;  // (row, col)
};

/// Abstract image/text embedding provider. Outputs are deterministic and
/// unit-norm.
class StyleEmbedder {
 public:
  virtual ~StyleEmbedder() = default;
  virtual Tensor embed_image(const Frame& frame) const = 0;
  virtual Tensor embed_text(const std::string& text) const = 0;
  virtual std::size_t d_style() const = 0;
};

/// One unit-norm row per style, built from the text template
/// "This is a {style} painting.".
struct StylePrototypeTable {
  std::vector<std::string> styles;
  Tensor embeddings;  // [S, d_style]
};

/// Cuts a frame into non-overlapping patches, row-major over the patch grid.
/// Result: [m, patch*patch*channels] with m = (H/patch)*(W/patch).
Tensor patchify(const Frame& frame, std::size_t patch_size);

/// Inverse of patchify; exact round-trip.
Frame unpatchify(const Tensor& patches, std::size_t height, std::size_t width,
                 std::size_t channels, std::size_t patch_size);

/// Linear patch projection with bias: tokens = patches * projection + bias.
TokenGrid embed_tokens(const Tensor& patches, const Tensor& projection,
                       const Tensor& bias, std::size_t frame_index,
                       std::size_t grid_rows, std::size_t grid_cols);

StylePrototypeTable build_prototype_table(const std::vector<std::string>& styles,
                                          const StyleEmbedder& embedder);

/// Argmax cosine similarity between the embedded image and each prototype row.
/// Ties break toward the lower index. Returns (style index, prototype row).
std::pair<std::size_t, Tensor> classify_style(const Frame& reference,
                                              const StylePrototypeTable& table,
                                              const StyleEmbedder& embedder);

/// Same classification applied to an existing embedding (text references).
std::pair<std::size_t, Tensor> classify_style_embedding(const Tensor& embedding,
                                                        const StylePrototypeTable& table);

/// Four fixed colors per style family, shared with the synthetic generator so
/// palette-based style detection lines up with declared styles. Families are
/// separated in hue: blues, reds, grays, greens.
const std::array<std::array<double, 3>, 4>& style_palette(std::size_t style_index);
std::size_t style_palette_count();

/// Deterministic stand-in for a pretrained vision-language embedder.
/// embed_text of the exact prototype template returns the style's orthonormal
/// prototype; other strings hash to stable unit vectors nudged toward any
/// style names they contain. embed_image projects box-downsampled pixels
/// through a fixed random matrix and, with bias_strength > 0, pulls the
/// result toward the prototype of the style whose palette best explains the
/// inked pixels (bias_strength 1 returns that prototype exactly).
class MockStyleEmbedder : public StyleEmbedder {
 public:
  MockStyleEmbedder(std::uint64_t seed, std::size_t d_style,
                    std::vector<std::string> styles, double bias_strength = 1.0);

  Tensor embed_image(const Frame& frame) const override;
  Tensor embed_text(const std::string& text) const override;
  std::size_t d_style() const override { return d_style_; }

  const std::vector<std::string>& styles() const { return styles_; }
  Tensor prototype(std::size_t style_index) const;

 private:
  std::uint64_t seed_;
  std::size_t d_style_;
  std::vector<std::string> styles_;
  double bias_strength_;
  std::vector<std::vector<double>> prototypes_;  // [S][d_style], orthonormal
  std::vector<double> projection_;               // [d_style, 193]
};

}  // namespace ppjudge
