#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "ppjudge/tensor.hpp"

namespace ppjudge {

/// The eight assessment attributes, each on a 1..10 scale. Field order is
/// fixed and matches names().
struct AttributeScores {
  double consistency{1.0};
  double style_stability{1.0};
  double color_stability{1.0};
  double composition_stability{1.0};
  double process_stability{1.0};
  double detail_depth{1.0};
  double color_depth{1.0};
  double composition_depth{1.0};

  static constexpr std::size_t kCount = 8;
  static const std::array<std::string, kCount>& names();

  std::array<double, kCount> as_array() const;
  static AttributeScores from_array(const std::array<double, kCount>& v);

  Tensor tensor() const;  // [8] in attribute order

  /// Range check; throws RangeError naming the offending attribute.
  void validate() const;
};

enum class Split { train, test };
enum class Source { real, synthetic };

std::string to_string(Split s);
std::string to_string(Source s);
Split split_from_string(const std::string& s);
Source source_from_string(const std::string& s);

/// What a sample is judged against, as stored on disk: an image path
/// (relative to the manifest) or a prompt string.
struct SampleReference {
  bool is_prompt{false};
  std::string image_path;
  std::string prompt;
};

/// One painting process: ordered frame paths plus labels. Paths are relative
/// to the manifest's directory so a dataset folder can be moved or copied
/// without rewriting the manifest.
struct ProcessSample {
  std::string id;
  SampleReference reference;
  std::vector<std::string> frame_paths;
  AttributeScores scores;
  Split split{Split::train};
  Source source{Source::synthetic};
};

/// JSON-lines manifest: one object per sample, keys sorted, doubles written
/// shortest-round-trip, so save(load(x)) is byte-identical.
std::vector<ProcessSample> load_manifest(const std::string& path);
void save_manifest(const std::string& path, const std::vector<ProcessSample>& samples);

/// Directory part of a path ("." when none) — frame paths resolve against it.
std::string parent_dir(const std::string& path);
std::string join_path(const std::string& dir, const std::string& rel);

}  // namespace ppjudge
