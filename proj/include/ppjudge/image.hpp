#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace ppjudge {

/// One raster image with pixel values in [0, 1], stored row-major as
/// [height][width][channels]. Channels is 1 (grayscale) or 3 (RGB).
struct Frame {
  std::size_t width{0};
  std::size_t height{0};
  std::size_t channels{0};
  std::vector<double> pixels;

  double at(std::size_t y, std::size_t x, std::size_t c) const {
    return pixels[(y * width + x) * channels + c];
  }
  double& at(std::size_t y, std::size_t x, std::size_t c) {
    return pixels[(y * width + x) * channels + c];
  }
  bool empty() const { return pixels.empty(); }
};

Frame make_frame(std::size_t width, std::size_t height, std::size_t channels,
                 double fill = 0.0);

/// Reads an 8-bit PNG or binary PPM/PGM. Values are divided by 255.
/// Alpha channels are dropped; palette images expand to RGB.
Frame load_frame(const std::string& path);

/// Writes PNG (.png) or binary PPM/PGM (.ppm/.pgm) depending on extension.
void save_frame(const std::string& path, const Frame& frame);

}  // namespace ppjudge
