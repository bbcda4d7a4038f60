#include "ppjudge/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include "ppjudge/error.hpp"

namespace ppjudge {

Frame make_frame(std::size_t width, std::size_t height, std::size_t channels, double fill) {
  if (channels != 1 && channels != 3) {
    throw DimensionError("make_frame: channels must be 1 or 3");
  }
  Frame f;
  f.width = width;
  f.height = height;
  f.channels = channels;
  f.pixels.assign(width * height * channels, fill);
  return f;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

bool has_suffix(const std::string& s, const char* suf) {
  std::size_t n = std::strlen(suf);
  return s.size() >= n && s.compare(s.size() - n, n, suf) == 0;
}

Frame load_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open image: " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png reader allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png info allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError("malformed PNG: " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  png_uint_32 width = png_get_image_width(png, info);
  png_uint_32 height = png_get_image_height(png, info);
  int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);

  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  std::size_t channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError("unsupported PNG channel count in " + path);
  }
  std::size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<unsigned char> raw(rowbytes * height);
  std::vector<png_bytep> rows(height);
  for (std::size_t y = 0; y < height; ++y) rows[y] = raw.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Frame f = make_frame(width, height, channels);
  for (std::size_t y = 0; y < height; ++y) {
    const unsigned char* src = raw.data() + y * rowbytes;
    for (std::size_t i = 0; i < width * channels; ++i) {
      f.pixels[y * width * channels + i] = static_cast<double>(src[i]) / 255.0;
    }
  }
  return f;
}

void save_png(const std::string& path, const Frame& frame) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot open image for writing: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png writer allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png info allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed writing PNG: " + path);
  }
  png_init_io(png, fp.get());
  int color = frame.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, static_cast<png_uint_32>(frame.width),
               static_cast<png_uint_32>(frame.height), 8, color, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<unsigned char> row(frame.width * frame.channels);
  for (std::size_t y = 0; y < frame.height; ++y) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      double v = frame.pixels[y * row.size() + i];
      v = std::clamp(v, 0.0, 1.0);
      row[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Binary PPM (P6) and PGM (P5), maxval 255.

int next_pnm_token(std::istream& is) {
  // skips whitespace and '#' comments, returns the next integer
  while (true) {
    int c = is.peek();
    if (c == '#') {
      std::string line;
      std::getline(is, line);
    } else if (std::isspace(c)) {
      is.get();
    } else {
      break;
    }
  }
  int v = -1;
  is >> v;
  return v;
}

Frame load_pnm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open image: " + path);
  char m0 = 0, m1 = 0;
  is.get(m0);
  is.get(m1);
  if (m0 != 'P' || (m1 != '5' && m1 != '6')) {
    throw ParseError("not a binary PPM/PGM: " + path);
  }
  std::size_t channels = m1 == '6' ? 3 : 1;
  int w = next_pnm_token(is);
  int h = next_pnm_token(is);
  int maxval = next_pnm_token(is);
  if (w <= 0 || h <= 0 || maxval != 255) {
    throw ParseError("unsupported PPM header in " + path);
  }
  is.get();  // single whitespace after maxval
  std::size_t count = static_cast<std::size_t>(w) * h * channels;
  std::vector<unsigned char> raw(count);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count));
  if (!is) throw ParseError("truncated PPM: " + path);
  Frame f = make_frame(static_cast<std::size_t>(w), static_cast<std::size_t>(h), channels);
  for (std::size_t i = 0; i < count; ++i) f.pixels[i] = static_cast<double>(raw[i]) / 255.0;
  return f;
}

void save_pnm(const std::string& path, const Frame& frame) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open image for writing: " + path);
  os << (frame.channels == 3 ? "P6" : "P5") << "\n"
     << frame.width << " " << frame.height << "\n255\n";
  std::vector<unsigned char> raw(frame.pixels.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    double v = std::clamp(frame.pixels[i], 0.0, 1.0);
    raw[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  os.write(reinterpret_cast<const char*>(raw.data()),
           static_cast<std::streamsize>(raw.size()));
  if (!os) throw IoError("failed writing image: " + path);
}

}  // namespace

Frame load_frame(const std::string& path) {
  // Dispatch on magic bytes so extensionless frame lists still work.
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError("cannot open image: " + path);
  unsigned char sig[2] = {0, 0};
  probe.read(reinterpret_cast<char*>(sig), 2);
  probe.close();
  if (sig[0] == 0x89 && sig[1] == 'P') return load_png(path);
  if (sig[0] == 'P' && (sig[1] == '5' || sig[1] == '6')) return load_pnm(path);
  throw ParseError("unrecognised image format: " + path);
}

void save_frame(const std::string& path, const Frame& frame) {
  if (frame.empty()) throw DegenerateInputError("save_frame: empty frame");
  if (has_suffix(path, ".png")) {
    save_png(path, frame);
  } else if (has_suffix(path, ".ppm") || has_suffix(path, ".pgm")) {
    save_pnm(path, frame);
  } else {
    throw ConfigError("unsupported image extension: " + path);
  }
}

}  // namespace ppjudge
