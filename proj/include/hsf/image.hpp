// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0
//
// Row-major interleaved double-precision images, PNG I/O and raw float dumps.
//
// PNG output quantizes with round-half-up: q = floor(clamp(v, 0, 1) * 255 + 0.5).
// Float dump layout (little-endian): "HSFI" u32 version=1, u32 width, u32 height,
// u32 channels, f32[height * width * channels].
#pragma once

#include "hsf/trigrid.hpp"
#include "hsf/types.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace hsf {

struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c, double fill = 0.0) : width(w), height(h), channels(c) {
    if (w < 0 || h < 0 || c < 1) throw ValidationError("invalid image shape");
    data.assign(static_cast<std::size_t>(w) * h * c, fill);
  }

  static Image filled(int w, int h, const Vec3& rgb) {
    Image img(w, h, 3);
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
      for (int c = 0; c < 3; ++c) img.data[p * 3 + c] = rgb[c];
    }
    return img;
  }

  bool empty() const { return data.empty(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  bool same_shape(const Image& o) const { return width == o.width && height == o.height && channels == o.channels; }

  double& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  double at(int x, int y, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }

  bool operator==(const Image& o) const { return same_shape(o) && data == o.data; }
};

/// Image mirrored left-right.
inline Image mirror_horizontal(const Image& img) {
  Image out(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(img.width - 1 - x, y, c);
    }
  }
  return out;
}

inline double max_abs_difference(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw ValidationError("image shapes differ");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
  return worst;
}

inline double mean_abs_difference(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw ValidationError("image shapes differ");
  if (a.data.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) sum += std::abs(a.data[i] - b.data[i]);
  return sum / static_cast<double>(a.data.size());
}

/// Bilinear resampling with half-pixel centres and edge clamping (align_corners = false).
inline Image resize_bilinear(const Image& src, int width, int height) {
  if (width < 1 || height < 1) throw ValidationError("resize target must be positive");
  if (src.empty()) throw ValidationError("cannot resize an empty image");
  Image out(width, height, src.channels);
  const double sx = static_cast<double>(src.width) / width;
  const double sy = static_cast<double>(src.height) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double tx = fx - x0;
      for (int c = 0; c < src.channels; ++c) {
        const double top = src.at(x0, y0, c) + (src.at(x1, y0, c) - src.at(x0, y0, c)) * tx;
        const double bottom = src.at(x0, y1, c) + (src.at(x1, y1, c) - src.at(x0, y1, c)) * tx;
        out.at(x, y, c) = top + (bottom - top) * ty;
      }
    }
  }
  return out;
}

/// Images of equal shape tiled row-major into a grid with `columns` cells per row.
inline Image tile_images(const std::vector<Image>& images, int columns) {
  if (images.empty()) throw ValidationError("nothing to tile");
  if (columns < 1) throw ValidationError("tile grid needs at least one column");
  const Image& first = images.front();
  for (const auto& img : images) {
    if (!img.same_shape(first)) throw ValidationError("tiled images must share one shape");
  }
  const int cols = std::min<int>(columns, static_cast<int>(images.size()));
  const int rows = (static_cast<int>(images.size()) + cols - 1) / cols;
  Image out(first.width * cols, first.height * rows, first.channels);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const int ox = static_cast<int>(i) % cols * first.width;
    const int oy = static_cast<int>(i) / cols * first.height;
    for (int y = 0; y < first.height; ++y) {
      for (int x = 0; x < first.width; ++x) {
        for (int c = 0; c < first.channels; ++c) out.at(ox + x, oy + y, c) = images[i].at(x, y, c);
      }
    }
  }
  return out;
}

inline std::uint8_t quantize_unit(double v) {
  if (!(v > 0.0)) return 0;  // NaN and negatives
  if (v >= 1.0) return 255;
  return static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
}

inline void save_png(const std::string& path, const Image& img) {
  if (img.channels != 1 && img.channels != 3 && img.channels != 4) {
    throw ValidationError("PNG output needs 1, 3 or 4 channels");
  }
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw IoError("cannot write PNG '" + path + "'");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialisation failed");
  }
  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * img.channels);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed writing PNG '" + path + "'");
  }
  png_init_io(png, fp.get());
  const int color = img.channels == 1 ? PNG_COLOR_TYPE_GRAY : (img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_RGBA);
  png_set_IHDR(png, info, img.width, img.height, 8, color, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_set_sRGB(png, info, PNG_sRGB_INTENT_PERCEPTUAL);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y) {
    for (std::size_t i = 0; i < row.size(); ++i) row[i] = quantize_unit(img.data[y * row.size() + i]);
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

/// Reads any 8/16-bit PNG as RGB in [0, 1]; alpha is dropped and gray is expanded.
inline Image load_png(const std::string& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!fp) throw IoError("cannot open PNG '" + path + "'");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw ValidationError("'" + path + "' is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialisation failed");
  }
  Image img;
  std::vector<std::uint8_t> row;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ValidationError("corrupt PNG '" + path + "'");
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  img = Image(w, h, 3);
  row.resize(png_get_rowbytes(png, info));
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < w * 3; ++x) img.data[static_cast<std::size_t>(y) * w * 3 + x] = row[x] / 255.0;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

inline void write_f32(std::ostream& out, const Image& img) {
  detail::LeWriter w(out);
  w.bytes("HSFI", 4);
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(img.width));
  w.u32(static_cast<std::uint32_t>(img.height));
  w.u32(static_cast<std::uint32_t>(img.channels));
  for (double v : img.data) w.f32(static_cast<float>(v));
}

inline Image read_f32(std::istream& in, const std::string& name = "<image>") {
  detail::LeReader r(in, name);
  static constexpr char kMagic[4] = {'H', 'S', 'F', 'I'};
  r.magic(kMagic);
  const auto w = r.u32();
  const auto h = r.u32();
  const auto c = r.u32();
  if (w > 1u << 15 || h > 1u << 15 || c < 1 || c > 4) throw ValidationError(name + ": implausible image shape");
  Image img(static_cast<int>(w), static_cast<int>(h), static_cast<int>(c));
  for (double& v : img.data) v = r.f32();
  r.expect_end();
  return img;
}

inline void save_f32(const std::string& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_f32(out, img);
}

inline Image load_f32(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_f32(in, path);
}

}  // namespace hsf
