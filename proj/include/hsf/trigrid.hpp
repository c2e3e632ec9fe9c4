// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0
//
// Canonical tri-grid feature volume and the small MLP decoder that turns features into
// color and density.
//
// A tri-grid holds three axis-aligned planes (XY, YZ, XZ). Each plane stores D depth layers
// of R x R spatial nodes with C channels. Sampling a point projects it onto each plane,
// picks the layer nearest to the orthogonal coordinate, bilinearly interpolates inside that
// layer, and sums the three plane features. The domain is the cube [-1, 1]^3; samples
// outside it return a zero feature.
//
// Binary formats are little-endian:
//   grid:    "HSFG" u32 version=1, u32 D, u32 R, u32 C, f32[3*D*R*R*C]   (plane, layer, row, col, channel)
//   weights: "HSFW" u32 version=1, u32 layer_count, {u32 in, u32 out} per layer,
//            then per layer f32[out*in] row-major weights followed by f32[out] biases
#pragma once

#include "hsf/types.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace hsf {

enum class Plane : int { xy = 0, yz = 1, xz = 2 };

class TriGrid {
 public:
  TriGrid() = default;
  TriGrid(int layers, int resolution, int channels)
      : layers_(layers), resolution_(resolution), channels_(channels) {
    if (layers < 1 || resolution < 2 || channels < 1) {
      throw ValidationError("tri-grid needs D >= 1, R >= 2, C >= 1");
    }
    data_.assign(static_cast<std::size_t>(3) * layers * resolution * resolution * channels, 0.0f);
  }

  int layers() const { return layers_; }
  int resolution() const { return resolution_; }
  int channels() const { return channels_; }
  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  std::size_t index(Plane plane, int layer, int row, int col, int channel) const {
    return ((((static_cast<std::size_t>(plane) * layers_ + layer) * resolution_ + row) * resolution_ + col) *
            channels_) +
           channel;
  }
  float& at(Plane plane, int layer, int row, int col, int channel) { return data_[index(plane, layer, row, col, channel)]; }
  float at(Plane plane, int layer, int row, int col, int channel) const {
    return data_[index(plane, layer, row, col, channel)];
  }

  /// Plane coordinates (col axis, row axis) and the orthogonal depth axis for each plane.
  static constexpr std::array<std::array<int, 3>, 3> kAxes = {{{0, 1, 2}, {1, 2, 0}, {0, 2, 1}}};

  /// Continuous node coordinate for a domain coordinate in [-1, 1] (grid nodes include both ends).
  double node_coord(double c) const { return (c + 1.0) * 0.5 * (resolution_ - 1); }

  int layer_for(double depth) const {
    if (layers_ == 1) return 0;
    const long l = std::lround((depth + 1.0) * 0.5 * (layers_ - 1));
    return static_cast<int>(std::clamp<long>(l, 0, layers_ - 1));
  }

  static bool in_domain(const Vec3& x) { return x.cwiseAbs().maxCoeff() <= 1.0; }

  /// Sums the three plane features at x into out (size C).
  void sample(const Vec3& x, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    if (!in_domain(x)) return;
    const int last = resolution_ - 1;
    for (int p = 0; p < 3; ++p) {
      const auto& ax = kAxes[p];
      const double fc = node_coord(x[ax[0]]);
      const double fr = node_coord(x[ax[1]]);
      const int c0 = std::min(static_cast<int>(fc), last - 1);
      const int r0 = std::min(static_cast<int>(fr), last - 1);
      const double tc = fc - c0;
      const double tr = fr - r0;
      const int layer = layer_for(x[ax[2]]);
      const double w00 = (1 - tr) * (1 - tc), w01 = (1 - tr) * tc, w10 = tr * (1 - tc), w11 = tr * tc;
      const float* n00 = &data_[index(static_cast<Plane>(p), layer, r0, c0, 0)];
      const float* n01 = n00 + channels_;
      const float* n10 = n00 + static_cast<std::size_t>(resolution_) * channels_;
      const float* n11 = n10 + channels_;
      for (int ch = 0; ch < channels_; ++ch) {
        out[ch] += w00 * n00[ch] + w01 * n01[ch] + w10 * n10[ch] + w11 * n11[ch];
      }
    }
  }

  std::vector<double> sample(const Vec3& x) const {
    std::vector<double> out(channels_);
    sample(x, out);
    return out;
  }

  bool operator==(const TriGrid& o) const {
    return layers_ == o.layers_ && resolution_ == o.resolution_ && channels_ == o.channels_ && data_ == o.data_;
  }

 private:
  int layers_ = 0;
  int resolution_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// Mirror image of a tri-grid across x = 0.
inline TriGrid mirror_x(const TriGrid& g) {
  TriGrid out(g.layers(), g.resolution(), g.channels());
  const int n = g.resolution();
  const int d = g.layers();
  for (int l = 0; l < d; ++l) {
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        for (int ch = 0; ch < g.channels(); ++ch) {
          // XY and XZ: x is the column axis. YZ: x is the depth axis.
          out.at(Plane::xy, l, r, c, ch) = g.at(Plane::xy, l, r, n - 1 - c, ch);
          out.at(Plane::xz, l, r, c, ch) = g.at(Plane::xz, l, r, n - 1 - c, ch);
          out.at(Plane::yz, l, r, c, ch) = g.at(Plane::yz, d - 1 - l, r, c, ch);
        }
      }
    }
  }
  return out;
}

/// Average of a grid and its mirror image: sampling is then symmetric under x -> -x.
inline TriGrid symmetrize_x(const TriGrid& g) {
  const TriGrid m = mirror_x(g);
  TriGrid out = g;
  auto dst = out.data();
  auto src = m.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = 0.5f * (dst[i] + src[i]);
  return out;
}

struct FieldSample {
  Vec3 color = Vec3::Zero();
  double density = 0.0;
};

struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<float> weights;  // out x in, row-major
  std::vector<float> bias;     // out
};

inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Fully connected decoder: softplus on hidden layers; the final layer emits 3 color logits
/// (sigmoid) and 1 density logit (softplus).
class FieldDecoder {
 public:
  static constexpr int kMaxWidth = 1024;

  FieldDecoder() = default;
  explicit FieldDecoder(std::vector<DenseLayer> layers) : layers_(std::move(layers)) { validate(); }

  /// Zero-initialized decoder with the given hidden widths.
  static FieldDecoder zeros(int input_dim, const std::vector<int>& hidden = {64}) {
    std::vector<DenseLayer> layers;
    int in = input_dim;
    auto add = [&](int out) {
      layers.push_back({in, out, std::vector<float>(static_cast<std::size_t>(in) * out, 0.0f),
                        std::vector<float>(out, 0.0f)});
      in = out;
    };
    for (int h : hidden) add(h);
    add(4);
    return FieldDecoder(std::move(layers));
  }

  void validate() const {
    if (layers_.empty()) throw ValidationError("decoder has no layers");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& l = layers_[i];
      if (l.in < 1 || l.out < 1 || l.in > kMaxWidth || l.out > kMaxWidth) {
        throw ValidationError("decoder layer " + std::to_string(i) + " has invalid shape");
      }
      if (l.weights.size() != static_cast<std::size_t>(l.in) * l.out || l.bias.size() != static_cast<std::size_t>(l.out)) {
        throw ValidationError("decoder layer " + std::to_string(i) + " storage does not match its shape");
      }
      if (i > 0 && layers_[i - 1].out != l.in) {
        throw ValidationError("decoder layer " + std::to_string(i) + " input does not chain from previous output");
      }
      for (float w : l.weights) {
        if (!std::isfinite(w)) throw ValidationError("decoder weights must be finite");
      }
      for (float b : l.bias) {
        if (!std::isfinite(b)) throw ValidationError("decoder biases must be finite");
      }
    }
    if (layers_.back().out != 4) throw ValidationError("decoder must output 4 channels (rgb + density)");
  }

  int input_dim() const { return layers_.front().in; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }

  FieldSample decode(std::span<const double> feature) const {
    if (static_cast<int>(feature.size()) != input_dim()) {
      throw ValidationError("decoder expects " + std::to_string(input_dim()) + " features, got " +
                            std::to_string(feature.size()));
    }
    std::array<double, kMaxWidth> buf_a;
    std::array<double, kMaxWidth> buf_b;
    double* a = buf_a.data();
    double* b = buf_b.data();
    std::copy(feature.begin(), feature.end(), a);
    for (std::size_t li = 0; li < layers_.size(); ++li) {
      const DenseLayer& l = layers_[li];
      const bool hidden = li + 1 < layers_.size();
      for (int o = 0; o < l.out; ++o) {
        const float* row = &l.weights[static_cast<std::size_t>(o) * l.in];
        double acc = l.bias[o];
        for (int i = 0; i < l.in; ++i) acc += static_cast<double>(row[i]) * a[i];
        b[o] = hidden ? softplus(acc) : acc;
      }
      std::swap(a, b);
    }
    FieldSample s;
    s.color = Vec3(sigmoid(a[0]), sigmoid(a[1]), sigmoid(a[2]));
    s.density = softplus(a[3]);
    return s;
  }

  bool operator==(const FieldDecoder& o) const {
    if (layers_.size() != o.layers_.size()) return false;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& x = layers_[i];
      const auto& y = o.layers_[i];
      if (x.in != y.in || x.out != y.out || x.weights != y.weights || x.bias != y.bias) return false;
    }
    return true;
  }

 private:
  std::vector<DenseLayer> layers_;
};

inline FieldSample decode(const FieldDecoder& dec, std::span<const double> feature) { return dec.decode(feature); }

/// Tri-grid plus decoder, checked for channel agreement.
struct NeuralField {
  TriGrid grid;
  FieldDecoder decoder;

  NeuralField() = default;
  NeuralField(TriGrid g, FieldDecoder d) : grid(std::move(g)), decoder(std::move(d)) {
    if (grid.channels() != decoder.input_dim()) {
      throw ValidationError("decoder expects " + std::to_string(decoder.input_dim()) + " channels but grid has " +
                            std::to_string(grid.channels()));
    }
    const std::vector<double> zero(grid.channels(), 0.0);
    outside_ = decoder.decode(zero);
  }

  int channels() const { return grid.channels(); }

  FieldSample query(const Vec3& x) const {
    if (!TriGrid::in_domain(x)) return outside_;
    std::array<double, FieldDecoder::kMaxWidth> feature;
    std::span<double> f(feature.data(), static_cast<std::size_t>(grid.channels()));
    grid.sample(x, f);
    return decoder.decode(f);
  }

  double density(const Vec3& x) const { return query(x).density; }

 private:
  FieldSample outside_;  // decode of the zero feature returned outside the cube
};

// ---------------------------------------------------------------------------------------------
// Binary I/O

namespace detail {

inline constexpr char kGridMagic[4] = {'H', 'S', 'F', 'G'};
inline constexpr char kWeightsMagic[4] = {'H', 'S', 'F', 'W'};
inline constexpr std::uint32_t kFormatVersion = 1;

class LeWriter {
 public:
  explicit LeWriter(std::ostream& out) : out_(out) {}
  void bytes(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }
  void u32(std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    bytes(reinterpret_cast<const char*>(b), 4);
  }
  void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }

 private:
  std::ostream& out_;
};

class LeReader {
 public:
  LeReader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}
  void bytes(char* p, std::size_t n) {
    in_.read(p, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw ValidationError(name_ + ": truncated file");
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  float f32() { return std::bit_cast<float>(u32()); }
  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) throw ValidationError(name_ + ": trailing bytes after payload");
  }
  void magic(const char (&expected)[4]) {
    char m[4];
    bytes(m, 4);
    if (std::memcmp(m, expected, 4) != 0) throw ValidationError(name_ + ": bad magic");
    const std::uint32_t version = u32();
    if (version != kFormatVersion) throw ValidationError(name_ + ": unsupported version " + std::to_string(version));
  }

 private:
  std::istream& in_;
  std::string name_;
};

}  // namespace detail

inline void write_grid(std::ostream& out, const TriGrid& g) {
  detail::LeWriter w(out);
  w.bytes(detail::kGridMagic, 4);
  w.u32(detail::kFormatVersion);
  w.u32(static_cast<std::uint32_t>(g.layers()));
  w.u32(static_cast<std::uint32_t>(g.resolution()));
  w.u32(static_cast<std::uint32_t>(g.channels()));
  for (float f : g.data()) w.f32(f);
}

inline TriGrid read_grid(std::istream& in, const std::string& name = "<grid>") {
  detail::LeReader r(in, name);
  r.magic(detail::kGridMagic);
  const auto d = r.u32();
  const auto res = r.u32();
  const auto c = r.u32();
  if (d < 1 || d > 4096 || res < 2 || res > 4096 || c < 1 || c > FieldDecoder::kMaxWidth) {
    throw ValidationError(name + ": implausible grid shape");
  }
  TriGrid g(static_cast<int>(d), static_cast<int>(res), static_cast<int>(c));
  for (float& f : g.data()) {
    f = r.f32();
    if (!std::isfinite(f)) throw ValidationError(name + ": non-finite grid value");
  }
  r.expect_end();
  return g;
}

inline void write_weights(std::ostream& out, const FieldDecoder& dec) {
  detail::LeWriter w(out);
  w.bytes(detail::kWeightsMagic, 4);
  w.u32(detail::kFormatVersion);
  w.u32(static_cast<std::uint32_t>(dec.layers().size()));
  for (const auto& l : dec.layers()) {
    w.u32(static_cast<std::uint32_t>(l.in));
    w.u32(static_cast<std::uint32_t>(l.out));
  }
  for (const auto& l : dec.layers()) {
    for (float f : l.weights) w.f32(f);
    for (float f : l.bias) w.f32(f);
  }
}

inline FieldDecoder read_weights(std::istream& in, const std::string& name = "<weights>") {
  detail::LeReader r(in, name);
  r.magic(detail::kWeightsMagic);
  const auto count = r.u32();
  if (count < 1 || count > 64) throw ValidationError(name + ": implausible layer count");
  std::vector<DenseLayer> layers(count);
  for (auto& l : layers) {
    l.in = static_cast<int>(r.u32());
    l.out = static_cast<int>(r.u32());
    if (l.in < 1 || l.out < 1 || l.in > FieldDecoder::kMaxWidth || l.out > FieldDecoder::kMaxWidth) {
      throw ValidationError(name + ": implausible layer shape");
    }
  }
  for (auto& l : layers) {
    l.weights.resize(static_cast<std::size_t>(l.in) * l.out);
    l.bias.resize(l.out);
    for (float& f : l.weights) f = r.f32();
    for (float& f : l.bias) f = r.f32();
  }
  r.expect_end();
  return FieldDecoder(std::move(layers));
}

inline void save_grid(const std::string& path, const TriGrid& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write grid '" + path + "'");
  write_grid(out, g);
  if (!out) throw IoError("failed writing grid '" + path + "'");
}

inline TriGrid load_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open grid '" + path + "'");
  return read_grid(in, path);
}

inline void save_weights(const std::string& path, const FieldDecoder& dec) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write weights '" + path + "'");
  write_weights(out, dec);
  if (!out) throw IoError("failed writing weights '" + path + "'");
}

inline FieldDecoder load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weights '" + path + "'");
  return read_weights(in, path);
}

}  // namespace hsf
