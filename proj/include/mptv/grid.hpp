#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mptv/error.hpp"

namespace mptv {

struct Dims {
  std::size_t height = 0;
  std::size_t width = 0;

  constexpr std::size_t size() const noexcept { return height * width; }
  friend constexpr bool operator==(const Dims&, const Dims&) = default;
};

inline std::string to_string(Dims d) {
  return std::to_string(d.height) + "x" + std::to_string(d.width);
}

/// Real-valued raster in row-major order. Holds images, residuals and duals.
class ImageGrid {
 public:
  ImageGrid() = default;
  explicit ImageGrid(Dims dims, double fill = 0.0) : dims_(dims), data_(dims.size(), fill) {}
  ImageGrid(Dims dims, std::vector<double> data) : dims_(dims), data_(std::move(data)) {
    if (data_.size() != dims_.size()) {
      throw DimensionMismatch("ImageGrid: data length " + std::to_string(data_.size()) +
                              " does not match " + to_string(dims_));
    }
  }

  static ImageGrid constant(Dims dims, double value) { return ImageGrid(dims, value); }

  Dims dims() const noexcept { return dims_; }
  std::size_t height() const noexcept { return dims_.height; }
  std::size_t width() const noexcept { return dims_.width; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * dims_.width + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * dims_.width + j]; }
  double& operator[](std::size_t idx) { return data_[idx]; }
  double operator[](std::size_t idx) const { return data_[idx]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }
  double mean() const { return data_.empty() ? 0.0 : sum() / static_cast<double>(data_.size()); }
  double max() const { return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end()); }
  double min() const { return data_.empty() ? 0.0 : *std::min_element(data_.begin(), data_.end()); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  ImageGrid& operator+=(const ImageGrid& o) {
    require_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  ImageGrid& operator-=(const ImageGrid& o) {
    require_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  ImageGrid& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

  friend ImageGrid operator+(ImageGrid a, const ImageGrid& b) { return a += b; }
  friend ImageGrid operator-(ImageGrid a, const ImageGrid& b) { return a -= b; }
  friend ImageGrid operator*(ImageGrid a, double s) { return a *= s; }
  friend ImageGrid operator*(double s, ImageGrid a) { return a *= s; }

  friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

  void require_same(const ImageGrid& o) const {
    if (o.dims_ != dims_) {
      throw DimensionMismatch("ImageGrid: " + to_string(dims_) + " vs " + to_string(o.dims_));
    }
  }

 private:
  Dims dims_{};
  std::vector<double> data_;
};

inline double dot(const ImageGrid& a, const ImageGrid& b) {
  a.require_same(b);
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

inline double norm2(const ImageGrid& a) { return std::sqrt(dot(a, a)); }

/// Vertical/horizontal difference channels. Pixel i's group is (v[i], h[i]).
struct GradientField {
  ImageGrid v;
  ImageGrid h;

  GradientField() = default;
  explicit GradientField(Dims dims, double fill = 0.0) : v(dims, fill), h(dims, fill) {}
  GradientField(ImageGrid vertical, ImageGrid horizontal)
      : v(std::move(vertical)), h(std::move(horizontal)) {
    v.require_same(h);
  }

  Dims dims() const noexcept { return v.dims(); }
  std::size_t size() const noexcept { return v.size(); }

  double group_norm(std::size_t i) const { return std::hypot(v[i], h[i]); }

  bool all_finite() const { return v.all_finite() && h.all_finite(); }

  GradientField& operator+=(const GradientField& o) {
    v += o.v;
    h += o.h;
    return *this;
  }
  GradientField& operator-=(const GradientField& o) {
    v -= o.v;
    h -= o.h;
    return *this;
  }
  GradientField& operator*=(double s) {
    v *= s;
    h *= s;
    return *this;
  }
  friend GradientField operator+(GradientField a, const GradientField& b) { return a += b; }
  friend GradientField operator-(GradientField a, const GradientField& b) { return a -= b; }
  friend GradientField operator*(GradientField a, double s) { return a *= s; }
  friend GradientField operator*(double s, GradientField a) { return a *= s; }
  friend bool operator==(const GradientField&, const GradientField&) = default;
};

inline double dot(const GradientField& a, const GradientField& b) {
  return dot(a.v, b.v) + dot(a.h, b.h);
}

inline double norm2(const GradientField& a) { return std::sqrt(dot(a, a)); }

// Forward differences with periodic wrap:
//   v(i,j) = x(i+1,j) - x(i,j),  h(i,j) = x(i,j+1) - x(i,j).
inline GradientField apply_gradient(const ImageGrid& x) {
  const std::size_t H = x.height();
  const std::size_t W = x.width();
  GradientField g(x.dims());
  for (std::size_t i = 0; i < H; ++i) {
    const std::size_t ip = (i + 1 == H) ? 0 : i + 1;
    for (std::size_t j = 0; j < W; ++j) {
      const std::size_t jp = (j + 1 == W) ? 0 : j + 1;
      g.v(i, j) = x(ip, j) - x(i, j);
      g.h(i, j) = x(i, jp) - x(i, j);
    }
  }
  return g;
}

/// D^T g, the exact adjoint of apply_gradient (a negative backward divergence).
inline ImageGrid apply_divergence(const GradientField& g) {
  const std::size_t H = g.v.height();
  const std::size_t W = g.v.width();
  ImageGrid out(g.dims());
  for (std::size_t i = 0; i < H; ++i) {
    const std::size_t im = (i == 0) ? H - 1 : i - 1;
    for (std::size_t j = 0; j < W; ++j) {
      const std::size_t jm = (j == 0) ? W - 1 : j - 1;
      out(i, j) = (g.v(im, j) - g.v(i, j)) + (g.h(i, jm) - g.h(i, j));
    }
  }
  return out;
}

inline ImageGrid group_magnitudes(const GradientField& g) {
  ImageGrid out(g.dims());
  for (std::size_t k = 0; k < g.size(); ++k) out[k] = g.group_norm(k);
  return out;
}

/// Isotropic total variation: sum of per-pixel gradient group norms.
inline double tv_value(const ImageGrid& x) { return group_magnitudes(apply_gradient(x)).sum(); }

/// Point-spread function with odd sides, nonnegative taps and unit mass.
class BlurKernel {
 public:
  BlurKernel() : dims_{1, 1}, taps_{1.0} {}

  /// Validates and normalizes the taps to unit sum.
  static BlurKernel from_taps(Dims dims, std::vector<double> taps) {
    if (dims.height == 0 || dims.width == 0 || dims.height % 2 == 0 || dims.width % 2 == 0) {
      throw InvalidArgument("BlurKernel: sides must be odd, got " + to_string(dims));
    }
    if (taps.size() != dims.size()) {
      throw DimensionMismatch("BlurKernel: tap count does not match " + to_string(dims));
    }
    double total = 0.0;
    for (double t : taps) {
      if (!std::isfinite(t) || t < 0.0) throw InvalidArgument("BlurKernel: taps must be finite and >= 0");
      total += t;
    }
    if (!(total > 0.0)) throw InvalidArgument("BlurKernel: taps sum to zero");
    for (double& t : taps) t /= total;
    BlurKernel k;
    k.dims_ = dims;
    k.taps_ = std::move(taps);
    return k;
  }

  static BlurKernel delta() { return BlurKernel(); }

  Dims dims() const noexcept { return dims_; }
  std::size_t height() const noexcept { return dims_.height; }
  std::size_t width() const noexcept { return dims_.width; }
  int radius_v() const noexcept { return static_cast<int>(dims_.height / 2); }
  int radius_h() const noexcept { return static_cast<int>(dims_.width / 2); }

  /// Tap at (row, col) in storage coordinates.
  double operator()(std::size_t r, std::size_t c) const { return taps_[r * dims_.width + c]; }
  /// Tap at an offset from the anchor.
  double at_offset(int di, int dj) const {
    return taps_[static_cast<std::size_t>(di + radius_v()) * dims_.width +
                 static_cast<std::size_t>(dj + radius_h())];
  }

  std::span<const double> taps() const noexcept { return taps_; }

  bool fits(Dims image) const noexcept {
    return dims_.height <= image.height && dims_.width <= image.width;
  }

  BlurKernel flipped() const {
    std::vector<double> t(taps_.rbegin(), taps_.rend());
    BlurKernel k;
    k.dims_ = dims_;
    k.taps_ = std::move(t);
    return k;
  }

  friend bool operator==(const BlurKernel&, const BlurKernel&) = default;

 private:
  Dims dims_;
  std::vector<double> taps_;
};

}  // namespace mptv
