#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mptv/grid.hpp"

namespace mptv {

/// Active pixel set S with the per-iteration increments C_1..C_t that built it.
/// A pixel index i stands for the gradient group (v_i, h_i).
class SupportSet {
 public:
  SupportSet() = default;
  explicit SupportSet(Dims dims) : dims_(dims), mask_(dims.size(), 0) {}

  static SupportSet full(Dims dims) {
    SupportSet s(dims);
    std::fill(s.mask_.begin(), s.mask_.end(), std::uint8_t{1});
    s.count_ = dims.size();
    return s;
  }

  static SupportSet from_mask(Dims dims, std::span<const std::uint8_t> mask) {
    if (mask.size() != dims.size()) throw DimensionMismatch("SupportSet: mask size mismatch");
    SupportSet s(dims);
    for (std::size_t i = 0; i < mask.size(); ++i) {
      s.mask_[i] = mask[i] != 0 ? 1 : 0;
      s.count_ += s.mask_[i];
    }
    return s;
  }

  Dims dims() const noexcept { return dims_; }
  std::size_t universe() const noexcept { return mask_.size(); }
  std::size_t count() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }
  bool saturated() const noexcept { return count_ == mask_.size(); }
  bool contains(std::size_t i) const { return mask_[i] != 0; }
  std::span<const std::uint8_t> mask() const noexcept { return mask_; }

  std::vector<std::size_t> indices() const {
    std::vector<std::size_t> out;
    out.reserve(count_);
    for (std::size_t i = 0; i < mask_.size(); ++i) {
      if (mask_[i]) out.push_back(i);
    }
    return out;
  }

  /// S <- S u C. C must be disjoint from S and free of repeats.
  void activate(std::vector<std::size_t> increment) {
    for (std::size_t i : increment) {
      if (i >= mask_.size()) throw InvalidArgument("SupportSet: index out of range");
      if (mask_[i]) throw InvalidArgument("SupportSet: increment overlaps the active set");
      mask_[i] = 1;
      ++count_;
    }
    increments_.push_back(std::move(increment));
  }

  const std::vector<std::vector<std::size_t>>& increments() const noexcept { return increments_; }

  const std::optional<ImageGrid>& soft_mask() const noexcept { return soft_mask_; }

  /// Replace the active set with the nonzero entries of a refined mask.
  void replace_with_mask(ImageGrid soft) {
    if (soft.dims() != dims_) throw DimensionMismatch("SupportSet: refined mask size mismatch");
    count_ = 0;
    for (std::size_t i = 0; i < mask_.size(); ++i) {
      mask_[i] = soft[i] > 0.0 ? 1 : 0;
      count_ += mask_[i];
    }
    soft_mask_ = std::move(soft);
  }

 private:
  Dims dims_{};
  std::vector<std::uint8_t> mask_;
  std::size_t count_ = 0;
  std::vector<std::vector<std::size_t>> increments_;
  std::optional<ImageGrid> soft_mask_;
};

namespace morphology {

/// Offsets (di, dj) with di^2 + dj^2 <= radius^2.
inline std::vector<std::pair<int, int>> disk_offsets(int radius) {
  std::vector<std::pair<int, int>> out;
  for (int di = -radius; di <= radius; ++di) {
    for (int dj = -radius; dj <= radius; ++dj) {
      if (di * di + dj * dj <= radius * radius) out.emplace_back(di, dj);
    }
  }
  return out;
}

namespace detail {
inline std::size_t wrap(long v, std::size_t n) {
  const long m = static_cast<long>(n);
  return static_cast<std::size_t>(((v % m) + m) % m);
}

// Periodic binary erosion (all == true) or dilation (all == false).
inline std::vector<std::uint8_t> binary_filter(Dims dims, std::span<const std::uint8_t> mask,
                                               const std::vector<std::pair<int, int>>& se, bool all) {
  std::vector<std::uint8_t> out(mask.size(), 0);
  for (std::size_t i = 0; i < dims.height; ++i) {
    for (std::size_t j = 0; j < dims.width; ++j) {
      bool hit = all;
      for (auto [di, dj] : se) {
        const std::size_t r = wrap(static_cast<long>(i) + di, dims.height);
        const std::size_t c = wrap(static_cast<long>(j) + dj, dims.width);
        const bool on = mask[r * dims.width + c] != 0;
        if (all && !on) {
          hit = false;
          break;
        }
        if (!all && on) {
          hit = true;
          break;
        }
      }
      out[i * dims.width + j] = hit ? 1 : 0;
    }
  }
  return out;
}
}  // namespace detail

inline std::vector<std::uint8_t> erode(Dims dims, std::span<const std::uint8_t> mask, int radius) {
  return detail::binary_filter(dims, mask, disk_offsets(radius), true);
}

inline std::vector<std::uint8_t> dilate(Dims dims, std::span<const std::uint8_t> mask, int radius) {
  return detail::binary_filter(dims, mask, disk_offsets(radius), false);
}

/// Normalized 1-D Gaussian taps, 2*ceil(3 sigma)+1 long.
inline std::vector<double> gaussian_taps(double sigma) {
  const int reach = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * reach + 1));
  double total = 0.0;
  for (int d = -reach; d <= reach; ++d) {
    const double w = std::exp(-0.5 * d * d / (sigma * sigma));
    taps[static_cast<std::size_t>(d + reach)] = w;
    total += w;
  }
  for (double& w : taps) w /= total;
  return taps;
}

/// Separable periodic Gaussian blur.
inline ImageGrid gaussian_blur(const ImageGrid& x, double sigma) {
  const auto taps = gaussian_taps(sigma);
  const int reach = static_cast<int>(taps.size() / 2);
  const Dims dims = x.dims();
  ImageGrid rows(dims), out(dims);
  for (std::size_t i = 0; i < dims.height; ++i) {
    for (std::size_t j = 0; j < dims.width; ++j) {
      double acc = 0.0;
      for (int d = -reach; d <= reach; ++d) {
        acc += taps[static_cast<std::size_t>(d + reach)] *
               x(i, detail::wrap(static_cast<long>(j) + d, dims.width));
      }
      rows(i, j) = acc;
    }
  }
  for (std::size_t i = 0; i < dims.height; ++i) {
    for (std::size_t j = 0; j < dims.width; ++j) {
      double acc = 0.0;
      for (int d = -reach; d <= reach; ++d) {
        acc += taps[static_cast<std::size_t>(d + reach)] *
               rows(detail::wrap(static_cast<long>(i) + d, dims.height), j);
      }
      out(i, j) = acc;
    }
  }
  return out;
}

}  // namespace morphology

struct RefinementParams {
  int opening_radius = 3;
  double mask_sigma = 3.0;
};

/// Opening (erosion then dilation, both with a radius-3 disk) removes isolated
/// activations; a sigma=3 Gaussian then widens the surviving regions. The new
/// active set is the nonzero support of the blurred mask, which is kept as the
/// soft mask.
inline SupportSet refine_support(const SupportSet& s, Dims dims, const RefinementParams& p = {}) {
  if (s.dims() != dims) throw DimensionMismatch("refine_support: dims do not match the support set");
  SupportSet out = s;
  const auto eroded = morphology::erode(dims, s.mask(), p.opening_radius);
  const auto opened = morphology::dilate(dims, eroded, p.opening_radius);
  ImageGrid m(dims);
  for (std::size_t i = 0; i < opened.size(); ++i) m[i] = opened[i];
  out.replace_with_mask(morphology::gaussian_blur(m, p.mask_sigma));
  return out;
}

}  // namespace mptv
