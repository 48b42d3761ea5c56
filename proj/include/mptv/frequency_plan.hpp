#pragma once

#include <cmath>
#include <memory>

#include "mptv/fft.hpp"
#include "mptv/grid.hpp"

namespace mptv {

/// Place a kernel on an H x W periodic raster with its anchor at (0, 0).
inline ImageGrid embed_kernel(const BlurKernel& k, Dims dims) {
  if (!k.fits(dims)) {
    throw DimensionMismatch("kernel " + to_string(k.dims()) + " does not fit image " + to_string(dims));
  }
  ImageGrid out(dims);
  const int H = static_cast<int>(dims.height);
  const int W = static_cast<int>(dims.width);
  for (int di = -k.radius_v(); di <= k.radius_v(); ++di) {
    for (int dj = -k.radius_h(); dj <= k.radius_h(); ++dj) {
      const auto r = static_cast<std::size_t>(((di % H) + H) % H);
      const auto c = static_cast<std::size_t>(((dj % W) + W) % W);
      out(r, c) += k.at_offset(di, dj);
    }
  }
  return out;
}

/// Cached spectra of the blur operator A and the difference operators D_v, D_h
/// for one image size. Immutable after construction.
class FrequencyPlan {
 public:
  FrequencyPlan(Dims dims, const BlurKernel& kernel)
      : dims_(dims), kernel_(kernel), fft_(std::make_shared<RealFft2d>(dims)) {
    kernel_hat_ = fft_->forward(embed_kernel(kernel, dims));

    // D_v x = x(i+1) - x(i) is convolution with a stencil holding -1 at the
    // origin and +1 at row -1 (mod H); likewise for D_h along columns.
    ImageGrid dv(dims), dh(dims);
    dv(0, 0) -= 1.0;
    dv(dims.height - 1, 0) += 1.0;
    dh(0, 0) -= 1.0;
    dh(0, dims.width - 1) += 1.0;
    dv_hat_ = fft_->forward(dv);
    dh_hat_ = fft_->forward(dh);

    kernel_power_.resize(kernel_hat_.size());
    diff_power_.resize(kernel_hat_.size());
    for (std::size_t f = 0; f < kernel_hat_.size(); ++f) {
      kernel_power_[f] = std::norm(kernel_hat_[f]);
      diff_power_[f] = std::norm(dv_hat_[f]) + std::norm(dh_hat_[f]);
    }
  }

  Dims dims() const noexcept { return dims_; }
  const BlurKernel& kernel() const noexcept { return kernel_; }
  const RealFft2d& fft() const noexcept { return *fft_; }

  const Spectrum& kernel_spectrum() const noexcept { return kernel_hat_; }
  const Spectrum& dv_spectrum() const noexcept { return dv_hat_; }
  const Spectrum& dh_spectrum() const noexcept { return dh_hat_; }
  /// |F(k)|^2 per bin.
  const std::vector<double>& kernel_power() const noexcept { return kernel_power_; }
  /// |F(D_v)|^2 + |F(D_h)|^2 per bin (the Laplacian symbol).
  const std::vector<double>& diff_power() const noexcept { return diff_power_; }

  /// Denominator of the image update: |F(k)|^2 + rho (|F(D_v)|^2 + |F(D_h)|^2).
  std::vector<double> image_update_denominator(double rho) const {
    std::vector<double> d(kernel_power_.size());
    for (std::size_t f = 0; f < d.size(); ++f) d[f] = kernel_power_[f] + rho * diff_power_[f];
    return d;
  }

  void require_matches(const ImageGrid& x) const {
    if (x.dims() != dims_) {
      throw DimensionMismatch("FrequencyPlan: plan is " + to_string(dims_) + ", image is " +
                              to_string(x.dims()));
    }
  }

  Spectrum forward(const ImageGrid& x) const {
    require_matches(x);
    return fft_->forward(x);
  }
  ImageGrid inverse(const Spectrum& s) const { return fft_->inverse(s); }

  /// Multiply a spectrum by F(k) (or its conjugate) bin by bin.
  Spectrum apply_kernel(Spectrum s, bool conjugate) const {
    for (std::size_t f = 0; f < s.size(); ++f) {
      s[f] *= conjugate ? std::conj(kernel_hat_[f]) : kernel_hat_[f];
    }
    return s;
  }

 private:
  Dims dims_;
  BlurKernel kernel_;
  std::shared_ptr<const RealFft2d> fft_;
  Spectrum kernel_hat_;
  Spectrum dv_hat_;
  Spectrum dh_hat_;
  std::vector<double> kernel_power_;
  std::vector<double> diff_power_;
};

/// A x: periodic convolution with the plan's kernel.
inline ImageGrid convolve_periodic(const ImageGrid& x, const FrequencyPlan& plan) {
  return plan.inverse(plan.apply_kernel(plan.forward(x), false));
}

/// A^T x: periodic correlation (convolution with the flipped kernel).
inline ImageGrid correlate_periodic(const ImageGrid& x, const FrequencyPlan& plan) {
  return plan.inverse(plan.apply_kernel(plan.forward(x), true));
}

inline void require_plan_kernel(const BlurKernel& k, const FrequencyPlan& plan) {
  if (!(k == plan.kernel())) throw InvalidArgument("FrequencyPlan was built for a different kernel");
}

inline ImageGrid convolve_periodic(const ImageGrid& x, const BlurKernel& k, const FrequencyPlan& plan) {
  require_plan_kernel(k, plan);
  return convolve_periodic(x, plan);
}

inline ImageGrid correlate_periodic(const ImageGrid& x, const BlurKernel& k, const FrequencyPlan& plan) {
  require_plan_kernel(k, plan);
  return correlate_periodic(x, plan);
}

}  // namespace mptv
