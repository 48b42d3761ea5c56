#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <vector>

#include "mptv/grid.hpp"

namespace mptv {

using Complex = std::complex<double>;

/// Half-plane spectrum of a real H x W raster: H rows of W/2+1 bins.
struct Spectrum {
  Dims image;
  std::vector<Complex> bins;

  std::size_t cols() const noexcept { return image.width / 2 + 1; }
  std::size_t size() const noexcept { return bins.size(); }
  Complex& operator[](std::size_t k) { return bins[k]; }
  Complex operator[](std::size_t k) const { return bins[k]; }
};

namespace detail {
// The FFTW planner is not reentrant; execution on distinct buffers is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// Owns a forward/inverse pair of real 2-D FFTW plans for one raster size.
/// Plans are created with FFTW_UNALIGNED and executed on caller buffers, so one
/// instance may be shared by concurrent readers.
class RealFft2d {
 public:
  explicit RealFft2d(Dims dims) : dims_(dims) {
    if (dims.size() == 0) throw InvalidArgument("RealFft2d: empty raster");
    const int H = static_cast<int>(dims.height);
    const int W = static_cast<int>(dims.width);
    std::vector<double> real(dims.size());
    std::vector<Complex> cplx(dims.height * (dims.width / 2 + 1));
    std::lock_guard lock(detail::fftw_planner_mutex());
    forward_ = fftw_plan_dft_r2c_2d(H, W, real.data(), reinterpret_cast<fftw_complex*>(cplx.data()),
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
    inverse_ = fftw_plan_dft_c2r_2d(H, W, reinterpret_cast<fftw_complex*>(cplx.data()), real.data(),
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (forward_ == nullptr || inverse_ == nullptr) {
      release();
      throw Error("RealFft2d: FFTW planning failed for " + to_string(dims));
    }
  }

  RealFft2d(const RealFft2d&) = delete;
  RealFft2d& operator=(const RealFft2d&) = delete;
  RealFft2d(RealFft2d&& o) noexcept : dims_(o.dims_), forward_(o.forward_), inverse_(o.inverse_) {
    o.forward_ = nullptr;
    o.inverse_ = nullptr;
  }
  RealFft2d& operator=(RealFft2d&& o) noexcept {
    if (this != &o) {
      release();
      dims_ = o.dims_;
      forward_ = o.forward_;
      inverse_ = o.inverse_;
      o.forward_ = nullptr;
      o.inverse_ = nullptr;
    }
    return *this;
  }
  ~RealFft2d() { release(); }

  Dims dims() const noexcept { return dims_; }

  Spectrum forward(const ImageGrid& x) const {
    if (x.dims() != dims_) {
      throw DimensionMismatch("RealFft2d: raster " + to_string(x.dims()) + " vs plan " +
                              to_string(dims_));
    }
    Spectrum s{dims_, std::vector<Complex>(dims_.height * (dims_.width / 2 + 1))};
    // r2c leaves its input intact, but FFTW's signature is non-const.
    std::vector<double> in(x.data().begin(), x.data().end());
    fftw_execute_dft_r2c(forward_, in.data(), reinterpret_cast<fftw_complex*>(s.bins.data()));
    return s;
  }

  /// Normalized inverse (forward followed by inverse is the identity).
  ImageGrid inverse(const Spectrum& s) const {
    if (s.image != dims_) throw DimensionMismatch("RealFft2d: spectrum size mismatch");
    std::vector<Complex> scratch(s.bins);  // c2r clobbers its input
    std::vector<double> out(dims_.size());
    fftw_execute_dft_c2r(inverse_, reinterpret_cast<fftw_complex*>(scratch.data()), out.data());
    const double scale = 1.0 / static_cast<double>(dims_.size());
    for (double& v : out) v *= scale;
    return ImageGrid(dims_, std::move(out));
  }

 private:
  void release() noexcept {
    std::lock_guard lock(detail::fftw_planner_mutex());
    if (forward_ != nullptr) fftw_destroy_plan(forward_);
    if (inverse_ != nullptr) fftw_destroy_plan(inverse_);
    forward_ = nullptr;
    inverse_ = nullptr;
  }

  Dims dims_;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

}  // namespace mptv
