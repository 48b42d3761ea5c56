#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "mptv/grid.hpp"

namespace mptv {

/// Reported PSNR for identical images.
inline constexpr double kPsnrCapDb = 99.0;

/// 10 log10(1 / MSE) for peak 1.0; +inf when the images are identical.
inline double psnr_uncapped(const ImageGrid& x, const ImageGrid& ref) {
  x.require_same(ref);
  double se = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - ref[k];
    se += d * d;
  }
  const double mse = se / static_cast<double>(x.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

/// PSNR capped at kPsnrCapDb.
inline double psnr(const ImageGrid& x, const ImageGrid& ref) {
  return std::min(psnr_uncapped(x, ref), kPsnrCapDb);
}

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Mean SSIM over all fully-contained Gaussian windows.
inline double ssim(const ImageGrid& x, const ImageGrid& ref, const SsimParams& p = {}) {
  x.require_same(ref);
  const auto win = static_cast<std::size_t>(p.window);
  if (x.height() < win || x.width() < win) {
    throw InvalidArgument("ssim: image " + to_string(x.dims()) + " is smaller than the " +
                          std::to_string(p.window) + "x" + std::to_string(p.window) + " window");
  }
  std::vector<double> w(win);
  const double c = 0.5 * (p.window - 1);
  double total = 0.0;
  for (std::size_t k = 0; k < win; ++k) {
    w[k] = std::exp(-0.5 * (k - c) * (k - c) / (p.sigma * p.sigma));
    total += w[k];
  }
  for (double& v : w) v /= total;

  const std::size_t oh = x.height() - win + 1;
  const std::size_t ow = x.width() - win + 1;
  // Separable filtering of x, y, x^2, y^2, xy over valid windows.
  auto filter_valid = [&](auto&& value) {
    ImageGrid rows({x.height(), ow});
    for (std::size_t i = 0; i < x.height(); ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < win; ++k) acc += w[k] * value(i, j + k);
        rows(i, j) = acc;
      }
    }
    ImageGrid out({oh, ow});
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < win; ++k) acc += w[k] * rows(i + k, j);
        out(i, j) = acc;
      }
    }
    return out;
  };
  const ImageGrid mx = filter_valid([&](std::size_t i, std::size_t j) { return x(i, j); });
  const ImageGrid my = filter_valid([&](std::size_t i, std::size_t j) { return ref(i, j); });
  const ImageGrid mxx = filter_valid([&](std::size_t i, std::size_t j) { return x(i, j) * x(i, j); });
  const ImageGrid myy = filter_valid([&](std::size_t i, std::size_t j) { return ref(i, j) * ref(i, j); });
  const ImageGrid mxy = filter_valid([&](std::size_t i, std::size_t j) { return x(i, j) * ref(i, j); });

  const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
  double acc = 0.0;
  for (std::size_t k = 0; k < mx.size(); ++k) {
    const double vx = mxx[k] - mx[k] * mx[k];
    const double vy = myy[k] - my[k] * my[k];
    const double cov = mxy[k] - mx[k] * my[k];
    acc += ((2 * mx[k] * my[k] + c1) * (2 * cov + c2)) /
           ((mx[k] * mx[k] + my[k] * my[k] + c1) * (vx + vy + c2));
  }
  return acc / static_cast<double>(mx.size());
}

}  // namespace mptv
