#pragma once

#include <random>

#include "mptv/grid.hpp"

namespace mptv::testing {

inline ImageGrid random_image(Dims d, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  ImageGrid x(d);
  for (double& v : x.data()) v = u(rng);
  return x;
}

inline GradientField random_field(Dims d, std::mt19937_64& rng) {
  return GradientField(random_image(d, rng, -1.0, 1.0), random_image(d, rng, -1.0, 1.0));
}

inline BlurKernel random_kernel(std::mt19937_64& rng, int max_side) {
  std::uniform_int_distribution<int> side(0, (max_side - 1) / 2);
  const auto h = static_cast<std::size_t>(2 * side(rng) + 1);
  const auto w = static_cast<std::size_t>(2 * side(rng) + 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> taps(h * w);
  for (double& t : taps) t = u(rng);
  return BlurKernel::from_taps({h, w}, std::move(taps));
}

/// Direct spatial periodic convolution: (k * x)(i,j) = sum k(a,b) x(i-a, j-b).
inline ImageGrid spatial_convolve(const ImageGrid& x, const BlurKernel& k) {
  const long H = static_cast<long>(x.height()), W = static_cast<long>(x.width());
  ImageGrid out(x.dims());
  for (long i = 0; i < H; ++i) {
    for (long j = 0; j < W; ++j) {
      double acc = 0.0;
      for (int a = -k.radius_v(); a <= k.radius_v(); ++a) {
        for (int b = -k.radius_h(); b <= k.radius_h(); ++b) {
          const long ii = ((i - a) % H + H) % H, jj = ((j - b) % W + W) % W;
          acc += k.at_offset(a, b) * x(static_cast<std::size_t>(ii), static_cast<std::size_t>(jj));
        }
      }
      out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = acc;
    }
  }
  return out;
}

inline double rel_diff(const ImageGrid& a, const ImageGrid& b) {
  return norm2(a - b) / std::max(norm2(b), 1e-300);
}

}  // namespace mptv::testing
