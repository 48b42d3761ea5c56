#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mptv/frequency_plan.hpp"
#include "mptv/grid.hpp"
#include "mptv/image_io.hpp"

namespace mptv {

struct GaussianKernelSpec {
  int size = 25;
  double sigma = 1.6;
};
struct DiskKernelSpec {
  int radius = 7;
};
struct MotionKernelSpec {
  double length = 15.0;
  double angle_degrees = 45.0;
};
struct Gaussian1dKernelSpec {
  int size = 21;
  double sigma = 2.0;
};
struct FileKernelSpec {
  std::string path;
};

using KernelSpec =
    std::variant<GaussianKernelSpec, DiskKernelSpec, MotionKernelSpec, Gaussian1dKernelSpec, FileKernelSpec>;

/// Sampled isotropic Gaussian, truncated to size x size.
inline BlurKernel make_gaussian_kernel(int size, double sigma) {
  if (size < 1 || size % 2 == 0) throw InvalidArgument("gaussian kernel: size must be odd and positive");
  if (!(sigma > 0.0)) throw InvalidArgument("gaussian kernel: sigma must be > 0");
  const int c = size / 2;
  std::vector<double> taps(static_cast<std::size_t>(size * size));
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const double d2 = (i - c) * (i - c) + (j - c) * (j - c);
      taps[static_cast<std::size_t>(i * size + j)] = std::exp(-d2 / (2.0 * sigma * sigma));
    }
  }
  const auto s = static_cast<std::size_t>(size);
  return BlurKernel::from_taps({s, s}, std::move(taps));
}

/// size x 1 sampled Gaussian, for N x 1 signals.
inline BlurKernel make_gaussian_kernel_1d(int size, double sigma) {
  if (size < 1 || size % 2 == 0) throw InvalidArgument("gaussian1d kernel: size must be odd and positive");
  if (!(sigma > 0.0)) throw InvalidArgument("gaussian1d kernel: sigma must be > 0");
  const int c = size / 2;
  std::vector<double> taps(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) taps[static_cast<std::size_t>(i)] = std::exp(-0.5 * (i - c) * (i - c) / (sigma * sigma));
  return BlurKernel::from_taps({static_cast<std::size_t>(size), 1}, std::move(taps));
}

/// Uniform weight on the lattice points with i^2 + j^2 <= radius^2.
inline BlurKernel make_disk_kernel(int radius) {
  if (radius < 1) throw InvalidArgument("disk kernel: radius must be >= 1");
  const int size = 2 * radius + 1;
  std::vector<double> taps(static_cast<std::size_t>(size * size), 0.0);
  for (int i = -radius; i <= radius; ++i) {
    for (int j = -radius; j <= radius; ++j) {
      if (i * i + j * j <= radius * radius) taps[static_cast<std::size_t>((i + radius) * size + j + radius)] = 1.0;
    }
  }
  const auto s = static_cast<std::size_t>(size);
  return BlurKernel::from_taps({s, s}, std::move(taps));
}

/// Linear motion: a centred segment of length-1 pixels between its end
/// points, sampled densely and splatted with bilinear weights. The angle is
/// measured counter-clockwise from the horizontal axis (rows grow downward).
inline BlurKernel make_motion_kernel(double length, double angle_degrees) {
  if (!(length >= 1.0)) throw InvalidArgument("motion kernel: length must be >= 1");
  const double half = 0.5 * (length - 1.0);
  const double theta = angle_degrees * std::numbers::pi / 180.0;
  const double dx = std::cos(theta);   // column direction
  const double dy = -std::sin(theta);  // row direction
  const double eps = 1e-9;
  const int reach_c = static_cast<int>(std::ceil(std::abs(half * dx) - eps));
  const int reach_r = static_cast<int>(std::ceil(std::abs(half * dy) - eps));
  const int rows = 2 * reach_r + 1;
  const int cols = 2 * reach_c + 1;
  std::vector<double> taps(static_cast<std::size_t>(rows * cols), 0.0);
  const int samples = std::max(1, static_cast<int>(std::ceil(length * 64.0)));
  for (int s = 0; s <= samples; ++s) {
    const double u = samples == 0 ? 0.0 : -half + (2.0 * half) * s / samples;
    const double pr = u * dy + reach_r;
    const double pc = u * dx + reach_c;
    const double r0 = std::floor(pr + eps);
    const double c0 = std::floor(pc + eps);
    const double fr = std::max(0.0, pr - r0);
    const double fc = std::max(0.0, pc - c0);
    const double w = (s == 0 || s == samples) ? 0.5 : 1.0;  // trapezoid rule
    auto splat = [&](double r, double c, double weight) {
      const int ri = static_cast<int>(r), ci = static_cast<int>(c);
      if (weight <= 0.0 || ri < 0 || ci < 0 || ri >= rows || ci >= cols) return;
      taps[static_cast<std::size_t>(ri * cols + ci)] += weight;
    };
    splat(r0, c0, w * (1 - fr) * (1 - fc));
    splat(r0 + 1, c0, w * fr * (1 - fc));
    splat(r0, c0 + 1, w * (1 - fr) * fc);
    splat(r0 + 1, c0 + 1, w * fr * fc);
  }
  return BlurKernel::from_taps({static_cast<std::size_t>(rows), static_cast<std::size_t>(cols)},
                               std::move(taps));
}

inline BlurKernel make_kernel(const KernelSpec& spec) {
  struct Visitor {
    BlurKernel operator()(const GaussianKernelSpec& g) const { return make_gaussian_kernel(g.size, g.sigma); }
    BlurKernel operator()(const DiskKernelSpec& d) const { return make_disk_kernel(d.radius); }
    BlurKernel operator()(const MotionKernelSpec& m) const {
      return make_motion_kernel(m.length, m.angle_degrees);
    }
    BlurKernel operator()(const Gaussian1dKernelSpec& g) const { return make_gaussian_kernel_1d(g.size, g.sigma); }
    BlurKernel operator()(const FileKernelSpec& f) const { return load_kernel_file(f.path); }
  };
  return std::visit(Visitor{}, spec);
}

/// Parses "gaussian(25,1.6)", "disk(7)", "motion(15,45)", "gaussian1d(21,2)",
/// "file(path)" or "delta".
inline KernelSpec parse_kernel_spec(const std::string& text) {
  auto bad = [&](const std::string& why) { return InvalidArgument("kernel spec '" + text + "': " + why); };
  if (text == "delta") return GaussianKernelSpec{1, 1.0};
  const auto open = text.find('(');
  if (open == std::string::npos || text.back() != ')') throw bad("expected name(args)");
  const std::string name = text.substr(0, open);
  const std::string body = text.substr(open + 1, text.size() - open - 2);
  if (name == "file") {
    if (body.empty()) throw bad("missing path");
    return FileKernelSpec{body};
  }
  std::vector<double> args;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    const auto comma = body.find(',', pos);
    const std::string tok = body.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    try {
      std::size_t used = 0;
      args.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw bad("bad number '" + tok + "'");
    } catch (const std::logic_error&) {
      throw bad("bad number '" + tok + "'");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  auto integer = [&](double v) {
    if (v != std::floor(v)) throw bad("size must be an integer");
    return static_cast<int>(v);
  };
  if (name == "gaussian" && args.size() == 2) return GaussianKernelSpec{integer(args[0]), args[1]};
  if (name == "gaussian1d" && args.size() == 2) return Gaussian1dKernelSpec{integer(args[0]), args[1]};
  if (name == "disk" && args.size() == 1) return DiskKernelSpec{integer(args[0])};
  if (name == "motion" && args.size() == 2) return MotionKernelSpec{args[0], args[1]};
  throw bad("unknown kernel or wrong argument count");
}

/// Observation y = A x* + n with n ~ N(0, sigma^2) iid, seeded. No clipping.
inline ImageGrid degrade(const ImageGrid& x_star, const FrequencyPlan& plan, double noise_sigma,
                         std::uint64_t seed) {
  if (!(noise_sigma >= 0.0)) throw InvalidArgument("degrade: noise sigma must be >= 0");
  plan.require_matches(x_star);
  ImageGrid y = plan.kernel().dims() == Dims{1, 1} ? x_star : convolve_periodic(x_star, plan);
  if (noise_sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (double& v : y.data()) v += noise(rng);
  }
  return y;
}

inline ImageGrid degrade(const ImageGrid& x_star, const BlurKernel& k, double noise_sigma,
                         std::uint64_t seed) {
  return degrade(x_star, FrequencyPlan(x_star.dims(), k), noise_sigma, seed);
}

struct Phantom {
  ImageGrid image;
  /// 1 where the periodic gradient group is nonzero.
  std::vector<std::uint8_t> gradient_support;

  std::size_t support_count() const {
    return static_cast<std::size_t>(std::count(gradient_support.begin(), gradient_support.end(), 1));
  }
};

inline std::vector<std::uint8_t> gradient_support_of(const ImageGrid& x) {
  const GradientField g = apply_gradient(x);
  std::vector<std::uint8_t> s(x.size(), 0);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = (g.v[i] != 0.0 || g.h[i] != 0.0) ? 1 : 0;
  return s;
}

namespace detail {
// Levels are uniform in [0, 1], redrawn until they differ from `avoid` by at
// least min_contrast.
inline double draw_level(std::mt19937_64& rng, double avoid, double min_contrast) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    const double v = u(rng);
    if (std::abs(v - avoid) >= min_contrast) return v;
  }
}
}  // namespace detail

/// Piecewise-constant image: a random background painted over by n_shapes
/// axis-aligned rectangles with random levels.
inline Phantom make_sparse_image(Dims dims, int n_shapes, std::uint64_t seed, double min_contrast = 0.1) {
  if (n_shapes < 0) throw InvalidArgument("make_sparse_image: n_shapes must be >= 0");
  if (dims.height < 4 || dims.width < 4) throw InvalidArgument("make_sparse_image: image too small");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double background = u(rng);
  ImageGrid x(dims, background);
  auto span_of = [&](std::size_t n) {
    const auto lo = std::max<std::size_t>(2, n / 8);
    const auto hi = std::max(lo, n / 2);
    std::uniform_int_distribution<std::size_t> len(lo, hi);
    const std::size_t l = len(rng);
    std::uniform_int_distribution<std::size_t> start(1, n - l - 1);
    const std::size_t s0 = start(rng);
    return std::pair{s0, s0 + l};
  };
  for (int s = 0; s < n_shapes; ++s) {
    const auto [r0, r1] = span_of(dims.height);
    const auto [c0, c1] = span_of(dims.width);
    const double level = detail::draw_level(rng, x(r0, c0), min_contrast);
    for (std::size_t i = r0; i < r1; ++i) {
      for (std::size_t j = c0; j < c1; ++j) x(i, j) = level;
    }
  }
  Phantom p{x, gradient_support_of(x)};
  return p;
}

/// Piecewise-constant length x 1 signal with n_jumps interior change points,
/// segments at least min_segment samples long and first/last segments at one
/// shared level, so the periodic gradient has exactly n_jumps nonzeros.
inline Phantom make_1d_signal(std::size_t length, int n_jumps, std::uint64_t seed, double min_contrast = 0.2) {
  if (n_jumps < 0) throw InvalidArgument("make_1d_signal: n_jumps must be >= 0");
  if (n_jumps == 1) throw InvalidArgument("make_1d_signal: a periodic signal cannot have exactly one jump");
  const std::size_t segments = static_cast<std::size_t>(n_jumps) + 1;
  const std::size_t min_segment = std::max<std::size_t>(2, length / (3 * segments));
  if (length < segments * min_segment) throw InvalidArgument("make_1d_signal: signal too short");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  // Cut points by stars-and-bars over the slack beyond the minimum lengths.
  const std::size_t slack = length - segments * min_segment;
  std::uniform_int_distribution<std::size_t> pick(0, slack);
  std::vector<std::size_t> extra(static_cast<std::size_t>(n_jumps));
  for (auto& e : extra) e = pick(rng);
  std::sort(extra.begin(), extra.end());
  std::vector<std::size_t> cuts;  // first index of each segment after the first
  for (std::size_t k = 0; k < extra.size(); ++k) cuts.push_back(extra[k] + (k + 1) * min_segment);

  const double base = u(rng);
  std::vector<double> levels(segments, base);
  for (std::size_t k = 1; k + 1 < segments; ++k) {
    double v;
    do {
      v = detail::draw_level(rng, levels[k - 1], min_contrast);
    } while (k + 2 == segments && std::abs(v - base) < min_contrast);
    levels[k] = v;
  }
  ImageGrid x({length, 1}, base);
  std::size_t seg = 0;
  for (std::size_t i = 0; i < length; ++i) {
    while (seg < cuts.size() && i >= cuts[seg]) ++seg;
    x[i] = levels[seg];
  }
  return Phantom{x, gradient_support_of(x)};
}

}  // namespace mptv
