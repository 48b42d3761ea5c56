#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>
#include <random>

#include "helpers.hpp"
#include "mptv/image_io.hpp"
#include "mptv/metrics.hpp"
#include "mptv/oracle.hpp"
#include "mptv/synth.hpp"

using namespace mptv;
using mptv::testing::random_image;
using mptv::testing::rel_diff;

namespace {

double mass(const BlurKernel& k) { return std::accumulate(k.taps().begin(), k.taps().end(), 0.0); }

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("mptv_synth_test_" + name);
}

}  // namespace

TEST(Kernels, UnitMass) {
  for (const KernelSpec& s : std::vector<KernelSpec>{GaussianKernelSpec{25, 1.6}, DiskKernelSpec{7},
                                                      MotionKernelSpec{15, 45}, MotionKernelSpec{9, 0},
                                                      MotionKernelSpec{12, 100}, Gaussian1dKernelSpec{21, 2}}) {
    EXPECT_NEAR(mass(make_kernel(s)), 1.0, 1e-12);
  }
}

TEST(Kernels, GaussianSizeOneIsDelta) { EXPECT_EQ(make_gaussian_kernel(1, 3.0), BlurKernel::delta()); }

TEST(Kernels, DiskLatticeCount) {
  const BlurKernel d1 = make_disk_kernel(1);
  int nz = 0;
  for (double t : d1.taps()) {
    if (t > 0) {
      ++nz;
      EXPECT_DOUBLE_EQ(t, 0.2);
    }
  }
  EXPECT_EQ(nz, 5);
  const BlurKernel d7 = make_disk_kernel(7);
  int count = 0;
  for (int i = -7; i <= 7; ++i) {
    for (int j = -7; j <= 7; ++j) count += i * i + j * j <= 49;
  }
  EXPECT_EQ(std::count_if(d7.taps().begin(), d7.taps().end(), [](double t) { return t > 0; }), count);
}

TEST(Kernels, GaussianParametersAndErrors) {
  const BlurKernel g = make_gaussian_kernel(25, 1.6);
  EXPECT_EQ(g.dims(), (Dims{25, 25}));
  EXPECT_NEAR(g.at_offset(0, 1) / g.at_offset(0, 0), std::exp(-1.0 / (2 * 1.6 * 1.6)), 1e-12);
  EXPECT_THROW(make_gaussian_kernel(4, 1.0), InvalidArgument);
  EXPECT_THROW(make_gaussian_kernel(5, 0.0), InvalidArgument);
  EXPECT_THROW(make_disk_kernel(0), InvalidArgument);
  EXPECT_THROW(make_motion_kernel(0.5, 0), InvalidArgument);
}

TEST(Kernels, MotionIsOddAndAlongTheLine) {
  const BlurKernel m = make_motion_kernel(15, 45);
  EXPECT_EQ(m.height() % 2, 1u);
  EXPECT_EQ(m.width() % 2, 1u);
  EXPECT_GT(m.at_offset(-5, 5), 0.0);
  EXPECT_EQ(m.at_offset(5, 5), 0.0);
  const BlurKernel h = make_motion_kernel(9, 0);
  EXPECT_EQ(h.dims(), (Dims{1, 9}));
}

TEST(Kernels, ParseSpecs) {
  EXPECT_EQ(make_kernel(parse_kernel_spec("disk(3)")), make_disk_kernel(3));
  EXPECT_EQ(make_kernel(parse_kernel_spec("gaussian(5,1.2)")), make_gaussian_kernel(5, 1.2));
  EXPECT_EQ(make_kernel(parse_kernel_spec("motion(15,45)")), make_motion_kernel(15, 45));
  EXPECT_EQ(make_kernel(parse_kernel_spec("delta")), BlurKernel::delta());
  EXPECT_TRUE(std::holds_alternative<FileKernelSpec>(parse_kernel_spec("file(a.txt)")));
  EXPECT_THROW(parse_kernel_spec("disk"), InvalidArgument);
  EXPECT_THROW(parse_kernel_spec("disk(2,3)"), InvalidArgument);
  EXPECT_THROW(parse_kernel_spec("blob(3)"), InvalidArgument);
  EXPECT_THROW(parse_kernel_spec("gaussian(5.5,1)"), InvalidArgument);
}

TEST(Degrade, DeltaNoiselessAndSeeded) {
  const Phantom ph = make_sparse_image({32, 32}, 4, 1);
  EXPECT_EQ(degrade(ph.image, BlurKernel::delta(), 0.0, 5), ph.image);
  const BlurKernel k = make_gaussian_kernel(9, 1.6);
  EXPECT_EQ(degrade(ph.image, k, 0.003, 5), degrade(ph.image, k, 0.003, 5));
  EXPECT_NE(degrade(ph.image, k, 0.003, 5), degrade(ph.image, k, 0.003, 6));
  const ImageGrid n = degrade(ImageGrid({128, 128}), BlurKernel::delta(), 0.003, 9);
  double ss = 0.0;
  for (double v : n.data()) ss += v * v;
  EXPECT_NEAR(std::sqrt(ss / n.size()), 0.003, 1e-4);
  EXPECT_THROW(degrade(ph.image, k, -1.0, 1), InvalidArgument);
}

TEST(Phantoms, SparseImage) {
  const Phantom a = make_sparse_image({64, 64}, 6, 3);
  EXPECT_EQ(a.image, make_sparse_image({64, 64}, 6, 3).image);
  EXPECT_EQ(a.gradient_support, gradient_support_of(a.image));
  for (double v : a.image.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_LT(a.support_count(), a.image.size() / 2);
}

TEST(Phantoms, SingleRectangleBoundary) {
  const Phantom p = make_sparse_image({32, 32}, 1, 11);
  std::size_t r0 = 32, r1 = 0, c0 = 32, c1 = 0;
  const double bg = p.image(0, 0);
  for (std::size_t i = 0; i < 32; ++i) {
    for (std::size_t j = 0; j < 32; ++j) {
      if (p.image(i, j) != bg) {
        r0 = std::min(r0, i), r1 = std::max(r1, i), c0 = std::min(c0, j), c1 = std::max(c1, j);
      }
    }
  }
  ASSERT_LT(r0, r1);
  // Rows r0-1 and r1 carry vertical jumps, columns c0-1 and c1 horizontal ones;
  // only (r1, c1) has both.
  std::vector<std::uint8_t> expect(p.image.size(), 0);
  for (std::size_t j = c0; j <= c1; ++j) expect[(r0 - 1) * 32 + j] = expect[r1 * 32 + j] = 1;
  for (std::size_t i = r0; i <= r1; ++i) expect[i * 32 + c0 - 1] = expect[i * 32 + c1] = 1;
  EXPECT_EQ(p.gradient_support, expect);
  EXPECT_EQ(p.support_count(), 2 * (r1 - r0 + 1) + 2 * (c1 - c0 + 1) - 1);
}

TEST(Phantoms, OneDimensionalSignal) {
  const Phantom flat = make_1d_signal(64, 0, 1);
  EXPECT_EQ(tv_value(flat.image), 0.0);
  for (int j : {2, 4, 6}) {
    const Phantom p = make_1d_signal(256, j, 7);
    EXPECT_EQ(p.image.dims(), (Dims{256, 1}));
    EXPECT_EQ(p.support_count(), static_cast<std::size_t>(j));
    EXPECT_EQ(p.image, make_1d_signal(256, j, 7).image);
  }
  EXPECT_THROW(make_1d_signal(64, 1, 1), InvalidArgument);
  EXPECT_THROW(make_1d_signal(4, 6, 1), InvalidArgument);
}

TEST(Psnr, Values) {
  const ImageGrid ref({10, 10}, 0.5);
  EXPECT_EQ(psnr(ref, ref), kPsnrCapDb);
  EXPECT_TRUE(std::isinf(psnr_uncapped(ref, ref)));
  EXPECT_NEAR(psnr(ImageGrid({10, 10}, 0.6), ref), 20.0, 1e-9);
  EXPECT_NEAR(psnr(ImageGrid({10, 10}, 0.51), ref), 40.0, 1e-9);
  EXPECT_THROW(psnr(ImageGrid({10, 9}), ref), DimensionMismatch);
  const Phantom ph = make_sparse_image({64, 64}, 5, 2);
  double last = 1e9;
  for (double s : {0.001, 0.01, 0.05, 0.1}) {
    const double v = psnr(degrade(ph.image, BlurKernel::delta(), s, 3), ph.image);
    EXPECT_LT(v, last);
    last = v;
  }
}

TEST(Ssim, Values) {
  std::mt19937_64 rng(4);
  const ImageGrid a = random_image({32, 32}, rng), b = random_image({32, 32}, rng);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
  EXPECT_LT(ssim(ImageGrid({32, 32}, 1.0) - a, a), 1.0);
  EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
  const double s = ssim(a, b);
  EXPECT_GE(s, -1.0);
  EXPECT_LE(s, 1.0);
  EXPECT_THROW(ssim(ImageGrid({8, 8}), ImageGrid({8, 8})), InvalidArgument);
}

TEST(ImageIo, RoundTrips) {
  const Phantom ph = make_sparse_image({20, 17}, 3, 5);
  for (const char* ext : {"png", "pgm"}) {
    const auto p = temp_path(std::string("rt.") + ext);
    write_image(p.string(), ph.image);
    const ImageGrid back = read_grayscale(p.string());
    EXPECT_LE(norm2(back - ph.image) / std::sqrt(static_cast<double>(back.size())), 1.0 / 65535.0) << ext;
    std::filesystem::remove(p);
  }
  const auto t = temp_path("k.txt");
  write_matrix_text(t.string(), ImageGrid({1, 3}, {1, 2, 1}));
  const BlurKernel k = load_kernel_file(t.string());
  EXPECT_DOUBLE_EQ(k.at_offset(0, 0), 0.5);
  std::filesystem::remove(t);
  EXPECT_THROW(read_image(temp_path("missing.png").string()), IoError);
  EXPECT_THROW(load_kernel_file(temp_path("missing.txt").string()), IoError);
}

TEST(Oracle, LimitsAndKkt) {
  std::mt19937_64 rng(5);
  const ImageGrid y = random_image({8, 8}, rng);
  OracleOptions quick;
  quick.min_iters = 10000;
  const OracleResult id = oracle_tv_solve(y, BlurKernel::delta(), 0.0, 1e-14, quick);
  EXPECT_LE(rel_diff(id.x, y), 1e-8);
  const OracleResult flat = oracle_tv_solve(y, BlurKernel::delta(), 1e3, 1e-14, quick);
  for (double v : flat.x.data()) EXPECT_NEAR(v, y.mean(), 1e-8);
  const OracleResult o = oracle_tv_solve(y, make_gaussian_kernel(3, 1.0), 1e-2, 1e-13, quick);
  EXPECT_GE(o.iterations, 10000);
  EXPECT_LE(o.subgradient_residual, 1e-5 * norm2(y));
  EXPECT_THROW(oracle_tv_solve(ImageGrid({33, 32}), BlurKernel::delta(), 1e-3, 1e-10), InvalidArgument);
}
