#include <gtest/gtest.h>

#include <random>

#include "helpers.hpp"
#include "mptv/frequency_plan.hpp"
#include "mptv/grid.hpp"
#include "mptv/synth.hpp"

using namespace mptv;
using mptv::testing::random_field;
using mptv::testing::random_image;
using mptv::testing::rel_diff;
using mptv::testing::spatial_convolve;

TEST(ImageGrid, RejectsWrongLength) {
  EXPECT_THROW(ImageGrid({2, 3}, std::vector<double>(5)), DimensionMismatch);
}

TEST(BlurKernel, NormalizesAndValidates) {
  const BlurKernel k = BlurKernel::from_taps({1, 3}, {1, 2, 1});
  EXPECT_DOUBLE_EQ(k.at_offset(0, 0), 0.5);
  EXPECT_THROW(BlurKernel::from_taps({2, 1}, {1, 1}), InvalidArgument);
  EXPECT_THROW(BlurKernel::from_taps({1, 1}, {-1}), InvalidArgument);
  EXPECT_THROW(BlurKernel::from_taps({1, 3}, {0, 0, 0}), InvalidArgument);
}

TEST(Gradient, ConstantImageHasZeroGradient) {
  const GradientField g = apply_gradient(ImageGrid({5, 7}, 0.3));
  EXPECT_EQ(norm2(g), 0.0);
}

TEST(Gradient, RowWithWrap) {
  const GradientField g = apply_gradient(ImageGrid({1, 4}, {0, 0, 1, 1}));
  EXPECT_EQ(g.h.values(), (std::vector<double>{0, 1, 0, -1}));
  EXPECT_EQ(g.v.values(), (std::vector<double>{0, 0, 0, 0}));
}

TEST(Gradient, ImpulseStencil) {
  ImageGrid x({4, 4});
  x(0, 0) = 1.0;
  const GradientField g = apply_gradient(x);
  EXPECT_EQ(g.v(0, 0), -1.0);
  EXPECT_EQ(g.v(3, 0), 1.0);
  EXPECT_EQ(g.h(0, 0), -1.0);
  EXPECT_EQ(g.h(0, 3), 1.0);
  EXPECT_DOUBLE_EQ(norm2(g), 2.0);
}

TEST(Divergence, ZeroFieldAndAdjoint) {
  EXPECT_EQ(norm2(apply_divergence(GradientField({6, 6}))), 0.0);
  std::mt19937_64 rng(1);
  const ImageGrid x = random_image({8, 8}, rng);
  const GradientField g = random_field({8, 8}, rng);
  const double lhs = dot(apply_gradient(x), g);
  const double rhs = dot(x, apply_divergence(g));
  EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::abs(lhs));
}

TEST(Divergence, ComposesToLaplacian) {
  ImageGrid x({5, 5});
  x(2, 2) = 1.0;
  const ImageGrid l = apply_divergence(apply_gradient(x));
  ImageGrid expect({5, 5});
  expect(2, 2) = 4.0;
  expect(1, 2) = expect(3, 2) = expect(2, 1) = expect(2, 3) = -1.0;
  EXPECT_EQ(l, expect);
}

TEST(Convolve, DeltaAndConstant) {
  std::mt19937_64 rng(2);
  const ImageGrid x = random_image({9, 6}, rng);
  const FrequencyPlan delta(x.dims(), BlurKernel::delta());
  EXPECT_LE(rel_diff(convolve_periodic(x, delta), x), 1e-15);
  const FrequencyPlan gauss(x.dims(), make_gaussian_kernel(5, 1.2));
  const ImageGrid c = convolve_periodic(ImageGrid(x.dims(), 0.4), gauss);
  for (double v : c.data()) EXPECT_NEAR(v, 0.4, 1e-14);
}

TEST(Convolve, BoxOnImpulseWraps) {
  ImageGrid x({4, 4});
  x(0, 0) = 1.0;
  const BlurKernel box = BlurKernel::from_taps({3, 3}, std::vector<double>(9, 1.0));
  const ImageGrid y = convolve_periodic(x, FrequencyPlan(x.dims(), box));
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      const bool near = (i == 0 || i == 1 || i == 3) && (j == 0 || j == 1 || j == 3);
      EXPECT_NEAR(y(i, j), near ? 1.0 / 9.0 : 0.0, 1e-15);
    }
  }
}

TEST(Convolve, MatchesSpatialOnAsymmetricKernel) {
  std::mt19937_64 rng(3);
  const ImageGrid x = random_image({12, 10}, rng);
  const BlurKernel k = BlurKernel::from_taps({3, 5}, {1, 2, 3, 4, 5, 0, 1, 0, 2, 0, 7, 1, 1, 1, 9});
  EXPECT_LE(rel_diff(convolve_periodic(x, FrequencyPlan(x.dims(), k)), spatial_convolve(x, k)), 1e-13);
}

TEST(Correlate, AdjointAndSymmetry) {
  std::mt19937_64 rng(4);
  const ImageGrid x = random_image({8, 8}, rng), u = random_image({8, 8}, rng);
  const BlurKernel k = BlurKernel::from_taps({3, 3}, {1, 0, 2, 0, 5, 1, 3, 0, 0});
  const FrequencyPlan plan(x.dims(), k);
  const double lhs = dot(convolve_periodic(x, plan), u);
  const double rhs = dot(x, correlate_periodic(u, plan));
  EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::abs(lhs));
  const FrequencyPlan sym(x.dims(), make_gaussian_kernel(5, 1.0));
  EXPECT_LE(rel_diff(correlate_periodic(x, sym), convolve_periodic(x, sym)), 1e-14);
  const FrequencyPlan delta(x.dims(), BlurKernel::delta());
  EXPECT_LE(rel_diff(correlate_periodic(x, delta), x), 1e-15);
}

TEST(Plan, RejectsMismatchAndOversizedKernel) {
  const FrequencyPlan plan({8, 8}, make_gaussian_kernel(3, 1.0));
  EXPECT_THROW(convolve_periodic(ImageGrid({8, 9}), plan), DimensionMismatch);
  EXPECT_THROW(FrequencyPlan({4, 4}, make_gaussian_kernel(7, 1.0)), Error);
}

TEST(GroupMagnitudes, Values) {
  GradientField g({3, 3});
  EXPECT_EQ(group_magnitudes(g).sum(), 0.0);
  g.v[4] = 3.0;
  g.h[4] = 4.0;
  EXPECT_EQ(group_magnitudes(g)[4], 5.0);
  std::mt19937_64 rng(5);
  const ImageGrid x = random_image({7, 7}, rng);
  EXPECT_NEAR(group_magnitudes(apply_gradient(x)).sum(), tv_value(x), 1e-12);
}

TEST(TvValue, HandValuesAndHomogeneity) {
  EXPECT_EQ(tv_value(ImageGrid({4, 4}, 2.0)), 0.0);
  EXPECT_DOUBLE_EQ(tv_value(ImageGrid({1, 4}, {0, 0, 1, 1})), 2.0);
  std::mt19937_64 rng(6);
  const ImageGrid x = random_image({9, 9}, rng);
  EXPECT_NEAR(tv_value(x * 2.0), 2.0 * tv_value(x), 1e-12);
  EXPECT_NEAR(tv_value(x * -2.0), 2.0 * tv_value(x), 1e-12);
}
