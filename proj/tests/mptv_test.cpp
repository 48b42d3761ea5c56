#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "helpers.hpp"
#include "mptv/bench.hpp"
#include "mptv/mptv.hpp"
#include "mptv/oracle.hpp"
#include "mptv/support.hpp"
#include "mptv/synth.hpp"

using namespace mptv;
using mptv::testing::random_image;
using mptv::testing::rel_diff;

namespace {

// (D D^T + r I) beta and D A^T alpha, from the spatial operators.
GradientField ridge_lhs(const GradientField& beta, double r) {
  return apply_gradient(apply_divergence(beta)) + beta * r;
}

GradientField ridge_rhs(const ImageGrid& alpha, const FrequencyPlan& plan) {
  return apply_gradient(correlate_periodic(alpha, plan));
}

double rel(const GradientField& a, const GradientField& b) { return norm2(a - b) / norm2(b); }

}  // namespace

TEST(RecoverBeta, ZeroAlphaAndBadRidge) {
  const FrequencyPlan plan({8, 8}, make_gaussian_kernel(3, 1.0));
  EXPECT_EQ(norm2(recover_beta(ImageGrid({8, 8}), plan, 1e-3)), 0.0);
  EXPECT_THROW(recover_beta(ImageGrid({8, 8}), plan, 0.0), InvalidArgument);
}

TEST(RecoverBeta, RidgeEquationResidual) {
  std::mt19937_64 rng(1);
  for (Dims d : {Dims{16, 16}, Dims{9, 14}, Dims{32, 1}}) {
    const ImageGrid alpha = random_image(d, rng, -1.0, 1.0);
    const FrequencyPlan plan(d, d.width == 1 ? make_gaussian_kernel_1d(5, 1.0) : make_gaussian_kernel(5, 1.0));
    for (double r : {1e-3, 1.0}) {
      const GradientField beta = recover_beta(alpha, plan, r);
      EXPECT_LE(rel(ridge_lhs(beta, r), ridge_rhs(alpha, plan)), 1e-8) << to_string(d) << " r=" << r;
    }
  }
}

TEST(RecoverBeta, MatchesDenseSolve) {
  std::mt19937_64 rng(2);
  const Dims d{8, 8};
  const BlurKernel k = BlurKernel::from_taps({3, 3}, {1, 2, 0, 0, 4, 1, 3, 0, 1});
  const FrequencyPlan plan(d, k);
  const ImageGrid alpha = random_image(d, rng, -1.0, 1.0);
  const double r = 1e-3;
  const DenseOperators ops = DenseOperators::build(d, k);
  const Eigen::MatrixXd D(ops.diff);
  const Eigen::Map<const Eigen::VectorXd> a(alpha.data().data(), 64);
  const Eigen::MatrixXd M = D * D.transpose() + r * Eigen::MatrixXd::Identity(128, 128);
  const Eigen::VectorXd b = M.fullPivLu().solve(D * ops.blur.transpose() * a);
  const GradientField beta = recover_beta(alpha, plan, r);
  Eigen::VectorXd got(128);
  for (int i = 0; i < 64; ++i) {
    got(i) = beta.v[static_cast<std::size_t>(i)];
    got(64 + i) = beta.h[static_cast<std::size_t>(i)];
  }
  EXPECT_LE((got - b).norm() / b.norm(), 1e-8);
}

TEST(ViolationScores, Values) {
  GradientField b({2, 2});
  EXPECT_EQ(violation_scores(b).sum(), 0.0);
  b.v[1] = 0.6;
  b.h[1] = 0.8;
  EXPECT_DOUBLE_EQ(violation_scores(b)[1], 1.0);
  EXPECT_DOUBLE_EQ(violation_scores(b * 3.0)[1], 3.0);
}

TEST(SelectKappa, Rules) {
  EXPECT_EQ(select_kappa(ImageGrid({1, 4}, {1, 0.7, 0.5, 0.3}), 0.6), 2);
  EXPECT_EQ(select_kappa(ImageGrid({3, 3}, 0.2), 0.5), 9);
  EXPECT_EQ(select_kappa(ImageGrid({1, 4}, {1, 0.2, 1, 0.3}), 1.0), 2);
  EXPECT_THROW(select_kappa(ImageGrid({2, 2}), 0.6), DegenerateInput);
  EXPECT_THROW(select_kappa(ImageGrid({2, 2}, 1.0), 0.0), InvalidArgument);
}

TEST(TopScores, ArgmaxComplementAndTies) {
  const ImageGrid g({1, 3}, {0.1, 0.9, 0.3});
  EXPECT_EQ(top_scores_outside(g, 1, SupportSet({1, 3})), (std::vector<std::size_t>{1}));
  SupportSet s({1, 3});
  const ImageGrid h({1, 3}, {0.9, 0.8, 0.7});
  s.activate({0});
  EXPECT_EQ(top_scores_outside(h, 2, s), (std::vector<std::size_t>{1, 2}));
  const ImageGrid tie({1, 4}, {0.5, 0.5, 0.5, 0.1});
  EXPECT_EQ(top_scores_outside(tie, 2, SupportSet({1, 4})), (std::vector<std::size_t>{0, 1}));
  EXPECT_TRUE(top_scores_outside(h, 2, SupportSet::full({1, 3})).empty());
}

TEST(FindMostViolated, FirstActivationOnTrueJump) {
  const Phantom ph = make_1d_signal(128, 2, 5);
  const FrequencyPlan plan(ph.image.dims(), make_gaussian_kernel_1d(9, 1.5));
  const ImageGrid y = degrade(ph.image, plan, 0.0, 0);
  const ImageGrid alpha = y - ImageGrid::constant(y.dims(), y.mean());
  const ViolationSearch c = find_most_violated(alpha, 1, SupportSet(y.dims()), plan, 1.0);
  ASSERT_EQ(c.indices.size(), 1u);
  EXPECT_EQ(ph.gradient_support[c.indices[0]], 1);
}

TEST(Support, ActivateIncrementsAndRefine) {
  SupportSet s({4, 4});
  s.activate({1, 5});
  EXPECT_THROW(s.activate({5}), InvalidArgument);
  EXPECT_EQ(s.count(), 2u);
  EXPECT_EQ(s.increments().size(), 1u);

  const Dims d{64, 64};
  SupportSet lone(d);
  lone.activate({d.width * 30 + 30});
  EXPECT_TRUE(refine_support(lone, d).empty());
  EXPECT_TRUE(refine_support(SupportSet(d), d).empty());

  SupportSet block(d);
  std::vector<std::size_t> idx;
  for (std::size_t i = 20; i < 31; ++i) {
    for (std::size_t j = 20; j < 31; ++j) idx.push_back(i * d.width + j);
  }
  block.activate(idx);
  const SupportSet r = refine_support(block, d);
  // The opening rounds the block corners; edges grow by the 9-tap reach.
  std::size_t r0 = 64, r1 = 0, c0 = 64, c1 = 0;
  for (std::size_t i : r.indices()) {
    r0 = std::min(r0, i / d.width), r1 = std::max(r1, i / d.width);
    c0 = std::min(c0, i % d.width), c1 = std::max(c1, i % d.width);
  }
  EXPECT_EQ(r0, 11u);
  EXPECT_EQ(r1, 39u);
  EXPECT_EQ(c0, 11u);
  EXPECT_EQ(c1, 39u);
  for (std::size_t i = 11; i <= 39; ++i) EXPECT_TRUE(r.contains(i * d.width + 25));
  EXPECT_FALSE(r.contains(11 * d.width + 11));
  EXPECT_LT(r.count(), 29u * 29u);
  ASSERT_TRUE(r.soft_mask().has_value());
}

TEST(OuterObjective, ClosedForms) {
  std::mt19937_64 rng(3);
  const ImageGrid y = random_image({10, 10}, rng);
  const FrequencyPlan plan(y.dims(), make_gaussian_kernel(3, 1.0));
  const ImageGrid m = ImageGrid::constant(y.dims(), y.mean());
  const double fit = norm2(y - m);
  EXPECT_NEAR(outer_objective(m, y, plan, 0.3), fit * fit, 1e-12);
  const ImageGrid x = random_image({10, 10}, rng);
  const double f = norm2(y - convolve_periodic(x, plan));
  EXPECT_NEAR(outer_objective(x, y, plan, 0.0), f * f, 1e-12);
  EXPECT_NEAR(outer_objective(x, y, plan, 0.2), f * f + 0.2 * tv_value(x), 1e-12);
}

TEST(Mptv, ConstantObservationStopsImmediately) {
  const ImageGrid y({16, 16}, 0.4);
  const MptvResult r = mptv::mptv(y, make_gaussian_kernel(5, 1.0), SolverConfig{});
  EXPECT_EQ(r.diagnostics.stop, StopReason::kConstantObservation);
  EXPECT_TRUE(r.diagnostics.iterations.empty());
  for (double v : r.x.data()) EXPECT_EQ(v, y.mean());
}

TEST(Mptv, InvariantsOnPhantom) {
  const Phantom ph = make_sparse_image({64, 64}, 4, 2);
  const FrequencyPlan plan(ph.image.dims(), make_gaussian_kernel(9, 1.6));
  const ImageGrid y = degrade(ph.image, plan, 0.003, 3);
  SolverConfig cfg;
  cfg.kappa_override = 200;
  const MptvResult r = mptv::mptv(y, plan, cfg);
  const auto& d = r.diagnostics;
  ASSERT_FALSE(d.iterations.empty());
  EXPECT_LE(d.iterations.size(), 7u);
  EXPECT_EQ(d.kappa, 200);
  const InvariantReport inv = check_invariants(r);
  EXPECT_TRUE(inv.disjoint);
  EXPECT_TRUE(inv.within_kappa);
  std::size_t prev = 0;
  for (const auto& it : d.iterations) {
    EXPECT_EQ(it.support, prev + it.activated);
    prev = it.support;
  }
  EXPECT_EQ(d.score_maps.size(), d.iterations.size());
}

TEST(Mptv, RefinementReplacesTheRawUnion) {
  const Phantom ph = make_sparse_image({64, 64}, 3, 4);
  const FrequencyPlan plan(ph.image.dims(), make_gaussian_kernel(9, 1.6));
  const ImageGrid y = degrade(ph.image, plan, 0.003, 5);
  SolverConfig cfg;
  cfg.refine = true;
  const MptvResult r = mptv::mptv(y, plan, cfg);
  ASSERT_TRUE(r.diagnostics.support.soft_mask().has_value());
  EXPECT_LE(r.diagnostics.iterations.size(), 7u);
}

TEST(Mptv, SaturationStops) {
  std::mt19937_64 rng(6);
  const ImageGrid y = random_image({8, 8}, rng);
  SolverConfig cfg;
  cfg.kappa_override = 40;
  cfg.eps_outer = 1e-12;
  const MptvResult r = mptv::mptv(y, BlurKernel::delta(), cfg);
  EXPECT_EQ(r.diagnostics.stop, StopReason::kSaturated);
  EXPECT_EQ(r.diagnostics.support.count(), 64u);
}

TEST(Mptv, RejectsBadConfig) {
  const ImageGrid y({8, 8}, 0.1);
  SolverConfig cfg;
  cfg.zeta = 1.5;
  EXPECT_THROW(mptv::mptv(y, BlurKernel::delta(), cfg), InvalidArgument);
  cfg = SolverConfig{};
  cfg.kappa_override = 0;
  EXPECT_THROW(mptv::mptv(y, BlurKernel::delta(), cfg), InvalidArgument);
}
