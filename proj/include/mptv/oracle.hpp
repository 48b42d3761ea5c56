#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <vector>

#include "mptv/grid.hpp"

namespace mptv {

/// Dense matrices of A (periodic convolution) and D = [D_v; D_h] (forward
/// differences), assembled entry by entry from the spatial stencils.
struct DenseOperators {
  Eigen::MatrixXd blur;  // n x n
  Eigen::SparseMatrix<double> diff;  // 2n x n, rows [0, n) vertical, [n, 2n) horizontal

  static DenseOperators build(Dims dims, const BlurKernel& k) {
    const auto n = static_cast<Eigen::Index>(dims.size());
    const long H = static_cast<long>(dims.height);
    const long W = static_cast<long>(dims.width);
    auto idx = [&](long i, long j) {
      return static_cast<Eigen::Index>((((i % H) + H) % H) * W + (((j % W) + W) % W));
    };
    DenseOperators ops;
    ops.blur = Eigen::MatrixXd::Zero(n, n);
    for (long i = 0; i < H; ++i) {
      for (long j = 0; j < W; ++j) {
        for (int di = -k.radius_v(); di <= k.radius_v(); ++di) {
          for (int dj = -k.radius_h(); dj <= k.radius_h(); ++dj) {
            ops.blur(idx(i, j), idx(i - di, j - dj)) += k.at_offset(di, dj);
          }
        }
      }
    }
    std::vector<Eigen::Triplet<double>> entries;
    for (long i = 0; i < H; ++i) {
      for (long j = 0; j < W; ++j) {
        const auto p = idx(i, j);
        entries.emplace_back(p, idx(i + 1, j), 1.0);
        entries.emplace_back(p, p, -1.0);
        entries.emplace_back(n + p, idx(i, j + 1), 1.0);
        entries.emplace_back(n + p, p, -1.0);
      }
    }
    ops.diff.resize(2 * n, n);
    ops.diff.setFromTriplets(entries.begin(), entries.end());  // duplicates are summed
    return ops;
  }
};

struct OracleOptions {
  int min_iters = 10000;
  int max_iters = 400000;
  double rho = 1.0;
  int balance_every = 50;
  /// Groups with ||(Dx)_i|| above this are treated as nonzero in the KKT check.
  double zero_group = 1e-9;
};

struct OracleResult {
  ImageGrid x;
  double objective = 0.0;
  /// ||A^T (A x - y) + D^T p|| for the subgradient element p built from the
  /// final iterate and dual.
  double subgradient_residual = 0.0;
  int iterations = 0;
};

inline constexpr std::size_t kOracleMaxPixels = 32 * 32;

/// High-precision minimizer of 1/2 ||y - A x||^2 + lambda TV(x) for small
/// images: dense scaled ADMM with residual balancing, run for at least
/// min_iters iterations and until the objective changes by at most tol
/// (relative) over a balancing window.
inline OracleResult oracle_tv_solve(const ImageGrid& y, const BlurKernel& k, double lambda, double tol,
                                    const OracleOptions& opt = {}) {
  if (y.size() > kOracleMaxPixels) {
    throw InvalidArgument("oracle_tv_solve: image " + to_string(y.dims()) + " exceeds the 32x32 cap");
  }
  if (!(lambda >= 0.0)) throw InvalidArgument("oracle_tv_solve: lambda must be >= 0");
  if (!k.fits(y.dims())) throw DimensionMismatch("oracle_tv_solve: kernel does not fit the image");

  using Eigen::VectorXd;
  const DenseOperators ops = DenseOperators::build(y.dims(), k);
  const auto n = static_cast<Eigen::Index>(y.size());
  const Eigen::Map<const VectorXd> yv(y.data().data(), n);
  const Eigen::MatrixXd AtA = ops.blur.transpose() * ops.blur;
  const Eigen::MatrixXd DtD = Eigen::MatrixXd(ops.diff.transpose() * ops.diff);
  const VectorXd Aty = ops.blur.transpose() * yv;

  auto objective = [&](const VectorXd& x) {
    const VectorXd r = ops.blur * x - yv;
    const VectorXd g = ops.diff * x;
    double tv = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) tv += std::hypot(g(i), g(n + i));
    return 0.5 * r.squaredNorm() + lambda * tv;
  };

  double rho = opt.rho;
  Eigen::LLT<Eigen::MatrixXd> llt(AtA + rho * DtD);
  VectorXd x = VectorXd::Constant(n, y.mean());
  VectorXd z = ops.diff * x;
  VectorXd u = VectorXd::Zero(2 * n);  // scaled dual gamma / rho
  double window_obj = objective(x);
  int it = 0;
  for (it = 1; it <= opt.max_iters; ++it) {
    x = llt.solve(Aty + rho * ops.diff.transpose() * (z - u));
    const VectorXd dx = ops.diff * x;
    const VectorXd z_old = z;
    const double t = lambda / rho;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double a = dx(i) + u(i);
      const double b = dx(n + i) + u(n + i);
      const double m = std::hypot(a, b);
      const double s = m > 0.0 ? std::max(m - t, 0.0) / m : 0.0;
      z(i) = s * a;
      z(n + i) = s * b;
    }
    u += dx - z;

    if (it % opt.balance_every == 0) {
      const double primal = (dx - z).norm();
      const double dual = rho * (ops.diff.transpose() * (z - z_old)).norm();
      const double obj = objective(x);
      const bool settled = std::abs(window_obj - obj) <= tol * std::max(std::abs(obj), 1e-300);
      window_obj = obj;
      if (it >= opt.min_iters && settled && primal <= 1e-12 * (1.0 + z.norm()) &&
          dual <= 1e-12 * (1.0 + Aty.norm())) {
        break;
      }
      const double ratio = 10.0;
      if (primal > ratio * dual && rho < 1e6) {
        rho *= 2.0;
        u *= 0.5;
        llt.compute(AtA + rho * DtD);
      } else if (dual > ratio * primal && rho > 1e-8) {
        rho *= 0.5;
        u *= 2.0;
        llt.compute(AtA + rho * DtD);
      }
    }
  }

  OracleResult res;
  res.iterations = std::min(it, opt.max_iters);
  res.x = ImageGrid(y.dims(), std::vector<double>(x.data(), x.data() + n));
  res.objective = objective(x);

  // p_i = lambda (Dx)_i / ||(Dx)_i|| on nonzero groups; elsewhere the ADMM
  // dual rho * u, projected onto the radius-lambda ball.
  const VectorXd dx = ops.diff * x;
  VectorXd p(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = std::hypot(dx(i), dx(n + i));
    if (m > opt.zero_group) {
      p(i) = lambda * dx(i) / m;
      p(n + i) = lambda * dx(n + i) / m;
    } else {
      double a = rho * u(i), b = rho * u(n + i);
      const double pm = std::hypot(a, b);
      if (pm > lambda) {
        a *= lambda / pm;
        b *= lambda / pm;
      }
      p(i) = a;
      p(n + i) = b;
    }
  }
  res.subgradient_residual = (ops.blur.transpose() * (ops.blur * x - yv) + ops.diff.transpose() * p).norm();
  return res;
}

}  // namespace mptv
