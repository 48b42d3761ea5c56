#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "mptv/frequency_plan.hpp"
#include "mptv/grid.hpp"
#include "mptv/support.hpp"

namespace mptv {

struct AdmmConfig {
  double lambda = 1e-4;
  double rho = 1e-2;
  double eps_in = 1e-3;
  int min_iters = 10;
  int max_iters = 100;

  void validate() const {
    if (!(lambda > 0.0)) throw InvalidArgument("AdmmConfig: lambda must be > 0");
    if (!(rho > 0.0)) throw InvalidArgument("AdmmConfig: rho must be > 0");
    if (!(eps_in > 0.0 && eps_in < 1.0)) throw InvalidArgument("AdmmConfig: eps_in must lie in (0, 1)");
    if (min_iters < 1 || max_iters < 1) throw InvalidArgument("AdmmConfig: iteration caps must be positive");
    if (min_iters > max_iters) throw InvalidArgument("AdmmConfig: min_iters exceeds max_iters");
  }
};

/// Iterate of the support-constrained ADMM. z and gamma vanish off the support
/// on the z channel; fit_history holds ||y - A x|| for every iterate, starting
/// with x0.
struct AdmmState {
  ImageGrid x;
  GradientField z;
  GradientField gamma;
  int iter = 0;
  std::vector<double> fit_history;
};

/// Radial soft threshold of a 2-vector, with 0 * (0/0) = 0.
inline std::pair<double, double> group_shrinkage(std::pair<double, double> mu, double threshold) {
  const double n = std::hypot(mu.first, mu.second);
  if (n == 0.0) return {0.0, 0.0};
  const double s = std::max(n - threshold, 0.0) / n;
  return {s * mu.first, s * mu.second};
}

/// z' = shrink(D x + gamma / rho, lambda / rho) on S and 0 elsewhere.
inline GradientField z_update(const GradientField& dx, const GradientField& gamma, const SupportSet& s,
                              double lambda, double rho) {
  GradientField out(dx.dims());
  const double t = lambda / rho;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (!s.contains(i)) continue;
    const auto [zv, zh] = group_shrinkage({dx.v[i] + gamma.v[i] / rho, dx.h[i] + gamma.h[i] / rho}, t);
    out.v[i] = zv;
    out.h[i] = zh;
  }
  return out;
}

inline GradientField z_update(const AdmmState& state, const SupportSet& s, const AdmmConfig& cfg) {
  if (s.dims() != state.x.dims()) throw DimensionMismatch("z_update: support does not match the iterate");
  return z_update(apply_gradient(state.x), state.gamma, s, cfg.lambda, cfg.rho);
}

namespace detail {

// Solves [A^T A + rho D^T D] x = A^T y + rho D^T nu for fixed y and rho,
// caching conj(F(k)) F(y) and the denominator across ADMM iterations.
class ImageUpdateSolver {
 public:
  ImageUpdateSolver(const ImageGrid& y, const FrequencyPlan& plan, double rho)
      : plan_(&plan), rho_(rho), data_term_(plan.apply_kernel(plan.forward(y), true)) {
    denominator_ = plan.image_update_denominator(rho);
    for (double d : denominator_) {
      if (!(d > 0.0) || !std::isfinite(d)) {
        throw IllPosedUpdate("image update: zero denominator in the spectral solve (rho = " +
                             std::to_string(rho) + ")");
      }
    }
  }

  struct Result {
    ImageGrid x;
    ImageGrid ax;
  };

  Result solve(const GradientField& nu) const {
    Spectrum s = plan_->forward(apply_divergence(nu));
    const auto& k = plan_->kernel_spectrum();
    for (std::size_t f = 0; f < s.size(); ++f) {
      s[f] = (data_term_[f] + rho_ * s[f]) / denominator_[f];
    }
    Result r{plan_->inverse(s), {}};
    for (std::size_t f = 0; f < s.size(); ++f) s[f] *= k[f];
    r.ax = plan_->inverse(s);
    return r;
  }

 private:
  const FrequencyPlan* plan_;
  double rho_;
  Spectrum data_term_;
  std::vector<double> denominator_;
};

inline double fit_norm(const ImageGrid& y, const ImageGrid& ax) {
  double acc = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double r = y[k] - ax[k];
    acc += r * r;
  }
  return std::sqrt(acc);
}

}  // namespace detail

/// Minimizer of 1/2 ||y - A x||^2 + rho/2 ||D x - nu||^2 via pointwise spectral division.
inline ImageGrid x_update(const ImageGrid& y, const FrequencyPlan& plan, const GradientField& nu,
                          double rho) {
  plan.require_matches(y);
  if (nu.dims() != y.dims()) throw DimensionMismatch("x_update: nu does not match y");
  return detail::ImageUpdateSolver(y, plan, rho).solve(nu).x;
}

/// gamma + rho (D x - z').
inline GradientField dual_update(const GradientField& gamma, const GradientField& dx,
                                 const GradientField& z_prime, double rho) {
  GradientField out = gamma;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.v[i] += rho * (dx.v[i] - z_prime.v[i]);
    out.h[i] += rho * (dx.h[i] - z_prime.h[i]);
  }
  return out;
}

inline GradientField dual_update(const AdmmState& state, const GradientField& z_prime, double rho) {
  return dual_update(state.gamma, apply_gradient(state.x), z_prime, rho);
}

/// 1/2 ||y - A x||^2 + lambda * sum_{i in S} ||(D x)_i||.
inline double support_objective(const ImageGrid& x, const ImageGrid& y, const FrequencyPlan& plan,
                                const SupportSet& s, double lambda) {
  const double fit = norm2(y - convolve_periodic(x, plan));
  const GradientField g = apply_gradient(x);
  double reg = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (s.contains(i)) reg += g.group_norm(i);
  }
  return 0.5 * fit * fit + lambda * reg;
}

/// 1/2 ||y - A x||^2 + lambda * TV(x).
inline double tv_objective(const ImageGrid& x, const ImageGrid& y, const FrequencyPlan& plan, double lambda) {
  const double fit = norm2(y - convolve_periodic(x, plan));
  return 0.5 * fit * fit + lambda * tv_value(x);
}

/// ADMM for the support-constrained TV problem
///   min 1/2 ||y - A x||^2 + lambda sum_{i in S} ||z_i||
///   s.t. (D x)_S = z_S, (D x)_{S^c} = 0.
/// Both constraints share one quadratic penalty rho; z' is zero off S. Stops
/// once |phi_{k-1} - phi_k| / phi_0 <= eps_in after min_iters, or at max_iters,
/// where phi = ||y - A x||.
inline std::pair<ImageGrid, AdmmState> solve_subproblem(const ImageGrid& y, const FrequencyPlan& plan,
                                                        const SupportSet& s, const AdmmConfig& cfg,
                                                        const ImageGrid& x0) {
  cfg.validate();
  plan.require_matches(y);
  plan.require_matches(x0);
  if (s.dims() != y.dims()) throw DimensionMismatch("solve_subproblem: support does not match y");
  if (!x0.all_finite()) throw InvalidArgument("solve_subproblem: x0 has non-finite entries");

  const detail::ImageUpdateSolver solver(y, plan, cfg.rho);
  AdmmState st;
  st.x = x0;
  st.z = GradientField(y.dims());
  st.gamma = GradientField(y.dims());
  const double phi0 = detail::fit_norm(y, convolve_periodic(x0, plan));
  st.fit_history.push_back(phi0);
  const double scale = phi0 > 0.0 ? phi0 : std::numeric_limits<double>::min();

  GradientField dx = apply_gradient(st.x);
  const double inv_rho = 1.0 / cfg.rho;
  for (int k = 1; k <= cfg.max_iters; ++k) {
    GradientField z_prime = z_update(dx, st.gamma, s, cfg.lambda, cfg.rho);
    GradientField nu = z_prime - st.gamma * inv_rho;
    auto [x, ax] = solver.solve(nu);
    if (!x.all_finite()) throw DivergenceError(cfg.rho);
    st.x = std::move(x);
    dx = apply_gradient(st.x);
    st.gamma = dual_update(st.gamma, dx, z_prime, cfg.rho);
    st.z = std::move(z_prime);
    st.iter = k;
    const double phi = detail::fit_norm(y, ax);
    const double prev = st.fit_history.back();
    st.fit_history.push_back(phi);
    if (!std::isfinite(phi) || !st.gamma.all_finite()) throw DivergenceError(cfg.rho);
    if (k >= cfg.min_iters && std::abs(prev - phi) / scale <= cfg.eps_in) break;
  }
  ImageGrid out = st.x;
  return {std::move(out), std::move(st)};
}

/// Classical isotropic TV deconvolution: the subproblem over the full support,
/// started from the mean image.
inline ImageGrid tv_admm(const ImageGrid& y, const FrequencyPlan& plan, const AdmmConfig& cfg,
                         AdmmState* state_out = nullptr) {
  const ImageGrid x0 = ImageGrid::constant(y.dims(), y.mean());
  auto [x, st] = solve_subproblem(y, plan, SupportSet::full(y.dims()), cfg, x0);
  if (state_out != nullptr) *state_out = std::move(st);
  return x;
}

inline ImageGrid tv_admm(const ImageGrid& y, const BlurKernel& k, const AdmmConfig& cfg,
                         AdmmState* state_out = nullptr) {
  const FrequencyPlan plan(y.dims(), k);
  return tv_admm(y, plan, cfg, state_out);
}

}  // namespace mptv
