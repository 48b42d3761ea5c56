#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "mptv/admm.hpp"
#include "mptv/frequency_plan.hpp"
#include "mptv/grid.hpp"
#include "mptv/support.hpp"

namespace mptv {

struct SolverConfig {
  double lambda = 1e-4;
  double rho = 1e-2;
  /// Ridge weight of the dual recovery.
  double r = 1e-3;
  /// kappa = #{g0_i > zeta * max g0} unless kappa_override is set.
  double zeta = 0.6;
  std::optional<int> kappa_override;
  double eps_outer = 1e-3;
  int max_outer = 7;
  bool refine = false;
  bool keep_score_maps = true;
  AdmmConfig inner{};

  /// Inner config with lambda and rho taken from this config.
  AdmmConfig effective_inner() const {
    AdmmConfig c = inner;
    c.lambda = lambda;
    c.rho = rho;
    return c;
  }

  void validate() const {
    if (!(lambda > 0.0)) throw InvalidArgument("SolverConfig: lambda must be > 0");
    if (!(rho > 0.0)) throw InvalidArgument("SolverConfig: rho must be > 0");
    if (!(r > 0.0)) throw InvalidArgument("SolverConfig: r must be > 0");
    if (!(zeta > 0.0 && zeta <= 1.0)) throw InvalidArgument("SolverConfig: zeta must lie in (0, 1]");
    if (kappa_override && *kappa_override < 1) throw InvalidArgument("SolverConfig: kappa must be >= 1");
    if (!(eps_outer > 0.0)) throw InvalidArgument("SolverConfig: eps must be > 0");
    if (max_outer < 1) throw InvalidArgument("SolverConfig: max_outer must be >= 1");
    effective_inner().validate();
  }
};

enum class StopReason { kNotStarted, kConstantObservation, kObjectiveStalled, kMaxOuter, kSaturated };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::kNotStarted: return "not-started";
    case StopReason::kConstantObservation: return "constant-observation";
    case StopReason::kObjectiveStalled: return "objective-stalled";
    case StopReason::kMaxOuter: return "max-outer";
    case StopReason::kSaturated: return "saturated";
  }
  return "unknown";
}

struct OuterRecord {
  int iteration = 0;
  double psi = 0.0;              // ||y - A x||^2 + lambda TV(x)
  double subproblem_objective = 0.0;  // 1/2 ||y - A x||^2 + lambda sum_{i in S} ||(Dx)_i||
  double fit_norm = 0.0;         // ||y - A x||
  double dual_proxy = 0.0;       // -1/2 ||alpha||^2 + alpha^T y, alpha = y - A x
  std::size_t activated = 0;     // |C_t|
  std::size_t support = 0;       // |S_t|
  int inner_iterations = 0;
  double off_support_ratio = 0.0;  // max_{i not in S} |(Dx)_i| / max_{i in S} |(Dx)_i|
  double seconds = 0.0;
};

struct MptvDiagnostics {
  int kappa = 0;
  double psi0 = 0.0;
  StopReason stop = StopReason::kNotStarted;
  std::vector<OuterRecord> iterations;
  std::vector<ImageGrid> score_maps;  // g^{t-1} used to pick C_t
  SupportSet support;
};

struct MptvResult {
  ImageGrid x;
  MptvDiagnostics diagnostics;
};

/// Ridge-regularized recovery of beta from alpha:
///   beta = (D D^T + r I)^{-1} D A^T alpha,
/// solved per frequency through the 2x2 block inverse
///   [[P, c], [conj(c), Q]]^{-1} = [[S_h^{-1}, T_v], [T_h, S_v^{-1}]]
/// with P = |d_v|^2 + r, Q = |d_h|^2 + r, c = d_v conj(d_h) and the Schur
/// complements S_v = Q - |c|^2 / P, S_h = P - |c|^2 / Q.
inline GradientField recover_beta(const ImageGrid& alpha, const FrequencyPlan& plan, double r) {
  if (!(r > 0.0)) throw InvalidArgument("recover_beta: r must be > 0");
  plan.require_matches(alpha);
  const Spectrum w = plan.apply_kernel(plan.forward(alpha), true);  // F(A^T alpha)
  const auto& a = plan.dv_spectrum();
  const auto& b = plan.dh_spectrum();
  Spectrum bv{w.image, std::vector<Complex>(w.size())};
  Spectrum bh{w.image, std::vector<Complex>(w.size())};
  for (std::size_t f = 0; f < w.size(); ++f) {
    const double aa = std::norm(a[f]);
    const double bb = std::norm(b[f]);
    const double p = aa + r;
    const double q = bb + r;
    const Complex c = a[f] * std::conj(b[f]);
    const double cc = aa * bb;
    const double s_v = q - cc / p;
    const double s_h = p - cc / q;
    const Complex t_v = -c / (p * s_v);
    const Complex t_h = -std::conj(c) / (q * s_h);
    const Complex rhs_v = a[f] * w[f];
    const Complex rhs_h = b[f] * w[f];
    bv[f] = rhs_v / s_h + t_v * rhs_h;
    bh[f] = t_h * rhs_v + rhs_h / s_v;
  }
  return GradientField(plan.inverse(bv), plan.inverse(bh));
}

/// g_i = ||beta_i||.
inline ImageGrid violation_scores(const GradientField& beta) { return group_magnitudes(beta); }

/// Number of entries strictly above zeta * max(g0); the maximizers always count.
inline int select_kappa(const ImageGrid& g0, double zeta) {
  if (!(zeta > 0.0 && zeta <= 1.0)) throw InvalidArgument("select_kappa: zeta must lie in (0, 1]");
  const double top = g0.max();
  if (!(top > 0.0)) throw DegenerateInput("select_kappa: all scores are zero");
  const double threshold = zeta * top;
  int kappa = 0;
  for (std::size_t i = 0; i < g0.size(); ++i) {
    if (g0[i] > threshold || g0[i] == top) ++kappa;
  }
  return kappa;
}

/// The kappa largest scores outside the active set; ties go to the lower index.
inline std::vector<std::size_t> top_scores_outside(const ImageGrid& scores, int kappa,
                                                   const SupportSet& active) {
  if (kappa < 1) throw InvalidArgument("kappa must be >= 1");
  std::vector<std::size_t> cand;
  cand.reserve(scores.size() - std::min(scores.size(), active.count()));
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!active.contains(i)) cand.push_back(i);
  }
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(kappa), cand.size());
  auto better = [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  };
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end(), better);
  cand.resize(take);
  std::sort(cand.begin(), cand.end());
  return cand;
}

struct ViolationSearch {
  std::vector<std::size_t> indices;  // C, sorted ascending
  ImageGrid scores;                  // g
};

/// Most violated constraint: recover beta from alpha, score every group, keep
/// the top kappa outside S_prev. An empty C means S_prev already covers [n].
inline ViolationSearch find_most_violated(const ImageGrid& alpha, int kappa, const SupportSet& s_prev,
                                          const FrequencyPlan& plan, double r) {
  if (kappa < 1) throw InvalidArgument("find_most_violated: kappa must be >= 1");
  ViolationSearch out;
  out.scores = violation_scores(recover_beta(alpha, plan, r));
  out.indices = top_scores_outside(out.scores, kappa, s_prev);
  return out;
}

/// psi(x) = ||y - A x||^2 + lambda TV(x).
inline double outer_objective(const ImageGrid& x, const ImageGrid& y, const FrequencyPlan& plan,
                              double lambda) {
  const double fit = norm2(y - convolve_periodic(x, plan));
  return fit * fit + lambda * tv_value(x);
}

inline double off_support_ratio(const ImageGrid& x, const SupportSet& s) {
  const GradientField g = apply_gradient(x);
  double on = 0.0, off = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double& slot = s.contains(i) ? on : off;
    slot = std::max(slot, g.group_norm(i));
  }
  if (on == 0.0) return off == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return off / on;
}

/// Matching-pursuit TV deconvolution. Starting from the mean image, each outer
/// step activates the kappa most violated gradient groups, optionally refines
/// the support, and re-solves the support-constrained subproblem warm-started
/// at the previous iterate. Stops when the relative change of psi drops to
/// eps_outer, after max_outer steps, or when the support covers every pixel.
inline MptvResult mptv(const ImageGrid& y, const FrequencyPlan& plan, const SolverConfig& cfg) {
  using clock = std::chrono::steady_clock;
  cfg.validate();
  plan.require_matches(y);
  if (!y.all_finite()) throw InvalidArgument("mptv: observation has non-finite entries");

  const AdmmConfig inner = cfg.effective_inner();
  MptvResult res;
  MptvDiagnostics& diag = res.diagnostics;
  ImageGrid x = ImageGrid::constant(y.dims(), y.mean());
  SupportSet s(y.dims());

  ImageGrid ax = convolve_periodic(x, plan);
  ImageGrid alpha = y - ax;
  diag.psi0 = outer_objective(x, y, plan, cfg.lambda);

  ViolationSearch search;
  search.scores = violation_scores(recover_beta(alpha, plan, cfg.r));
  if (!(search.scores.max() > 0.0)) {
    diag.stop = StopReason::kConstantObservation;
    diag.support = std::move(s);
    res.x = std::move(x);
    return res;
  }
  diag.kappa = cfg.kappa_override ? *cfg.kappa_override : select_kappa(search.scores, cfg.zeta);

  double psi_prev = diag.psi0;
  diag.stop = StopReason::kMaxOuter;
  for (int t = 1; t <= cfg.max_outer; ++t) {
    const auto start = clock::now();
    if (t > 1) search.scores = violation_scores(recover_beta(alpha, plan, cfg.r));
    search.indices = top_scores_outside(search.scores, diag.kappa, s);
    if (search.indices.empty()) {
      diag.stop = StopReason::kSaturated;
      break;
    }
    if (cfg.keep_score_maps) diag.score_maps.push_back(search.scores);

    OuterRecord rec;
    rec.iteration = t;
    rec.activated = search.indices.size();
    s.activate(search.indices);
    if (cfg.refine) s = refine_support(s, y.dims());
    rec.support = s.count();

    auto [xt, st] = solve_subproblem(y, plan, s, inner, x);
    x = std::move(xt);
    ax = convolve_periodic(x, plan);
    alpha = y - ax;

    const double fit = norm2(alpha);
    rec.fit_norm = fit;
    rec.psi = fit * fit + cfg.lambda * tv_value(x);
    rec.subproblem_objective = support_objective(x, y, plan, s, cfg.lambda);
    rec.dual_proxy = -0.5 * fit * fit + dot(alpha, y);
    rec.inner_iterations = st.iter;
    rec.off_support_ratio = off_support_ratio(x, s);
    rec.seconds = std::chrono::duration<double>(clock::now() - start).count();
    diag.iterations.push_back(rec);

    const bool stalled = std::abs(psi_prev - rec.psi) / diag.psi0 <= cfg.eps_outer;
    psi_prev = rec.psi;
    if (stalled) {
      diag.stop = StopReason::kObjectiveStalled;
      break;
    }
  }
  diag.support = std::move(s);
  res.x = std::move(x);
  return res;
}

inline MptvResult mptv(const ImageGrid& y, const BlurKernel& k, const SolverConfig& cfg) {
  const FrequencyPlan plan(y.dims(), k);
  return mptv(y, plan, cfg);
}

}  // namespace mptv
