#pragma once

#include <string>
#include <vector>

#include "mptv/admm.hpp"
#include "mptv/bench.hpp"
#include "mptv/config.hpp"
#include "mptv/metrics.hpp"
#include "mptv/mptv.hpp"
#include "mptv/synth.hpp"

namespace mptv {

struct Demo1dTrack {
  std::string method;
  ImageGrid x;
  double psnr = 0.0;
  double fit = 0.0;  // ||y - A x||
  std::vector<std::size_t> jumps;  // |Dx|_i > jump_tol
  std::size_t above_1e4 = 0;       // |Dx|_i > 1e-4
  bool jumps_match = false;
};

/// TV-ADMM, MPTV and the support-oracle ADMM on one regenerated step signal.
struct Demo1dResult {
  Phantom truth;
  ImageGrid y;
  std::vector<std::size_t> true_jumps;
  Demo1dTrack tv, mp, oracle;
  MptvDiagnostics diagnostics;
};

inline std::vector<std::size_t> jump_set(const ImageGrid& x, double tol) {
  const GradientField g = apply_gradient(x);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.group_norm(i) > tol) out.push_back(i);
  }
  return out;
}

inline Demo1dResult run_demo1d(const RunConfig& cfg) {
  const Dims dims = cfg.size();
  if (dims.width != 1) throw InvalidArgument("demo1d: size must describe an N x 1 signal");
  Demo1dResult res;
  res.truth = make_1d_signal(dims.height, cfg.integer("jumps"), static_cast<std::uint64_t>(cfg.integer("seed")));
  const BlurKernel k = make_kernel(parse_kernel_spec(cfg.text("psf")));
  const FrequencyPlan plan(dims, k);
  res.y = degrade(res.truth.image, plan, cfg.real("noise"), static_cast<std::uint64_t>(cfg.integer("noise_seed")));
  const double tol = cfg.real("jump_tol");
  res.true_jumps = jump_set(res.truth.image, 0.0);

  const AdmmConfig ac = cfg.inner();
  const SupportSet truth = SupportSet::from_mask(dims, res.truth.gradient_support);
  MptvResult mp = mptv::mptv(res.y, plan, cfg.solver(cfg.refine_for(dims, true)));
  res.diagnostics = std::move(mp.diagnostics);

  auto track = [&](std::string name, ImageGrid x) {
    Demo1dTrack t;
    t.method = std::move(name);
    t.psnr = psnr(x, res.truth.image);
    t.fit = norm2(res.y - convolve_periodic(x, plan));
    t.jumps = jump_set(x, tol);
    t.above_1e4 = jump_set(x, 1e-4).size();
    t.jumps_match = t.jumps == res.true_jumps;
    t.x = std::move(x);
    return t;
  };
  res.tv = track("tv-admm", tv_admm(res.y, plan, ac));
  res.mp = track("mptv", std::move(mp.x));
  res.oracle = track("support-oracle",
                     solve_subproblem(res.y, plan, truth, ac, ImageGrid::constant(dims, res.y.mean())).first);
  return res;
}

/// Signals and their forward differences, one row per sample.
inline std::string demo1d_signal_csv(const RunConfig& cfg, const Demo1dResult& r) {
  std::string out = cfg.serialize();
  out += "index,truth,observed,tv_admm,mptv,support_oracle,grad_truth,grad_tv_admm,grad_mptv,grad_support_oracle\n";
  const GradientField gt = apply_gradient(r.truth.image);
  const GradientField g1 = apply_gradient(r.tv.x);
  const GradientField g2 = apply_gradient(r.mp.x);
  const GradientField g3 = apply_gradient(r.oracle.x);
  for (std::size_t i = 0; i < r.y.size(); ++i) {
    out += std::to_string(i);
    for (double v : {r.truth.image[i], r.y[i], r.tv.x[i], r.mp.x[i], r.oracle.x[i], gt.v[i], g1.v[i], g2.v[i], g3.v[i]}) {
      out += "," + fmt("%.10g", v);
    }
    out += "\n";
  }
  return out;
}

inline std::string demo1d_summary_csv(const RunConfig& cfg, const Demo1dResult& r) {
  std::string out = cfg.serialize();
  out += "# true_jumps=" + std::to_string(r.true_jumps.size()) + "\n";
  out += "method,psnr,fit_residual,jumps_above_tol,entries_above_1e-4,jump_set_matches\n";
  for (const Demo1dTrack* t : {&r.tv, &r.mp, &r.oracle}) {
    out += t->method + "," + fmt("%.6f", t->psnr) + "," + fmt("%.10g", t->fit) + "," +
           std::to_string(t->jumps.size()) + "," + std::to_string(t->above_1e4) + "," +
           (t->jumps_match ? "yes" : "no") + "\n";
  }
  return out;
}

}  // namespace mptv
