#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "mptv/admm.hpp"
#include "mptv/config.hpp"
#include "mptv/frequency_plan.hpp"
#include "mptv/metrics.hpp"
#include "mptv/mptv.hpp"
#include "mptv/synth.hpp"

namespace mptv {

/// Quotes a CSV field when it holds a comma, quote or newline.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

/// Worker count from MPTV_THREADS, else the hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("MPTV_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs job(i) for i in [0, n) on a pool of threads.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& job) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) job(i);
  };
  std::vector<std::jthread> pool;
  const unsigned t = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  for (unsigned k = 1; k < t; ++k) pool.emplace_back(worker);
  worker();
}

/// Invariant checks over one MPTV run.
struct InvariantReport {
  bool disjoint = true;           // C_t misses S_{t-1}
  bool within_kappa = true;       // |C_t| <= kappa
  bool monotone = true;           // subproblem objective nonincreasing, with slack
  double worst_rise = 0.0;        // max relative increase between outer steps
  double off_support = 0.0;       // final off-support ratio
  int outer = 0;
};

inline InvariantReport check_invariants(const MptvResult& res, double slack = 1e-8) {
  InvariantReport rep;
  const auto& d = res.diagnostics;
  rep.outer = static_cast<int>(d.iterations.size());
  std::vector<std::uint8_t> seen(res.x.size(), 0);
  for (const auto& inc : d.support.increments()) {
    if (static_cast<int>(inc.size()) > d.kappa) rep.within_kappa = false;
    for (std::size_t i : inc) {
      if (seen[i]) rep.disjoint = false;
      seen[i] = 1;
    }
  }
  for (std::size_t t = 1; t < d.iterations.size(); ++t) {
    const double prev = d.iterations[t - 1].subproblem_objective;
    const double rise = (d.iterations[t].subproblem_objective - prev) / std::abs(prev);
    rep.worst_rise = std::max(rep.worst_rise, rise);
    if (rise > slack) rep.monotone = false;
  }
  if (!d.iterations.empty()) rep.off_support = d.iterations.back().off_support_ratio;
  return rep;
}

struct BenchInstance {
  std::string id;
  Phantom truth;
};

struct BenchKernel {
  std::string id;
  BlurKernel kernel;
};

enum class SweepKind { kMain, kKappa, kEps };

struct BenchRow {
  SweepKind kind = SweepKind::kMain;
  std::size_t instance = 0;
  std::size_t kernel = 0;
  std::string method;
  double lambda = 0.0;
  int kappa = 0;
  double eps = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  double seconds = 0.0;
  int outer = 0;
  int inner = 0;
  double support_fraction = 0.0;
  std::optional<InvariantReport> invariants;
  std::string status = "ok";
};

struct BenchReport {
  RunConfig config;
  std::vector<BenchInstance> instances;
  std::vector<BenchKernel> kernels;
  std::vector<BenchRow> rows;

  bool all_failed() const {
    return std::none_of(rows.begin(), rows.end(), [](const BenchRow& r) { return r.status == "ok"; });
  }
};

inline std::vector<BenchKernel> bench_kernels(const RunConfig& cfg) {
  std::vector<BenchKernel> out;
  for (const auto& spec : split_list(cfg.text("kernels"), ';')) out.push_back({spec, make_kernel(parse_kernel_spec(spec))});
  if (out.empty()) throw InvalidArgument("bench: empty kernel list");
  return out;
}

inline std::vector<BenchInstance> bench_instances(const RunConfig& cfg) {
  const int n = cfg.integer("instances");
  if (n < 1) throw InvalidArgument("bench: instances must be >= 1");
  std::vector<BenchInstance> out;
  for (int i = 0; i < n; ++i) {
    const auto seed = static_cast<std::uint64_t>(cfg.integer("seed") + i);
    if (cfg.text("phantom") == "1d") {
      out.push_back({"1d-" + std::to_string(seed), make_1d_signal(cfg.size().height, cfg.integer("jumps"), seed)});
    } else {
      out.push_back({"sparse-" + std::to_string(seed), make_sparse_image(cfg.size(), cfg.integer("shapes"), seed)});
    }
  }
  return out;
}

inline std::vector<double> bench_lambdas(const RunConfig& cfg) {
  if (cfg.text("lambdas") == "grid") return default_lambda_grid();
  auto l = parse_real_list("lambdas", cfg.text("lambdas"));
  if (l.empty()) throw InvalidArgument("bench: empty lambda list");
  return l;
}

/// Observation for instance i under kernel k.
inline ImageGrid bench_observation(const RunConfig& cfg, const BenchInstance& inst, std::size_t index,
                                   const FrequencyPlan& plan) {
  return degrade(inst.truth.image, plan, cfg.real("noise"),
                 static_cast<std::uint64_t>(cfg.integer("noise_seed")) + index);
}

/// Solves one row in place; failures land in the status column.
inline void run_bench_row(const RunConfig& cfg, const std::vector<BenchInstance>& instances,
                          const std::vector<BenchKernel>& kernels, BenchRow& row) {
  using clock = std::chrono::steady_clock;
  try {
    const BenchInstance& inst = instances[row.instance];
    const FrequencyPlan plan(inst.truth.image.dims(), kernels[row.kernel].kernel);
    const ImageGrid y = bench_observation(cfg, inst, row.instance, plan);
    const auto start = clock::now();
    ImageGrid x;
    if (row.method == "tv-admm") {
      AdmmConfig ac = cfg.inner();
      ac.lambda = row.lambda;
      AdmmState st;
      x = tv_admm(y, plan, ac, &st);
      row.inner = st.iter;
      row.outer = 0;
      row.support_fraction = 1.0;
    } else if (row.method == "mptv") {
      SolverConfig sc = cfg.solver(cfg.refine_for(y.dims(), true));
      sc.lambda = row.lambda;
      if (row.kind == SweepKind::kKappa) sc.kappa_override = row.kappa;
      if (row.kind == SweepKind::kEps) sc.eps_outer = row.eps;
      const MptvResult res = mptv::mptv(y, plan, sc);
      x = res.x;
      row.kappa = res.diagnostics.kappa;
      row.outer = static_cast<int>(res.diagnostics.iterations.size());
      for (const auto& it : res.diagnostics.iterations) row.inner += it.inner_iterations;
      row.support_fraction =
          static_cast<double>(res.diagnostics.support.count()) / static_cast<double>(y.size());
      row.invariants = check_invariants(res);
    } else {
      throw InvalidArgument("bench: unknown method '" + row.method + "'");
    }
    row.seconds = std::chrono::duration<double>(clock::now() - start).count();
    row.psnr = psnr(x, inst.truth.image);
    row.ssim = inst.truth.image.width() >= 11 && inst.truth.image.height() >= 11 ? ssim(x, inst.truth.image) : 0.0;
  } catch (const std::exception& e) {
    row.status = std::string("error: ") + e.what();
  }
}

/// Main rows for every (instance, kernel, method, lambda), then the kappa and
/// eps sweeps of MPTV at the configured lambda.
inline BenchReport run_bench(const RunConfig& cfg, unsigned threads = worker_count()) {
  BenchReport rep{cfg, bench_instances(cfg), bench_kernels(cfg), {}};
  const auto methods = split_list(cfg.text("methods"), ',');
  if (methods.empty()) throw InvalidArgument("bench: empty method list");
  for (const auto& m : methods) {
    if (m != "mptv" && m != "tv-admm") throw InvalidArgument("bench: unknown method '" + m + "'");
  }
  const auto lambdas = bench_lambdas(cfg);
  std::vector<int> kappas;
  for (double v : parse_real_list("kappas", cfg.text("kappas"))) {
    if (v < 1 || v != std::floor(v)) throw InvalidArgument("bench: kappa sweep values must be positive integers");
    kappas.push_back(static_cast<int>(v));
  }
  const auto epss = parse_real_list("eps_sweep", cfg.text("eps_sweep"));
  const bool sweeps = std::find(methods.begin(), methods.end(), "mptv") != methods.end();

  for (std::size_t i = 0; i < rep.instances.size(); ++i) {
    for (std::size_t k = 0; k < rep.kernels.size(); ++k) {
      for (const auto& m : methods) {
        for (double l : lambdas) rep.rows.push_back({SweepKind::kMain, i, k, m, l});
      }
      if (!sweeps) continue;
      for (int kap : kappas) {
        BenchRow r{SweepKind::kKappa, i, k, "mptv", cfg.real("lambda")};
        r.kappa = kap;
        rep.rows.push_back(r);
      }
      for (double e : epss) {
        BenchRow r{SweepKind::kEps, i, k, "mptv", cfg.real("lambda")};
        r.eps = e;
        rep.rows.push_back(r);
      }
    }
  }
  parallel_for(rep.rows.size(), threads, [&](std::size_t j) { run_bench_row(cfg, rep.instances, rep.kernels, rep.rows[j]); });
  return rep;
}

namespace bench_detail {

inline std::string row_prefix(const BenchReport& rep, const BenchRow& r) {
  return csv_field(rep.instances[r.instance].id) + "," + csv_field(rep.kernels[r.kernel].id);
}

inline std::string metrics(const BenchRow& r) {
  return fmt("%.6f", r.psnr) + "," + fmt("%.6f", r.ssim);
}

}  // namespace bench_detail

/// One row per (instance, kernel, method, lambda).
inline std::string bench_main_csv(const BenchReport& rep) {
  std::string out = rep.config.serialize();
  out += "instance,kernel,method,lambda,psnr,ssim,time_s,outer_iterations,inner_iterations,kappa,support_fraction,status\n";
  for (const auto& r : rep.rows) {
    if (r.kind != SweepKind::kMain) continue;
    out += bench_detail::row_prefix(rep, r) + "," + r.method + "," + fmt("%.6g", r.lambda) + "," +
           bench_detail::metrics(r) + "," + fmt("%.4f", r.seconds) + "," + std::to_string(r.outer) + "," +
           std::to_string(r.inner) + "," + std::to_string(r.kappa) + "," + fmt("%.6f", r.support_fraction) +
           "," + csv_field(r.status) + "\n";
  }
  return out;
}

/// PSNR against lambda, one column per method, averaged over instances.
inline std::string bench_lambda_csv(const BenchReport& rep) {
  const auto methods = split_list(rep.config.text("methods"), ',');
  const auto lambdas = bench_lambdas(rep.config);
  std::string out = rep.config.serialize();
  out += "kernel,lambda";
  for (const auto& m : methods) out += ",psnr_" + m;
  out += "\n";
  for (std::size_t k = 0; k < rep.kernels.size(); ++k) {
    for (double l : lambdas) {
      out += csv_field(rep.kernels[k].id) + "," + fmt("%.6g", l);
      for (const auto& m : methods) {
        double acc = 0.0;
        int n = 0;
        for (const auto& r : rep.rows) {
          if (r.kind == SweepKind::kMain && r.kernel == k && r.method == m && r.lambda == l && r.status == "ok") {
            acc += r.psnr;
            ++n;
          }
        }
        out += "," + (n ? fmt("%.6f", acc / n) : std::string("nan"));
      }
      out += "\n";
    }
  }
  return out;
}

inline std::string bench_sweep_csv(const BenchReport& rep, SweepKind kind) {
  std::string out = rep.config.serialize();
  out += std::string("instance,kernel,") + (kind == SweepKind::kKappa ? "kappa" : "eps") +
         ",psnr,ssim,time_s,outer_iterations,support_fraction,status\n";
  for (const auto& r : rep.rows) {
    if (r.kind != kind) continue;
    out += bench_detail::row_prefix(rep, r) + "," +
           (kind == SweepKind::kKappa ? std::to_string(r.kappa) : fmt("%.6g", r.eps)) + "," +
           bench_detail::metrics(r) + "," + fmt("%.4f", r.seconds) + "," + std::to_string(r.outer) + "," +
           fmt("%.6f", r.support_fraction) + "," + csv_field(r.status) + "\n";
  }
  return out;
}

/// Per outer iteration of an MPTV run.
inline std::string diagnostics_csv(const RunConfig& cfg, const MptvDiagnostics& d) {
  std::string out = cfg.serialize();
  out += "# kappa=" + std::to_string(d.kappa) + "\n# stop=" + to_string(d.stop) + "\n";
  out += "iteration,psi,subproblem_objective,fit_norm,dual_proxy,activated,support,inner_iterations,off_support_ratio,time_s\n";
  for (const auto& r : d.iterations) {
    out += std::to_string(r.iteration) + "," + fmt("%.12g", r.psi) + "," + fmt("%.12g", r.subproblem_objective) +
           "," + fmt("%.12g", r.fit_norm) + "," + fmt("%.12g", r.dual_proxy) + "," + std::to_string(r.activated) +
           "," + std::to_string(r.support) + "," + std::to_string(r.inner_iterations) + "," +
           fmt("%.6g", r.off_support_ratio) + "," + fmt("%.4f", r.seconds) + "\n";
  }
  return out;
}

}  // namespace mptv
