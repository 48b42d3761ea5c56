#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "mptv/admm.hpp"
#include "mptv/bench.hpp"
#include "mptv/config.hpp"
#include "mptv/demo1d.hpp"
#include "mptv/image_io.hpp"
#include "mptv/mptv.hpp"
#include "mptv/synth.hpp"

namespace mptv::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kBadInput = 2, kDiverged = 3 };

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
  if (!out) throw IoError("write failed for '" + path + "'");
}

/// Path without its extension.
inline std::string stem_of(const std::string& path) {
  const std::filesystem::path p(path);
  return (p.parent_path() / p.stem()).string();
}

inline std::string extension_of(const std::string& path) {
  return std::filesystem::path(path).extension().string();
}

inline const std::string& required(const RunConfig& cfg, const std::string& key) {
  const std::string& v = cfg.text(key);
  if (v.empty()) throw InvalidArgument("missing required key '" + key + "'");
  return v;
}

/// Maps exceptions onto the exit-code contract.
template <class F>
int guarded(F&& body, std::ostream& err) {
  try {
    return body();
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kDiverged;
  } catch (const IllPosedUpdate& e) {
    err << "error: " << e.what() << "\n";
    return kDiverged;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

inline ChannelImage read_observation(const std::string& path) {
  if (!std::filesystem::exists(path)) throw IoError("cannot open '" + path + "'");
  if (extension_of(path) == ".txt") return ChannelImage{{read_matrix_text(path)}};
  return read_image(path);
}

inline void write_result(const std::string& path, const ChannelImage& img) {
  if (extension_of(path) == ".txt") {
    if (!img.grayscale()) throw IoError("'" + path + "': text output must be grayscale");
    write_matrix_text(path, img.channels.front());
    return;
  }
  write_image(path, img);
}

struct DeblurOutput {
  ChannelImage x;
  std::string diagnostics;
};

/// MPTV runs on the luminance; each channel of a color image is then solved on
/// the luminance support.
inline DeblurOutput deblur(const ChannelImage& y, const BlurKernel& k, const RunConfig& cfg) {
  if (y.channels.empty()) throw InvalidArgument("deblur: empty image");
  const Dims dims = y.dims();
  if (!k.fits(dims)) throw DimensionMismatch("deblur: kernel " + to_string(k.dims()) + " exceeds image " + to_string(dims));
  const FrequencyPlan plan(dims, k);
  DeblurOutput out;
  if (cfg.text("method") == "tv-admm") {
    const AdmmConfig ac = cfg.inner();
    std::string csv = cfg.serialize() + "channel,iterations,fit_norm,psi\n";
    for (std::size_t c = 0; c < y.channels.size(); ++c) {
      AdmmState st;
      ImageGrid x = tv_admm(y.channels[c], plan, ac, &st);
      csv += std::to_string(c) + "," + std::to_string(st.iter) + "," + fmt("%.12g", st.fit_history.back()) + "," +
             fmt("%.12g", outer_objective(x, y.channels[c], plan, ac.lambda)) + "\n";
      out.x.channels.push_back(std::move(x));
    }
    out.diagnostics = std::move(csv);
    return out;
  }
  const SolverConfig sc = cfg.solver(cfg.refine_for(dims, false));
  MptvResult res = mptv::mptv(y.luminance(), plan, sc);
  out.diagnostics = diagnostics_csv(cfg, res.diagnostics);
  if (y.grayscale()) {
    out.x.channels.push_back(std::move(res.x));
    return out;
  }
  for (const ImageGrid& ch : y.channels) {
    if (res.diagnostics.support.empty()) {
      out.x.channels.push_back(ImageGrid::constant(dims, ch.mean()));
      continue;
    }
    out.x.channels.push_back(
        solve_subproblem(ch, plan, res.diagnostics.support, sc.effective_inner(), ImageGrid::constant(dims, ch.mean()))
            .first);
  }
  return out;
}

inline int cmd_deblur(const RunConfig& cfg, std::ostream& log = std::cout) {
  const std::string& in = required(cfg, "input");
  const std::string& kpath = required(cfg, "kernel");
  const std::string& outp = required(cfg, "output");
  const std::string diag = cfg.text("diagnostics").empty() ? outp + ".csv" : cfg.text("diagnostics");
  if (!std::filesystem::exists(kpath)) throw IoError("cannot open kernel file '" + kpath + "'");
  const BlurKernel k = load_kernel_file(kpath);
  const ChannelImage y = read_observation(in);
  const DeblurOutput res = deblur(y, k, cfg);
  write_result(outp, res.x);
  try {
    write_text(diag, res.diagnostics);
  } catch (...) {
    std::filesystem::remove(outp);
    throw;
  }
  log << "wrote " << outp << " and " << diag << "\n";
  return kOk;
}

inline int cmd_synth(const RunConfig& cfg, std::ostream& log = std::cout) {
  const std::string& outp = required(cfg, "output");
  const std::string ext = extension_of(outp);
  if (ext != ".png" && ext != ".pgm") throw InvalidArgument("synth: output must be .png or .pgm");
  const BlurKernel k = make_kernel(parse_kernel_spec(cfg.text("psf")));
  const auto noise_seed = static_cast<std::uint64_t>(cfg.integer("noise_seed"));

  ChannelImage clean;
  std::optional<Phantom> phantom;
  if (!cfg.text("clean").empty()) {
    clean = read_observation(cfg.text("clean"));
  } else {
    const auto seed = static_cast<std::uint64_t>(cfg.integer("seed"));
    if (cfg.text("phantom") == "1d") {
      phantom = make_1d_signal(cfg.size().height, cfg.integer("jumps"), seed);
    } else {
      phantom = make_sparse_image(cfg.size(), cfg.integer("shapes"), seed);
    }
    clean.channels.push_back(phantom->image);
  }
  if (!k.fits(clean.dims())) throw InvalidArgument("synth: kernel larger than the image");
  const FrequencyPlan plan(clean.dims(), k);
  ChannelImage y;
  for (std::size_t c = 0; c < clean.channels.size(); ++c) {
    y.channels.push_back(degrade(clean.channels[c], plan, cfg.real("noise"), noise_seed + c));
  }

  const std::string stem = stem_of(outp);
  write_image(outp, y);
  if (y.grayscale()) write_matrix_text(stem + ".y.txt", y.channels.front());
  write_image(stem + ".clean" + ext, clean);
  write_matrix_text(stem + ".kernel.txt", kernel_as_grid(k));
  if (phantom) {
    ImageGrid s(clean.dims());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = phantom->gradient_support[i];
    write_image(stem + ".support" + ext, s);
  }
  std::string manifest;
  for (const auto& [key, v] : cfg.entries()) manifest += key + " = " + v + "\n";
  write_text(stem + ".manifest.txt", manifest);
  log << "wrote " << outp << " (+ .y.txt, .clean, .kernel.txt" << (phantom ? ", .support" : "")
      << ", .manifest.txt)\n";
  return kOk;
}

inline int cmd_bench(const RunConfig& cfg, std::ostream& log = std::cout) {
  const std::string outp = cfg.text("output").empty() ? "bench.csv" : cfg.text("output");
  const BenchReport rep = run_bench(cfg);
  const std::string stem = stem_of(outp);
  write_text(outp, bench_main_csv(rep));
  write_text(stem + "_lambda.csv", bench_lambda_csv(rep));
  write_text(stem + "_kappa.csv", bench_sweep_csv(rep, SweepKind::kKappa));
  write_text(stem + "_eps.csv", bench_sweep_csv(rep, SweepKind::kEps));
  std::size_t failed = 0;
  for (const auto& r : rep.rows) failed += r.status != "ok";
  log << "bench: " << rep.rows.size() << " rows, " << failed << " failed; wrote " << outp << ", " << stem
      << "_lambda.csv, " << stem << "_kappa.csv, " << stem << "_eps.csv\n";
  return rep.all_failed() ? kFailure : kOk;
}

inline int cmd_demo1d(const RunConfig& cfg, std::ostream& log = std::cout) {
  const std::string outp = cfg.text("output").empty() ? "demo1d.csv" : cfg.text("output");
  const Demo1dResult r = run_demo1d(cfg);
  const std::string stem = stem_of(outp);
  const std::string summary = demo1d_summary_csv(cfg, r);
  write_text(outp, demo1d_signal_csv(cfg, r));
  write_text(stem + "_summary.csv", summary);
  write_text(stem + "_diagnostics.csv", diagnostics_csv(cfg, r.diagnostics));
  log << summary.substr(summary.find("method,"));
  return kOk;
}

inline int run(const RunConfig& cfg, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  return guarded(
      [&] {
        switch (cfg.command()) {
          case Command::kDeblur: return cmd_deblur(cfg, log);
          case Command::kSynth: return cmd_synth(cfg, log);
          case Command::kBench: return cmd_bench(cfg, log);
          case Command::kDemo1d: return cmd_demo1d(cfg, log);
        }
        return static_cast<int>(kFailure);
      },
      err);
}

}  // namespace mptv::cli
