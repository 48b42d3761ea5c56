#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

#include "mptv/cli.hpp"

namespace {

struct Subcommand {
  mptv::Command command;
  CLI::App* app = nullptr;
  std::string config_file;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
};

void add_keys(Subcommand& sub) {
  sub.app->add_option("--config", sub.config_file, "key = value file; flags override it");
  for (const auto& key : mptv::config_keys()) {
    sub.options[key.name] = sub.app->add_option("--" + key.name, sub.values[key.name], key.help);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Matching-pursuit TV deconvolution"};
  app.require_subcommand(1);
  Subcommand subs[] = {
      {mptv::Command::kDeblur, app.add_subcommand("deblur", "restore an image with a known kernel")},
      {mptv::Command::kSynth, app.add_subcommand("synth", "generate a blurred, noisy test image")},
      {mptv::Command::kBench, app.add_subcommand("bench", "benchmark MPTV against TV-ADMM")},
      {mptv::Command::kDemo1d, app.add_subcommand("demo1d", "1D three-way comparison")},
  };
  for (auto& s : subs) add_keys(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mptv::cli::kBadInput;
  }

  for (auto& s : subs) {
    if (!s.app->parsed()) continue;
    mptv::RunConfig cfg(s.command);
    const int status = mptv::cli::guarded(
        [&] {
          if (!s.config_file.empty()) cfg.load_file(s.config_file);
          for (const auto& [name, opt] : s.options) {
            if (opt->count() > 0) cfg.set(name, s.values[name]);
          }
          return 0;
        },
        std::cerr);
    if (status != 0) return status;
    return mptv::cli::run(cfg);
  }
  return mptv::cli::kBadInput;
}
