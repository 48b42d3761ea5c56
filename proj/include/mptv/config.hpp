#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mptv/admm.hpp"
#include "mptv/error.hpp"
#include "mptv/mptv.hpp"

namespace mptv {

enum class Command { kDeblur, kSynth, kBench, kDemo1d };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::kDeblur: return "deblur";
    case Command::kSynth: return "synth";
    case Command::kBench: return "bench";
    case Command::kDemo1d: return "demo1d";
  }
  return "unknown";
}

enum class ValueKind { kReal, kInt, kText, kChoice, kKappa };

struct ConfigKey {
  std::string name;
  ValueKind kind;
  std::string fallback;
  std::string help;
  std::vector<std::string> choices{};
};

/// Every key a RunConfig accepts, in serialization order.
inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"method", ValueKind::kChoice, "mptv", "solver for deblur", {"mptv", "tv-admm"}},
      {"lambda", ValueKind::kReal, "1e-4", "TV weight"},
      {"rho", ValueKind::kReal, "1e-2", "ADMM penalty"},
      {"r", ValueKind::kReal, "1e-3", "ridge weight of the dual recovery"},
      {"zeta", ValueKind::kReal, "0.6", "kappa rule threshold"},
      {"kappa", ValueKind::kKappa, "auto", "activations per outer step, or auto"},
      {"eps", ValueKind::kReal, "1e-3", "outer stopping tolerance"},
      {"eps_in", ValueKind::kReal, "1e-3", "inner stopping tolerance"},
      {"min_inner", ValueKind::kInt, "10", "minimum inner iterations"},
      {"max_inner", ValueKind::kInt, "100", "maximum inner iterations"},
      {"max_outer", ValueKind::kInt, "7", "maximum outer iterations"},
      {"refine", ValueKind::kChoice, "auto", "support refinement", {"auto", "on", "off"}},
      {"seed", ValueKind::kInt, "7", "phantom seed"},
      {"noise_seed", ValueKind::kInt, "11", "noise seed"},
      {"input", ValueKind::kText, "", "observed image (.png, .pgm or .txt matrix)"},
      {"kernel", ValueKind::kText, "", "kernel file (.txt matrix, .png or .pgm)"},
      {"output", ValueKind::kText, "", "output path"},
      {"diagnostics", ValueKind::kText, "", "diagnostics CSV path (default: output + .csv)"},
      {"clean", ValueKind::kText, "", "clean image for synth instead of a phantom"},
      {"phantom", ValueKind::kChoice, "sparse", "phantom family", {"sparse", "1d"}},
      {"size", ValueKind::kText, "128", "phantom size: N, or HxW"},
      {"shapes", ValueKind::kInt, "8", "rectangles in a sparse phantom"},
      {"jumps", ValueKind::kInt, "4", "jumps in a 1d phantom"},
      {"noise", ValueKind::kReal, "0.003", "noise standard deviation"},
      {"psf", ValueKind::kText, "gaussian(25,1.6)", "blur kernel spec"},
      {"kernels", ValueKind::kText, "gaussian(25,1.6);disk(7);motion(15,45)", "bench kernel specs, ';'-separated"},
      {"methods", ValueKind::kText, "mptv,tv-admm", "bench methods"},
      {"lambdas", ValueKind::kText, "grid", "bench lambda list, or grid for 1e-5 + 5e-5 k, k < 20"},
      {"instances", ValueKind::kInt, "1", "bench phantoms (seeds seed, seed+1, ...)"},
      {"kappas", ValueKind::kText, "250,500,1000,2000,4000", "kappa sweep values"},
      {"eps_sweep", ValueKind::kText, "1e-2,3e-3,1e-3,3e-4,1e-4", "eps sweep values"},
      {"jump_tol", ValueKind::kReal, "1e-3", "demo1d: |Dx| above this counts as a jump"},
  };
  return keys;
}

namespace config_detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_real(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) return std::nullopt;
    return v;
  } catch (const std::logic_error&) {
    return std::nullopt;
  }
}

inline std::optional<long> parse_int(const std::string& s) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) return std::nullopt;
    return v;
  } catch (const std::logic_error&) {
    return std::nullopt;
  }
}

}  // namespace config_detail

inline std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    item = config_detail::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::vector<double> parse_real_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text, ',')) {
    const auto v = config_detail::parse_real(item);
    if (!v) throw InvalidArgument("config key '" + key + "': not a number: '" + item + "'");
    out.push_back(*v);
  }
  return out;
}

/// The 20-point grid 1e-5, 6e-5, ..., 9.6e-4.
inline std::vector<double> default_lambda_grid() {
  std::vector<double> g;
  for (int k = 0; k < 20; ++k) g.push_back(1e-5 + 5e-5 * k);
  return g;
}

/// Flat key=value run configuration. Later sources override earlier ones:
/// command defaults, then a config file, then flags.
class RunConfig {
 public:
  explicit RunConfig(Command cmd) : command_(cmd) {
    for (const auto& k : config_keys()) values_[k.name] = k.fallback;
    if (cmd == Command::kDemo1d) {
      for (const auto& [k, v] : demo1d_defaults()) values_[k] = v;
    }
  }

  /// Tuned for the 1D demonstration; see README.
  static std::vector<std::pair<std::string, std::string>> demo1d_defaults() {
    return {{"lambda", "0.01"},  {"rho", "0.1"},       {"r", "1"},
            {"eps_in", "1e-7"},  {"max_inner", "2000"}, {"kappa", "1"},
            {"refine", "off"},   {"seed", "3"},         {"noise_seed", "103"},
            {"phantom", "1d"},   {"size", "256"},       {"jumps", "4"},
            {"psf", "gaussian1d(21,2)"}, {"output", "demo1d.csv"}};
  }

  Command command() const noexcept { return command_; }

  void set(const std::string& key, const std::string& raw) {
    const ConfigKey* spec = find(key);
    if (spec == nullptr) throw InvalidArgument("unknown config key '" + key + "'");
    const std::string value = config_detail::trim(raw);
    auto fail = [&](const std::string& what) {
      return InvalidArgument("config key '" + key + "': " + what + ", got '" + value + "'");
    };
    switch (spec->kind) {
      case ValueKind::kReal:
        if (!config_detail::parse_real(value)) throw fail("expected a number");
        break;
      case ValueKind::kInt:
        if (!config_detail::parse_int(value)) throw fail("expected an integer");
        break;
      case ValueKind::kChoice:
        if (std::find(spec->choices.begin(), spec->choices.end(), value) == spec->choices.end()) {
          std::string all;
          for (const auto& c : spec->choices) all += (all.empty() ? "" : "|") + c;
          throw fail("expected one of " + all);
        }
        break;
      case ValueKind::kKappa:
        if (value != "auto") {
          const auto v = config_detail::parse_int(value);
          if (!v || *v < 1) throw fail("expected auto or a positive integer");
        }
        break;
      case ValueKind::kText:
        break;
    }
    values_[key] = value;
  }

  /// Lines of key = value; '#' starts a comment.
  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file '" + path + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      line = config_detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw InvalidArgument(path + ":" + std::to_string(lineno) + ": expected key = value");
      }
      set(config_detail::trim(line.substr(0, eq)), line.substr(eq + 1));
    }
  }

  const std::string& text(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw InvalidArgument("unknown config key '" + key + "'");
    return it->second;
  }
  double real(const std::string& key) const { return *config_detail::parse_real(text(key)); }
  int integer(const std::string& key) const { return static_cast<int>(*config_detail::parse_int(text(key))); }

  std::optional<int> kappa() const {
    if (text("kappa") == "auto") return std::nullopt;
    return integer("kappa");
  }

  /// Refinement on for natural 2D images, off for N x 1 signals and
  /// sparse-gradient phantoms, unless forced.
  bool refine_for(Dims dims, bool sparse_source) const {
    const std::string& v = text("refine");
    if (v == "on") return true;
    if (v == "off") return false;
    return !sparse_source && dims.height > 1 && dims.width > 1;
  }

  AdmmConfig inner() const {
    AdmmConfig c;
    c.lambda = real("lambda");
    c.rho = real("rho");
    c.eps_in = real("eps_in");
    c.min_iters = integer("min_inner");
    c.max_iters = integer("max_inner");
    return c;
  }

  SolverConfig solver(bool refine) const {
    SolverConfig c;
    c.lambda = real("lambda");
    c.rho = real("rho");
    c.r = real("r");
    c.zeta = real("zeta");
    c.kappa_override = kappa();
    c.eps_outer = real("eps");
    c.max_outer = integer("max_outer");
    c.refine = refine;
    c.keep_score_maps = false;
    c.inner = inner();
    return c;
  }

  /// Parsed "N" or "HxW".
  Dims size() const {
    const std::string& s = text("size");
    const auto x = s.find('x');
    auto side = [&](const std::string& t) {
      const auto v = config_detail::parse_int(t);
      if (!v || *v < 1) throw InvalidArgument("config key 'size': expected N or HxW, got '" + s + "'");
      return static_cast<std::size_t>(*v);
    };
    if (x == std::string::npos) {
      const std::size_t n = side(s);
      return text("phantom") == "1d" ? Dims{n, 1} : Dims{n, n};
    }
    return Dims{side(s.substr(0, x)), side(s.substr(x + 1))};
  }

  std::vector<std::pair<std::string, std::string>> entries() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& k : config_keys()) out.emplace_back(k.name, values_.at(k.name));
    return out;
  }

  /// One "<prefix>key=value" line per key, starting with the command.
  std::string serialize(const std::string& prefix = "# ") const {
    std::string out = prefix + "command=" + to_string(command_) + "\n";
    for (const auto& [k, v] : entries()) out += prefix + k + "=" + v + "\n";
    return out;
  }

 private:
  static const ConfigKey* find(const std::string& key) {
    for (const auto& k : config_keys()) {
      if (k.name == key) return &k;
    }
    return nullptr;
  }

  Command command_;
  std::map<std::string, std::string> values_;
};

}  // namespace mptv
