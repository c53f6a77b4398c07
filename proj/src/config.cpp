#include "eegintent/config.hpp"

#include "eegintent/util.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace eegintent {

std::string_view fit_scope_name(FitScope s) { return s == FitScope::PerTrial ? "per-trial" : "pooled"; }

FitScope parse_fit_scope(std::string_view s) {
  if (s == "per-trial") return FitScope::PerTrial;
  if (s == "pooled") return FitScope::Pooled;
  throw ConfigError("unknown scope '" + std::string(s) + "' (expected per-trial|pooled)");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("bad value '" + v + "' for " + key);
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(out)) throw ConfigError("bad value '" + v + "' for " + key);
  }
  return out;
}

int parse_positive(const std::string& key, const std::string& v) {
  const int n = parse_number<int>(key, v);
  if (n < 1) throw ConfigError(key + " must be >= 1");
  return n;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("bad boolean '" + v + "' for " + key);
}

}  // namespace

const std::vector<std::string>& run_config_keys() {
  static const std::vector<std::string> keys = {
      "paths.manifest",       "paths.output_dir",     "seed",
      "jobs",                 "pca.n_components",     "pca.scope",
      "hmm.n_states",         "hmm.tol",              "hmm.max_iter",
      "hmm.scope",            "hmm.covariance",       "windowing.feature",
      "windowing.configs",    "windowing.grid_stride", "windowing.adasyn_k",
      "windowing.beta",       "classifier.k",         "classifier.lower_bound_pruning",
      "eval.n_folds",         "eval.split",           "stats.alpha",
      "synth.n_subjects",     "synth.trials_per_subject", "synth.ramp_amplitude",
      "synth.ramp_frames",    "synth.noise_sigma",
  };
  return keys;
}

void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  const std::string& v = value;
  if (key == "paths.manifest") {
    c.manifest = v;
  } else if (key == "paths.output_dir") {
    c.output_dir = v;
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, v);
  } else if (key == "jobs") {
    c.jobs = static_cast<unsigned>(parse_positive(key, v));
  } else if (key == "pca.n_components") {
    c.pca_components = parse_positive(key, v);
  } else if (key == "pca.scope") {
    c.pca_scope = parse_fit_scope(v);
  } else if (key == "hmm.n_states") {
    c.hmm_states = parse_positive(key, v);
  } else if (key == "hmm.tol") {
    c.hmm_tol = parse_number<double>(key, v);
    if (c.hmm_tol <= 0.0) throw ConfigError("hmm.tol must be positive");
  } else if (key == "hmm.max_iter") {
    c.hmm_max_iter = parse_positive(key, v);
  } else if (key == "hmm.scope") {
    c.hmm_scope = parse_fit_scope(v);
  } else if (key == "hmm.covariance") {
    if (v == "diagonal") {
      c.hmm_covariance = CovarianceType::Diagonal;
    } else if (v == "full") {
      c.hmm_covariance = CovarianceType::Full;
    } else {
      throw ConfigError("hmm.covariance must be diagonal or full");
    }
  } else if (key == "windowing.feature") {
    try {
      c.feature = parse_feature(v);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "windowing.configs") {
    resolve_window_configs(v, c.grid_stride);
    c.window_configs = v;
  } else if (key == "windowing.grid_stride") {
    c.grid_stride = parse_positive(key, v);
  } else if (key == "windowing.adasyn_k") {
    c.adasyn_k = parse_positive(key, v);
  } else if (key == "windowing.beta") {
    c.adasyn_beta = parse_number<double>(key, v);
    if (c.adasyn_beta < 0.0) throw ConfigError("windowing.beta must be nonnegative");
  } else if (key == "classifier.k") {
    c.classifier_k = parse_positive(key, v);
  } else if (key == "classifier.lower_bound_pruning") {
    c.lower_bound_pruning = parse_bool(key, v);
  } else if (key == "eval.n_folds") {
    c.n_folds = parse_positive(key, v);
    if (c.n_folds < 2) throw ConfigError("eval.n_folds must be >= 2");
  } else if (key == "eval.split") {
    c.split = parse_split_mode(v);
  } else if (key == "stats.alpha") {
    c.alpha = parse_number<double>(key, v);
    if (c.alpha <= 0.0 || c.alpha >= 1.0) throw ConfigError("stats.alpha must lie in (0, 1)");
  } else if (key == "synth.n_subjects") {
    c.synth_subjects = parse_positive(key, v);
  } else if (key == "synth.trials_per_subject") {
    c.synth_trials_per_subject = parse_positive(key, v);
  } else if (key == "synth.ramp_amplitude") {
    c.synth_ramp_amplitude = parse_number<double>(key, v);
  } else if (key == "synth.ramp_frames") {
    c.synth_ramp_frames = parse_number<int>(key, v);
    if (c.synth_ramp_frames < 0) throw ConfigError("synth.ramp_frames must be nonnegative");
  } else if (key == "synth.noise_sigma") {
    c.synth_noise_sigma = parse_number<double>(key, v);
    if (c.synth_noise_sigma < 0.0) throw ConfigError("synth.noise_sigma must be nonnegative");
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    try {
      set_config_value(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::vector<std::pair<std::string, std::string>> to_key_values(const RunConfig& c) {
  const auto cov = c.hmm_covariance == CovarianceType::Diagonal ? "diagonal" : "full";
  return {
      {"paths.manifest", c.manifest.generic_string()},
      {"paths.output_dir", c.output_dir.generic_string()},
      {"seed", std::to_string(c.seed)},
      {"jobs", std::to_string(c.jobs)},
      {"pca.n_components", std::to_string(c.pca_components)},
      {"pca.scope", std::string(fit_scope_name(c.pca_scope))},
      {"hmm.n_states", std::to_string(c.hmm_states)},
      {"hmm.tol", format_double(c.hmm_tol)},
      {"hmm.max_iter", std::to_string(c.hmm_max_iter)},
      {"hmm.scope", std::string(fit_scope_name(c.hmm_scope))},
      {"hmm.covariance", cov},
      {"windowing.feature", feature_name(c.feature)},
      {"windowing.configs", c.window_configs},
      {"windowing.grid_stride", std::to_string(c.grid_stride)},
      {"windowing.adasyn_k", std::to_string(c.adasyn_k)},
      {"windowing.beta", format_double(c.adasyn_beta)},
      {"classifier.k", std::to_string(c.classifier_k)},
      {"classifier.lower_bound_pruning", c.lower_bound_pruning ? "true" : "false"},
      {"eval.n_folds", std::to_string(c.n_folds)},
      {"eval.split", std::string(split_mode_name(c.split))},
      {"stats.alpha", format_double(c.alpha)},
      {"synth.n_subjects", std::to_string(c.synth_subjects)},
      {"synth.trials_per_subject", std::to_string(c.synth_trials_per_subject)},
      {"synth.ramp_amplitude", format_double(c.synth_ramp_amplitude)},
      {"synth.ramp_frames", std::to_string(c.synth_ramp_frames)},
      {"synth.noise_sigma", format_double(c.synth_noise_sigma)},
  };
}

WindowConfig parse_window_config(const std::string& text) {
  const std::string t = trim(text);
  const auto colon = t.find(':');
  if (colon == std::string::npos) throw ConfigError("window config '" + t + "' must look like L:S");
  WindowConfig w{parse_number<int>("window length", trim(t.substr(0, colon))),
                 parse_number<int>("window stride", trim(t.substr(colon + 1)))};
  check_window(w);
  return w;
}

std::vector<WindowConfig> resolve_window_configs(const std::string& spec, int grid_stride) {
  const std::string s = trim(spec);
  if (s == "reference") return kReferenceWindowConfigs;
  if (s == "reference+grid") return default_sweep_configs(grid_stride);
  if (s == "grid") {
    std::vector<WindowConfig> out;
    for (int len : window_grid()) out.push_back({len, grid_stride});
    return out;
  }
  std::vector<WindowConfig> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto w = parse_window_config(item);
    if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(w);
  }
  if (out.empty()) throw ConfigError("no window configurations given");
  return out;
}

CvOptions cv_options(const RunConfig& c) {
  CvOptions o;
  o.k = c.classifier_k;
  o.n_folds = c.n_folds;
  o.seed = c.seed;
  o.split = c.split;
  o.adasyn_k = c.adasyn_k;
  o.adasyn_beta = c.adasyn_beta;
  o.lower_bound_pruning = c.lower_bound_pruning;
  o.jobs = c.jobs;
  return o;
}

}  // namespace eegintent
