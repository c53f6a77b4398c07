#pragma once

// Run configuration: a flat key = value text file with dotted keys.
//
//   # comment
//   seed = 7
//   hmm.scope = pooled
//   windowing.configs = 5:9, 8:9, 9:3, 11:7
//
// Blank lines and lines starting with '#' are ignored; whitespace around
// keys and values is trimmed. Unknown keys and duplicate keys are errors.

#include "eegintent/eval.hpp"
#include "eegintent/hmm.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace eegintent {

enum class FitScope { PerTrial, Pooled };

std::string_view fit_scope_name(FitScope s);
FitScope parse_fit_scope(std::string_view s);

struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;
  unsigned jobs = 1;

  int pca_components = 5;
  FitScope pca_scope = FitScope::PerTrial;

  int hmm_states = 4;
  double hmm_tol = 1e-6;
  int hmm_max_iter = 200;
  FitScope hmm_scope = FitScope::PerTrial;
  CovarianceType hmm_covariance = CovarianceType::Diagonal;

  ChannelBandKey feature = kDefaultFeature;
  // "reference", "grid", "reference+grid", or an explicit L:S list.
  std::string window_configs = "reference";
  int grid_stride = 3;
  int adasyn_k = 5;
  double adasyn_beta = 1.0;

  int classifier_k = 5;
  bool lower_bound_pruning = false;

  int n_folds = 5;
  SplitMode split = SplitMode::Segment;
  double alpha = 0.05;

  int synth_subjects = 12;
  int synth_trials_per_subject = 5;
  double synth_ramp_amplitude = 20.0;
  int synth_ramp_frames = 4;
  double synth_noise_sigma = 0.5;
};

/// Every accepted key, in the order `to_key_values` emits them.
const std::vector<std::string>& run_config_keys();

/// Throws ConfigError for an unknown key or a malformed value.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

/// The effective configuration as key -> value strings.
std::vector<std::pair<std::string, std::string>> to_key_values(const RunConfig& cfg);

/// Parses "5:9, 8:9" or one of the named sets.
std::vector<WindowConfig> resolve_window_configs(const std::string& spec, int grid_stride);
WindowConfig parse_window_config(const std::string& text);

CvOptions cv_options(const RunConfig& cfg);

}  // namespace eegintent
