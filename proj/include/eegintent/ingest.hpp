#pragma once

// Trial loading, FFT band-power extraction and synthetic data generation.

#include "eegintent/core.hpp"
#include "eegintent/hmm.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace eegintent {

// ---------------------------------------------------------------------------
// On-disk trials
// ---------------------------------------------------------------------------

struct TrialManifestEntry {
  std::string trial_id;
  std::string subject_id;
  Scenario scenario = Scenario::None;
  double response_time_s = 0.0;
  std::string data_path;  // relative to the manifest's directory
};

/// Reads a JSON-lines manifest. Blank lines are skipped.
std::vector<TrialManifestEntry> read_manifest(const std::filesystem::path& manifest_path);
void write_manifest(const std::filesystem::path& manifest_path,
                    const std::vector<TrialManifestEntry>& entries);

/// Frame CSV header: t,AF3.theta,...,AF4.gamma (71 columns).
std::string frame_csv_header();

/// Parses a frame CSV. Every line, header included, must have 71 columns;
/// errors carry the 1-based line number.
FrameMatrix read_frame_csv(const std::filesystem::path& path);
void write_frame_csv(const std::filesystem::path& path, const FrameMatrix& frames,
                     double rate_hz = kFeatureRateHz);

/// One validated trial per manifest entry, in manifest order.
std::vector<BandPowerTrial> load_trials(const std::filesystem::path& manifest_path);

/// Writes manifest.jsonl plus frames/<trial_id>.csv under `dir`.
void save_trials(const std::filesystem::path& dir, const std::vector<BandPowerTrial>& trials);

// ---------------------------------------------------------------------------
// Band power from raw voltage
// ---------------------------------------------------------------------------

struct RawRecording {
  double sample_rate_hz = kRawSampleRateHz;
  std::array<std::vector<double>, kNumChannels> channels;
};

inline constexpr double kDefaultPowerWindowS = 2.0;
inline constexpr double kDefaultPowerHopS = 0.125;

/// Hann-windowed FFT band power. Frame f covers the window ending at sample
/// window_len - 1 + f * hop; each (channel, band) cell is the mean one-sided
/// bin power over bins whose centre frequency lies in the band. Bin powers
/// are normalised so their sum equals the mean square of the windowed signal.
FrameMatrix extract_band_power(const RawRecording& raw, double window_s = kDefaultPowerWindowS,
                               double hop_s = kDefaultPowerHopS);

// ---------------------------------------------------------------------------
// Synthetic datasets with known ground truth
// ---------------------------------------------------------------------------

struct SynthConfig {
  HmmModel truth_model;  // 4 states over 5 latent dimensions
  int n_subjects = 12;
  int trials_per_subject = 5;
  double mean_duration_s = 4.0;
  double duration_jitter_s = 1.5;  // durations uniform in mean +/- jitter
  std::uint64_t seed = 0;
  Eigen::MatrixXd loading_matrix;  // 5 x 70
  double noise_sigma = 0.5;
  // Trailing frames forced into the execution state (index 3).
  int terminal_state_frames = 4;
  // Linear ramp added to one feature over the final frames of every trial.
  ChannelBandKey ramp_feature = kDefaultFeature;
  double ramp_amplitude = 0.0;
  int ramp_frames = 0;
};

/// Separated 4-state model, random loading drawn from `seed`, ramp enabled.
SynthConfig default_synth_config(std::uint64_t seed);

struct SynthTruth {
  std::string trial_id;
  StagePath states;
  Eigen::MatrixXd latent_scores;  // T x 5
};

struct SynthResult {
  std::vector<BandPowerTrial> trials;
  std::vector<SynthTruth> truth;
  double offset = 0.0;  // constant added to every power value
};

/// Deterministic given config.seed. Throws ConfigError for an invalid config.
SynthResult synth_generate(const SynthConfig& config);

}  // namespace eegintent
