#pragma once

#include "eegintent/core.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace eegintent {

struct WindowConfig {
  int length_frames = 0;
  int stride_frames = 0;

  [[nodiscard]] double lookahead_s(double rate_hz = kFeatureRateHz) const { return length_frames / rate_hz; }
  friend bool operator==(const WindowConfig&, const WindowConfig&) = default;
};

/// Throws ConfigError unless length >= 2 and stride >= 1.
void check_window(const WindowConfig& cfg);

/// The four window configurations evaluated in the reference sweep.
inline const std::vector<WindowConfig> kReferenceWindowConfigs = {{5, 9}, {8, 9}, {9, 3}, {11, 7}};

/// A window over a (possibly multivariate) feature sequence. `values` holds
/// length x dims entries, frame-major.
struct LabeledSegment {
  std::string source_trial_id;
  std::optional<int> start_frame;  // empty for synthetic segments
  std::vector<double> values;
  int dims = 1;
  int label = 0;
  bool synthetic = false;

  [[nodiscard]] int length() const { return static_cast<int>(values.size()) / dims; }
};

/// Windows start at 0, S, 2S, ...; if none ends on the final frame an
/// end-anchored window at N - L is appended. Only the window ending on the
/// final frame is labelled 1. `sequence` holds n_frames x dims values.
std::vector<LabeledSegment> slide(std::span<const double> sequence, const WindowConfig& cfg,
                                  const std::string& trial_id = {}, int dims = 1);

/// Closed-form window count for a sequence of n frames.
std::size_t expected_window_count(std::size_t n, const WindowConfig& cfg);

/// Window lengths from 0.25 s to 2 s in 0.125 s steps, converted to frames.
std::vector<int> window_grid(double rate_hz = kFeatureRateHz);

/// Extracts one feature column (or several, frame-major) from a trial.
std::vector<double> feature_sequence(const BandPowerTrial& trial, std::span<const std::size_t> features);

struct AdasynOptions {
  int k_neighbors = 5;
  double beta = 1.0;
  std::uint64_t seed = 0;
};

/// Returns the input followed by G = floor(beta * (N_maj - N_min)) synthetic
/// minority samples. Counts are apportioned by largest remainder so their
/// total is exactly G; with no majority neighbours anywhere the apportionment
/// is uniform.
std::vector<LabeledSegment> adasyn(const std::vector<LabeledSegment>& segments, const AdasynOptions& options);

/// CSV: trial_id,start_frame,label,synthetic,v0..v{L*dims-1}
void write_segments_csv(const std::filesystem::path& path, const std::vector<LabeledSegment>& segments);
std::vector<LabeledSegment> read_segments_csv(const std::filesystem::path& path, int dims = 1);

}  // namespace eegintent
