#pragma once

// Shared value types for the intent-prediction pipeline: channel/band schema,
// trials, stage paths, and the exception hierarchy every module throws from.

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace eegintent {

// ---------------------------------------------------------------------------
// Errors. The CLI maps each family onto a distinct exit code.
// ---------------------------------------------------------------------------

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Channel / band schema
// ---------------------------------------------------------------------------

enum class Channel : int { AF3, F7, F3, FC5, T7, P7, O1, O2, P8, T8, FC6, F4, F8, AF4 };
enum class Band : int { Theta, Alpha, LowBeta, HighBeta, Gamma };

inline constexpr std::size_t kNumChannels = 14;
inline constexpr std::size_t kNumBands = 5;
inline constexpr std::size_t kNumFeatures = kNumChannels * kNumBands;
inline constexpr double kFeatureRateHz = 8.0;
inline constexpr double kRawSampleRateHz = 128.0;
inline constexpr int kNumStages = 4;

inline constexpr std::array<std::string_view, kNumChannels> kChannelNames = {
    "AF3", "F7", "F3", "FC5", "T7", "P7", "O1", "O2", "P8", "T8", "FC6", "F4", "F8", "AF4"};
inline constexpr std::array<std::string_view, kNumBands> kBandNames = {
    "theta", "alpha", "low_beta", "high_beta", "gamma"};

struct BandDefinition {
  Band band;
  double low_hz;
  double high_hz;
  bool high_inclusive;  // only gamma closes its upper edge

  [[nodiscard]] bool contains(double hz) const {
    return hz >= low_hz && (high_inclusive ? hz <= high_hz : hz < high_hz);
  }
};

inline constexpr std::array<BandDefinition, kNumBands> kBands = {{
    {Band::Theta, 4.0, 8.0, false},
    {Band::Alpha, 8.0, 12.0, false},
    {Band::LowBeta, 12.0, 16.0, false},
    {Band::HighBeta, 16.0, 25.0, false},
    {Band::Gamma, 25.0, 45.0, true},
}};

struct ChannelBandKey {
  Channel channel;
  Band band;

  friend bool operator==(const ChannelBandKey&, const ChannelBandKey&) = default;
};

/// Flat column index: channel_index * 5 + band_index.
constexpr std::size_t feature_index(ChannelBandKey key) {
  return static_cast<std::size_t>(key.channel) * kNumBands + static_cast<std::size_t>(key.band);
}

/// Inverse of feature_index. Throws std::out_of_range for index >= 70.
ChannelBandKey feature_key(std::size_t index);

/// "F4.high_beta" style column label.
std::string feature_name(std::size_t index);
std::string feature_name(ChannelBandKey key);

/// Parses "F4.high_beta" (also accepts "F4-high_beta"). Throws ConfigError.
ChannelBandKey parse_feature(std::string_view text);

inline constexpr ChannelBandKey kDefaultFeature{Channel::F4, Band::HighBeta};

// ---------------------------------------------------------------------------
// Trials
// ---------------------------------------------------------------------------

enum class Scenario : int { None, Sparse, Busy, SurfaceMarked, Signalized };

inline constexpr std::array<std::string_view, 5> kScenarioNames = {
    "None", "Sparse", "Busy", "SurfaceMarked", "Signalized"};

std::string_view scenario_name(Scenario s);
/// Throws DataError on an unknown name.
Scenario parse_scenario(std::string_view text);

/// Rows are frames at 8 Hz from stimulus onset to key press; columns follow
/// feature_index.
using FrameMatrix = Eigen::MatrixXd;

struct BandPowerTrial {
  std::string trial_id;
  std::string subject_id;
  Scenario scenario = Scenario::None;
  double feature_rate_hz = kFeatureRateHz;
  FrameMatrix frames;
  double response_time_s = 0.0;

  [[nodiscard]] std::size_t num_frames() const { return static_cast<std::size_t>(frames.rows()); }
};

struct Violation {
  enum class Kind { FrameCount, NonFinite, Negative, ColumnCount, Rate, ResponseTime };
  Kind kind;
  std::optional<std::size_t> frame;
  std::optional<std::size_t> feature;
  std::string message;
};

/// Empty result means the trial is valid.
std::vector<Violation> validate_trial(const BandPowerTrial& trial);

/// Joins violation messages, one per line.
std::string describe(const std::vector<Violation>& violations);

/// Decoded latent stage per frame, values in [0, n_states).
using StagePath = std::vector<int>;

}  // namespace eegintent
