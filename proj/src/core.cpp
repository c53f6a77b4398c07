#include "eegintent/core.hpp"

#include <cmath>
#include <sstream>

namespace eegintent {

ChannelBandKey feature_key(std::size_t index) {
  if (index >= kNumFeatures) {
    throw std::out_of_range("feature index " + std::to_string(index) + " out of range");
  }
  return {static_cast<Channel>(index / kNumBands), static_cast<Band>(index % kNumBands)};
}

std::string feature_name(ChannelBandKey key) {
  std::string out(kChannelNames[static_cast<std::size_t>(key.channel)]);
  out += '.';
  out += kBandNames[static_cast<std::size_t>(key.band)];
  return out;
}

std::string feature_name(std::size_t index) { return feature_name(feature_key(index)); }

ChannelBandKey parse_feature(std::string_view text) {
  const auto sep = text.find_first_of(".-");
  if (sep == std::string_view::npos) {
    throw ConfigError("feature '" + std::string(text) + "' is not of the form CHANNEL.band");
  }
  const auto channel = text.substr(0, sep);
  const auto band = text.substr(sep + 1);
  std::optional<std::size_t> ci, bi;
  for (std::size_t i = 0; i < kNumChannels; ++i) {
    if (kChannelNames[i] == channel) ci = i;
  }
  for (std::size_t i = 0; i < kNumBands; ++i) {
    if (kBandNames[i] == band) bi = i;
  }
  if (!ci || !bi) {
    throw ConfigError("unknown feature '" + std::string(text) + "'");
  }
  return {static_cast<Channel>(*ci), static_cast<Band>(*bi)};
}

std::string_view scenario_name(Scenario s) { return kScenarioNames[static_cast<std::size_t>(s)]; }

Scenario parse_scenario(std::string_view text) {
  for (std::size_t i = 0; i < kScenarioNames.size(); ++i) {
    if (kScenarioNames[i] == text) return static_cast<Scenario>(i);
  }
  throw DataError("unknown scenario '" + std::string(text) + "'");
}

std::vector<Violation> validate_trial(const BandPowerTrial& trial) {
  std::vector<Violation> out;
  if (trial.feature_rate_hz != kFeatureRateHz) {
    std::ostringstream msg;
    msg << "feature rate " << trial.feature_rate_hz << " Hz, expected " << kFeatureRateHz;
    out.push_back({Violation::Kind::Rate, std::nullopt, std::nullopt, msg.str()});
  }
  if (!(trial.response_time_s > 0.0) || !std::isfinite(trial.response_time_s)) {
    out.push_back({Violation::Kind::ResponseTime, std::nullopt, std::nullopt,
                   "response time must be a positive finite number of seconds"});
  } else {
    const double expected = std::round(trial.response_time_s * trial.feature_rate_hz);
    const double actual = static_cast<double>(trial.frames.rows());
    if (std::abs(actual - expected) > 1.0) {
      std::ostringstream msg;
      msg << "frame count " << trial.frames.rows() << " inconsistent with response time "
          << trial.response_time_s << " s (expected " << expected << "±1)";
      out.push_back({Violation::Kind::FrameCount, std::nullopt, std::nullopt, msg.str()});
    }
  }
  if (static_cast<std::size_t>(trial.frames.cols()) != kNumFeatures) {
    out.push_back({Violation::Kind::ColumnCount, std::nullopt, std::nullopt,
                   "expected 70 feature columns, got " + std::to_string(trial.frames.cols())});
    return out;
  }
  for (Eigen::Index r = 0; r < trial.frames.rows(); ++r) {
    for (Eigen::Index c = 0; c < trial.frames.cols(); ++c) {
      const double v = trial.frames(r, c);
      const auto frame = static_cast<std::size_t>(r);
      const auto feature = static_cast<std::size_t>(c);
      if (!std::isfinite(v)) {
        out.push_back({Violation::Kind::NonFinite, frame, feature,
                       "non-finite power at frame " + std::to_string(r) + ", feature " +
                           std::to_string(c) + " (" + feature_name(feature) + ")"});
      } else if (v < 0.0) {
        out.push_back({Violation::Kind::Negative, frame, feature,
                       "negative power at frame " + std::to_string(r) + ", feature " +
                           std::to_string(c) + " (" + feature_name(feature) + ")"});
      }
    }
  }
  return out;
}

std::string describe(const std::vector<Violation>& violations) {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += '\n';
    out += v.message;
  }
  return out;
}

}  // namespace eegintent
