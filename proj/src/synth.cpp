#include "eegintent/ingest.hpp"

#include "eegintent/util.hpp"

#include <cmath>
#include <cstdio>
#include <random>

namespace eegintent {

namespace {

constexpr int kLatentDims = 5;
constexpr int kExecutionState = 3;

int sample_categorical(const Eigen::Ref<const Eigen::VectorXd>& p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    r -= p(i);
    if (r < 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(p.size() - 1);
}

void check_config(const SynthConfig& c) {
  check_model(c.truth_model);
  if (c.truth_model.n_states() != kNumStages) throw ConfigError("truth model must have 4 states");
  if (c.truth_model.n_dims() != kLatentDims) throw ConfigError("truth model must emit 5 dimensions");
  if (c.loading_matrix.rows() != kLatentDims ||
      c.loading_matrix.cols() != static_cast<Eigen::Index>(kNumFeatures)) {
    throw ConfigError("loading matrix must be 5 x 70");
  }
  if (c.n_subjects < 1 || c.trials_per_subject < 1) {
    throw ConfigError("n_subjects and trials_per_subject must be >= 1");
  }
  if (!(c.mean_duration_s > 0.0) || c.duration_jitter_s < 0.0 ||
      !(c.mean_duration_s - c.duration_jitter_s > 0.0)) {
    throw ConfigError("durations must stay positive (mean > jitter >= 0)");
  }
  if (c.noise_sigma < 0.0) throw ConfigError("noise_sigma must be nonnegative");
  if (c.terminal_state_frames < 0 || c.ramp_frames < 0) {
    throw ConfigError("frame counts must be nonnegative");
  }
}

}  // namespace

SynthConfig default_synth_config(std::uint64_t seed) {
  SynthConfig c;
  c.seed = seed;
  HmmModel& m = c.truth_model;
  m.initial = Eigen::Vector4d(0.7, 0.1, 0.1, 0.1);
  m.transition.resize(4, 4);
  m.transition << 0.90, 0.06, 0.02, 0.02,  //
      0.03, 0.90, 0.05, 0.02,              //
      0.02, 0.03, 0.90, 0.05,              //
      0.02, 0.02, 0.04, 0.92;
  m.means = Eigen::MatrixXd::Zero(4, kLatentDims);
  for (int s = 0; s < 4; ++s) {
    m.means(s, s) = 3.0;
    m.means(s, 4) = 2.0 * (s - 1.5);
  }
  m.variances = Eigen::MatrixXd::Constant(4, kLatentDims, 0.5);

  std::mt19937_64 rng(substream_seed(seed, "synth-loading"));
  std::normal_distribution<double> n01(0.0, 1.0);
  c.loading_matrix.resize(kLatentDims, static_cast<Eigen::Index>(kNumFeatures));
  for (Eigen::Index r = 0; r < c.loading_matrix.rows(); ++r)
    for (Eigen::Index col = 0; col < c.loading_matrix.cols(); ++col) c.loading_matrix(r, col) = n01(rng);

  c.ramp_amplitude = 20.0;
  c.ramp_frames = 4;
  return c;
}

SynthResult synth_generate(const SynthConfig& config) {
  check_config(config);
  const HmmModel& truth = config.truth_model;
  std::mt19937_64 rng(substream_seed(config.seed, "synth"));
  std::uniform_real_distribution<double> jitter(-config.duration_jitter_s, config.duration_jitter_s);
  std::normal_distribution<double> n01(0.0, 1.0);
  const Eigen::MatrixXd sd = truth.variances.array().sqrt();
  const auto ramp_col = static_cast<Eigen::Index>(feature_index(config.ramp_feature));

  SynthResult result;
  double min_value = 0.0;
  for (int subj = 0; subj < config.n_subjects; ++subj) {
    char subject_id[32];
    std::snprintf(subject_id, sizeof subject_id, "s%02d", subj + 1);
    for (int tr = 0; tr < config.trials_per_subject; ++tr) {
      const double duration = config.mean_duration_s + jitter(rng);
      const auto T = static_cast<Eigen::Index>(std::max(1L, std::lround(duration * kFeatureRateHz)));

      StagePath states(static_cast<std::size_t>(T));
      int s = sample_categorical(truth.initial, rng);
      for (Eigen::Index t = 0; t < T; ++t) {
        if (t > 0) s = sample_categorical(truth.transition.row(s).transpose(), rng);
        states[static_cast<std::size_t>(t)] = s;
      }
      const auto forced = std::min<Eigen::Index>(config.terminal_state_frames, T);
      for (Eigen::Index t = T - forced; t < T; ++t) states[static_cast<std::size_t>(t)] = kExecutionState;

      Eigen::MatrixXd scores(T, kLatentDims);
      for (Eigen::Index t = 0; t < T; ++t) {
        const int st = states[static_cast<std::size_t>(t)];
        for (int d = 0; d < kLatentDims; ++d) scores(t, d) = truth.means(st, d) + sd(st, d) * n01(rng);
      }
      Eigen::MatrixXd frames = scores * config.loading_matrix;
      if (config.noise_sigma > 0.0) {
        for (Eigen::Index t = 0; t < T; ++t)
          for (Eigen::Index f = 0; f < frames.cols(); ++f) frames(t, f) += config.noise_sigma * n01(rng);
      }
      if (config.ramp_amplitude != 0.0 && config.ramp_frames > 0) {
        const auto R = std::min<Eigen::Index>(config.ramp_frames, T);
        for (Eigen::Index j = 0; j < R; ++j) {
          frames(T - R + j, ramp_col) += config.ramp_amplitude * static_cast<double>(j + 1) / static_cast<double>(config.ramp_frames);
        }
      }
      min_value = std::min(min_value, frames.minCoeff());

      BandPowerTrial trial;
      trial.trial_id = std::string(subject_id) + "_t" + std::to_string(tr + 1);
      trial.subject_id = subject_id;
      trial.scenario = static_cast<Scenario>(tr % 5);
      trial.response_time_s = duration;
      trial.frames = std::move(frames);
      result.truth.push_back({trial.trial_id, std::move(states), std::move(scores)});
      result.trials.push_back(std::move(trial));
    }
  }
  result.offset = min_value < 0.0 ? -min_value : 0.0;
  if (result.offset > 0.0) {
    for (auto& t : result.trials) t.frames.array() += result.offset;
  }
  return result;
}

}  // namespace eegintent
