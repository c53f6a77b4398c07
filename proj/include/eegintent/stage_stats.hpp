#pragma once

// Nonparametric statistics over stage-segmented band power, plus the
// response-time summary.

#include "eegintent/core.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace eegintent {

struct ShapiroResult {
  double w = 0.0;
  double p_value = 0.0;
};

/// Royston (1995) approximation, algorithm AS R94. Requires 3 <= n <= 5000
/// and nonzero variance.
ShapiroResult shapiro_wilk(std::span<const double> sample);

/// Blocks x treatments; std::nullopt marks an absent cell.
using BlockTable = std::vector<std::vector<std::optional<double>>>;

struct FriedmanResult {
  double chi2 = 0.0;
  int df = 0;
  double p_value = 1.0;
  int n_blocks = 0;                  // complete rows used
  std::vector<std::size_t> dropped;  // indices of incomplete rows
};

/// Within-row midranks, tie-corrected statistic, chi-square upper tail.
FriedmanResult friedman(const BlockTable& table);

struct PosthocResult {
  int stage_a = 0;
  int stage_b = 0;
  double test_statistic = 0.0;
  double p_value = 1.0;
  double effect_size_d = 0.0;
};

/// Conover's all-pairs test on Friedman ranks:
///   t = (R_a - R_b) / sqrt(2 (n A1 - sum R_j^2) / ((n-1)(k-1)))
/// with A1 the sum of squared ranks, two-sided p on (n-1)(k-1) df. Rows with
/// absent cells are dropped as in friedman(). Zero rank variance gives an
/// infinite statistic (p = 0) for unequal rank sums. effect_size_d is NaN
/// when the pair has zero pooled variance.
std::vector<PosthocResult> conover_posthoc(const BlockTable& table);

/// (mean_a - mean_b) / pooled sd. Throws DataError on short input or zero
/// pooled variance.
double cohens_d(std::span<const double> a, std::span<const double> b);

/// One table per feature: rows are subjects, columns are stages; each cell is
/// the mean of the subject's frames decoded into that stage after a single
/// IQR pass (skipped when fewer than 4 frames).
struct StageFeatureTable {
  std::size_t feature = 0;
  std::vector<std::string> subjects;
  BlockTable cells;
};

std::vector<StageFeatureTable> stage_feature_tables(const std::vector<BandPowerTrial>& trials,
                                                    const std::vector<StagePath>& paths,
                                                    int n_stages = kNumStages);

struct FeatureBattery {
  std::size_t feature = 0;
  std::vector<std::optional<ShapiroResult>> normality;  // per stage column
  bool normality_rejected = false;
  std::optional<FriedmanResult> friedman;
  std::vector<PosthocResult> posthoc;  // only when Friedman p < alpha
  std::string error;
};

/// Shapiro-Wilk per stage, Friedman, then Conover when Friedman is
/// significant. Errors from individual tests are captured, not thrown.
FeatureBattery run_battery(const StageFeatureTable& table, double alpha = 0.05);

struct RtSummary {
  std::string scenario;
  std::size_t n = 0;
  double mean_s = 0.0;
  double hdi_low_s = 0.0;
  double hdi_high_s = 0.0;
};

/// Mean plus the shortest interval over the sorted sample containing
/// ceil(mass * n) points; ties go to the lowest start. Requires n >= 3.
RtSummary rt_summary(std::span<const double> times, double mass = 0.95);

}  // namespace eegintent
