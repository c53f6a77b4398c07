#pragma once

// Cross-validated evaluation of the DTW-KNN classifier: stratified folds,
// train-only oversampling, metrics, ROC/AUC, label shuffling and the
// window-configuration sweep.

#include "eegintent/dtw_knn.hpp"
#include "eegintent/windowing.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace eegintent {

enum class SplitMode { Segment, GroupByTrial };

std::string_view split_mode_name(SplitMode m);
SplitMode parse_split_mode(std::string_view s);

struct FoldAssignment {
  std::vector<int> fold_of;  // per segment, in [0, n_folds)
  int n_folds = 5;
  std::uint64_t seed = 0;
};

/// Class-wise round-robin after a seeded shuffle. Each class needs at least
/// n_folds members.
FoldAssignment stratified_kfold(std::span<const int> labels, int n_folds, std::uint64_t seed);

/// Keeps all segments of a group in one fold. Groups are shuffled and dealt
/// round-robin, positive-bearing groups first, so per-fold positive counts
/// differ by at most one when each group holds one positive.
FoldAssignment grouped_kfold(std::span<const std::string> groups, std::span<const int> labels, int n_folds,
                             std::uint64_t seed);

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;  // no predicted positives
  bool recall_undefined = false;     // no actual positives
};

Metrics confusion_metrics(std::span<const int> predicted, std::span<const int> actual);

struct RocCurve {
  std::vector<std::pair<double, double>> points;  // (fpr, tpr), (0,0) .. (1,1)
  double auc = 0.0;
};

/// Threshold sweep over distinct scores, descending, ties grouped;
/// trapezoidal area.
RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels);

struct CvOptions {
  int k = 5;
  int n_folds = 5;
  std::uint64_t seed = 0;
  SplitMode split = SplitMode::Segment;
  bool oversample = true;
  int adasyn_k = 5;
  double adasyn_beta = 1.0;
  DtwOptions dtw;
  bool lower_bound_pruning = false;
  unsigned jobs = 1;
};

struct FoldResult {
  int fold = 0;
  std::size_t n_train_real = 0;
  std::size_t n_train_synthetic = 0;
  std::size_t n_test = 0;
  std::size_t test_synthetic = 0;  // must stay 0
  Metrics metrics;
};

struct EvalReport {
  WindowConfig config;
  SplitMode split = SplitMode::Segment;
  std::size_t n_segments = 0;
  std::vector<FoldResult> folds;
  Metrics mean;
  RocCurve roc;                    // pooled out-of-fold scores
  std::vector<double> oof_scores;  // per input segment
  std::vector<int> oof_coverage;   // times each segment was scored
  std::size_t synthetic_in_test = 0;
};

/// Stratified k-fold with ADASYN applied to the training folds only, DTW-KNN
/// scoring of the held-out fold, per-fold metrics and a pooled ROC. Input
/// segments must all be real (non-synthetic).
EvalReport run_cv(const std::vector<LabeledSegment>& segments, const WindowConfig& cfg, const CvOptions& options);

struct ShuffleResult {
  double original_auc = 0.0;
  double shuffled_auc = 0.0;
  std::uint64_t seed = 0;
};

/// run_cv on the true labels and on a seeded permutation of them.
ShuffleResult label_shuffle_test(const std::vector<LabeledSegment>& segments, const WindowConfig& cfg,
                                 const CvOptions& options);

/// All windows of every trial for one configuration.
std::vector<LabeledSegment> build_segments(const std::vector<BandPowerTrial>& trials,
                                           std::span<const std::size_t> features, const WindowConfig& cfg);

struct SweepEntry {
  WindowConfig config;
  bool ok = false;
  std::string error;
  EvalReport report;
};

/// Reference configurations followed by every grid length at `grid_stride`,
/// duplicates removed.
std::vector<WindowConfig> default_sweep_configs(int grid_stride = 3);

/// run_cv per configuration. A failing configuration is recorded and the
/// sweep continues. Successful entries come first, sorted by AUC descending
/// (stable), then failures in input order.
std::vector<SweepEntry> sweep(const std::vector<BandPowerTrial>& trials, std::span<const std::size_t> features,
                              const std::vector<WindowConfig>& configs, const CvOptions& options);

/// window_length,stride,n_segments,accuracy,precision,recall,f1,auc,lookahead_s
void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepEntry>& entries);
void write_sweep_failures_csv(const std::filesystem::path& path, const std::vector<SweepEntry>& entries);
/// fpr,tpr
void write_roc_csv(const std::filesystem::path& path, const RocCurve& roc);
std::string roc_file_name(const WindowConfig& cfg);

}  // namespace eegintent
