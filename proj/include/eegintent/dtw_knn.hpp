#pragma once

// Unconstrained dynamic time warping with squared local cost, and a KNN
// classifier that uses it as the distance.

#include "eegintent/windowing.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace eegintent {

struct DtwOptions {
  int dims = 1;                     // values are frame-major, dims per frame
  std::optional<int> sakoe_chiba;   // band half-width; off by default
};

/// C(n-1, m-1) of the accumulated cost matrix with local cost
/// D(i, j) = sum_d (x[i,d] - y[j,d])^2. O(min(n, m)) memory.
double dtw_distance(std::span<const double> x, std::span<const double> y, const DtwOptions& opt = {});

/// The full accumulated cost matrix C (n x m).
Eigen::MatrixXd dtw_cost_matrix(std::span<const double> x, std::span<const double> y, const DtwOptions& opt = {});

struct DtwAlignment {
  double cost = 0.0;
  std::vector<std::pair<int, int>> path;  // (0,0) .. (n-1,m-1)
};

/// Backtrace from (n-1, m-1); at ties prefers diagonal, then up (i-1), then
/// left (j-1).
DtwAlignment dtw_path(std::span<const double> x, std::span<const double> y, const DtwOptions& opt = {});

struct KnnOptions {
  int k = 5;
  DtwOptions dtw;
  // Skip candidates whose endpoint lower bound already exceeds the current
  // k-th best distance. Exact: never changes the neighbour set.
  bool lower_bound_pruning = false;
};

class KnnModel {
 public:
  KnnModel(std::vector<LabeledSegment> training, KnnOptions options);

  /// Indices into training(), nearest first; distance ties go to the lower
  /// training index.
  [[nodiscard]] std::vector<std::size_t> neighbors(std::span<const double> query) const;

  /// Fraction of the k nearest neighbours labelled 1.
  [[nodiscard]] double score(std::span<const double> query) const;

  /// Majority label of the k nearest; a tied vote yields 0.
  [[nodiscard]] int predict(std::span<const double> query) const;

  [[nodiscard]] const std::vector<LabeledSegment>& training() const { return training_; }
  [[nodiscard]] const KnnOptions& options() const { return options_; }

 private:
  std::vector<LabeledSegment> training_;
  KnnOptions options_;
};

double knn_score(const KnnModel& model, std::span<const double> query);
int knn_predict(const KnnModel& model, std::span<const double> query);

}  // namespace eegintent
