#pragma once

#include "eegintent/core.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace eegintent {

/// Per-column z-scoring. Columns with zero sample variance are flagged in
/// constant_mask and mapped to 0.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
  std::vector<bool> constant_mask;
};

/// Sample sd uses the N-1 denominator. Requires N >= 2.
Standardizer standardize_fit(const Eigen::MatrixXd& frames);
Eigen::MatrixXd standardize_apply(const Standardizer& s, const Eigen::MatrixXd& frames);
Eigen::MatrixXd standardize_invert(const Standardizer& s, const Eigen::MatrixXd& z);

struct PcaModel {
  Eigen::MatrixXd components;  // n_components x n_features, orthonormal rows
  Eigen::VectorXd explained_variance;
  Eigen::VectorXd explained_variance_ratio;
  Eigen::VectorXd training_mean;

  [[nodiscard]] int n_components() const { return static_cast<int>(components.rows()); }
};

inline constexpr int kDefaultPcaComponents = 5;

/// Top eigenvectors of the sample covariance. Each component is signed so
/// that its largest-magnitude entry is positive. Requires N > n_components.
PcaModel pca_fit(const Eigen::MatrixXd& frames, int n_components = kDefaultPcaComponents);

/// (frames - training_mean) * components^T
Eigen::MatrixXd pca_transform(const PcaModel& model, const Eigen::MatrixXd& frames);

/// scores * components + training_mean
Eigen::MatrixXd pca_reconstruct(const PcaModel& model, const Eigen::MatrixXd& scores);

struct IqrResult {
  std::vector<double> kept;
  std::vector<bool> outlier;  // same length as input
  double q1 = 0.0;
  double q3 = 0.0;
  double lower_fence = 0.0;
  double upper_fence = 0.0;
};

/// Linear-interpolation quantile at position (n-1)*q of the sorted sample.
double quantile_linear(std::span<const double> sorted, double q);

/// Single-pass Tukey fences at 1.5 IQR; values strictly outside are removed.
/// Requires at least 4 values.
IqrResult iqr_filter(std::span<const double> values);

}  // namespace eegintent
