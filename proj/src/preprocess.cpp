#include "eegintent/preprocess.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace eegintent {

namespace {

void require_cols(Eigen::Index expected, Eigen::Index got, const char* what) {
  if (expected != got) {
    throw DataError(std::string(what) + ": expected " + std::to_string(expected) + " columns, got " +
                    std::to_string(got));
  }
}

}  // namespace

Standardizer standardize_fit(const Eigen::MatrixXd& frames) {
  const Eigen::Index n = frames.rows();
  if (n < 2) throw DataError("standardize_fit needs at least 2 frames");
  Standardizer s;
  s.mean = frames.colwise().mean().transpose();
  s.sd.resize(frames.cols());
  s.constant_mask.assign(static_cast<std::size_t>(frames.cols()), false);
  for (Eigen::Index c = 0; c < frames.cols(); ++c) {
    const double ss = (frames.col(c).array() - s.mean(c)).square().sum();
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    s.sd(c) = sd;
    if (sd <= 1e-12 * std::max(1.0, std::abs(s.mean(c)))) {
      s.constant_mask[static_cast<std::size_t>(c)] = true;
    }
  }
  return s;
}

Eigen::MatrixXd standardize_apply(const Standardizer& s, const Eigen::MatrixXd& frames) {
  require_cols(s.mean.size(), frames.cols(), "standardize_apply");
  Eigen::MatrixXd out(frames.rows(), frames.cols());
  for (Eigen::Index c = 0; c < frames.cols(); ++c) {
    if (s.constant_mask[static_cast<std::size_t>(c)]) {
      out.col(c).setZero();
    } else {
      out.col(c) = (frames.col(c).array() - s.mean(c)) / s.sd(c);
    }
  }
  return out;
}

Eigen::MatrixXd standardize_invert(const Standardizer& s, const Eigen::MatrixXd& z) {
  require_cols(s.mean.size(), z.cols(), "standardize_invert");
  Eigen::MatrixXd out(z.rows(), z.cols());
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    if (s.constant_mask[static_cast<std::size_t>(c)]) {
      out.col(c).setConstant(s.mean(c));
    } else {
      out.col(c) = z.col(c).array() * s.sd(c) + s.mean(c);
    }
  }
  return out;
}

PcaModel pca_fit(const Eigen::MatrixXd& frames, int n_components) {
  const Eigen::Index n = frames.rows();
  const Eigen::Index p = frames.cols();
  if (n_components < 1 || n_components > p) {
    throw ConfigError("n_components must be in [1, " + std::to_string(p) + "]");
  }
  if (n <= n_components) {
    throw DataError("pca_fit needs more frames (" + std::to_string(n) + ") than components (" +
                    std::to_string(n_components) + ")");
  }
  PcaModel m;
  m.training_mean = frames.colwise().mean().transpose();
  const Eigen::MatrixXd centered = frames.rowwise() - m.training_mean.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed");
  // Eigen returns ascending eigenvalues.
  const Eigen::VectorXd values = eig.eigenvalues();
  const Eigen::MatrixXd vectors = eig.eigenvectors();
  const double total = std::max(0.0, cov.trace());

  m.components.resize(n_components, p);
  m.explained_variance.resize(n_components);
  m.explained_variance_ratio.resize(n_components);
  for (int k = 0; k < n_components; ++k) {
    const Eigen::Index src = p - 1 - k;
    Eigen::VectorXd v = vectors.col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    m.components.row(k) = v.transpose();
    const double lambda = std::max(0.0, values(src));
    m.explained_variance(k) = lambda;
    m.explained_variance_ratio(k) = total > 0.0 ? lambda / total : 0.0;
  }
  return m;
}

Eigen::MatrixXd pca_transform(const PcaModel& model, const Eigen::MatrixXd& frames) {
  require_cols(model.training_mean.size(), frames.cols(), "pca_transform");
  return (frames.rowwise() - model.training_mean.transpose()) * model.components.transpose();
}

Eigen::MatrixXd pca_reconstruct(const PcaModel& model, const Eigen::MatrixXd& scores) {
  require_cols(model.components.rows(), scores.cols(), "pca_reconstruct");
  return (scores * model.components).rowwise() + model.training_mean.transpose();
}

double quantile_linear(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw DataError("quantile of an empty sample");
  const double pos = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

IqrResult iqr_filter(std::span<const double> values) {
  if (values.size() < 4) throw DataError("iqr_filter needs at least 4 values");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  IqrResult r;
  r.q1 = quantile_linear(sorted, 0.25);
  r.q3 = quantile_linear(sorted, 0.75);
  const double iqr = r.q3 - r.q1;
  r.lower_fence = r.q1 - 1.5 * iqr;
  r.upper_fence = r.q3 + 1.5 * iqr;
  r.outlier.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const bool out = values[i] < r.lower_fence || values[i] > r.upper_fence;
    r.outlier[i] = out;
    if (!out) r.kept.push_back(values[i]);
  }
  return r;
}

}  // namespace eegintent
