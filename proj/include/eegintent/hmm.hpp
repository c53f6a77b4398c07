#pragma once

// Gaussian hidden Markov model over principal-component score sequences:
// Baum-Welch fitting, Viterbi decoding and forward log-likelihood.

#include "eegintent/core.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace eegintent {

enum class CovarianceType { Diagonal, Full };

inline constexpr double kVarianceFloor = 1e-6;

struct HmmModel {
  Eigen::VectorXd initial;     // n_states
  Eigen::MatrixXd transition;  // n_states x n_states, row-stochastic
  Eigen::MatrixXd means;       // n_states x n_dims
  Eigen::MatrixXd variances;   // n_states x n_dims, used when covariance == Diagonal
  CovarianceType covariance = CovarianceType::Diagonal;
  std::vector<Eigen::MatrixXd> covariances;  // n_states of n_dims x n_dims, Full only

  [[nodiscard]] int n_states() const { return static_cast<int>(initial.size()); }
  [[nodiscard]] int n_dims() const { return static_cast<int>(means.cols()); }
};

/// Throws ConfigError when shapes disagree, a probability vector is not
/// stochastic within 1e-9, or a variance is not positive.
void check_model(const HmmModel& model);

struct FitReport {
  std::vector<double> log_likelihood_trace;
  int iterations = 0;
  bool converged = false;
  bool variance_floor_hit = false;
  // Fewer frames than 10x the free parameter count; the fit still runs.
  bool underdetermined = false;
};

struct HmmFitOptions {
  int n_states = kNumStages;
  std::uint64_t seed = 0;
  double tol = 1e-6;
  int max_iter = 200;
  CovarianceType covariance = CovarianceType::Diagonal;
  double variance_floor = kVarianceFloor;
};

struct HmmFit {
  HmmModel model;
  FitReport report;
  HmmModel initial_model;  // k-means initialisation, before any EM step
};

/// Number of free parameters (initial + transition + emission).
std::size_t parameter_count(int n_states, int n_dims, CovarianceType cov);

/// Baum-Welch EM over one or more sequences (rows = frames). Initialised by
/// seeded k-means++ on the pooled frames; stops when |dLL| < tol.
HmmFit hmm_fit(const std::vector<Eigen::MatrixXd>& sequences, const HmmFitOptions& options);

/// Viterbi path in log space; ties go to the lower state index.
StagePath hmm_decode(const HmmModel& model, const Eigen::MatrixXd& sequence);

/// Scaled forward algorithm.
double hmm_loglik(const HmmModel& model, const Eigen::MatrixXd& sequence);

/// Per-frame, per-state emission log density (T x n_states).
Eigen::MatrixXd emission_log_density(const HmmModel& model, const Eigen::MatrixXd& sequence);

struct StageRun {
  int state;
  std::size_t start_frame;
  std::size_t end_frame;  // inclusive

  friend bool operator==(const StageRun&, const StageRun&) = default;
};

/// Maximal constant runs covering the path. Empty input yields no runs.
std::vector<StageRun> stage_runs(const StagePath& path);

/// Orders states by mean first-occurrence frame across the given paths;
/// result[r] is the state assigned to stage r. States never visited go last
/// in index order.
std::vector<int> stage_order(const std::vector<StagePath>& paths, int n_states);

/// Reorders states so new state r is old state order[r].
HmmModel permute_states(const HmmModel& model, const std::vector<int>& order);

/// Maps each old state s to its rank in `order`.
StagePath relabel(const StagePath& path, const std::vector<int>& order);

}  // namespace eegintent
