#include "eegintent/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

namespace eegintent {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kStochasticTol = 1e-9;

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double m = v.maxCoeff();
  if (m == kNegInf) return kNegInf;
  return m + std::log((v.array() - m).exp().sum());
}

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

void require_dims(const HmmModel& model, const Eigen::MatrixXd& sequence) {
  if (sequence.rows() < 1) throw DataError("sequence must contain at least one frame");
  if (sequence.cols() != model.means.cols()) {
    throw DataError("sequence has " + std::to_string(sequence.cols()) +
                    " dimensions, model expects " + std::to_string(model.means.cols()));
  }
}

struct Posteriors {
  Eigen::MatrixXd gamma;      // T x S
  Eigen::MatrixXd xi_sum;     // S x S, summed over t
  double log_likelihood = 0.0;
};

// Forward-backward in log space; a fully scaled pass cannot represent the
// ratios that appear once variances hit the floor.
Posteriors forward_backward(const Eigen::MatrixXd& log_b, const Eigen::MatrixXd& log_a,
                            const Eigen::VectorXd& log_pi) {
  const Eigen::Index T = log_b.rows();
  const Eigen::Index S = log_b.cols();
  Eigen::MatrixXd log_alpha(T, S), log_beta(T, S);
  Eigen::VectorXd tmp(S);

  log_alpha.row(0) = log_pi.transpose() + log_b.row(0);
  for (Eigen::Index t = 1; t < T; ++t) {
    for (Eigen::Index j = 0; j < S; ++j) {
      tmp = log_alpha.row(t - 1).transpose() + log_a.col(j);
      log_alpha(t, j) = log_sum_exp(tmp) + log_b(t, j);
    }
  }
  log_beta.row(T - 1).setZero();
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    for (Eigen::Index i = 0; i < S; ++i) {
      tmp = log_a.row(i).transpose() + log_b.row(t + 1).transpose() + log_beta.row(t + 1).transpose();
      log_beta(t, i) = log_sum_exp(tmp);
    }
  }

  Posteriors out;
  out.log_likelihood = log_sum_exp(log_alpha.row(T - 1).transpose());
  out.gamma.resize(T, S);
  for (Eigen::Index t = 0; t < T; ++t) {
    tmp = log_alpha.row(t).transpose() + log_beta.row(t).transpose();
    const double norm = log_sum_exp(tmp);
    out.gamma.row(t) = (tmp.array() - norm).exp().transpose();
  }
  out.xi_sum = Eigen::MatrixXd::Zero(S, S);
  for (Eigen::Index t = 0; t + 1 < T; ++t) {
    for (Eigen::Index i = 0; i < S; ++i) {
      if (log_alpha(t, i) == kNegInf) continue;
      for (Eigen::Index j = 0; j < S; ++j) {
        const double lx = log_alpha(t, i) + log_a(i, j) + log_b(t + 1, j) + log_beta(t + 1, j) -
                          out.log_likelihood;
        if (lx != kNegInf) out.xi_sum(i, j) += std::exp(lx);
      }
    }
  }
  return out;
}

double total_loglik(const HmmModel& model, const std::vector<Eigen::MatrixXd>& seqs) {
  double ll = 0.0;
  for (const auto& s : seqs) ll += hmm_loglik(model, s);
  return ll;
}

// Seeded k-means++ followed by Lloyd iterations on pooled frames.
std::vector<int> kmeans_labels(const Eigen::MatrixXd& x, int k, std::uint64_t seed,
                               Eigen::MatrixXd& centers) {
  const Eigen::Index n = x.rows();
  std::mt19937_64 rng(seed);
  centers.resize(k, x.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centers.row(0) = x.row(pick(rng));
  Eigen::VectorXd d2(n);
  for (int c = 1; c < k; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < c; ++j) best = std::min(best, (x.row(i) - centers.row(j)).squaredNorm());
      d2(i) = best;
    }
    const double total = d2.sum();
    Eigen::Index chosen = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      for (chosen = 0; chosen < n - 1; ++chosen) {
        target -= d2(chosen);
        if (target <= 0.0) break;
      }
    } else {
      chosen = pick(rng);
    }
    centers.row(c) = x.row(chosen);
  }

  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (x.row(i) - centers.row(0)).squaredNorm();
      for (int j = 1; j < k; ++j) {
        const double d = (x.row(i) - centers.row(j)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      if (labels[static_cast<std::size_t>(i)] != best) {
        labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
      ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    for (int j = 0; j < k; ++j) {
      if (counts[static_cast<std::size_t>(j)] > 0) {
        centers.row(j) = sums.row(j) / static_cast<double>(counts[static_cast<std::size_t>(j)]);
      }
    }
    if (!changed) break;
  }
  return labels;
}

HmmModel initial_model(const Eigen::MatrixXd& pooled, const HmmFitOptions& opt, bool& floor_hit) {
  const int S = opt.n_states;
  const Eigen::Index D = pooled.cols();
  Eigen::MatrixXd centers;
  const auto labels = kmeans_labels(pooled, S, opt.seed, centers);

  const Eigen::RowVectorXd pooled_mean = pooled.colwise().mean();
  const Eigen::MatrixXd centered = pooled.rowwise() - pooled_mean;
  const Eigen::MatrixXd pooled_cov = centered.transpose() * centered / static_cast<double>(pooled.rows());

  HmmModel m;
  m.covariance = opt.covariance;
  m.initial = Eigen::VectorXd::Constant(S, 1.0 / S);
  m.transition = Eigen::MatrixXd::Constant(S, S, 1.0 / S);
  m.means = centers;
  m.variances.resize(S, D);
  if (opt.covariance == CovarianceType::Full) m.covariances.assign(S, Eigen::MatrixXd());

  for (int s = 0; s < S; ++s) {
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(D, D);
    Eigen::Index count = 0;
    for (Eigen::Index i = 0; i < pooled.rows(); ++i) {
      if (labels[static_cast<std::size_t>(i)] != s) continue;
      const Eigen::RowVectorXd d = pooled.row(i) - centers.row(s);
      cov += d.transpose() * d;
      ++count;
    }
    if (count >= 2) {
      cov /= static_cast<double>(count);
    } else {
      cov = pooled_cov;
    }
    for (Eigen::Index d = 0; d < D; ++d) {
      if (cov(d, d) < opt.variance_floor) {
        floor_hit = true;
        cov(d, d) = opt.variance_floor;
      }
      m.variances(s, d) = cov(d, d);
    }
    if (opt.covariance == CovarianceType::Full) m.covariances[static_cast<std::size_t>(s)] = cov;
  }
  return m;
}

}  // namespace

void check_model(const HmmModel& model) {
  const auto S = model.initial.size();
  if (S < 1) throw ConfigError("model needs at least one state");
  if (model.transition.rows() != S || model.transition.cols() != S) {
    throw ConfigError("transition matrix must be n_states x n_states");
  }
  if (model.means.rows() != S) throw ConfigError("means must have one row per state");
  if (std::abs(model.initial.sum() - 1.0) > kStochasticTol || (model.initial.array() < 0).any()) {
    throw ConfigError("initial distribution is not a probability vector");
  }
  for (Eigen::Index i = 0; i < S; ++i) {
    if (std::abs(model.transition.row(i).sum() - 1.0) > kStochasticTol ||
        (model.transition.row(i).array() < 0).any()) {
      throw ConfigError("transition row " + std::to_string(i) + " is not stochastic");
    }
  }
  if (model.covariance == CovarianceType::Diagonal) {
    if (model.variances.rows() != S || model.variances.cols() != model.means.cols()) {
      throw ConfigError("variances must match means in shape");
    }
    if ((model.variances.array() <= 0).any()) throw ConfigError("variances must be positive");
  } else {
    if (static_cast<Eigen::Index>(model.covariances.size()) != S) {
      throw ConfigError("full-covariance model needs one covariance per state");
    }
    for (const auto& c : model.covariances) {
      if (c.rows() != model.means.cols() || c.cols() != model.means.cols()) {
        throw ConfigError("covariance shape mismatch");
      }
    }
  }
}

std::size_t parameter_count(int n_states, int n_dims, CovarianceType cov) {
  const auto S = static_cast<std::size_t>(n_states);
  const auto D = static_cast<std::size_t>(n_dims);
  const std::size_t emission = cov == CovarianceType::Diagonal ? 2 * D : D + D * (D + 1) / 2;
  return (S - 1) + S * (S - 1) + S * emission;
}

Eigen::MatrixXd emission_log_density(const HmmModel& model, const Eigen::MatrixXd& sequence) {
  require_dims(model, sequence);
  const Eigen::Index T = sequence.rows();
  const int S = model.n_states();
  const double log2pi = std::log(2.0 * std::numbers::pi);
  Eigen::MatrixXd out(T, S);
  for (int s = 0; s < S; ++s) {
    if (model.covariance == CovarianceType::Diagonal) {
      const Eigen::ArrayXd var = model.variances.row(s).transpose().array();
      const double log_norm = -0.5 * (var.log().sum() + log2pi * static_cast<double>(var.size()));
      for (Eigen::Index t = 0; t < T; ++t) {
        const Eigen::ArrayXd d = (sequence.row(t) - model.means.row(s)).transpose().array();
        out(t, s) = log_norm - 0.5 * (d.square() / var).sum();
      }
    } else {
      const Eigen::LLT<Eigen::MatrixXd> llt(model.covariances[static_cast<std::size_t>(s)]);
      if (llt.info() != Eigen::Success) throw NumericalError("covariance is not positive definite");
      const Eigen::MatrixXd L = llt.matrixL();
      const double log_det = 2.0 * L.diagonal().array().log().sum();
      const double log_norm = -0.5 * (log_det + log2pi * static_cast<double>(L.rows()));
      for (Eigen::Index t = 0; t < T; ++t) {
        const Eigen::VectorXd d = (sequence.row(t) - model.means.row(s)).transpose();
        out(t, s) = log_norm - 0.5 * llt.matrixL().solve(d).squaredNorm();
      }
    }
  }
  return out;
}

double hmm_loglik(const HmmModel& model, const Eigen::MatrixXd& sequence) {
  const Eigen::MatrixXd log_b = emission_log_density(model, sequence);
  const Eigen::Index T = log_b.rows();
  const int S = model.n_states();

  // alpha is renormalised every frame; the normaliser is accumulated in log
  // form so emission magnitudes never under- or overflow.
  Eigen::VectorXd alpha = model.initial;
  double ll = 0.0;
  Eigen::VectorXd scaled(S);
  for (Eigen::Index t = 0; t < T; ++t) {
    const Eigen::VectorXd pred = t == 0 ? alpha : Eigen::VectorXd(model.transition.transpose() * alpha);
    double m = kNegInf;
    for (int s = 0; s < S; ++s) {
      if (pred(s) > 0.0) m = std::max(m, log_b(t, s));
    }
    if (m == kNegInf) return kNegInf;
    for (int s = 0; s < S; ++s) scaled(s) = pred(s) > 0.0 ? pred(s) * std::exp(log_b(t, s) - m) : 0.0;
    const double c = scaled.sum();
    ll += m + std::log(c);
    alpha = scaled / c;
  }
  return ll;
}

StagePath hmm_decode(const HmmModel& model, const Eigen::MatrixXd& sequence) {
  const Eigen::MatrixXd log_b = emission_log_density(model, sequence);
  const Eigen::Index T = log_b.rows();
  const int S = model.n_states();
  Eigen::MatrixXd log_a(S, S);
  for (int i = 0; i < S; ++i)
    for (int j = 0; j < S; ++j) log_a(i, j) = safe_log(model.transition(i, j));

  Eigen::MatrixXd delta(T, S);
  Eigen::MatrixXi back(T, S);
  for (int s = 0; s < S; ++s) delta(0, s) = safe_log(model.initial(s)) + log_b(0, s);
  for (Eigen::Index t = 1; t < T; ++t) {
    for (int j = 0; j < S; ++j) {
      int best = 0;
      double best_v = delta(t - 1, 0) + log_a(0, j);
      for (int i = 1; i < S; ++i) {
        const double v = delta(t - 1, i) + log_a(i, j);
        if (v > best_v) {
          best_v = v;
          best = i;
        }
      }
      delta(t, j) = best_v + log_b(t, j);
      back(t, j) = best;
    }
  }
  StagePath path(static_cast<std::size_t>(T));
  int state = 0;
  for (int s = 1; s < S; ++s) {
    if (delta(T - 1, s) > delta(T - 1, state)) state = s;
  }
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    path[static_cast<std::size_t>(t)] = state;
    if (t > 0) state = back(t, state);
  }
  return path;
}

HmmFit hmm_fit(const std::vector<Eigen::MatrixXd>& sequences, const HmmFitOptions& opt) {
  if (sequences.empty()) throw DataError("hmm_fit needs at least one sequence");
  if (opt.n_states < 1) throw ConfigError("n_states must be >= 1");
  const Eigen::Index D = sequences.front().cols();
  Eigen::Index total = 0;
  for (const auto& s : sequences) {
    if (s.cols() != D) throw DataError("all sequences must have the same dimension");
    if (s.rows() < 1) throw DataError("empty sequence passed to hmm_fit");
    total += s.rows();
  }
  if (total < opt.n_states) {
    throw DataError("hmm_fit needs at least n_states frames, got " + std::to_string(total));
  }

  Eigen::MatrixXd pooled(total, D);
  {
    Eigen::Index r = 0;
    for (const auto& s : sequences) {
      pooled.middleRows(r, s.rows()) = s;
      r += s.rows();
    }
  }

  const int S = opt.n_states;
  HmmFit fit;
  fit.report.underdetermined =
      static_cast<std::size_t>(total) <= 10 * parameter_count(S, static_cast<int>(D), opt.covariance);
  fit.initial_model = initial_model(pooled, opt, fit.report.variance_floor_hit);
  HmmModel model = fit.initial_model;

  double prev_ll = kNegInf;
  for (int iter = 0; iter < opt.max_iter; ++iter) {
    Eigen::MatrixXd log_a(S, S);
    for (int i = 0; i < S; ++i)
      for (int j = 0; j < S; ++j) log_a(i, j) = safe_log(model.transition(i, j));
    Eigen::VectorXd log_pi(S);
    for (int s = 0; s < S; ++s) log_pi(s) = safe_log(model.initial(s));

    Eigen::VectorXd pi_acc = Eigen::VectorXd::Zero(S);
    Eigen::MatrixXd xi_acc = Eigen::MatrixXd::Zero(S, S);
    Eigen::VectorXd w_acc = Eigen::VectorXd::Zero(S);
    Eigen::MatrixXd x_acc = Eigen::MatrixXd::Zero(S, D);
    std::vector<Eigen::MatrixXd> gammas;
    gammas.reserve(sequences.size());
    double ll = 0.0;
    for (const auto& seq : sequences) {
      auto post = forward_backward(emission_log_density(model, seq), log_a, log_pi);
      ll += post.log_likelihood;
      pi_acc += post.gamma.row(0).transpose();
      xi_acc += post.xi_sum;
      w_acc += post.gamma.colwise().sum().transpose();
      x_acc += post.gamma.transpose() * seq;
      gammas.push_back(std::move(post.gamma));
    }
    if (!std::isfinite(ll)) throw NumericalError("log-likelihood became non-finite during EM");
    fit.report.log_likelihood_trace.push_back(ll);
    fit.report.iterations = iter + 1;
    if (iter > 0 && std::abs(ll - prev_ll) < opt.tol) {
      fit.report.converged = true;
      break;
    }
    prev_ll = ll;

    // M-step. States or rows with no expected mass keep their parameters;
    // the likelihood does not depend on them.
    model.initial = pi_acc / static_cast<double>(sequences.size());
    for (int i = 0; i < S; ++i) {
      const double row = xi_acc.row(i).sum();
      if (row > 0.0) model.transition.row(i) = xi_acc.row(i) / row;
    }
    for (int s = 0; s < S; ++s) {
      if (!(w_acc(s) > 1e-300)) continue;
      model.means.row(s) = x_acc.row(s) / w_acc(s);
      Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(D, D);
      std::size_t k = 0;
      for (const auto& seq : sequences) {
        const Eigen::VectorXd g = gammas[k++].col(s);
        const Eigen::MatrixXd centered = seq.rowwise() - model.means.row(s);
        if (opt.covariance == CovarianceType::Diagonal) {
          cov.diagonal() += (centered.array().square().colwise() * g.array()).colwise().sum().transpose().matrix();
        } else {
          cov += centered.transpose() * g.asDiagonal() * centered;
        }
      }
      cov /= w_acc(s);
      for (Eigen::Index d = 0; d < D; ++d) {
        if (cov(d, d) < opt.variance_floor) {
          cov(d, d) = opt.variance_floor;
          fit.report.variance_floor_hit = true;
        }
        model.variances(s, d) = cov(d, d);
      }
      if (opt.covariance == CovarianceType::Full) {
        cov = 0.5 * (cov + cov.transpose());
        model.covariances[static_cast<std::size_t>(s)] = cov;
      }
    }
  }

  if (!fit.report.converged) {
    // The loop ended right after an M-step; record the likelihood of the
    // parameters actually returned.
    const double ll = total_loglik(model, sequences);
    fit.report.log_likelihood_trace.push_back(ll);
  }
  fit.model = std::move(model);
  return fit;
}

std::vector<StageRun> stage_runs(const StagePath& path) {
  std::vector<StageRun> runs;
  for (std::size_t t = 0; t < path.size(); ++t) {
    if (runs.empty() || runs.back().state != path[t]) {
      runs.push_back({path[t], t, t});
    } else {
      runs.back().end_frame = t;
    }
  }
  return runs;
}

std::vector<int> stage_order(const std::vector<StagePath>& paths, int n_states) {
  std::vector<double> sum(static_cast<std::size_t>(n_states), 0.0);
  std::vector<int> count(static_cast<std::size_t>(n_states), 0);
  for (const auto& path : paths) {
    std::vector<bool> seen(static_cast<std::size_t>(n_states), false);
    for (std::size_t t = 0; t < path.size(); ++t) {
      const auto s = static_cast<std::size_t>(path[t]);
      if (s >= seen.size()) throw DataError("state index out of range in stage path");
      if (!seen[s]) {
        seen[s] = true;
        sum[s] += static_cast<double>(t);
        ++count[s];
      }
    }
  }
  std::vector<int> order(static_cast<std::size_t>(n_states));
  for (int s = 0; s < n_states; ++s) order[static_cast<std::size_t>(s)] = s;
  auto key = [&](int s) {
    const auto i = static_cast<std::size_t>(s);
    return count[i] > 0 ? sum[i] / count[i] : std::numeric_limits<double>::infinity();
  };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key(a) < key(b); });
  return order;
}

HmmModel permute_states(const HmmModel& model, const std::vector<int>& order) {
  const int S = model.n_states();
  if (static_cast<int>(order.size()) != S) throw ConfigError("permutation size mismatch");
  HmmModel out = model;
  for (int r = 0; r < S; ++r) {
    const int s = order[static_cast<std::size_t>(r)];
    out.initial(r) = model.initial(s);
    out.means.row(r) = model.means.row(s);
    if (model.variances.rows() == S) out.variances.row(r) = model.variances.row(s);
    if (model.covariance == CovarianceType::Full) {
      out.covariances[static_cast<std::size_t>(r)] = model.covariances[static_cast<std::size_t>(s)];
    }
    for (int c = 0; c < S; ++c) out.transition(r, c) = model.transition(s, order[static_cast<std::size_t>(c)]);
  }
  return out;
}

StagePath relabel(const StagePath& path, const std::vector<int>& order) {
  std::vector<int> rank(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[static_cast<std::size_t>(order[r])] = static_cast<int>(r);
  StagePath out(path.size());
  for (std::size_t t = 0; t < path.size(); ++t) out[t] = rank[static_cast<std::size_t>(path[t])];
  return out;
}

}  // namespace eegintent
