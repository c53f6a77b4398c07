#pragma once

// Independent brute-force references used by the unit and acceptance tests.
// Deliberately naive: enumeration instead of dynamic programming.

#include "eegintent/hmm.hpp"
#include "eegintent/windowing.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

namespace oracle {

/// Minimum over every monotone warping path of the summed squared
/// difference, by depth-first enumeration of all paths.
inline double dtw_enumerate(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size(), m = y.size();
  double best = std::numeric_limits<double>::infinity();
  // Explicit stack of (i, j, cost so far including cell (i, j)).
  struct Node {
    std::size_t i, j;
    double cost;
  };
  std::vector<Node> stack{{0, 0, (x[0] - y[0]) * (x[0] - y[0])}};
  while (!stack.empty()) {
    const Node nd = stack.back();
    stack.pop_back();
    if (nd.i == n - 1 && nd.j == m - 1) {
      best = std::min(best, nd.cost);
      continue;
    }
    auto push = [&](std::size_t i, std::size_t j) {
      if (i < n && j < m) stack.push_back({i, j, nd.cost + (x[i] - y[j]) * (x[i] - y[j])});
    };
    push(nd.i + 1, nd.j + 1);
    push(nd.i + 1, nd.j);
    push(nd.i, nd.j + 1);
  }
  return best;
}

/// Every monotone path from (0,0) to (n-1,m-1) with its cost.
inline std::vector<std::pair<double, std::vector<std::pair<int, int>>>> dtw_all_paths(std::span<const double> x,
                                                                                       std::span<const double> y) {
  std::vector<std::pair<double, std::vector<std::pair<int, int>>>> out;
  std::vector<std::pair<int, int>> path;
  const int n = static_cast<int>(x.size()), m = static_cast<int>(y.size());
  auto rec = [&](auto&& self, int i, int j, double cost) -> void {
    path.emplace_back(i, j);
    cost += (x[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(j)]) *
            (x[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(j)]);
    if (i == n - 1 && j == m - 1) {
      out.emplace_back(cost, path);
    } else {
      if (i + 1 < n && j + 1 < m) self(self, i + 1, j + 1, cost);
      if (i + 1 < n) self(self, i + 1, j, cost);
      if (j + 1 < m) self(self, i, j + 1, cost);
    }
    path.pop_back();
  };
  rec(rec, 0, 0, 0.0);
  return out;
}

inline double diag_gauss_logpdf(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& mean,
                                const Eigen::RowVectorXd& var) {
  double s = 0.0;
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    const double z = x(d) - mean(d);
    s += -0.5 * (std::log(2.0 * std::numbers::pi * var(d)) + z * z / var(d));
  }
  return s;
}

struct HmmExhaustive {
  std::vector<int> best_path;
  double best_logp = -std::numeric_limits<double>::infinity();
  double loglik = 0.0;
};

/// Scores all n_states^T state paths of a diagonal-covariance model.
inline HmmExhaustive hmm_enumerate(const eegintent::HmmModel& m, const Eigen::MatrixXd& obs) {
  const int K = m.n_states();
  const auto T = static_cast<int>(obs.rows());
  Eigen::MatrixXd logb(T, K);
  for (int t = 0; t < T; ++t)
    for (int k = 0; k < K; ++k) logb(t, k) = diag_gauss_logpdf(obs.row(t), m.means.row(k), m.variances.row(k));

  HmmExhaustive out;
  std::vector<double> all;
  std::vector<int> path(static_cast<std::size_t>(T), 0);
  long long total = 1;
  for (int t = 0; t < T; ++t) total *= K;
  for (long long code = 0; code < total; ++code) {
    long long c = code;
    // Most significant digit is frame 0, so codes enumerate paths in
    // lexicographic order.
    for (int t = T - 1; t >= 0; --t) {
      path[static_cast<std::size_t>(t)] = static_cast<int>(c % K);
      c /= K;
    }
    double lp = std::log(m.initial(path[0])) + logb(0, path[0]);
    for (int t = 1; t < T; ++t) {
      lp += std::log(m.transition(path[static_cast<std::size_t>(t) - 1], path[static_cast<std::size_t>(t)])) +
            logb(t, path[static_cast<std::size_t>(t)]);
    }
    all.push_back(lp);
    if (lp > out.best_logp) {
      out.best_logp = lp;
      out.best_path = path;
    }
  }
  const double mx = *std::max_element(all.begin(), all.end());
  double s = 0.0;
  for (double v : all) s += std::exp(v - mx);
  out.loglik = mx + std::log(s);
  return out;
}

/// P(score_pos > score_neg) + 0.5 P(equal), over all pairs.
inline double mann_whitney_auc(std::span<const double> scores, std::span<const int> labels) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] == 1) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

/// Closed-form window count, end anchor included.
inline std::size_t window_count(int n, int len, int stride) {
  if (n < len) return 0;
  const int span = n - len;
  return static_cast<std::size_t>(span / stride + 1 + (span % stride != 0 ? 1 : 0));
}

/// True when s = a + lambda (b - a) coordinatewise for some lambda in
/// [0, 1], within tol.
inline bool on_segment(const std::vector<double>& s, const std::vector<double>& a, const std::vector<double>& b,
                       double tol) {
  double lambda = 0.0;
  bool have = false;
  for (std::size_t d = 0; d < s.size(); ++d) {
    const double span = b[d] - a[d];
    if (std::abs(span) > 1e-6) {
      lambda = (s[d] - a[d]) / span;
      have = true;
      break;
    }
  }
  if (!have) {
    for (std::size_t d = 0; d < s.size(); ++d)
      if (std::abs(s[d] - a[d]) > tol) return false;
    return true;
  }
  if (lambda < -tol || lambda > 1.0 + tol) return false;
  for (std::size_t d = 0; d < s.size(); ++d) {
    if (std::abs(a[d] + lambda * (b[d] - a[d]) - s[d]) > tol) return false;
  }
  return true;
}

}  // namespace oracle
