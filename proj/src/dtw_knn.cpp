#include "eegintent/dtw_knn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace eegintent {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Shape {
  std::size_t n, m;
  int dims;
};

Shape check_inputs(std::span<const double> x, std::span<const double> y, const DtwOptions& opt) {
  if (opt.dims < 1) throw ConfigError("dtw dims must be >= 1");
  const auto d = static_cast<std::size_t>(opt.dims);
  if (x.empty() || y.empty()) throw DataError("dtw: empty sequence");
  if (x.size() % d != 0 || y.size() % d != 0) throw DataError("dtw: length is not a multiple of dims");
  for (double v : x)
    if (!std::isfinite(v)) throw DataError("dtw: non-finite value");
  for (double v : y)
    if (!std::isfinite(v)) throw DataError("dtw: non-finite value");
  return {x.size() / d, y.size() / d, opt.dims};
}

inline double local_cost(std::span<const double> x, std::size_t i, std::span<const double> y, std::size_t j, int dims) {
  double s = 0.0;
  for (int d = 0; d < dims; ++d) {
    const double diff = x[i * static_cast<std::size_t>(dims) + static_cast<std::size_t>(d)] -
                        y[j * static_cast<std::size_t>(dims) + static_cast<std::size_t>(d)];
    s += diff * diff;
  }
  return s;
}

inline bool in_band(std::size_t i, std::size_t j, const std::optional<int>& band) {
  if (!band) return true;
  const auto w = static_cast<std::size_t>(*band);
  return (i > j ? i - j : j - i) <= w;
}

}  // namespace

double dtw_distance(std::span<const double> x, std::span<const double> y, const DtwOptions& opt) {
  Shape s = check_inputs(x, y, opt);
  // Roll over the longer sequence so the row buffer has the shorter length.
  // The recurrence is symmetric under swapping the sequences.
  if (s.m > s.n) {
    std::swap(x, y);
    std::swap(s.n, s.m);
  }
  std::vector<double> prev(s.m, kInf), cur(s.m, kInf);
  for (std::size_t i = 0; i < s.n; ++i) {
    for (std::size_t j = 0; j < s.m; ++j) {
      if (!in_band(i, j, opt.sakoe_chiba)) {
        cur[j] = kInf;
        continue;
      }
      const double d = local_cost(x, i, y, j, s.dims);
      double best;
      if (i == 0 && j == 0) {
        best = 0.0;
      } else if (i == 0) {
        best = cur[j - 1];
      } else if (j == 0) {
        best = prev[0];
      } else {
        best = std::min({prev[j - 1], prev[j], cur[j - 1]});
      }
      cur[j] = d + best;
    }
    std::swap(prev, cur);
  }
  return prev[s.m - 1];
}

Eigen::MatrixXd dtw_cost_matrix(std::span<const double> x, std::span<const double> y, const DtwOptions& opt) {
  const Shape s = check_inputs(x, y, opt);
  Eigen::MatrixXd C = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(s.n), static_cast<Eigen::Index>(s.m), kInf);
  for (std::size_t i = 0; i < s.n; ++i) {
    for (std::size_t j = 0; j < s.m; ++j) {
      if (!in_band(i, j, opt.sakoe_chiba)) continue;
      const auto ii = static_cast<Eigen::Index>(i);
      const auto jj = static_cast<Eigen::Index>(j);
      const double d = local_cost(x, i, y, j, s.dims);
      if (i == 0 && j == 0) {
        C(ii, jj) = d;
      } else if (i == 0) {
        C(ii, jj) = d + C(ii, jj - 1);
      } else if (j == 0) {
        C(ii, jj) = d + C(ii - 1, jj);
      } else {
        C(ii, jj) = d + std::min({C(ii - 1, jj - 1), C(ii - 1, jj), C(ii, jj - 1)});
      }
    }
  }
  return C;
}

DtwAlignment dtw_path(std::span<const double> x, std::span<const double> y, const DtwOptions& opt) {
  const Eigen::MatrixXd C = dtw_cost_matrix(x, y, opt);
  DtwAlignment out;
  out.cost = C(C.rows() - 1, C.cols() - 1);
  if (!std::isfinite(out.cost)) throw NumericalError("dtw: no admissible path inside the band");
  Eigen::Index i = C.rows() - 1, j = C.cols() - 1;
  out.path.emplace_back(static_cast<int>(i), static_cast<int>(j));
  while (i > 0 || j > 0) {
    if (i == 0) {
      --j;
    } else if (j == 0) {
      --i;
    } else {
      const double diag = C(i - 1, j - 1), up = C(i - 1, j), left = C(i, j - 1);
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    }
    out.path.emplace_back(static_cast<int>(i), static_cast<int>(j));
  }
  std::reverse(out.path.begin(), out.path.end());
  return out;
}

KnnModel::KnnModel(std::vector<LabeledSegment> training, KnnOptions options)
    : training_(std::move(training)), options_(options) {
  if (training_.empty()) throw DataError("knn: empty training set");
  if (options_.k < 1) throw ConfigError("knn: k must be >= 1");
  if (static_cast<std::size_t>(options_.k) > training_.size()) {
    throw DataError("knn: k (" + std::to_string(options_.k) + ") exceeds training size (" +
                    std::to_string(training_.size()) + ")");
  }
}

std::vector<std::size_t> KnnModel::neighbors(std::span<const double> query) const {
  const auto k = static_cast<std::size_t>(options_.k);
  const auto dims = static_cast<std::size_t>(options_.dtw.dims);
  // Kept sorted by (distance, index); at most k entries.
  std::vector<std::pair<double, std::size_t>> best;
  best.reserve(k + 1);
  for (std::size_t i = 0; i < training_.size(); ++i) {
    const auto& cand = training_[i].values;
    if (options_.lower_bound_pruning && best.size() == k && !cand.empty() && !query.empty()) {
      // Every warping path visits the first and the last cell.
      double lb = 0.0;
      for (std::size_t d = 0; d < dims; ++d) {
        const double a = query[d] - cand[d];
        lb += a * a;
      }
      if (query.size() > dims || cand.size() > dims) {
        for (std::size_t d = 0; d < dims; ++d) {
          const double b = query[query.size() - dims + d] - cand[cand.size() - dims + d];
          lb += b * b;
        }
      }
      // A later index with an equal distance would lose the tie anyway.
      if (lb >= best.back().first) continue;
    }
    const double dist = dtw_distance(query, cand, options_.dtw);
    if (best.size() < k || dist < best.back().first) {
      const auto entry = std::make_pair(dist, i);
      best.insert(std::upper_bound(best.begin(), best.end(), entry), entry);
      if (best.size() > k) best.pop_back();
    }
  }
  std::vector<std::size_t> out(best.size());
  for (std::size_t q = 0; q < best.size(); ++q) out[q] = best[q].second;
  return out;
}

double KnnModel::score(std::span<const double> query) const {
  const auto nn = neighbors(query);
  const auto pos = std::count_if(nn.begin(), nn.end(), [&](auto i) { return training_[i].label == 1; });
  return static_cast<double>(pos) / static_cast<double>(nn.size());
}

int KnnModel::predict(std::span<const double> query) const {
  const auto nn = neighbors(query);
  const auto pos = std::count_if(nn.begin(), nn.end(), [&](auto i) { return training_[i].label == 1; });
  const auto neg = static_cast<std::ptrdiff_t>(nn.size()) - pos;
  return pos > neg ? 1 : 0;
}

double knn_score(const KnnModel& model, std::span<const double> query) { return model.score(query); }
int knn_predict(const KnnModel& model, std::span<const double> query) { return model.predict(query); }

}  // namespace eegintent
