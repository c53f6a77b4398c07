#include "eegintent/stage_stats.hpp"

#include "eegintent/preprocess.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace eegintent {

namespace {

struct RankedTable {
  std::vector<std::vector<double>> ranks;  // complete rows only
  std::vector<std::vector<double>> values;
  std::vector<std::size_t> dropped;
  double tie_sum = 0.0;  // sum over rows of sum(t^3 - t)
  std::size_t k = 0;
};

// Midranks within each complete row.
RankedTable rank_rows(const BlockTable& table) {
  RankedTable out;
  if (table.empty()) throw DataError("friedman: empty table");
  out.k = table.front().size();
  if (out.k < 2) throw DataError("friedman: need at least 2 treatments");
  for (std::size_t r = 0; r < table.size(); ++r) {
    const auto& row = table[r];
    if (row.size() != out.k) throw DataError("friedman: ragged table");
    if (std::any_of(row.begin(), row.end(), [](const auto& c) { return !c.has_value(); })) {
      out.dropped.push_back(r);
      continue;
    }
    std::vector<double> vals(out.k);
    for (std::size_t j = 0; j < out.k; ++j) vals[j] = *row[j];
    std::vector<std::size_t> idx(out.k);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
    std::vector<double> ranks(out.k);
    for (std::size_t i = 0; i < out.k;) {
      std::size_t j = i;
      while (j + 1 < out.k && vals[idx[j + 1]] == vals[idx[i]]) ++j;
      const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t q = i; q <= j; ++q) ranks[idx[q]] = mid;
      const auto t = static_cast<double>(j - i + 1);
      out.tie_sum += t * t * t - t;
      i = j + 1;
    }
    out.ranks.push_back(std::move(ranks));
    out.values.push_back(std::move(vals));
  }
  if (out.ranks.size() < 2) {
    throw DataError("friedman: fewer than 2 complete rows (" + std::to_string(out.dropped.size()) +
                    " dropped for absent cells)");
  }
  return out;
}

std::vector<double> rank_sums(const RankedTable& t) {
  std::vector<double> R(t.k, 0.0);
  for (const auto& row : t.ranks)
    for (std::size_t j = 0; j < t.k; ++j) R[j] += row[j];
  return R;
}

}  // namespace

FriedmanResult friedman(const BlockTable& table) {
  const RankedTable t = rank_rows(table);
  const auto n = static_cast<double>(t.ranks.size());
  const auto k = static_cast<double>(t.k);
  const auto R = rank_sums(t);
  double sum_r2 = 0.0;
  for (double r : R) sum_r2 += r * r;

  FriedmanResult out;
  out.df = static_cast<int>(t.k) - 1;
  out.n_blocks = static_cast<int>(t.ranks.size());
  out.dropped = t.dropped;
  const double raw = 12.0 / (n * k * (k + 1.0)) * sum_r2 - 3.0 * n * (k + 1.0);
  const double correction = 1.0 - t.tie_sum / (n * (k * k * k - k));
  if (correction <= 1e-12) {
    out.chi2 = 0.0;
    out.p_value = 1.0;
    return out;
  }
  out.chi2 = std::max(0.0, raw / correction);
  const boost::math::chi_squared_distribution<double> chi(out.df);
  out.p_value = boost::math::cdf(boost::math::complement(chi, out.chi2));
  return out;
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw DataError("cohens_d needs at least 2 values per group");
  auto moments = [](std::span<const double> v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::pair{m, ss};
  };
  const auto [ma, ssa] = moments(a);
  const auto [mb, ssb] = moments(b);
  const double pooled = (ssa + ssb) / static_cast<double>(a.size() + b.size() - 2);
  if (!(pooled > 0.0)) throw DataError("cohens_d: zero pooled variance");
  return (ma - mb) / std::sqrt(pooled);
}

std::vector<PosthocResult> conover_posthoc(const BlockTable& table) {
  const RankedTable t = rank_rows(table);
  const auto n = static_cast<double>(t.ranks.size());
  const auto k = static_cast<double>(t.k);
  const auto R = rank_sums(t);
  double a1 = 0.0;
  for (const auto& row : t.ranks)
    for (double r : row) a1 += r * r;
  double sum_r2 = 0.0;
  for (double r : R) sum_r2 += r * r;
  const double df = (n - 1.0) * (k - 1.0);
  const double var = std::max(0.0, 2.0 * (n * a1 - sum_r2) / df);
  const double se = std::sqrt(var);
  const boost::math::students_t_distribution<double> tdist(df);

  std::vector<PosthocResult> out;
  for (std::size_t a = 0; a < t.k; ++a) {
    for (std::size_t b = a + 1; b < t.k; ++b) {
      PosthocResult r;
      r.stage_a = static_cast<int>(a);
      r.stage_b = static_cast<int>(b);
      const double diff = R[a] - R[b];
      if (se > 0.0) {
        r.test_statistic = diff / se;
        r.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(tdist, std::abs(r.test_statistic))));
      } else if (diff == 0.0) {
        r.test_statistic = 0.0;
        r.p_value = 1.0;
      } else {
        r.test_statistic = std::copysign(std::numeric_limits<double>::infinity(), diff);
        r.p_value = 0.0;
      }
      std::vector<double> va, vb;
      for (const auto& row : t.values) {
        va.push_back(row[a]);
        vb.push_back(row[b]);
      }
      try {
        r.effect_size_d = cohens_d(va, vb);
      } catch (const DataError&) {
        r.effect_size_d = std::numeric_limits<double>::quiet_NaN();
      }
      out.push_back(r);
    }
  }
  return out;
}

std::vector<StageFeatureTable> stage_feature_tables(const std::vector<BandPowerTrial>& trials,
                                                    const std::vector<StagePath>& paths, int n_stages) {
  if (trials.size() != paths.size()) throw DataError("one stage path per trial is required");
  std::vector<std::string> subjects;
  std::map<std::string, std::size_t> subject_row;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (paths[i].size() != trials[i].num_frames()) {
      throw DataError("stage path length " + std::to_string(paths[i].size()) + " != frame count " +
                      std::to_string(trials[i].num_frames()) + " for trial '" + trials[i].trial_id + "'");
    }
    if (subject_row.emplace(trials[i].subject_id, subjects.size()).second) {
      subjects.push_back(trials[i].subject_id);
    }
  }

  const auto S = static_cast<std::size_t>(n_stages);
  std::vector<StageFeatureTable> tables(kNumFeatures);
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    tables[f].feature = f;
    tables[f].subjects = subjects;
    tables[f].cells.assign(subjects.size(), std::vector<std::optional<double>>(S));
  }
  for (std::size_t row = 0; row < subjects.size(); ++row) {
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      std::vector<std::vector<double>> pooled(S);
      for (std::size_t i = 0; i < trials.size(); ++i) {
        if (subject_row.at(trials[i].subject_id) != row) continue;
        for (std::size_t t = 0; t < paths[i].size(); ++t) {
          const auto s = static_cast<std::size_t>(paths[i][t]);
          if (s >= S) throw DataError("stage index out of range");
          pooled[s].push_back(trials[i].frames(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(f)));
        }
      }
      for (std::size_t s = 0; s < S; ++s) {
        if (pooled[s].empty()) continue;
        const std::vector<double> kept = pooled[s].size() >= 4 ? iqr_filter(pooled[s]).kept : pooled[s];
        tables[f].cells[row][s] = std::accumulate(kept.begin(), kept.end(), 0.0) / static_cast<double>(kept.size());
      }
    }
  }
  return tables;
}

FeatureBattery run_battery(const StageFeatureTable& table, double alpha) {
  FeatureBattery out;
  out.feature = table.feature;
  const std::size_t k = table.cells.empty() ? 0 : table.cells.front().size();
  out.normality.resize(k);
  for (std::size_t s = 0; s < k; ++s) {
    std::vector<double> col;
    for (const auto& row : table.cells)
      if (row[s]) col.push_back(*row[s]);
    try {
      out.normality[s] = shapiro_wilk(col);
      if (out.normality[s]->p_value < alpha) out.normality_rejected = true;
    } catch (const DataError&) {
    }
  }
  try {
    out.friedman = friedman(table.cells);
    if (out.friedman->p_value < alpha) out.posthoc = conover_posthoc(table.cells);
  } catch (const DataError& e) {
    out.error = e.what();
  }
  return out;
}

RtSummary rt_summary(std::span<const double> times, double mass) {
  const std::size_t n = times.size();
  if (n < 3) throw DataError("rt_summary needs at least 3 response times");
  if (!(mass > 0.0 && mass <= 1.0)) throw ConfigError("HDI mass must be in (0, 1]");
  std::vector<double> x(times.begin(), times.end());
  std::sort(x.begin(), x.end());
  RtSummary r;
  r.n = n;
  r.mean_s = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  // Guard the ceiling against representation error in mass * n.
  auto m = static_cast<std::size_t>(std::ceil(mass * static_cast<double>(n) - 1e-9));
  m = std::clamp<std::size_t>(m, 1, n);
  std::size_t best = 0;
  double best_width = x[m - 1] - x[0];
  for (std::size_t i = 1; i + m <= n; ++i) {
    const double width = x[i + m - 1] - x[i];
    if (width < best_width) {
      best_width = width;
      best = i;
    }
  }
  r.hdi_low_s = x[best];
  r.hdi_high_s = x[best + m - 1];
  return r;
}

}  // namespace eegintent
