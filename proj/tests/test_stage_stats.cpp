#include <gtest/gtest.h>

#include "eegintent/stage_stats.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

using namespace eegintent;

// Reference values below were produced once with scipy.stats 1.15 and
// scikit-posthocs (p_adjust=None) and are frozen here.

TEST(ShapiroWilk, ReferenceSamples) {
  struct Case {
    std::vector<double> x;
    double w, p;
  };
  std::vector<double> normal50;
  for (int i = 1; i <= 50; ++i) {
    // Inverse normal CDF via erfc inversion by bisection; plenty accurate.
    const double target = (i - 0.375) / 50.25;
    double lo = -10.0, hi = 10.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (0.5 * std::erfc(-mid / std::numbers::sqrt2) < target ? lo : hi) = mid;
    }
    normal50.push_back(0.5 * (lo + hi));
  }
  std::vector<double> bimodal;
  for (int i = 0; i < 50; ++i) bimodal.push_back((i < 25 ? -10.0 : 10.0) + i * 1e-3);

  const std::vector<double> base{9.917, -1.555, -7.258, 7.941, 11.985, -1.999, -0.181, 15.592, 11.967, -0.614,
                                 8.51,  20.998, 10.914, 3.282, 17.591, 23.793, 10.144, 9.716,  25.733, 24.291};
  auto head = [&](std::size_t n) { return std::vector<double>(base.begin(), base.begin() + static_cast<std::ptrdiff_t>(n)); };

  const std::vector<Case> cases{
      {{148, 154, 158, 160, 161, 162, 166, 170, 182, 195, 236}, 0.7888146948631716, 0.006703814061898823},
      {normal50, 0.9984740698028733, 0.999999990349777},
      {bimodal, 0.6374820773229012, 7.317467113046051e-10},
      {head(3), 0.9637546081441135, 0.6341636237718492},
      {head(4), 0.913606831182686, 0.5017191747255789},
      {head(5), 0.8909681110662444, 0.3619946913902021},
      {head(7), 0.9157613561495831, 0.43719867624350706},
      {head(20), 0.9584192485409103, 0.512774301862617},
  };
  for (const auto& c : cases) {
    const auto r = shapiro_wilk(c.x);
    EXPECT_NEAR(r.w, c.w, 1e-6) << c.x.size();
    EXPECT_NEAR(r.p_value, c.p, 1e-4 * std::max(1.0, c.p) + 1e-3 * c.p) << c.x.size();
  }
}

TEST(ShapiroWilk, Preconditions) {
  EXPECT_THROW(shapiro_wilk(std::vector<double>{1.0, 2.0}), DataError);
  EXPECT_THROW(shapiro_wilk(std::vector<double>(10, 3.0)), DataError);
}

TEST(ShapiroWilk, LocationScaleInvariant) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  std::vector<double> x(30);
  for (auto& v : x) v = n01(rng);
  auto y = x;
  for (auto& v : y) v = 5.0 + 3.0 * v;
  EXPECT_NEAR(shapiro_wilk(x).w, shapiro_wilk(y).w, 1e-12);
}

namespace {

BlockTable table(const std::vector<std::vector<double>>& rows) {
  BlockTable t;
  for (const auto& r : rows) {
    std::vector<std::optional<double>> row;
    for (double v : r) row.emplace_back(v);
    t.push_back(std::move(row));
  }
  return t;
}

}  // namespace

TEST(Friedman, IdenticalOrdering) {
  const auto r = friedman(table({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}, {1, 2, 3}}));
  EXPECT_DOUBLE_EQ(r.chi2, 8.0);
  EXPECT_EQ(r.df, 2);
  EXPECT_NEAR(r.p_value, 0.018315638888734182, 1e-12);
}

TEST(Friedman, ReferenceTables) {
  const auto a = friedman(table({{1, 2, 3, 4}, {2, 1, 4, 3}, {1, 3, 2, 4}, {1, 2, 4, 3}, {2, 1, 3, 4}}));
  EXPECT_NEAR(a.chi2, 10.2, 1e-12);
  EXPECT_NEAR(a.p_value, 0.016940373522533844, 1e-12);
  const auto b = friedman(table({{1, 1, 3}, {2, 1, 3}, {1, 2, 2}, {3, 1, 2}, {1, 1, 1}, {2, 3, 1}}));
  EXPECT_NEAR(b.chi2, 0.7777777777777715, 1e-12);
  EXPECT_NEAR(b.p_value, 0.6778095780054525, 1e-12);
}

TEST(Friedman, AllTiedAndIncompleteRows) {
  const auto r = friedman(table({{2, 2, 2}, {5, 5, 5}, {1, 1, 1}}));
  EXPECT_EQ(r.chi2, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
  auto t = table({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}, {1, 2, 3}, {3, 2, 1}});
  t[4][1].reset();
  const auto d = friedman(t);
  EXPECT_EQ(d.n_blocks, 4);
  ASSERT_EQ(d.dropped.size(), 1u);
  EXPECT_EQ(d.dropped[0], 4u);
  EXPECT_DOUBLE_EQ(d.chi2, 8.0);
}

TEST(Conover, ReferencePairs) {
  const auto res = conover_posthoc(table({{1, 2, 3, 4}, {2, 1, 4, 3}, {1, 3, 2, 4}, {1, 2, 4, 3}, {2, 1, 3, 4}}));
  ASSERT_EQ(res.size(), 6u);
  const double t[] = {-0.7745966692414834, -3.4856850115866753, -4.260281680828158,
                      -2.711088342345192,  -3.4856850115866753, -0.7745966692414834};
  const double p[] = {0.4535705360219445,   0.004498978604900415, 0.0011069637098693387,
                      0.018917254783329767, 0.004498978604900415, 0.4535705360219445};
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_NEAR(res[i].test_statistic, t[i], 1e-12) << i;
    EXPECT_NEAR(res[i].p_value, p[i], 1e-10) << i;
  }
  EXPECT_EQ(res[0].stage_a, 0);
  EXPECT_EQ(res[0].stage_b, 1);
  EXPECT_EQ(res[5].stage_a, 2);
  EXPECT_EQ(res[5].stage_b, 3);
}

TEST(Conover, ZeroRankVarianceGivesInfiniteStatistic) {
  const auto res = conover_posthoc(table({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}, {1, 2, 3}}));
  ASSERT_EQ(res.size(), 3u);
  for (const auto& r : res) {
    EXPECT_TRUE(std::isinf(r.test_statistic));
    EXPECT_LT(r.test_statistic, 0.0);
    EXPECT_EQ(r.p_value, 0.0);
  }
}

TEST(CohensD, HandValue) {
  EXPECT_NEAR(cohens_d(std::vector<double>{1, 2, 3}, std::vector<double>{2, 4, 6}), -2.0 / std::sqrt(2.5), 1e-12);
  EXPECT_THROW(cohens_d(std::vector<double>{1, 1}, std::vector<double>{2, 2}), DataError);
}

TEST(RtSummary, ShortestInterval) {
  const auto r = rt_summary(std::vector<double>{1, 1, 1, 1, 2, 2, 3, 50}, 0.75);
  EXPECT_EQ(r.n, 8u);
  EXPECT_DOUBLE_EQ(r.mean_s, 61.0 / 8.0);
  EXPECT_DOUBLE_EQ(r.hdi_low_s, 1.0);
  EXPECT_DOUBLE_EQ(r.hdi_high_s, 2.0);
  EXPECT_THROW(rt_summary(std::vector<double>{1, 2}), DataError);
}

TEST(RtSummary, UniformSampleCoversMass) {
  std::vector<double> x;
  for (int i = 0; i < 100; ++i) x.push_back(i);
  const auto r = rt_summary(x, 0.95);
  EXPECT_DOUBLE_EQ(r.hdi_low_s, 0.0);
  EXPECT_DOUBLE_EQ(r.hdi_high_s, 94.0);
}

TEST(StageTables, MeansPerSubjectAndStage) {
  // Two subjects, one trial each; feature 0 equals the stage index + subject.
  std::vector<BandPowerTrial> trials(2);
  std::vector<StagePath> paths(2);
  for (int s = 0; s < 2; ++s) {
    auto& t = trials[static_cast<std::size_t>(s)];
    t.trial_id = "t" + std::to_string(s);
    t.subject_id = "s" + std::to_string(s);
    t.frames = FrameMatrix::Zero(8, 70);
    for (int f = 0; f < 8; ++f) {
      const int stage = f / 2;
      paths[static_cast<std::size_t>(s)].push_back(stage);
      t.frames(f, 0) = stage + s;
    }
    t.response_time_s = 1.0;
  }
  const auto tables = stage_feature_tables(trials, paths, 4);
  ASSERT_EQ(tables.size(), 70u);
  ASSERT_EQ(tables[0].cells.size(), 2u);
  for (int s = 0; s < 2; ++s)
    for (int st = 0; st < 4; ++st)
      EXPECT_DOUBLE_EQ(*tables[0].cells[static_cast<std::size_t>(s)][static_cast<std::size_t>(st)], st + s);
}

TEST(Battery, CapturesErrorsInsteadOfThrowing) {
  StageFeatureTable t;
  t.feature = 3;
  t.subjects = {"a", "b"};
  t.cells = table({{1, 2, 3, 4}, {1, 2, 3, 4}});
  const auto b = run_battery(t);
  EXPECT_EQ(b.feature, 3u);
  EXPECT_TRUE(b.friedman.has_value());
  // Two blocks are too few for Shapiro-Wilk; the slot stays empty.
  for (const auto& n : b.normality) EXPECT_FALSE(n.has_value());
  EXPECT_TRUE(b.error.empty());

  t.subjects = {"a"};
  t.cells = table({{1, 2, 3, 4}});
  const auto one = run_battery(t);
  EXPECT_FALSE(one.friedman.has_value());
  EXPECT_FALSE(one.error.empty());
}
