#include "eegintent/eval.hpp"

#include "eegintent/util.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

namespace eegintent {

std::string_view split_mode_name(SplitMode m) { return m == SplitMode::Segment ? "segment" : "trial"; }

SplitMode parse_split_mode(std::string_view s) {
  if (s == "segment") return SplitMode::Segment;
  if (s == "trial" || s == "group") return SplitMode::GroupByTrial;
  throw ConfigError("unknown split mode '" + std::string(s) + "' (expected segment|trial)");
}

FoldAssignment stratified_kfold(std::span<const int> labels, int n_folds, std::uint64_t seed) {
  if (n_folds < 2) throw ConfigError("n_folds must be >= 2");
  FoldAssignment fa;
  fa.n_folds = n_folds;
  fa.seed = seed;
  fa.fold_of.assign(labels.size(), -1);
  std::mt19937_64 rng(seed);
  for (int cls : {1, 0}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) idx.push_back(i);
    if (idx.size() < static_cast<std::size_t>(n_folds)) {
      throw DataError("class " + std::to_string(cls) + " has " + std::to_string(idx.size()) +
                      " members, fewer than n_folds = " + std::to_string(n_folds));
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t q = 0; q < idx.size(); ++q) fa.fold_of[idx[q]] = static_cast<int>(q % static_cast<std::size_t>(n_folds));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (fa.fold_of[i] < 0) throw DataError("labels must be 0 or 1");
  }
  return fa;
}

FoldAssignment grouped_kfold(std::span<const std::string> groups, std::span<const int> labels, int n_folds,
                             std::uint64_t seed) {
  if (n_folds < 2) throw ConfigError("n_folds must be >= 2");
  if (groups.size() != labels.size()) throw DataError("groups and labels differ in length");
  std::vector<std::string> order;
  std::map<std::string, bool> has_pos;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    auto [it, inserted] = has_pos.emplace(groups[i], false);
    if (inserted) order.push_back(groups[i]);
    if (labels[i] == 1) it->second = true;
  }
  std::vector<std::string> pos, neg;
  for (const auto& g : order) (has_pos[g] ? pos : neg).push_back(g);
  if (pos.size() < static_cast<std::size_t>(n_folds)) {
    throw DataError("only " + std::to_string(pos.size()) + " groups contain a positive; need n_folds = " +
                    std::to_string(n_folds));
  }
  std::mt19937_64 rng(seed);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  std::map<std::string, int> fold;
  std::size_t q = 0;
  for (const auto& g : pos) fold[g] = static_cast<int>(q++ % static_cast<std::size_t>(n_folds));
  for (const auto& g : neg) fold[g] = static_cast<int>(q++ % static_cast<std::size_t>(n_folds));
  FoldAssignment fa;
  fa.n_folds = n_folds;
  fa.seed = seed;
  fa.fold_of.resize(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) fa.fold_of[i] = fold[groups[i]];
  return fa;
}

Metrics confusion_metrics(std::span<const int> predicted, std::span<const int> actual) {
  if (predicted.size() != actual.size()) throw DataError("predicted and actual differ in length");
  if (predicted.empty()) throw DataError("confusion_metrics needs at least one prediction");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] == 1, a = actual[i] == 1;
    if (p && a) ++tp;
    else if (p) ++fp;
    else if (a) ++fn;
    else ++tn;
  }
  Metrics m;
  m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(predicted.size());
  if (tp + fp == 0) {
    m.precision_undefined = true;
  } else {
    m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  if (tp + fn == 0) {
    m.recall_undefined = true;
  } else {
    m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DataError("scores and labels differ in length");
  std::size_t P = 0;
  for (int l : labels) P += l == 1 ? 1 : 0;
  const std::size_t N = labels.size() - P;
  if (P == 0 || N == 0) throw DataError("roc_auc needs both classes present");

  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });

  RocCurve roc;
  roc.points.emplace_back(0.0, 0.0);
  // Twice the area in units of one positive x one negative; exact integers.
  std::uint64_t area2 = 0;
  std::uint64_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < idx.size();) {
    const std::uint64_t tp0 = tp, fp0 = fp;
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] == 1 ? tp : fp) += 1;
      ++j;
    }
    area2 += (fp - fp0) * (tp + tp0);
    roc.points.emplace_back(static_cast<double>(fp) / static_cast<double>(N), static_cast<double>(tp) / static_cast<double>(P));
    i = j;
  }
  roc.auc = static_cast<double>(area2) / (2.0 * static_cast<double>(P) * static_cast<double>(N));
  return roc;
}

EvalReport run_cv(const std::vector<LabeledSegment>& segments, const WindowConfig& cfg, const CvOptions& opt) {
  check_window(cfg);
  for (const auto& s : segments) {
    if (s.synthetic) throw DataError("run_cv expects real segments only; oversampling happens inside each fold");
  }
  std::vector<int> labels(segments.size());
  for (std::size_t i = 0; i < segments.size(); ++i) labels[i] = segments[i].label;

  const std::uint64_t split_seed = substream_seed(opt.seed, "split");
  FoldAssignment folds;
  if (opt.split == SplitMode::Segment) {
    folds = stratified_kfold(labels, opt.n_folds, split_seed);
  } else {
    std::vector<std::string> groups(segments.size());
    for (std::size_t i = 0; i < segments.size(); ++i) groups[i] = segments[i].source_trial_id;
    folds = grouped_kfold(groups, labels, opt.n_folds, split_seed);
  }

  EvalReport report;
  report.config = cfg;
  report.split = opt.split;
  report.n_segments = segments.size();
  report.oof_scores.assign(segments.size(), 0.0);
  report.oof_coverage.assign(segments.size(), 0);

  for (int f = 0; f < opt.n_folds; ++f) {
    std::vector<LabeledSegment> train;
    std::vector<std::size_t> test;
    for (std::size_t i = 0; i < segments.size(); ++i) {
      if (folds.fold_of[i] == f) {
        test.push_back(i);
      } else {
        train.push_back(segments[i]);
      }
    }
    std::size_t test_pos = 0;
    for (auto i : test) test_pos += labels[i] == 1 ? 1 : 0;
    if (test_pos == 0 || test_pos == test.size()) {
      throw DataError("fold " + std::to_string(f) + " lacks one class; try a different seed or more data");
    }

    FoldResult fr;
    fr.fold = f;
    fr.n_train_real = train.size();
    if (opt.oversample) {
      train = adasyn(train, {opt.adasyn_k, opt.adasyn_beta, substream_seed(opt.seed, "adasyn", static_cast<std::uint64_t>(f))});
    }
    fr.n_train_synthetic = train.size() - fr.n_train_real;

    const KnnModel model(std::move(train), {opt.k, opt.dtw, opt.lower_bound_pruning});
    std::vector<double> scores(test.size());
    parallel_for(test.size(), opt.jobs, [&](std::size_t q) { scores[q] = model.score(segments[test[q]].values); });

    std::vector<int> predicted(test.size()), actual(test.size());
    for (std::size_t q = 0; q < test.size(); ++q) {
      const auto i = test[q];
      if (segments[i].synthetic) ++fr.test_synthetic;
      report.oof_scores[i] = scores[q];
      ++report.oof_coverage[i];
      // Equivalent to the majority vote for odd k.
      predicted[q] = scores[q] > 0.5 ? 1 : 0;
      actual[q] = labels[i];
    }
    fr.n_test = test.size();
    fr.metrics = confusion_metrics(predicted, actual);
    report.synthetic_in_test += fr.test_synthetic;
    report.folds.push_back(fr);
  }

  for (const auto& fr : report.folds) {
    report.mean.accuracy += fr.metrics.accuracy;
    report.mean.precision += fr.metrics.precision;
    report.mean.recall += fr.metrics.recall;
    report.mean.f1 += fr.metrics.f1;
    report.mean.precision_undefined |= fr.metrics.precision_undefined;
    report.mean.recall_undefined |= fr.metrics.recall_undefined;
  }
  const auto nf = static_cast<double>(report.folds.size());
  report.mean.accuracy /= nf;
  report.mean.precision /= nf;
  report.mean.recall /= nf;
  report.mean.f1 /= nf;
  report.roc = roc_auc(report.oof_scores, labels);
  return report;
}

ShuffleResult label_shuffle_test(const std::vector<LabeledSegment>& segments, const WindowConfig& cfg,
                                 const CvOptions& opt) {
  ShuffleResult r;
  r.seed = opt.seed;
  r.original_auc = run_cv(segments, cfg, opt).roc.auc;
  std::vector<int> labels(segments.size());
  for (std::size_t i = 0; i < segments.size(); ++i) labels[i] = segments[i].label;
  std::mt19937_64 rng(substream_seed(opt.seed, "shuffle"));
  std::shuffle(labels.begin(), labels.end(), rng);
  std::vector<LabeledSegment> shuffled = segments;
  for (std::size_t i = 0; i < shuffled.size(); ++i) shuffled[i].label = labels[i];
  r.shuffled_auc = run_cv(shuffled, cfg, opt).roc.auc;
  return r;
}

std::vector<LabeledSegment> build_segments(const std::vector<BandPowerTrial>& trials,
                                           std::span<const std::size_t> features, const WindowConfig& cfg) {
  std::vector<LabeledSegment> out;
  for (const auto& t : trials) {
    const auto seq = feature_sequence(t, features);
    auto segs = slide(seq, cfg, t.trial_id, static_cast<int>(features.size()));
    out.insert(out.end(), std::make_move_iterator(segs.begin()), std::make_move_iterator(segs.end()));
  }
  return out;
}

std::vector<WindowConfig> default_sweep_configs(int grid_stride) {
  std::vector<WindowConfig> out = kReferenceWindowConfigs;
  for (int len : window_grid()) {
    const WindowConfig c{len, grid_stride};
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  }
  return out;
}

std::vector<SweepEntry> sweep(const std::vector<BandPowerTrial>& trials, std::span<const std::size_t> features,
                              const std::vector<WindowConfig>& configs, const CvOptions& opt) {
  std::vector<SweepEntry> entries(configs.size());
  // Configurations run concurrently; each one scores its folds serially.
  CvOptions inner = opt;
  inner.jobs = 1;
  parallel_for(configs.size(), opt.jobs, [&](std::size_t c) {
    entries[c].config = configs[c];
    try {
      const auto segs = build_segments(trials, features, configs[c]);
      entries[c].report = run_cv(segs, configs[c], inner);
      entries[c].ok = true;
    } catch (const std::exception& e) {
      entries[c].error = e.what();
    }
  });
  std::stable_sort(entries.begin(), entries.end(), [](const SweepEntry& a, const SweepEntry& b) {
    if (a.ok != b.ok) return a.ok;
    if (!a.ok) return false;
    return a.report.roc.auc > b.report.roc.auc;
  });
  return entries;
}

std::string roc_file_name(const WindowConfig& cfg) {
  return "roc_L" + std::to_string(cfg.length_frames) + "_S" + std::to_string(cfg.stride_frames) + ".csv";
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepEntry>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "window_length,stride,n_segments,accuracy,precision,recall,f1,auc,lookahead_s\n";
  for (const auto& e : entries) {
    if (!e.ok) continue;
    const auto& r = e.report;
    out << e.config.length_frames << ',' << e.config.stride_frames << ',' << r.n_segments << ','
        << format_fixed(r.mean.accuracy, 6) << ',' << format_fixed(r.mean.precision, 6) << ','
        << format_fixed(r.mean.recall, 6) << ',' << format_fixed(r.mean.f1, 6) << ',' << format_fixed(r.roc.auc, 6)
        << ',' << format_double(e.config.lookahead_s()) << '\n';
  }
}

void write_sweep_failures_csv(const std::filesystem::path& path, const std::vector<SweepEntry>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "window_length,stride,error\n";
  for (const auto& e : entries) {
    if (e.ok) continue;
    std::string msg = e.error;
    std::replace(msg.begin(), msg.end(), '"', '\'');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    out << e.config.length_frames << ',' << e.config.stride_frames << ",\"" << msg << "\"\n";
  }
}

void write_roc_csv(const std::filesystem::path& path, const RocCurve& roc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "fpr,tpr\n";
  for (const auto& [fpr, tpr] : roc.points) out << format_double(fpr) << ',' << format_double(tpr) << '\n';
}

}  // namespace eegintent
