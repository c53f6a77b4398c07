#include "cli.hpp"

#include "eegintent/config.hpp"
#include "eegintent/eval.hpp"
#include "eegintent/hmm.hpp"
#include "eegintent/ingest.hpp"
#include "eegintent/preprocess.hpp"
#include "eegintent/serialize.hpp"
#include "eegintent/stage_stats.hpp"
#include "eegintent/util.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

namespace eegintent {

namespace fs = std::filesystem;

namespace {

struct Flags {
  std::string config_path;
  std::vector<std::string> sets;
  // Flags that map onto config keys; applied last.
  std::vector<std::pair<std::string, std::string>> overrides;
  std::string models;
  std::string states;
  std::string window;
  bool per_scenario = false;
};

// Inputs and outputs of one run, hashed into run_manifest.json.
class RunRecorder {
 public:
  explicit RunRecorder(fs::path out_dir) : out_dir_(std::move(out_dir)) {}

  void input(const fs::path& p) { inputs_.push_back(p); }
  fs::path output(const std::string& rel) {
    outputs_.push_back(rel);
    return out_dir_ / rel;
  }
  [[nodiscard]] const fs::path& dir() const { return out_dir_; }

  void write(const std::string& command, const RunConfig& cfg) const {
    Json j;
    j["command"] = command;
    j["seed"] = cfg.seed;
    Json config = Json::object();
    for (const auto& [k, v] : to_key_values(cfg)) config[k] = v;
    j["config"] = std::move(config);
    Json in = Json::array();
    for (const auto& p : inputs_) in.push_back({{"path", p.generic_string()}, {"sha256", sha256_file(p)}});
    j["inputs"] = std::move(in);
    Json out = Json::array();
    for (const auto& rel : outputs_) out.push_back({{"path", rel}, {"sha256", sha256_file(out_dir_ / rel)}});
    j["outputs"] = std::move(out);
    write_json(out_dir_ / "run_manifest.json", j);
  }

 private:
  fs::path out_dir_;
  std::vector<fs::path> inputs_;
  std::vector<std::string> outputs_;
};

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write '" + p.string() + "'");
  return out;
}

RunConfig resolve_config(const Flags& f) {
  RunConfig cfg = f.config_path.empty() ? RunConfig{} : load_run_config(f.config_path);
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& [k, v] : f.overrides) set_config_value(cfg, k, v);
  return cfg;
}

std::vector<BandPowerTrial> load_inputs(const RunConfig& cfg, RunRecorder& rec) {
  if (cfg.manifest.empty()) throw ConfigError("no manifest given (use --manifest or paths.manifest)");
  const auto entries = read_manifest(cfg.manifest);
  rec.input(cfg.manifest);
  for (const auto& e : entries) rec.input(cfg.manifest.parent_path() / e.data_path);
  auto trials = load_trials(cfg.manifest);
  if (trials.empty()) throw DataError("manifest lists no trials");
  return trials;
}

// ---------------------------------------------------------------------------

void cmd_synth(const RunConfig& cfg, RunRecorder& rec, std::ostream& out) {
  SynthConfig sc = default_synth_config(cfg.seed);
  sc.n_subjects = cfg.synth_subjects;
  sc.trials_per_subject = cfg.synth_trials_per_subject;
  sc.ramp_feature = cfg.feature;
  sc.ramp_amplitude = cfg.synth_ramp_amplitude;
  sc.ramp_frames = cfg.synth_ramp_frames;
  sc.noise_sigma = cfg.synth_noise_sigma;
  const auto result = synth_generate(sc);

  save_trials(rec.dir(), result.trials);
  rec.output("manifest.jsonl");
  for (const auto& t : result.trials) rec.output("frames/" + t.trial_id + ".csv");

  {
    auto f = open_out(rec.output("truth.jsonl"));
    for (const auto& t : result.truth) {
      Json j;
      j["trial_id"] = t.trial_id;
      j["states"] = t.states;
      f << j.dump() << '\n';
    }
  }
  Json model;
  model["truth_model"] = to_json(sc.truth_model);
  model["offset"] = result.offset;
  model["noise_sigma"] = sc.noise_sigma;
  model["terminal_state_frames"] = sc.terminal_state_frames;
  model["ramp_feature"] = feature_name(sc.ramp_feature);
  model["ramp_amplitude"] = sc.ramp_amplitude;
  model["ramp_frames"] = sc.ramp_frames;
  model["mean_duration_s"] = sc.mean_duration_s;
  model["duration_jitter_s"] = sc.duration_jitter_s;
  model["loading_matrix"] = matrix_to_json(sc.loading_matrix);
  write_json(rec.output("truth_model.json"), model);
  out << "synth: " << result.trials.size() << " trials written to " << rec.dir().string() << '\n';
}

struct Preprocessed {
  std::string id;
  Standardizer standardizer;
  PcaModel pca;
};

void cmd_fit_hmm(const RunConfig& cfg, RunRecorder& rec, std::ostream& out) {
  const auto trials = load_inputs(cfg, rec);
  const std::size_t n = trials.size();

  std::vector<Preprocessed> pre;
  std::vector<Eigen::MatrixXd> scores(n);
  if (cfg.pca_scope == FitScope::Pooled) {
    Eigen::Index rows = 0;
    for (const auto& t : trials) rows += t.frames.rows();
    Eigen::MatrixXd all(rows, static_cast<Eigen::Index>(kNumFeatures));
    Eigen::Index r = 0;
    for (const auto& t : trials) {
      all.middleRows(r, t.frames.rows()) = t.frames;
      r += t.frames.rows();
    }
    Preprocessed p{"pooled", standardize_fit(all), {}};
    p.pca = pca_fit(standardize_apply(p.standardizer, all), cfg.pca_components);
    for (std::size_t i = 0; i < n; ++i) scores[i] = pca_transform(p.pca, standardize_apply(p.standardizer, trials[i].frames));
    pre.push_back(std::move(p));
  } else {
    pre.resize(n);
    parallel_for(n, cfg.jobs, [&](std::size_t i) {
      pre[i].id = trials[i].trial_id;
      pre[i].standardizer = standardize_fit(trials[i].frames);
      const auto z = standardize_apply(pre[i].standardizer, trials[i].frames);
      pre[i].pca = pca_fit(z, cfg.pca_components);
      scores[i] = pca_transform(pre[i].pca, z);
    });
  }

  HmmFitOptions ho;
  ho.n_states = cfg.hmm_states;
  ho.tol = cfg.hmm_tol;
  ho.max_iter = cfg.hmm_max_iter;
  ho.covariance = cfg.hmm_covariance;
  std::vector<std::string> ids;
  std::vector<HmmFit> fits;
  if (cfg.hmm_scope == FitScope::Pooled) {
    ho.seed = substream_seed(cfg.seed, "hmm");
    ids.emplace_back("pooled");
    fits.push_back(hmm_fit(scores, ho));
  } else {
    fits.resize(n);
    for (const auto& t : trials) ids.push_back(t.trial_id);
    parallel_for(n, cfg.jobs, [&](std::size_t i) {
      HmmFitOptions o = ho;
      o.seed = substream_seed(cfg.seed, "hmm", i);
      fits[i] = hmm_fit({scores[i]}, o);
    });
  }

  Json doc;
  doc["pca_scope"] = fit_scope_name(cfg.pca_scope);
  doc["hmm_scope"] = fit_scope_name(cfg.hmm_scope);
  doc["n_components"] = cfg.pca_components;
  doc["n_states"] = cfg.hmm_states;
  Json pj = Json::array();
  for (const auto& p : pre) pj.push_back({{"id", p.id}, {"standardizer", to_json(p.standardizer)}, {"pca", to_json(p.pca)}});
  doc["preprocess"] = std::move(pj);
  Json hj = Json::array();
  for (std::size_t i = 0; i < fits.size(); ++i) {
    hj.push_back({{"id", ids[i]}, {"model", to_json(fits[i].model)}, {"report", to_json(fits[i].report)}});
  }
  doc["hmm"] = std::move(hj);
  write_json(rec.output("models.json"), doc);

  {
    auto f = open_out(rec.output("pca_variance.csv"));
    f << "id,component,explained_variance_ratio,cumulative_ratio\n";
    for (const auto& p : pre) {
      double cum = 0.0;
      for (Eigen::Index c = 0; c < p.pca.explained_variance_ratio.size(); ++c) {
        cum += p.pca.explained_variance_ratio(c);
        f << p.id << ',' << c + 1 << ',' << format_fixed(p.pca.explained_variance_ratio(c), 6) << ','
          << format_fixed(cum, 6) << '\n';
      }
    }
  }
  {
    auto f = open_out(rec.output("fit_report.csv"));
    f << "id,iterations,converged,final_log_likelihood,underdetermined,variance_floor_hit\n";
    for (std::size_t i = 0; i < fits.size(); ++i) {
      const auto& r = fits[i].report;
      f << ids[i] << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ','
        << format_fixed(r.log_likelihood_trace.empty() ? 0.0 : r.log_likelihood_trace.back(), 6) << ','
        << (r.underdetermined ? 1 : 0) << ',' << (r.variance_floor_hit ? 1 : 0) << '\n';
    }
  }

  double cum_mean = 0.0;
  for (const auto& p : pre) cum_mean += p.pca.explained_variance_ratio.sum();
  cum_mean /= static_cast<double>(pre.size());
  std::size_t converged = 0;
  for (const auto& f : fits) converged += f.report.converged ? 1 : 0;
  out << "fit-hmm: " << fits.size() << " model(s), " << converged << " converged; mean cumulative variance of "
      << cfg.pca_components << " PCs = " << format_fixed(cum_mean, 4) << '\n';
}

void cmd_decode(const RunConfig& cfg, const Flags& flags, RunRecorder& rec, std::ostream& out) {
  if (flags.models.empty()) throw ConfigError("decode needs --models");
  const auto trials = load_inputs(cfg, rec);
  rec.input(flags.models);
  const Json doc = read_json(flags.models);

  std::map<std::string, std::pair<Standardizer, PcaModel>> pre;
  for (const auto& p : doc.at("preprocess")) {
    pre.emplace(p.at("id").get<std::string>(),
                std::make_pair(standardizer_from_json(p.at("standardizer")), pca_from_json(p.at("pca"))));
  }
  std::map<std::string, HmmModel> models;
  for (const auto& h : doc.at("hmm")) models.emplace(h.at("id").get<std::string>(), hmm_from_json(h.at("model")));
  const bool pooled_hmm = models.count("pooled") > 0;

  auto lookup = [](const auto& m, const std::string& id) -> const auto& {
    if (auto it = m.find(id); it != m.end()) return it->second;
    if (auto it = m.find("pooled"); it != m.end()) return it->second;
    throw DataError("no model for trial '" + id + "'");
  };

  const std::size_t n = trials.size();
  std::vector<StagePath> paths(n);
  parallel_for(n, cfg.jobs, [&](std::size_t i) {
    const auto& [st, pca] = lookup(pre, trials[i].trial_id);
    const auto scores = pca_transform(pca, standardize_apply(st, trials[i].frames));
    paths[i] = hmm_decode(lookup(models, trials[i].trial_id), scores);
  });

  const int n_states = doc.at("n_states").get<int>();
  if (pooled_hmm) {
    const auto order = stage_order(paths, n_states);
    for (auto& p : paths) p = relabel(p, order);
  } else {
    for (auto& p : paths) p = relabel(p, stage_order({p}, n_states));
  }

  {
    auto f = open_out(rec.output("states.csv"));
    f << "trial_id,frame,t,stage\n";
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t t = 0; t < paths[i].size(); ++t) {
        f << trials[i].trial_id << ',' << t << ',' << format_double(static_cast<double>(t) / trials[i].feature_rate_hz)
          << ',' << paths[i][t] + 1 << '\n';
      }
    }
  }
  {
    auto f = open_out(rec.output("stage_runs.csv"));
    f << "trial_id,stage,start_frame,end_frame,duration_s\n";
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& r : stage_runs(paths[i])) {
        f << trials[i].trial_id << ',' << r.state + 1 << ',' << r.start_frame << ',' << r.end_frame << ','
          << format_double(static_cast<double>(r.end_frame - r.start_frame + 1) / trials[i].feature_rate_hz) << '\n';
      }
    }
  }
  out << "decode: " << n << " trials decoded with " << (pooled_hmm ? "a pooled model" : "per-trial models") << '\n';
}

std::map<std::string, StagePath> read_states_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  if (line.rfind("trial_id,frame,t,stage", 0) != 0) throw DataError(path.string() + ": unexpected header");
  std::map<std::string, StagePath> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 4) throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 4 columns");
    auto& p = out[f[0]];
    try {
      if (std::stoul(f[1]) != p.size()) throw DataError("frames out of order");
      p.push_back(std::stoi(f[3]) - 1);
    } catch (const std::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void cmd_stage_stats(const RunConfig& cfg, const Flags& flags, RunRecorder& rec, std::ostream& out) {
  if (flags.states.empty()) throw ConfigError("stage-stats needs --states");
  const auto trials = load_inputs(cfg, rec);
  rec.input(flags.states);
  const auto state_map = read_states_csv(flags.states);

  std::vector<std::pair<std::string, std::vector<std::size_t>>> groups;
  if (flags.per_scenario) {
    for (std::size_t s = 0; s < kScenarioNames.size(); ++s) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < trials.size(); ++i)
        if (static_cast<std::size_t>(trials[i].scenario) == s) idx.push_back(i);
      if (!idx.empty()) groups.emplace_back(std::string(kScenarioNames[s]), std::move(idx));
    }
  } else {
    std::vector<std::size_t> idx(trials.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    groups.emplace_back("all", std::move(idx));
  }

  auto fried = open_out(rec.output("stage_friedman.csv"));
  auto post = open_out(rec.output("stage_posthoc.csv"));
  fried << "scenario,feature,n_blocks,chi2,df,p_value,normality_rejected,error\n";
  post << "scenario,feature,comparison,stage_a,stage_b,test_statistic,p_value,effect_size_d,significant\n";
  std::size_t n_significant = 0;
  for (const auto& [name, idx] : groups) {
    std::vector<BandPowerTrial> sub;
    std::vector<StagePath> paths;
    for (auto i : idx) {
      const auto it = state_map.find(trials[i].trial_id);
      if (it == state_map.end()) throw DataError("no decoded states for trial '" + trials[i].trial_id + "'");
      if (it->second.size() != trials[i].num_frames()) {
        throw DataError("decoded path length differs from frame count for trial '" + trials[i].trial_id + "'");
      }
      sub.push_back(trials[i]);
      paths.push_back(it->second);
    }
    std::vector<FeatureBattery> batteries;
    const auto tables = stage_feature_tables(sub, paths, cfg.hmm_states);
    batteries.resize(tables.size());
    parallel_for(tables.size(), cfg.jobs, [&](std::size_t f) { batteries[f] = run_battery(tables[f], cfg.alpha); });
    for (const auto& b : batteries) {
      const std::string feat = feature_name(b.feature);
      std::string err = b.error;
      std::replace(err.begin(), err.end(), ',', ';');
      if (b.friedman) {
        fried << name << ',' << feat << ',' << b.friedman->n_blocks << ',' << format_fixed(b.friedman->chi2, 6) << ','
              << b.friedman->df << ',' << format_fixed(b.friedman->p_value, 6) << ',' << (b.normality_rejected ? 1 : 0)
              << ',' << err << '\n';
      } else {
        fried << name << ',' << feat << ",,,,," << (b.normality_rejected ? 1 : 0) << ',' << err << '\n';
      }
      for (const auto& p : b.posthoc) {
        const bool sig = p.p_value < cfg.alpha;
        n_significant += sig ? 1 : 0;
        post << name << ',' << feat << ",Stage " << p.stage_a + 1 << " vs. Stage " << p.stage_b + 1 << ','
             << p.stage_a + 1 << ',' << p.stage_b + 1 << ',' << format_fixed(p.test_statistic, 6) << ','
             << format_fixed(p.p_value, 6) << ',' << format_fixed(p.effect_size_d, 6) << ',' << (sig ? 1 : 0) << '\n';
      }
    }
  }
  out << "stage-stats: " << groups.size() << " group(s), " << n_significant << " significant pairwise comparison(s)\n";
}

std::vector<WindowConfig> selected_windows(const RunConfig& cfg, const Flags& flags) {
  if (!flags.window.empty()) return {parse_window_config(flags.window)};
  return resolve_window_configs(cfg.window_configs, cfg.grid_stride);
}

std::vector<std::size_t> selected_features(const RunConfig& cfg) { return {feature_index(cfg.feature)}; }

void cmd_segment(const RunConfig& cfg, const Flags& flags, RunRecorder& rec, std::ostream& out) {
  const auto trials = load_inputs(cfg, rec);
  const auto feats = selected_features(cfg);
  for (const auto& w : selected_windows(cfg, flags)) {
    const auto segs = build_segments(trials, feats, w);
    const std::string name =
        "segments_L" + std::to_string(w.length_frames) + "_S" + std::to_string(w.stride_frames) + ".csv";
    write_segments_csv(rec.output(name), segs);
    out << "segment: L=" << w.length_frames << " S=" << w.stride_frames << " -> " << segs.size() << " segments\n";
  }
}

void cmd_cv(const RunConfig& cfg, const Flags& flags, RunRecorder& rec, std::ostream& out) {
  const auto trials = load_inputs(cfg, rec);
  const auto w = selected_windows(cfg, flags).front();
  const auto segs = build_segments(trials, selected_features(cfg), w);
  const auto report = run_cv(segs, w, cv_options(cfg));
  {
    auto f = open_out(rec.output("cv_report.csv"));
    f << "fold,split,n_train_real,n_train_synthetic,n_test,test_synthetic,accuracy,precision,recall,f1,auc\n";
    for (const auto& fr : report.folds) {
      f << fr.fold << ',' << split_mode_name(report.split) << ',' << fr.n_train_real << ',' << fr.n_train_synthetic
        << ',' << fr.n_test << ',' << fr.test_synthetic << ',' << format_fixed(fr.metrics.accuracy, 6) << ','
        << format_fixed(fr.metrics.precision, 6) << ',' << format_fixed(fr.metrics.recall, 6) << ','
        << format_fixed(fr.metrics.f1, 6) << ",\n";
    }
    f << "mean," << split_mode_name(report.split) << ",,,," << report.synthetic_in_test << ','
      << format_fixed(report.mean.accuracy, 6) << ',' << format_fixed(report.mean.precision, 6) << ','
      << format_fixed(report.mean.recall, 6) << ',' << format_fixed(report.mean.f1, 6) << ','
      << format_fixed(report.roc.auc, 6) << '\n';
  }
  write_roc_csv(rec.output(roc_file_name(w)), report.roc);
  out << "cv: L=" << w.length_frames << " S=" << w.stride_frames << " n=" << report.n_segments
      << " split=" << split_mode_name(report.split) << " auc=" << format_fixed(report.roc.auc, 4)
      << " accuracy=" << format_fixed(report.mean.accuracy, 4) << '\n';
}

void cmd_sweep(const RunConfig& cfg, const Flags& flags, RunRecorder& rec, std::ostream& out) {
  const auto trials = load_inputs(cfg, rec);
  const auto entries = sweep(trials, selected_features(cfg), selected_windows(cfg, flags), cv_options(cfg));
  write_sweep_csv(rec.output("sweep.csv"), entries);
  write_sweep_failures_csv(rec.output("sweep_failures.csv"), entries);
  for (const auto& e : entries) {
    if (e.ok) write_roc_csv(rec.output(roc_file_name(e.config)), e.report.roc);
  }
  out << "sweep (split=" << split_mode_name(cfg.split) << ", feature=" << feature_name(cfg.feature) << ")\n";
  out << "  L   S  segments  accuracy  precision  recall  f1     auc    lookahead_s\n";
  for (const auto& e : entries) {
    if (!e.ok) {
      out << "  L=" << e.config.length_frames << " S=" << e.config.stride_frames << " failed: " << e.error << '\n';
      continue;
    }
    const auto& r = e.report;
    char line[160];
    std::snprintf(line, sizeof line, "  %-3d %-3d %-9zu %-9.3f %-10.3f %-7.3f %-6.3f %-6.3f %s\n", e.config.length_frames,
                  e.config.stride_frames, r.n_segments, r.mean.accuracy, r.mean.precision, r.mean.recall, r.mean.f1,
                  r.roc.auc, format_double(e.config.lookahead_s()).c_str());
    out << line;
  }
}

void cmd_shuffle(const RunConfig& cfg, const Flags& flags, RunRecorder& rec, std::ostream& out) {
  const auto trials = load_inputs(cfg, rec);
  const auto w = selected_windows(cfg, flags).front();
  const auto segs = build_segments(trials, selected_features(cfg), w);
  const auto r = label_shuffle_test(segs, w, cv_options(cfg));
  auto f = open_out(rec.output("shuffle_test.csv"));
  f << "window_length,stride,split,seed,original_auc,shuffled_auc\n";
  f << w.length_frames << ',' << w.stride_frames << ',' << split_mode_name(cfg.split) << ',' << r.seed << ','
    << format_fixed(r.original_auc, 6) << ',' << format_fixed(r.shuffled_auc, 6) << '\n';
  out << "shuffle-test: L=" << w.length_frames << " S=" << w.stride_frames << " original auc "
      << format_fixed(r.original_auc, 4) << " -> shuffled auc " << format_fixed(r.shuffled_auc, 4) << '\n';
}

void cmd_rt_summary(const RunConfig& cfg, RunRecorder& rec, std::ostream& out) {
  const auto trials = load_inputs(cfg, rec);
  std::vector<std::pair<std::string, std::vector<double>>> groups;
  for (std::size_t s = 0; s < kScenarioNames.size(); ++s) {
    std::vector<double> rt;
    for (const auto& t : trials)
      if (static_cast<std::size_t>(t.scenario) == s) rt.push_back(t.response_time_s);
    if (!rt.empty()) groups.emplace_back(std::string(kScenarioNames[s]), std::move(rt));
  }
  std::vector<double> all;
  for (const auto& t : trials) all.push_back(t.response_time_s);
  groups.emplace_back("all", std::move(all));

  auto f = open_out(rec.output("rt_summary.csv"));
  f << "scenario,n,mean,hdi_low,hdi_high\n";
  for (const auto& [name, rt] : groups) {
    if (rt.size() < 3) {
      double mean = 0.0;
      for (double v : rt) mean += v;
      mean /= static_cast<double>(rt.size());
      f << name << ',' << rt.size() << ',' << format_fixed(mean, 6) << ",,\n";
      out << "rt-summary: " << name << " has fewer than 3 trials; HDI left empty\n";
      continue;
    }
    const auto s = rt_summary(rt);
    f << name << ',' << s.n << ',' << format_fixed(s.mean_s, 6) << ',' << format_fixed(s.hdi_low_s, 6) << ','
      << format_fixed(s.hdi_high_s, 6) << '\n';
    out << "rt-summary: " << name << " n=" << s.n << " mean=" << format_fixed(s.mean_s, 3) << " s, 95% HDI ["
        << format_fixed(s.hdi_low_s, 3) << ", " << format_fixed(s.hdi_high_s, 3) << "]\n";
  }
}

void error_record(std::ostream& err, const char* kind, const std::string& message, int code) {
  Json j;
  j["error"] = {{"kind", kind}, {"message", message}, {"exit_code", code}};
  err << j.dump() << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"EEG band-power intent prediction pipeline"};
  app.require_subcommand(1);
  Flags flags;

  struct Spec {
    const char* name;
    const char* help;
  };
  const std::vector<Spec> specs = {
      {"synth", "generate a synthetic dataset with known ground truth"},
      {"fit-hmm", "standardize, project to principal components and fit Gaussian HMMs"},
      {"decode", "decode latent stages with fitted models"},
      {"stage-stats", "Friedman and Conover tests of band power across stages"},
      {"segment", "cut sliding windows from the selected feature"},
      {"cv", "cross-validated DTW-KNN evaluation for one window configuration"},
      {"sweep", "evaluate a set of window configurations"},
      {"shuffle-test", "label-permutation control"},
      {"rt-summary", "response-time mean and 95% HDI per scenario"},
  };

  auto mapped = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    sub->add_option_function<std::string>(
        flag, [&flags, key](const std::string& v) { flags.overrides.emplace_back(key, v); }, help);
  };

  for (const auto& s : specs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--config", flags.config_path, "run configuration file (key = value)");
    sub->add_option("--set", flags.sets, "override a config key: --set hmm.scope=pooled")->take_all();
    mapped(sub, "--seed", "seed", "run seed");
    mapped(sub, "--jobs", "jobs", "worker thread cap");
    mapped(sub, "--out", "paths.output_dir", "output directory");
    const std::string name = s.name;
    if (name != "synth") mapped(sub, "--manifest", "paths.manifest", "trial manifest (JSON lines)");
    if (name == "synth") {
      mapped(sub, "--subjects", "synth.n_subjects", "number of subjects");
      mapped(sub, "--trials-per-subject", "synth.trials_per_subject", "trials per subject");
      mapped(sub, "--feature", "windowing.feature", "feature carrying the pre-decision ramp");
    }
    if (name == "fit-hmm") {
      mapped(sub, "--scope", "hmm.scope", "per-trial|pooled HMM fit");
      mapped(sub, "--pca-scope", "pca.scope", "per-trial|pooled PCA fit");
      mapped(sub, "--covariance", "hmm.covariance", "diagonal|full");
      mapped(sub, "--n-states", "hmm.n_states", "number of hidden states");
      mapped(sub, "--components", "pca.n_components", "number of principal components");
    }
    if (name == "decode") sub->add_option("--models", flags.models, "models.json from fit-hmm")->required();
    if (name == "stage-stats") {
      sub->add_option("--states", flags.states, "states.csv from decode")->required();
      sub->add_flag("--per-scenario", flags.per_scenario, "run the battery separately per scenario");
      mapped(sub, "--alpha", "stats.alpha", "significance level");
    }
    if (name == "segment" || name == "cv" || name == "sweep" || name == "shuffle-test") {
      mapped(sub, "--feature", "windowing.feature", "feature key, e.g. F4.high_beta");
      mapped(sub, "--configs", "windowing.configs", "reference|grid|reference+grid|L:S,...");
      if (name != "sweep") sub->add_option("--window", flags.window, "single window L:S");
    }
    if (name == "cv" || name == "sweep" || name == "shuffle-test") {
      mapped(sub, "--split", "eval.split", "segment|trial");
      mapped(sub, "--k", "classifier.k", "neighbours");
      mapped(sub, "--folds", "eval.n_folds", "cross-validation folds");
    }
  }

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return 0;
    } catch (const CLI::ParseError& e) {
      throw ConfigError(e.what());
    }
    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    const RunConfig cfg = resolve_config(flags);
    fs::create_directories(cfg.output_dir);
    RunRecorder rec(cfg.output_dir);

    if (name == "synth") cmd_synth(cfg, rec, out);
    else if (name == "fit-hmm") cmd_fit_hmm(cfg, rec, out);
    else if (name == "decode") cmd_decode(cfg, flags, rec, out);
    else if (name == "stage-stats") cmd_stage_stats(cfg, flags, rec, out);
    else if (name == "segment") cmd_segment(cfg, flags, rec, out);
    else if (name == "cv") cmd_cv(cfg, flags, rec, out);
    else if (name == "sweep") cmd_sweep(cfg, flags, rec, out);
    else if (name == "shuffle-test") cmd_shuffle(cfg, flags, rec, out);
    else if (name == "rt-summary") cmd_rt_summary(cfg, rec, out);
    rec.write(name, cfg);
    return 0;
  } catch (const ConfigError& e) {
    error_record(err, "config", e.what(), 2);
    return 2;
  } catch (const NumericalError& e) {
    error_record(err, "numerical", e.what(), 4);
    return 4;
  } catch (const DataError& e) {
    error_record(err, "data", e.what(), 3);
    return 3;
  } catch (const Json::exception& e) {
    error_record(err, "data", e.what(), 3);
    return 3;
  } catch (const std::exception& e) {
    error_record(err, "data", e.what(), 3);
    return 3;
  }
}

}  // namespace eegintent
