#include "eegintent/windowing.hpp"

#include "eegintent/util.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace eegintent {

void check_window(const WindowConfig& cfg) {
  if (cfg.length_frames < 2) throw ConfigError("window length must be at least 2 frames");
  if (cfg.stride_frames < 1) throw ConfigError("window stride must be at least 1 frame");
}

std::size_t expected_window_count(std::size_t n, const WindowConfig& cfg) {
  const auto L = static_cast<std::size_t>(cfg.length_frames);
  const auto S = static_cast<std::size_t>(cfg.stride_frames);
  if (n < L) return 0;
  return (n - L) / S + 1 + ((n - L) % S != 0 ? 1 : 0);
}

std::vector<LabeledSegment> slide(std::span<const double> sequence, const WindowConfig& cfg,
                                  const std::string& trial_id, int dims) {
  check_window(cfg);
  if (dims < 1 || sequence.size() % static_cast<std::size_t>(dims) != 0) {
    throw DataError("sequence size is not a multiple of dims");
  }
  const auto n = static_cast<int>(sequence.size() / static_cast<std::size_t>(dims));
  const int L = cfg.length_frames;
  if (n < L) {
    throw DataError("trial shorter than window (" + std::to_string(n) + " < " + std::to_string(L) + " frames)" +
                    (trial_id.empty() ? "" : " in trial '" + trial_id + "'"));
  }
  std::vector<int> starts;
  for (int s = 0; s + L <= n; s += cfg.stride_frames) starts.push_back(s);
  if (starts.back() != n - L) starts.push_back(n - L);

  std::vector<LabeledSegment> out;
  out.reserve(starts.size());
  for (int s : starts) {
    LabeledSegment seg;
    seg.source_trial_id = trial_id;
    seg.start_frame = s;
    seg.dims = dims;
    seg.values.assign(sequence.begin() + static_cast<std::ptrdiff_t>(s) * dims,
                      sequence.begin() + static_cast<std::ptrdiff_t>(s + L) * dims);
    seg.label = (s == n - L) ? 1 : 0;
    out.push_back(std::move(seg));
  }
  return out;
}

std::vector<int> window_grid(double rate_hz) {
  std::vector<int> out;
  // 0.25 s .. 2.0 s inclusive in 0.125 s steps: 15 values.
  for (int step = 0; step <= 14; ++step) {
    const double seconds = 0.25 + 0.125 * step;
    out.push_back(static_cast<int>(std::lround(seconds * rate_hz)));
  }
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<double> feature_sequence(const BandPowerTrial& trial, std::span<const std::size_t> features) {
  std::vector<double> out;
  out.reserve(trial.num_frames() * features.size());
  for (Eigen::Index t = 0; t < trial.frames.rows(); ++t) {
    for (auto f : features) out.push_back(trial.frames(t, static_cast<Eigen::Index>(f)));
  }
  return out;
}

namespace {

double sq_euclidean(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Indices of the k nearest candidates to `self` (excluding itself), ordered
// by distance with ties to the lower index.
std::vector<std::size_t> nearest(const std::vector<LabeledSegment>& segs, std::size_t self,
                                 const std::vector<std::size_t>& candidates, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  d.reserve(candidates.size());
  for (auto c : candidates) {
    if (c == self) continue;
    d.emplace_back(sq_euclidean(segs[self].values, segs[c].values), c);
  }
  k = std::min(k, d.size());
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = d[i].second;
  return out;
}

}  // namespace

std::vector<LabeledSegment> adasyn(const std::vector<LabeledSegment>& segments, const AdasynOptions& opt) {
  if (opt.k_neighbors < 1) throw ConfigError("adasyn k_neighbors must be >= 1");
  if (opt.beta < 0.0) throw ConfigError("adasyn beta must be nonnegative");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    (segments[i].label == 1 ? pos : neg).push_back(i);
    if (segments[i].values.size() != segments.front().values.size()) {
      throw DataError("adasyn needs equal-length segments");
    }
  }
  if (pos.empty() || neg.empty()) throw DataError("adasyn needs both classes present");
  const bool pos_minor = pos.size() <= neg.size();
  const auto& minority = pos_minor ? pos : neg;
  const auto& majority = pos_minor ? neg : pos;
  if (minority.size() < 2) throw DataError("adasyn needs at least 2 minority samples");

  std::vector<LabeledSegment> out = segments;
  const auto G = static_cast<std::size_t>(std::floor(opt.beta * static_cast<double>(majority.size() - minority.size())));
  if (G == 0) return out;
  const int minority_label = segments[minority.front()].label;

  std::vector<std::size_t> all(segments.size());
  std::iota(all.begin(), all.end(), 0);
  const auto k = static_cast<std::size_t>(opt.k_neighbors);

  // Local majority density r_i.
  std::vector<double> r(minority.size());
  for (std::size_t i = 0; i < minority.size(); ++i) {
    const auto nn = nearest(segments, minority[i], all, k);
    const auto maj = std::count_if(nn.begin(), nn.end(), [&](auto j) { return segments[j].label != minority_label; });
    r[i] = nn.empty() ? 0.0 : static_cast<double>(maj) / static_cast<double>(nn.size());
  }
  const double total = std::accumulate(r.begin(), r.end(), 0.0);
  if (total > 0.0) {
    for (auto& v : r) v /= total;
  } else {
    std::fill(r.begin(), r.end(), 1.0 / static_cast<double>(minority.size()));
  }

  // Largest-remainder apportionment of G.
  std::vector<std::size_t> g(minority.size());
  std::vector<std::pair<double, std::size_t>> remainder;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < minority.size(); ++i) {
    const double exact = r[i] * static_cast<double>(G);
    g[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += g[i];
    remainder.emplace_back(-(exact - std::floor(exact)), i);
  }
  std::sort(remainder.begin(), remainder.end());
  for (std::size_t q = 0; assigned < G; ++q, ++assigned) ++g[remainder[q % remainder.size()].second];

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> lambda(0.0, 1.0);
  for (std::size_t i = 0; i < minority.size(); ++i) {
    if (g[i] == 0) continue;
    const auto nn = nearest(segments, minority[i], minority, k);
    std::uniform_int_distribution<std::size_t> pick(0, nn.size() - 1);
    const auto& xi = segments[minority[i]];
    for (std::size_t n = 0; n < g[i]; ++n) {
      const auto& xz = segments[nn[pick(rng)]];
      const double lam = lambda(rng);
      LabeledSegment s;
      s.source_trial_id = xi.source_trial_id;
      s.dims = xi.dims;
      s.label = minority_label;
      s.synthetic = true;
      s.values.resize(xi.values.size());
      for (std::size_t d = 0; d < xi.values.size(); ++d) s.values[d] = xi.values[d] + lam * (xz.values[d] - xi.values[d]);
      out.push_back(std::move(s));
    }
  }
  return out;
}

void write_segments_csv(const std::filesystem::path& path, const std::vector<LabeledSegment>& segments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  const std::size_t width = segments.empty() ? 0 : segments.front().values.size();
  out << "trial_id,start_frame,label,synthetic";
  for (std::size_t i = 0; i < width; ++i) out << ",v" << i;
  out << '\n';
  for (const auto& s : segments) {
    out << s.source_trial_id << ',' << (s.start_frame ? std::to_string(*s.start_frame) : std::string()) << ','
        << s.label << ',' << (s.synthetic ? 1 : 0);
    for (double v : s.values) out << ',' << format_double(v);
    out << '\n';
  }
}

std::vector<LabeledSegment> read_segments_csv(const std::filesystem::path& path, int dims) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  std::vector<LabeledSegment> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() < 5) throw DataError(path.string() + ":" + std::to_string(lineno) + ": too few columns");
    LabeledSegment s;
    s.source_trial_id = f[0];
    if (!f[1].empty()) s.start_frame = std::stoi(f[1]);
    s.label = std::stoi(f[2]);
    s.synthetic = f[3] == "1";
    s.dims = dims;
    for (std::size_t i = 4; i < f.size(); ++i) s.values.push_back(std::stod(f[i]));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace eegintent
