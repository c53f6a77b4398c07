#include "eegintent/ingest.hpp"

#include "eegintent/util.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace eegintent {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<TrialManifestEntry> read_manifest(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open manifest '" + manifest_path.string() + "'");
  std::vector<TrialManifestEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      TrialManifestEntry e;
      e.trial_id = j.at("trial_id").get<std::string>();
      e.subject_id = j.at("subject_id").get<std::string>();
      e.scenario = parse_scenario(j.at("scenario").get<std::string>());
      e.response_time_s = j.at("response_time_s").get<double>();
      e.data_path = j.at("data_path").get<std::string>();
      out.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw DataError(manifest_path.string() + ":" + std::to_string(lineno) +
                      ": malformed manifest entry: " + ex.what());
    }
  }
  return out;
}

void write_manifest(const fs::path& manifest_path, const std::vector<TrialManifestEntry>& entries) {
  std::ofstream out(manifest_path, std::ios::binary);
  if (!out) throw DataError("cannot write manifest '" + manifest_path.string() + "'");
  for (const auto& e : entries) {
    json j = json::object();
    j["trial_id"] = e.trial_id;
    j["subject_id"] = e.subject_id;
    j["scenario"] = std::string(scenario_name(e.scenario));
    j["response_time_s"] = e.response_time_s;
    j["data_path"] = e.data_path;
    out << j.dump() << '\n';
  }
}

std::string frame_csv_header() {
  std::string h = "t";
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    h += ',';
    h += feature_name(i);
  }
  return h;
}

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                         : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_number(std::string_view s, const fs::path& path, std::size_t lineno) {
  while (!s.empty() && (s.front() == ' ')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    if (s == "nan" || s == "NaN") return std::nan("");
    throw DataError(path.string() + ":" + std::to_string(lineno) + ": cannot parse number '" +
                    std::string(s) + "'");
  }
  return v;
}

}  // namespace

FrameMatrix read_frame_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open frame file '" + path.string() + "'");
  constexpr std::size_t kCols = kNumFeatures + 1;
  std::string line;
  std::size_t lineno = 0;
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno > 1 && line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != kCols) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(kCols) + " columns, got " + std::to_string(fields.size()));
    }
    if (lineno == 1) {
      if (line != frame_csv_header()) {
        throw DataError(path.string() + ":1: header does not match t,AF3.theta,...,AF4.gamma");
      }
      continue;
    }
    for (std::size_t c = 1; c < kCols; ++c) values.push_back(parse_number(fields[c], path, lineno));
    ++rows;
  }
  if (lineno == 0) throw DataError(path.string() + ":1: empty frame file");
  FrameMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(kNumFeatures));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < kNumFeatures; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r * kNumFeatures + c];
  return m;
}

void write_frame_csv(const fs::path& path, const FrameMatrix& frames, double rate_hz) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write frame file '" + path.string() + "'");
  out << frame_csv_header() << '\n';
  for (Eigen::Index r = 0; r < frames.rows(); ++r) {
    out << format_double(static_cast<double>(r) / rate_hz);
    for (Eigen::Index c = 0; c < frames.cols(); ++c) out << ',' << format_double(frames(r, c));
    out << '\n';
  }
}

std::vector<BandPowerTrial> load_trials(const fs::path& manifest_path) {
  const auto entries = read_manifest(manifest_path);
  const fs::path base = manifest_path.parent_path();
  std::vector<BandPowerTrial> trials;
  trials.reserve(entries.size());
  for (const auto& e : entries) {
    const fs::path data = base / e.data_path;
    if (!fs::exists(data)) {
      throw DataError("trial '" + e.trial_id + "': frame file '" + data.string() + "' not found");
    }
    BandPowerTrial t;
    t.trial_id = e.trial_id;
    t.subject_id = e.subject_id;
    t.scenario = e.scenario;
    t.response_time_s = e.response_time_s;
    t.frames = read_frame_csv(data);
    const auto violations = validate_trial(t);
    if (!violations.empty()) {
      throw DataError("trial '" + e.trial_id + "' failed validation:\n" + describe(violations));
    }
    trials.push_back(std::move(t));
  }
  return trials;
}

void save_trials(const fs::path& dir, const std::vector<BandPowerTrial>& trials) {
  fs::create_directories(dir / "frames");
  std::vector<TrialManifestEntry> entries;
  entries.reserve(trials.size());
  for (const auto& t : trials) {
    const std::string rel = "frames/" + t.trial_id + ".csv";
    write_frame_csv(dir / rel, t.frames, t.feature_rate_hz);
    entries.push_back({t.trial_id, t.subject_id, t.scenario, t.response_time_s, rel});
  }
  write_manifest(dir / "manifest.jsonl", entries);
}

}  // namespace eegintent
