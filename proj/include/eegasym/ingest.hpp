#pragma once

// On-disk formats: recording CSV, phase-marker CSV, TEQ CSV, dataset
// manifest JSON, and the result tables (CSV + JSON mirror).

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "eegasym/core.hpp"
#include "eegasym/stats.hpp"
#include "eegasym/teq.hpp"

namespace eegasym {

namespace fs = std::filesystem;
using json = nlohmann::json;

class IngestError : public std::runtime_error {
 public:
  IngestError(const std::string& path, std::size_t line, const std::string& what)
      : std::runtime_error(path + (line ? ":" + std::to_string(line) : std::string()) + ": " +
                           what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// ---------------------------------------------------------------------------
// Text helpers

namespace csv {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

// Splits on commas; fields may be double-quoted with "" escapes.
inline std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.emplace_back(trim(cur));
  return out;
}

inline std::string escape(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

inline bool parse_size(std::string_view s, std::size_t& out) {
  s = trim(s);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return !s.empty() && ec == std::errc{} && ptr == s.data() + s.size();
}

// Shortest text that reads back to the identical double.
inline std::string real(double v) {
  char buf[40];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string real_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace csv

inline std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError(path.string(), 0, "cannot open file");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IngestError(path.string(), 0, "cannot write file");
  out << text;
  if (!out) throw IngestError(path.string(), 0, "write failed");
}

inline std::string hash_line(std::string_view config_hash) {
  return config_hash.empty() ? std::string() : "# config_hash=" + std::string(config_hash) + "\n";
}

// ---------------------------------------------------------------------------
// Recordings: "# sample_rate_hz=<r>", channel header, then one row per sample.

inline Recording parse_recording(const std::vector<std::string>& lines, const std::string& where,
                                 const BandSet& bands = BandSet::standard()) {
  if (lines.size() < 2) throw IngestError(where, lines.size(), "malformed header: file too short");
  std::string_view first = csv::trim(lines[0]);
  if (first.starts_with("#")) first = csv::trim(first.substr(1));
  constexpr std::string_view key = "sample_rate_hz=";
  Recording r;
  if (!first.starts_with(key) || !csv::parse_double(first.substr(key.size()), r.sample_rate_hz) ||
      !(r.sample_rate_hz > 0.0))
    throw IngestError(where, 1, "malformed header: expected 'sample_rate_hz=<rate>'");

  r.channels = csv::split(lines[1]);
  for (const auto& c : r.channels)
    if (c.empty()) throw IngestError(where, 2, "malformed header: empty channel label");
  r.data.assign(r.channels.size(), {});

  for (std::size_t i = 2; i < lines.size(); ++i) {
    if (csv::trim(lines[i]).empty()) continue;
    const auto fields = csv::split(lines[i]);
    if (fields.size() != r.channels.size())
      throw IngestError(where, i + 1, "ragged row at line " + std::to_string(i + 1));
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double v;
      if (!csv::parse_double(fields[c], v))
        throw IngestError(where, i + 1, "unparsable number '" + fields[c] + "'");
      r.data[c].push_back(v);
    }
  }
  const auto violations = validate_recording(r, bands);
  if (!violations.empty()) throw IngestError(where, 0, violations.front().message);
  return r;
}

inline Recording read_recording(const fs::path& path, const BandSet& bands = BandSet::standard()) {
  auto r = parse_recording(read_lines(path), path.string(), bands);
  r.participant_id = path.stem().string();
  return r;
}

inline std::string format_recording(const Recording& r) {
  std::string out = "# sample_rate_hz=" + csv::real(r.sample_rate_hz) + "\n";
  for (std::size_t c = 0; c < r.channels.size(); ++c)
    out += (c ? "," : "") + csv::escape(r.channels[c]);
  out += '\n';
  for (std::size_t i = 0; i < r.n_samples(); ++i) {
    for (std::size_t c = 0; c < r.n_channels(); ++c) {
      if (c) out += ',';
      out += csv::real(r.data[c][i]);
    }
    out += '\n';
  }
  return out;
}

inline void write_recording(const Recording& r, const fs::path& path) {
  write_text(path, format_recording(r));
}

// ---------------------------------------------------------------------------
// Markers: "phase,start_sample,end_sample"

inline PhaseMarkers read_markers(const fs::path& path, std::size_t n_samples) {
  const auto lines = read_lines(path);
  const std::string where = path.string();
  if (lines.empty() || csv::split(lines[0]) != std::vector<std::string>{"phase", "start_sample",
                                                                         "end_sample"})
    throw IngestError(where, 1, "malformed header: expected 'phase,start_sample,end_sample'");
  PhaseMarkers m;
  std::array<bool, 3> seen{};
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (csv::trim(lines[i]).empty()) continue;
    const auto f = csv::split(lines[i]);
    if (f.size() != 3) throw IngestError(where, i + 1, "ragged row at line " + std::to_string(i + 1));
    Phase p;
    try {
      p = phase_from_string(f[0]);
    } catch (const std::invalid_argument& e) {
      throw IngestError(where, i + 1, e.what());
    }
    SampleSpan span;
    if (!csv::parse_size(f[1], span.start) || !csv::parse_size(f[2], span.end))
      throw IngestError(where, i + 1, "unparsable sample index");
    if (seen[index_of(p)]) throw IngestError(where, i + 1, "duplicate phase " + f[0]);
    seen[index_of(p)] = true;
    m[p] = span;
  }
  for (Phase p : kPhases)
    if (!seen[index_of(p)])
      throw IngestError(where, 0, "missing phase " + std::string(to_string(p)));
  try {
    validate_markers(m, n_samples);
  } catch (const std::invalid_argument& e) {
    throw IngestError(where, 0, e.what());
  }
  return m;
}

inline PhaseMarkers read_markers(const fs::path& path, const Recording& r) {
  return read_markers(path, r.n_samples());
}

inline void write_markers(const PhaseMarkers& m, const fs::path& path) {
  std::string out = "phase,start_sample,end_sample\n";
  for (Phase p : kPhases)
    out += std::string(to_string(p)) + "," + std::to_string(m[p].start) + "," +
           std::to_string(m[p].end) + "\n";
  write_text(path, out);
}

// ---------------------------------------------------------------------------
// TEQ: "participant_id,item1..item16"

inline std::vector<TeqResponse> read_teq(const fs::path& path) {
  const auto lines = read_lines(path);
  const std::string where = path.string();
  if (lines.empty()) throw IngestError(where, 1, "malformed header: empty file");
  const auto header = csv::split(lines[0]);
  if (header.empty() || header[0] != "participant_id")
    throw IngestError(where, 1, "malformed header: expected 'participant_id,item1..item16'");
  std::vector<TeqResponse> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (csv::trim(lines[i]).empty()) continue;
    auto f = csv::split(lines[i]);
    if (f.size() != kTeqItems + 1)
      throw IngestError(where, i + 1,
                        "expected 16 items, got " + std::to_string(f.size() - 1));
    TeqResponse r{f[0], {f.begin() + 1, f.end()}};
    for (const auto& label : r.items) {
      try {
        encode_label(label);
      } catch (const std::invalid_argument& e) {
        throw IngestError(where, i + 1, e.what());
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline void write_teq(const std::vector<TeqResponse>& rows, const fs::path& path) {
  std::string out = "participant_id";
  for (std::size_t i = 1; i <= kTeqItems; ++i) out += ",item" + std::to_string(i);
  out += '\n';
  for (const auto& r : rows) {
    out += csv::escape(r.participant_id);
    for (const auto& l : r.items) out += "," + csv::escape(l);
    out += '\n';
  }
  write_text(path, out);
}

inline ReverseSet read_reverse_items(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError(path.string(), 0, "cannot open file");
  try {
    json j = json::parse(in);
    auto set = j.get<ReverseSet>();
    check_reverse_set(set, false);
    return set;
  } catch (const std::exception& e) {
    throw IngestError(path.string(), 0, e.what());
  }
}

// ---------------------------------------------------------------------------
// JSON conversions for the shared vocabulary

inline json band_set_to_json(const BandSet& b) {
  json arr = json::array();
  for (const auto& band : b.bands())
    arr.push_back({{"name", band.name}, {"low_hz", band.low_hz}, {"high_hz", band.high_hz}});
  return arr;
}

inline BandSet band_set_from_json(const json& j) {
  std::vector<Band> bands;
  for (const auto& e : j)
    bands.push_back({e.at("name").get<std::string>(), e.at("low_hz").get<double>(),
                     e.at("high_hz").get<double>()});
  return BandSet(std::move(bands));
}

inline json montage_to_json(const Montage& m) {
  json pairs = json::object();
  for (const auto& [region, p] : m.region_pairs())
    pairs[std::string(to_string(region))] = {p.left, p.right};
  return {{"channels", m.channel_labels()}, {"region_pairs", pairs}};
}

inline Montage montage_from_json(const json& j) {
  std::map<Region, ChannelPair> pairs;
  for (const auto& [name, p] : j.at("region_pairs").items())
    pairs[region_from_string(name)] = {p.at(0).get<std::string>(), p.at(1).get<std::string>()};
  return Montage(j.at("channels").get<std::vector<ChannelId>>(), std::move(pairs));
}

// ---------------------------------------------------------------------------
// Dataset manifest

struct ManifestEntry {
  std::string participant_id;
  fs::path recording_path;
  fs::path markers_path;
  fs::path teq_path;
};

struct DatasetManifest {
  std::vector<ManifestEntry> participants;
  std::optional<BandSet> band_set;
  std::optional<Montage> montage;
};

inline json manifest_to_json(const DatasetManifest& m) {
  json parts = json::array();
  for (const auto& e : m.participants)
    parts.push_back({{"participant_id", e.participant_id},
                     {"recording_path", e.recording_path.generic_string()},
                     {"markers_path", e.markers_path.generic_string()},
                     {"teq_path", e.teq_path.generic_string()}});
  json j = {{"participants", parts}};
  if (m.band_set) j["band_set"] = band_set_to_json(*m.band_set);
  if (m.montage) j["montage"] = montage_to_json(*m.montage);
  return j;
}

// Paths in the file are resolved against the manifest's directory.
inline DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError(path.string(), 0, "cannot open manifest");
  DatasetManifest m;
  const fs::path base = path.parent_path();
  try {
    const json j = json::parse(in);
    std::set<std::string> ids;
    for (const auto& e : j.at("participants")) {
      ManifestEntry entry{e.at("participant_id").get<std::string>(),
                          base / e.at("recording_path").get<std::string>(),
                          base / e.at("markers_path").get<std::string>(),
                          base / e.at("teq_path").get<std::string>()};
      if (!ids.insert(entry.participant_id).second)
        throw std::invalid_argument("duplicate participant_id '" + entry.participant_id + "'");
      for (const auto& p : {entry.recording_path, entry.markers_path, entry.teq_path})
        if (!fs::exists(p)) throw std::invalid_argument("referenced file missing: " + p.string());
      m.participants.push_back(std::move(entry));
    }
    if (j.contains("band_set")) m.band_set = band_set_from_json(j.at("band_set"));
    if (j.contains("montage")) m.montage = montage_from_json(j.at("montage"));
  } catch (const IngestError&) {
    throw;
  } catch (const std::exception& e) {
    throw IngestError(path.string(), 0, e.what());
  }
  return m;
}

inline void write_manifest(const DatasetManifest& m, const fs::path& path) {
  write_text(path, manifest_to_json(m).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Result tables

inline json to_json(const PairwiseResult& r) {
  return {{"statistic", r.statistic}, {"p", r.p},         {"method", to_string(r.method)},
          {"exact", r.exact},         {"degenerate", r.degenerate}, {"n_used", r.n_used}};
}

inline PairwiseResult pairwise_from_json(const json& j) {
  PairwiseResult r;
  r.statistic = j.at("statistic").get<double>();
  r.p = j.at("p").get<double>();
  r.method = j.at("method").get<std::string>() == "rank_sum" ? PairwiseMethod::RankSum
                                                             : PairwiseMethod::SignedRank;
  r.exact = j.at("exact").get<bool>();
  r.degenerate = j.at("degenerate").get<bool>();
  r.n_used = j.at("n_used").get<std::size_t>();
  return r;
}

inline json tables_to_json(const AnalysisTables& t) {
  json omnibus = json::array();
  for (const auto& r : t.omnibus)
    omnibus.push_back({{"region", to_string(r.region)},
                       {"band", r.band},
                       {"chi2", r.kw.h},
                       {"df", r.kw.df},
                       {"p", r.kw.p},
                       {"group_sizes", r.kw.group_sizes},
                       {"phi", r.phi},
                       {"phi_n", r.phi_n}});
  json pairwise = json::array();
  for (const auto& r : t.pairwise)
    pairwise.push_back({{"region", to_string(r.region)},
                        {"band", r.band},
                        {"first", to_string(r.first)},
                        {"second", to_string(r.second)},
                        {"headline", to_string(r.headline)},
                        {"signed_rank", to_json(r.signed_rank)},
                        {"rank_sum", to_json(r.rank_sum)}});
  json regression = json::array();
  for (const auto& r : t.regression) {
    const auto& f = r.result;
    regression.push_back({{"label", r.label},
                          {"intercept", f.intercept},
                          {"slope", f.slope},
                          {"standardized_slope", f.standardized_slope},
                          {"t", f.perfect_fit ? json(nullptr) : json(f.t)},
                          {"df", f.df},
                          {"p", f.p},
                          {"r_squared", f.r_squared},
                          {"n_used", f.n_used},
                          {"perfect_fit", f.perfect_fit},
                          {"excluded_indices", f.excluded_indices},
                          {"cooks_distances", f.cooks_distances},
                          {"excluded_participants", r.excluded_participants}});
  }
  return {{"omnibus", omnibus}, {"pairwise", pairwise}, {"regression", regression}};
}

inline AnalysisTables tables_from_json(const json& j) {
  AnalysisTables t;
  for (const auto& e : j.at("omnibus")) {
    OmnibusRow r;
    r.region = region_from_string(e.at("region").get<std::string>());
    r.band = e.at("band").get<std::string>();
    r.kw.h = e.at("chi2").get<double>();
    r.kw.df = e.at("df").get<int>();
    r.kw.p = e.at("p").get<double>();
    r.kw.group_sizes = e.at("group_sizes").get<std::vector<std::size_t>>();
    r.phi = e.at("phi").get<double>();
    r.phi_n = e.at("phi_n").get<std::size_t>();
    t.omnibus.push_back(std::move(r));
  }
  for (const auto& e : j.at("pairwise")) {
    PairwiseRow r;
    r.region = region_from_string(e.at("region").get<std::string>());
    r.band = e.at("band").get<std::string>();
    r.first = phase_from_string(e.at("first").get<std::string>());
    r.second = phase_from_string(e.at("second").get<std::string>());
    r.headline = e.at("headline").get<std::string>() == "rank_sum" ? PairwiseMethod::RankSum
                                                                   : PairwiseMethod::SignedRank;
    r.signed_rank = pairwise_from_json(e.at("signed_rank"));
    r.rank_sum = pairwise_from_json(e.at("rank_sum"));
    t.pairwise.push_back(std::move(r));
  }
  for (const auto& e : j.at("regression")) {
    RegressionRow r;
    r.label = e.at("label").get<std::string>();
    auto& f = r.result;
    f.intercept = e.at("intercept").get<double>();
    f.slope = e.at("slope").get<double>();
    f.standardized_slope = e.at("standardized_slope").get<double>();
    f.perfect_fit = e.at("perfect_fit").get<bool>();
    f.t = e.at("t").is_null() ? std::copysign(std::numeric_limits<double>::infinity(), f.slope)
                              : e.at("t").get<double>();
    f.df = e.at("df").get<int>();
    f.p = e.at("p").get<double>();
    f.r_squared = e.at("r_squared").get<double>();
    f.n_used = e.at("n_used").get<std::size_t>();
    f.excluded_indices = e.at("excluded_indices").get<std::vector<std::size_t>>();
    f.cooks_distances = e.at("cooks_distances").get<std::vector<double>>();
    r.excluded_participants = e.at("excluded_participants").get<std::vector<std::string>>();
    t.regression.push_back(std::move(r));
  }
  return t;
}

inline std::string format_omnibus_csv(const AnalysisTables& t, std::string_view hash = {}) {
  std::string out = hash_line(hash) + "region,band,chi2,df,p,p_text,phi,phi_n\n";
  for (const auto& r : t.omnibus)
    out += std::string(to_string(r.region)) + "," + csv::escape(r.band) + "," +
           csv::real_short(r.kw.h) + "," + std::to_string(r.kw.df) + "," +
           csv::real_short(r.kw.p) + "," + format_p(r.kw.p) + "," + csv::real_short(r.phi) +
           "," + std::to_string(r.phi_n) + "\n";
  return out;
}

inline std::string format_pairwise_csv(const AnalysisTables& t, std::string_view hash = {}) {
  std::string out = hash_line(hash) +
                    "region,band,comparison,signed_rank_w,signed_rank_p,signed_rank_exact,"
                    "rank_sum_u,rank_sum_p,rank_sum_exact,headline,headline_p_text\n";
  for (const auto& r : t.pairwise)
    out += std::string(to_string(r.region)) + "," + csv::escape(r.band) + "," +
           std::string(to_string(r.first)) + " vs " + std::string(to_string(r.second)) + "," +
           csv::real_short(r.signed_rank.statistic) + "," + csv::real_short(r.signed_rank.p) +
           "," + (r.signed_rank.exact ? "true" : "false") + "," +
           csv::real_short(r.rank_sum.statistic) + "," + csv::real_short(r.rank_sum.p) + "," +
           (r.rank_sum.exact ? "true" : "false") + "," + std::string(to_string(r.headline)) +
           "," + format_p(r.headline_p()) + "\n";
  return out;
}

inline std::string format_regression_csv(const AnalysisTables& t, std::string_view hash = {}) {
  std::string out = hash_line(hash) +
                    "phase,n_used,intercept,slope,standardized_slope,t,df,p,p_text,"
                    "perfect_fit,excluded\n";
  for (const auto& r : t.regression) {
    const auto& f = r.result;
    std::string excluded;
    for (std::size_t i = 0; i < r.excluded_participants.size(); ++i)
      excluded += (i ? ";" : "") + r.excluded_participants[i];
    out += csv::escape(r.label) + "," + std::to_string(f.n_used) + "," +
           csv::real_short(f.intercept) + "," + csv::real_short(f.slope) + "," +
           csv::real_short(f.standardized_slope) + "," + csv::real_short(f.t) + "," +
           std::to_string(f.df) + "," + csv::real_short(f.p) + "," + format_p(f.p) + "," +
           (f.perfect_fit ? "true" : "false") + "," + csv::escape(excluded) + "\n";
  }
  return out;
}

// omnibus.csv, pairwise.csv, regression.csv and results.json under `dir`.
inline void write_results(const AnalysisTables& t, const fs::path& dir,
                          std::string_view config_hash = {}) {
  write_text(dir / "omnibus.csv", format_omnibus_csv(t, config_hash));
  write_text(dir / "pairwise.csv", format_pairwise_csv(t, config_hash));
  write_text(dir / "regression.csv", format_regression_csv(t, config_hash));
  json j = tables_to_json(t);
  if (!config_hash.empty()) j["config_hash"] = std::string(config_hash);
  write_text(dir / "results.json", j.dump(2) + "\n");
}

inline AnalysisTables read_results_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError(path.string(), 0, "cannot open results");
  return tables_from_json(json::parse(in));
}

// Tidy feature CSV: participant,phase,region,band,asym
inline std::string format_feature_csv(const FeatureMatrix& fm, std::string_view hash = {}) {
  std::string out = hash_line(hash) + "participant,phase,region,band,asym\n";
  for (const auto& row : fm.rows)
    for (Phase p : kPhases)
      for (Region r : kRegions)
        for (std::size_t b = 0; b < fm.bands.size(); ++b)
          out += csv::escape(row.participant_id) + "," + std::string(to_string(p)) + "," +
                 std::string(to_string(r)) + "," + csv::escape(fm.bands[b].name) + "," +
                 csv::real(row.at(p, r, b)) + "\n";
  return out;
}

}  // namespace eegasym
