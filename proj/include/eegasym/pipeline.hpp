#pragma once

// End-to-end workflows behind the command line: analyze a dataset, simulate
// a cohort, score questionnaires, and run the built-in numeric anchor suite.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "eegasym/core.hpp"
#include "eegasym/distributions.hpp"
#include "eegasym/dsp.hpp"
#include "eegasym/features.hpp"
#include "eegasym/ingest.hpp"
#include "eegasym/stats.hpp"
#include "eegasym/synth.hpp"
#include "eegasym/teq.hpp"

namespace eegasym {

enum class WilcoxonReport { SignedRank, RankSum, Both };

struct PipelineConfig {
  ProcessingConfig processing;
  WilcoxonReport wilcoxon{WilcoxonReport::Both};
  PhiDenominator phi_n{PhiDenominator::Participants};
  double alpha{0.05};
  std::string cooks_cutoff{"4/N"};
  std::string reverse_items_path;  // empty: built-in default set
  Region regression_region{Region::Frontal};
  std::string regression_band{"Alpha"};
  std::string out_dir{"results"};
  std::uint64_t seed{1};

  OmnibusOptions omnibus_options() const {
    OmnibusOptions o;
    o.alpha = alpha;
    o.headline = wilcoxon == WilcoxonReport::RankSum ? PairwiseMethod::RankSum
                                                     : PairwiseMethod::SignedRank;
    o.phi_n = phi_n;
    return o;
  }
};

inline std::string to_string(WilcoxonReport w) {
  switch (w) {
    case WilcoxonReport::SignedRank: return "signed-rank";
    case WilcoxonReport::RankSum: return "rank-sum";
    case WilcoxonReport::Both: return "both";
  }
  return "both";
}

inline WilcoxonReport wilcoxon_from_string(const std::string& s) {
  if (s == "signed-rank") return WilcoxonReport::SignedRank;
  if (s == "rank-sum") return WilcoxonReport::RankSum;
  if (s == "both") return WilcoxonReport::Both;
  throw std::invalid_argument("--wilcoxon must be signed-rank, rank-sum or both");
}

inline PhiDenominator phi_from_string(const std::string& s) {
  if (s == "participants") return PhiDenominator::Participants;
  if (s == "observations") return PhiDenominator::Observations;
  throw std::invalid_argument("--phi-n must be participants or observations");
}

inline json config_to_json(const PipelineConfig& c) {
  const auto& p = c.processing;
  return {{"processing",
           {{"band_set", band_set_to_json(p.bands)},
            {"montage", montage_to_json(p.montage)},
            {"filter",
             {{"enabled", p.filter_enabled},
              {"low_hz", p.filter_low_hz},
              {"high_hz", p.filter_high_hz},
              {"order", p.filter_order}}},
            {"spectral", p.spectral == SpectralMode::Welch ? "welch" : "single_window"},
            {"welch_segment", p.welch_segment},
            {"welch_overlap", p.welch_overlap},
            {"asymmetry", p.asymmetry == AsymmetryMode::Difference ? "difference" : "log_ratio"}}},
          {"wilcoxon", to_string(c.wilcoxon)},
          {"phi_n", c.phi_n == PhiDenominator::Participants ? "participants" : "observations"},
          {"alpha", c.alpha},
          {"cooks_cutoff", c.cooks_cutoff},
          {"reverse_items_path", c.reverse_items_path},
          {"regression", {{"region", to_string(c.regression_region)}, {"band", c.regression_band}}},
          {"out_dir", c.out_dir},
          {"seed", c.seed}};
}

// Missing keys keep their defaults.
inline PipelineConfig config_from_json(const json& j, PipelineConfig c = {}) {
  if (j.contains("processing")) {
    const auto& p = j.at("processing");
    auto& q = c.processing;
    if (p.contains("band_set")) q.bands = band_set_from_json(p.at("band_set"));
    if (p.contains("montage")) q.montage = montage_from_json(p.at("montage"));
    if (p.contains("filter")) {
      const auto& f = p.at("filter");
      if (f.contains("enabled")) f.at("enabled").get_to(q.filter_enabled);
      if (f.contains("low_hz")) f.at("low_hz").get_to(q.filter_low_hz);
      if (f.contains("high_hz")) f.at("high_hz").get_to(q.filter_high_hz);
      if (f.contains("order")) f.at("order").get_to(q.filter_order);
    }
    if (p.contains("spectral")) {
      const auto s = p.at("spectral").get<std::string>();
      if (s != "welch" && s != "single_window")
        throw std::invalid_argument("spectral must be welch or single_window");
      q.spectral = s == "welch" ? SpectralMode::Welch : SpectralMode::SingleWindow;
    }
    if (p.contains("welch_segment")) p.at("welch_segment").get_to(q.welch_segment);
    if (p.contains("welch_overlap")) p.at("welch_overlap").get_to(q.welch_overlap);
    if (p.contains("asymmetry")) {
      const auto s = p.at("asymmetry").get<std::string>();
      if (s != "difference" && s != "log_ratio")
        throw std::invalid_argument("asymmetry must be difference or log_ratio");
      q.asymmetry = s == "difference" ? AsymmetryMode::Difference : AsymmetryMode::LogRatio;
    }
  }
  if (j.contains("wilcoxon")) c.wilcoxon = wilcoxon_from_string(j.at("wilcoxon").get<std::string>());
  if (j.contains("phi_n")) c.phi_n = phi_from_string(j.at("phi_n").get<std::string>());
  if (j.contains("alpha")) j.at("alpha").get_to(c.alpha);
  if (j.contains("cooks_cutoff")) j.at("cooks_cutoff").get_to(c.cooks_cutoff);
  if (j.contains("reverse_items_path")) j.at("reverse_items_path").get_to(c.reverse_items_path);
  if (j.contains("regression")) {
    const auto& r = j.at("regression");
    if (r.contains("region")) c.regression_region = region_from_string(r.at("region").get<std::string>());
    if (r.contains("band")) r.at("band").get_to(c.regression_band);
  }
  if (j.contains("out_dir")) j.at("out_dir").get_to(c.out_dir);
  if (j.contains("seed")) j.at("seed").get_to(c.seed);
  if (c.cooks_cutoff != "4/N") throw std::invalid_argument("only the 4/N Cook's cutoff is supported");
  return c;
}

// ---------------------------------------------------------------------------
// Hashing (FNV-1a, 64 bit)

class Fnv1a {
 public:
  void update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      h_ ^= c;
      h_ *= 0x100000001b3ULL;
    }
  }
  void update_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IngestError(p.string(), 0, "cannot open file");
    std::vector<char> buf(1 << 16);
    while (in) {
      in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
      update({buf.data(), static_cast<std::size_t>(in.gcount())});
    }
  }
  std::string hex() const {
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h_));
    return out;
  }

 private:
  std::uint64_t h_{0xcbf29ce484222325ULL};
};

// Hash of the effective configuration (output location excluded) and every
// input byte, so equal hashes imply equal outputs.
inline std::string config_hash(const PipelineConfig& cfg, const DatasetManifest& dataset,
                               const ReverseSet& reverse) {
  json j = config_to_json(cfg);
  j.erase("out_dir");
  j["reverse_items"] = reverse;
  if (dataset.band_set) j["manifest_band_set"] = band_set_to_json(*dataset.band_set);
  if (dataset.montage) j["manifest_montage"] = montage_to_json(*dataset.montage);
  Fnv1a h;
  h.update(j.dump());
  for (const auto& e : dataset.participants) {
    h.update(e.participant_id);
    h.update_file(e.recording_path);
    h.update_file(e.markers_path);
    h.update_file(e.teq_path);
  }
  return h.hex();
}

// ---------------------------------------------------------------------------
// Analysis

struct AnalysisResult {
  FeatureMatrix features;
  std::vector<Exclusion> exclusions;
  std::vector<TeqScore> scores;  // aligned with features.rows
  AnalysisTables tables;
  ReverseSet reverse_items;
  std::string hash;
};

inline ReverseSet resolve_reverse_items(const PipelineConfig& cfg) {
  return cfg.reverse_items_path.empty() ? default_reverse_items()
                                        : read_reverse_items(cfg.reverse_items_path);
}

// Regression rows: the configured cell regressed against TEQ totals for PreB,
// VRX and VRX - PreB, each after one-shot Cook's exclusion.
inline std::vector<RegressionRow> regression_rows(const FeatureMatrix& fm,
                                                  const std::vector<TeqScore>& scores,
                                                  Region region, std::size_t band) {
  std::vector<RegressionRow> rows;
  if (fm.rows.size() < 4) return rows;
  std::vector<double> y;
  for (const auto& s : scores) y.push_back(static_cast<double>(s.total));
  const auto pre = fm.column(Phase::PreB, region, band);
  const auto vrx = fm.column(Phase::VRX, region, band);
  std::vector<double> diff(pre.size());
  for (std::size_t i = 0; i < pre.size(); ++i) diff[i] = vrx[i] - pre[i];

  const std::vector<std::pair<std::string, const std::vector<double>*>> cases{
      {"PreB", &pre}, {"VRX", &vrx}, {"VRX-PreB", &diff}};
  for (const auto& [label, x] : cases) {
    RegressionRow row;
    row.label = label;
    try {
      auto ex = cooks_exclude(*x, y);
      row.result = ex.fit;
      for (auto i : row.result.excluded_indices) row.excluded_participants.push_back(fm.rows[i].participant_id);
    } catch (const std::invalid_argument&) {
      // Degenerate x (e.g. constant asymmetry): report an empty fit.
      row.result.p = 1.0;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// Features, TEQ scores and statistics for a loaded manifest; no file output.
inline AnalysisResult run_analysis(const DatasetManifest& dataset, const PipelineConfig& cfg) {
  AnalysisResult res;
  res.reverse_items = resolve_reverse_items(cfg);
  check_reverse_set(res.reverse_items);
  auto build = build_feature_matrix(dataset, cfg.processing);
  res.exclusions = build.exclusions;

  std::map<fs::path, std::vector<TeqResponse>> teq_files;
  FeatureMatrix fm;
  fm.bands = build.matrix.bands;
  fm.montage = build.matrix.montage;
  for (std::size_t i = 0; i < build.matrix.rows.size(); ++i) {
    const auto& id = build.matrix.rows[i].participant_id;
    const ManifestEntry* entry = nullptr;
    for (const auto& e : dataset.participants)
      if (e.participant_id == id) entry = &e;
    try {
      auto it = teq_files.find(entry->teq_path);
      if (it == teq_files.end()) it = teq_files.emplace(entry->teq_path, read_teq(entry->teq_path)).first;
      const TeqResponse* resp = nullptr;
      for (const auto& r : it->second)
        if (r.participant_id == id) resp = &r;
      if (!resp) throw std::invalid_argument("no TEQ response for participant");
      res.scores.push_back(score(*resp, res.reverse_items));
      fm.rows.push_back(build.matrix.rows[i]);
    } catch (const std::exception& e) {
      res.exclusions.push_back({id, "teq", e.what()});
    }
  }
  res.features = std::move(fm);
  if (res.features.rows.empty()) throw std::runtime_error("no participants survived loading");

  res.tables = omnibus_analysis(res.features, cfg.omnibus_options());
  res.tables.regression = regression_rows(res.features, res.scores, cfg.regression_region,
                                          res.features.bands.index_of(cfg.regression_band));
  return res;
}

inline std::string format_scores_csv(const std::vector<TeqScore>& scores, const ReverseSet& reverse,
                                     std::string_view hash = {}) {
  std::string out = hash_line(hash) + "# reverse_items=";
  for (std::size_t i = 0; i < reverse.size(); ++i) out += (i ? ";" : "") + std::to_string(reverse[i]);
  out += "\nparticipant_id,total\n";
  for (const auto& s : scores) out += csv::escape(s.participant_id) + "," + std::to_string(s.total) + "\n";
  return out;
}

// Runs the analysis and writes every table plus provenance under cfg.out_dir.
inline AnalysisResult analyze(const fs::path& manifest_path, const PipelineConfig& cfg) {
  const auto dataset = read_manifest(manifest_path);
  auto res = run_analysis(dataset, cfg);
  res.hash = config_hash(cfg, dataset, res.reverse_items);
  const fs::path out = cfg.out_dir;
  write_results(res.tables, out, res.hash);
  write_text(out / "features.csv", format_feature_csv(res.features, res.hash));
  write_text(out / "exclusions.csv", format_exclusions_csv(res.exclusions, res.hash));
  write_text(out / "teq_scores.csv", format_scores_csv(res.scores, res.reverse_items, res.hash));

  json excluded = json::array();
  for (const auto& e : res.exclusions)
    excluded.push_back({{"participant_id", e.participant_id}, {"stage", e.stage}, {"message", e.message}});
  json retained = json::array();
  for (const auto& r : res.features.rows) retained.push_back(r.participant_id);
  json prov = {{"config_hash", res.hash},
               {"config", config_to_json(cfg)},
               {"reverse_items", res.reverse_items},
               {"n_participants", dataset.participants.size()},
               {"retained", retained},
               {"excluded", excluded}};
  prov["config"].erase("out_dir");
  write_text(out / "provenance.json", prov.dump(2) + "\n");
  return res;
}

// ---------------------------------------------------------------------------
// Anchor suite

struct AnchorResult {
  std::string name;
  std::string expected;
  std::string actual;
  bool pass{false};
};

struct VerifyHooks {
  std::function<double(double, int)> chi2_sf = [](double x, int df) { return eegasym::chi2_sf(x, df); };
  std::function<double(double, int)> t_sf = [](double t, int df) { return eegasym::student_t_sf(t, df); };
};

struct OmnibusAnchor {
  const char* cell;
  double chi2;
  const char* p;  // as printed
};

// Reference Kruskal-Wallis statistics with their three-decimal p-values (df = 2).
inline constexpr std::array<OmnibusAnchor, 15> kOmnibusAnchors{{
    {"Frontal Delta", 0.542, ".762"},   {"Central Delta", 8.320, ".016"},
    {"Parietal Delta", 4.644, ".098"},  {"Frontal Theta", 9.512, ".009"},
    {"Central Theta", 9.348, ".009"},   {"Parietal Theta", 2.625, ".269"},
    {"Frontal Alpha", 17.175, "<.001"}, {"Central Alpha", 5.948, ".051"},
    {"Parietal Alpha", 3.363, ".186"},  {"Frontal Beta", 1.222, ".543"},
    {"Central Beta", 0.805, ".669"},    {"Parietal Beta", 1.715, ".424"},
    {"Frontal Gamma", 0.553, ".758"},   {"Central Gamma", 1.136, ".567"},
    {"Parietal Gamma", 0.285, ".867"},
}};

struct RegressionAnchor {
  const char* phase;
  double t;
  int df;
  const char* p;
};

inline constexpr std::array<RegressionAnchor, 3> kRegressionAnchors{{
    {"PreB", -2.619, 36, ".013"}, {"VRX", -0.242, 37, ".810"}, {"VRX-PreB", 1.152, 35, ".257"}}};

inline std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

inline std::vector<AnchorResult> run_anchor_suite(const VerifyHooks& hooks = {}) {
  std::vector<AnchorResult> out;
  for (const auto& a : kOmnibusAnchors) {
    const double p = hooks.chi2_sf(a.chi2, 2);
    const std::string text = format_p(p);
    out.push_back({std::string("chi2 ") + a.cell + " " + fmt(a.chi2, "%.3f") + "->" + a.p, a.p,
                   text + " (" + fmt(p, "%.6f") + ")", text == a.p});
  }
  for (const auto& a : kRegressionAnchors) {
    const double p = std::min(1.0, 2.0 * hooks.t_sf(std::abs(a.t), a.df));
    const std::string text = format_p(p);
    out.push_back({std::string("t ") + a.phase + " " + fmt(a.t, "%.3f") + "(" + std::to_string(a.df) + ")->" + a.p,
                   a.p, text + " (" + fmt(p, "%.6f") + ")", text == a.p});
  }
  {
    const double phi = phi_effect_size(17.175, 40);
    out.push_back({"phi(17.175, 40) ~ .66", "[0.655, 0.660]", fmt(phi, "%.6f"), phi >= 0.655 && phi <= 0.660});
  }
  {
    const auto rev = default_reverse_items();
    TeqResponse hi{"max", {}}, lo{"min", {}}, mid{"mid", std::vector<std::string>(16, "sometimes")};
    for (int i = 1; i <= 16; ++i) {
      const bool r = std::find(rev.begin(), rev.end(), i) != rev.end();
      hi.items.emplace_back(r ? "never" : "always");
      lo.items.emplace_back(r ? "always" : "never");
    }
    const int max = score(hi, rev).total, min = score(lo, rev).total, m = score(mid, rev).total;
    out.push_back({"TEQ min/max 0/96", "0/96", std::to_string(min) + "/" + std::to_string(max), min == 0 && max == 96});
    out.push_back({"TEQ all 'sometimes'", "48", std::to_string(m), m == 48});
  }
  {
    SignalSpec spec;
    spec.channels = {{"F3", {{10.0, 10.0, 0.0}}, 0.0}};
    spec.duration_s = 60.0;
    const auto rec = generate_recording(spec).recording;
    const auto psd = welch_psd(rec, 512, 0.5);
    double total = 0.0;
    for (double v : psd.power[0]) total += v * psd.df();
    out.push_back({"Parseval 10 uV 10 Hz tone", "50 +/- 5%", fmt(total, "%.4f"), std::abs(total - 50.0) <= 2.5});
    double alpha_int = 0.0;
    for (std::size_t k = 0; k < psd.freqs_hz.size(); ++k)
      if (BandSet::standard().contains(2, psd.freqs_hz[k])) alpha_int += psd.power[0][k] * psd.df();
    out.push_back({"Alpha share of tone power", ">= 0.99", fmt(alpha_int / total, "%.6f"), alpha_int / total >= 0.99});

    Recording zero{256.0, {"F3"}, {std::vector<double>(15360, 0.0)}, "zero"};
    const auto zpsd = welch_psd(zero, 512, 0.5);
    bool all_zero = true;
    for (double v : zpsd.power[0]) all_zero = all_zero && v == 0.0;
    out.push_back({"Zero signal -> zero PSD", "all 0", all_zero ? "all 0" : "non-zero", all_zero});
  }
  {
    const std::vector<std::vector<double>> g{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}};
    const auto kw = kruskal_wallis(g);
    out.push_back({"KW {1,2,3},{4,5,6},{7,8,9}", "H=7.2 p=.027", "H=" + fmt(kw.h, "%.4f") + " p=" + format_p(kw.p),
                   std::abs(kw.h - 7.2) < 1e-12 && format_p(kw.p) == ".027"});
    const std::vector<double> d{1, 2, 3}, z{0, 0, 0};
    const auto sr = wilcoxon_signed_rank(d, z);
    out.push_back({"signed-rank {1,2,3} exact p", "0.25", fmt(sr.p), sr.exact && sr.p == 0.25});
    const std::vector<double> a{1, 2}, b{3, 4};
    const auto rs = wilcoxon_rank_sum(a, b);
    out.push_back({"rank-sum {1,2} vs {3,4} exact p", "1/3", fmt(rs.p), rs.exact && std::abs(rs.p - 1.0 / 3.0) < 1e-15});
    out.push_back({"Cook's cutoff n=40", "0.1", fmt(cooks_cutoff(40)), cooks_cutoff(40) == 0.1});
  }
  return out;
}

}  // namespace eegasym
