// eegasym: command-line front end.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 anchor-suite failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "eegasym/eegasym.hpp"

namespace {

using namespace eegasym;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitAnchors = 3;

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestError(path, 0, "cannot open file");
  return json::parse(in);
}

// Reads the recording CSV layout from `in` (rate line optional, header
// required) and emits one JSON object per AsymmetrySample.
int run_stream(std::istream& in, std::ostream& out, StreamConfig cfg, std::size_t frame_rows) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::size_t> column_of;  // montage channel -> input column
  const auto& labels = cfg.montage.channel_labels();
  bool rejected = false;

  std::unique_ptr<AsymmetryStream> stream;
  std::vector<std::vector<double>> frame(labels.size());

  auto emit = [&](const std::vector<AsymmetrySample>& samples) {
    for (const auto& s : samples) {
      json raw = json::object(), smooth = json::object();
      for (std::size_t r = 0; r < s.regions.size(); ++r)
        for (std::size_t b = 0; b < s.n_bands; ++b) {
          const std::string region(to_string(s.regions[r]));
          raw[region][cfg.bands[b].name] = s.raw_at(r, b);
          smooth[region][cfg.bands[b].name] = s.smoothed_at(r, b);
        }
      out << json{{"timestamp_s", s.timestamp_s}, {"end_sample", s.end_sample}, {"raw", raw},
                  {"smoothed", smooth}}
                 .dump()
          << '\n';
    }
    out.flush();
  };
  auto flush_frame = [&]() {
    if (frame.front().empty()) return;
    try {
      emit(stream->push(frame));
    } catch (const std::invalid_argument& e) {
      std::cerr << "frame rejected: " << e.what() << '\n';
      rejected = true;
    }
    for (auto& row : frame) row.clear();
  };

  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = csv::trim(line);
    if (trimmed.empty()) continue;
    if (trimmed.front() == '#') {
      auto body = csv::trim(trimmed.substr(1));
      constexpr std::string_view key = "sample_rate_hz=";
      if (body.starts_with(key) && !stream) csv::parse_double(body.substr(key.size()), cfg.sample_rate_hz);
      continue;
    }
    const auto fields = csv::split(line);
    if (!stream) {
      for (const auto& label : labels) {
        std::size_t col = fields.size();
        for (std::size_t i = 0; i < fields.size(); ++i)
          if (fields[i] == label) col = i;
        if (col == fields.size()) {
          std::cerr << "stream: header lacks channel " << label << '\n';
          return kExitData;
        }
        column_of.push_back(col);
      }
      stream = std::make_unique<AsymmetryStream>(cfg);
      continue;
    }
    std::vector<double> row(labels.size());
    bool ok = fields.size() > *std::max_element(column_of.begin(), column_of.end());
    for (std::size_t c = 0; ok && c < labels.size(); ++c) ok = csv::parse_double(fields[column_of[c]], row[c]);
    if (!ok) {
      std::cerr << "stream: unparsable row at line " << line_no << '\n';
      return kExitData;
    }
    for (std::size_t c = 0; c < labels.size(); ++c) frame[c].push_back(row[c]);
    if (frame.front().size() >= frame_rows) flush_frame();
  }
  if (stream) flush_frame();
  return rejected ? kExitData : kExitOk;
}

void print_anchor(const AnchorResult& a) {
  std::printf("[%s] %-48s expected %-14s actual %s\n", a.pass ? "PASS" : "FAIL", a.name.c_str(),
              a.expected.c_str(), a.actual.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EEG hemispheric asymmetry pipeline"};
  app.require_subcommand(1);

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "Run the full analysis on a dataset manifest");
  std::string manifest, config_path, out_dir, wilcoxon, phi_n;
  std::uint64_t seed = 0;
  bool seed_set = false;
  analyze_cmd->add_option("--manifest", manifest, "Dataset manifest JSON")->required();
  analyze_cmd->add_option("--config", config_path, "Pipeline config JSON");
  analyze_cmd->add_option("--out-dir", out_dir, "Output directory");
  analyze_cmd->add_option("--wilcoxon", wilcoxon, "signed-rank | rank-sum | both")
      ->check(CLI::IsMember({"signed-rank", "rank-sum", "both"}));
  analyze_cmd->add_option("--phi-n", phi_n, "participants | observations")
      ->check(CLI::IsMember({"participants", "observations"}));
  analyze_cmd->add_option("--seed", seed, "Seed recorded in provenance");
  std::string reverse_path;
  analyze_cmd->add_option("--reverse-items", reverse_path, "TEQ reverse-item JSON list");

  // simulate
  auto* simulate_cmd = app.add_subcommand("simulate", "Write a synthetic cohort to disk");
  std::string cohort_path, sim_out = "synthetic";
  std::size_t n_participants = 0;
  double empathy_mean = -1.0;
  std::uint64_t sim_seed = 0;
  simulate_cmd->add_option("--spec", cohort_path, "Cohort spec JSON");
  simulate_cmd->add_option("--out-dir", sim_out, "Output directory");
  simulate_cmd->add_option("--n", n_participants, "Number of participants");
  simulate_cmd->add_option("--empathy-mean", empathy_mean, "Mean TEQ score");
  simulate_cmd->add_option("--seed", sim_seed, "Cohort seed");

  // stream
  auto* stream_cmd = app.add_subcommand("stream", "Sliding-window asymmetry from CSV on stdin");
  StreamConfig stream_cfg;
  std::size_t frame_rows = 64;
  stream_cmd->add_option("--sample-rate", stream_cfg.sample_rate_hz, "Sampling rate (Hz)");
  stream_cmd->add_option("--window", stream_cfg.window_s, "Window length (s)");
  stream_cmd->add_option("--hop", stream_cfg.hop_s, "Hop (s)");
  stream_cmd->add_option("--half-life", stream_cfg.half_life_hops, "Smoothing half-life (hops)");
  stream_cmd->add_option("--frame", frame_rows, "Rows per pushed frame")->check(CLI::PositiveNumber);

  // score-teq
  auto* teq_cmd = app.add_subcommand("score-teq", "Score TEQ responses");
  std::string teq_path, teq_reverse, teq_out;
  teq_cmd->add_option("--teq", teq_path, "TEQ CSV")->required();
  teq_cmd->add_option("--reverse-items", teq_reverse, "Reverse-item JSON list");
  teq_cmd->add_option("--out", teq_out, "Output CSV (default stdout)");

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "Run the built-in numeric anchor suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  seed_set = analyze_cmd->count("--seed") > 0;

  try {
    if (*analyze_cmd) {
      PipelineConfig cfg;
      if (!config_path.empty()) cfg = config_from_json(load_json(config_path));
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      if (!wilcoxon.empty()) cfg.wilcoxon = wilcoxon_from_string(wilcoxon);
      if (!phi_n.empty()) cfg.phi_n = phi_from_string(phi_n);
      if (!reverse_path.empty()) cfg.reverse_items_path = reverse_path;
      if (seed_set) cfg.seed = seed;
      const auto res = analyze(manifest, cfg);
      std::printf("analyzed %zu participants (%zu excluded) -> %s [config %s]\n",
                  res.features.n_participants(), res.exclusions.size(), cfg.out_dir.c_str(),
                  res.hash.c_str());
      for (const auto& e : res.exclusions)
        std::printf("  excluded %s at %s: %s\n", e.participant_id.c_str(), e.stage.c_str(), e.message.c_str());
      return kExitOk;
    }
    if (*simulate_cmd) {
      CohortSpec spec;
      if (!cohort_path.empty()) spec = cohort_from_json(load_json(cohort_path));
      if (n_participants) spec.n_participants = n_participants;
      if (simulate_cmd->count("--empathy-mean")) spec.empathy.mean = empathy_mean;
      if (simulate_cmd->count("--seed")) spec.seed = sim_seed;
      const auto out = generate_cohort(spec, sim_out);
      std::printf("wrote %zu participants to %s\n", out.manifest.participants.size(),
                  out.manifest_path.string().c_str());
      return kExitOk;
    }
    if (*stream_cmd) return run_stream(std::cin, std::cout, stream_cfg, frame_rows);
    if (*teq_cmd) {
      const ReverseSet rev = teq_reverse.empty() ? default_reverse_items() : read_reverse_items(teq_reverse);
      std::vector<TeqScore> scores;
      for (const auto& r : read_teq(teq_path)) scores.push_back(score(r, rev));
      const auto text = format_scores_csv(scores, rev);
      if (teq_out.empty()) std::cout << text;
      else write_text(teq_out, text);
      return kExitOk;
    }
    if (*verify_cmd) {
      const auto results = run_anchor_suite();
      std::size_t failed = 0;
      for (const auto& a : results) {
        print_anchor(a);
        if (!a.pass) ++failed;
      }
      std::printf("%zu/%zu anchors passed\n", results.size() - failed, results.size());
      return failed ? kExitAnchors : kExitOk;
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}
