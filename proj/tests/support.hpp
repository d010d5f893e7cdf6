#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "eegasym/eegasym.hpp"

namespace eegasym::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "eegasym") {
    static std::atomic<unsigned> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

struct InMemoryCohort {
  FeatureMatrix features;
  std::vector<TeqScore> scores;
  std::vector<AsymmetryTable> planted;
};

// Synthesizes and processes a cohort without touching the disk. Produces the
// same features as writing the cohort and running the file pipeline.
inline InMemoryCohort run_in_memory(const CohortSpec& spec, const ProcessingConfig& cfg = {}) {
  InMemoryCohort out;
  out.features.bands = cfg.bands;
  out.features.montage = cfg.montage;
  for (std::size_t i = 0; i < spec.n_participants; ++i) {
    const auto sp = synthesize_participant(spec, i);
    out.features.rows.push_back(
        asymmetry(participant_powers(sp.recording, sp.markers, cfg), cfg.montage, cfg.asymmetry));
    out.scores.push_back(score(sp.teq, spec.reverse_items));
    out.planted.push_back(sp.planted);
  }
  return out;
}

// Frontal Alpha summary of one synthesized cohort, as the pipeline reports it.
struct FrontalAlphaOutcome {
  double kw_p{1.0};
  std::array<double, 3> mean{};  // per phase, over participants
  PairwiseResult pre_vrx, vrx_post;
  RegressionResult pre_regression;  // TEQ total on PreB asymmetry, after Cook's exclusion
  RegressionResult pre_ols;         // same fit on every participant
};

inline FrontalAlphaOutcome frontal_alpha_outcome(const CohortSpec& spec) {
  const auto run = run_in_memory(spec);
  const auto& fm = run.features;
  const std::size_t alpha = fm.bands.index_of("Alpha");
  FrontalAlphaOutcome out;
  std::vector<std::vector<double>> groups;
  for (Phase p : kPhases) {
    groups.push_back(fm.column(p, Region::Frontal, alpha));
    out.mean[index_of(p)] = std::accumulate(groups.back().begin(), groups.back().end(), 0.0) /
                            static_cast<double>(groups.back().size());
  }
  out.kw_p = kruskal_wallis(groups).p;
  out.pre_vrx = wilcoxon_signed_rank(groups[0], groups[1]);
  out.vrx_post = wilcoxon_signed_rank(groups[1], groups[2]);
  out.pre_regression = regression_rows(fm, run.scores, Region::Frontal, alpha).front().result;
  std::vector<double> y;
  for (const auto& sc : run.scores) y.push_back(sc.total);
  out.pre_ols = ols_regression(groups[0], y);
  return out;
}

inline std::vector<double> white_noise(std::size_t n, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  std::vector<double> x(n);
  for (double& v : x) v = normal(rng);
  return x;
}

inline std::vector<double> sine(std::size_t n, double fs, double freq, double amp, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / fs + phase);
  return x;
}

inline Recording make_recording(std::vector<std::vector<double>> data, double fs = 256.0,
                                std::vector<ChannelId> labels = {}) {
  Recording r;
  r.sample_rate_hz = fs;
  if (labels.empty())
    for (std::size_t c = 0; c < data.size(); ++c) labels.push_back("C" + std::to_string(c));
  r.channels = std::move(labels);
  r.data = std::move(data);
  return r;
}

}  // namespace eegasym::testing
