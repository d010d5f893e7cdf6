#pragma once

// Band powers -> hemispheric asymmetry, and the per-participant pipeline that
// assembles the cohort feature matrix.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "eegasym/core.hpp"
#include "eegasym/dsp.hpp"
#include "eegasym/ingest.hpp"

namespace eegasym {

enum class AsymmetryMode { Difference, LogRatio };
enum class SpectralMode { Welch, SingleWindow };

struct ProcessingConfig {
  BandSet bands = BandSet::standard();
  Montage montage = Montage::standard();
  bool filter_enabled{true};
  double filter_low_hz{0.5};
  double filter_high_hz{50.0};
  int filter_order{4};
  SpectralMode spectral{SpectralMode::Welch};
  std::size_t welch_segment{512};
  double welch_overlap{0.5};
  AsymmetryMode asymmetry{AsymmetryMode::Difference};
};

// right - left per region pair; LogRatio uses ln(right) - ln(left).
inline AsymmetryTable asymmetry(const PowerTable& pt, const Montage& m,
                                AsymmetryMode mode = AsymmetryMode::Difference) {
  const std::size_t n_bands = pt[Phase::PreB].bands.size();
  AsymmetryTable out(pt.participant_id, n_bands);
  for (Phase p : kPhases) {
    const auto& bp = pt[p];
    if (bp.bands.size() != n_bands) throw std::invalid_argument("power table band mismatch");
    for (Region r : kRegions) {
      const auto& pair = m.pair(r);
      for (std::size_t b = 0; b < n_bands; ++b) {
        const double right = bp.at(pair.right, b);
        const double left = bp.at(pair.left, b);
        if (mode == AsymmetryMode::Difference) {
          out.at(p, r, b) = right - left;
        } else {
          if (!(right > 0.0) || !(left > 0.0))
            throw std::invalid_argument("log-ratio asymmetry needs positive powers");
          out.at(p, r, b) = std::log(right) - std::log(left);
        }
      }
    }
  }
  return out;
}

inline Psd estimate_psd(const Recording& seg, const ProcessingConfig& cfg) {
  return cfg.spectral == SpectralMode::Welch ? welch_psd(seg, cfg.welch_segment, cfg.welch_overlap)
                                             : single_window_psd(seg);
}

// filter -> segment -> PSD -> band power for one participant.
inline PowerTable participant_powers(const Recording& r, const PhaseMarkers& markers,
                                     const ProcessingConfig& cfg) {
  const auto violations = validate_recording(r, cfg.bands);
  if (!violations.empty()) throw std::invalid_argument(violations.front().message);
  for (const auto& c : cfg.montage.channel_labels()) r.channel_index(c);

  Recording filtered;
  const Recording* src = &r;
  if (cfg.filter_enabled) {
    filtered = apply_filter(r, design_bandpass(cfg.filter_low_hz, cfg.filter_high_hz,
                                               r.sample_rate_hz, cfg.filter_order));
    src = &filtered;
  }
  const auto segments = segment(*src, markers);
  PowerTable pt;
  pt.participant_id = r.participant_id;
  for (Phase p : kPhases) pt[p] = band_power(estimate_psd(segments[index_of(p)], cfg), cfg.bands);
  return pt;
}

struct Exclusion {
  std::string participant_id;
  std::string stage;
  std::string message;
};

struct FeatureBuild {
  FeatureMatrix matrix;
  std::vector<Exclusion> exclusions;
  std::vector<std::string> participants;  // retained, in manifest order
};

inline ProcessingConfig resolve_config(const DatasetManifest& dataset, ProcessingConfig cfg) {
  if (dataset.band_set) cfg.bands = *dataset.band_set;
  if (dataset.montage) cfg.montage = *dataset.montage;
  return cfg;
}

// Runs the per-participant pipeline over a manifest. A participant failing
// any stage is dropped and reported rather than aborting the cohort.
inline FeatureBuild build_feature_matrix(const DatasetManifest& dataset,
                                         const ProcessingConfig& config) {
  const ProcessingConfig cfg = resolve_config(dataset, config);
  FeatureBuild out;
  out.matrix.bands = cfg.bands;
  out.matrix.montage = cfg.montage;
  for (const auto& entry : dataset.participants) {
    std::string stage = "load";
    try {
      Recording rec = read_recording(entry.recording_path, cfg.bands);
      rec.participant_id = entry.participant_id;
      stage = "markers";
      const auto markers = read_markers(entry.markers_path, rec);
      stage = "spectral";
      const auto powers = participant_powers(rec, markers, cfg);
      stage = "asymmetry";
      out.matrix.rows.push_back(asymmetry(powers, cfg.montage, cfg.asymmetry));
      out.participants.push_back(entry.participant_id);
    } catch (const std::exception& e) {
      out.exclusions.push_back({entry.participant_id, stage, e.what()});
    }
  }
  return out;
}

inline std::string format_exclusions_csv(const std::vector<Exclusion>& ex,
                                         std::string_view hash = {}) {
  std::string out = hash_line(hash) + "participant_id,stage,message\n";
  for (const auto& e : ex)
    out += csv::escape(e.participant_id) + "," + csv::escape(e.stage) + "," +
           csv::escape(e.message) + "\n";
  return out;
}

}  // namespace eegasym
