#pragma once

// Synthetic recordings and cohorts with closed-form band powers. Signals are
// sums of tones plus white Gaussian noise, so every band's expected power is
// known exactly and the whole pipeline can be checked against it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <json.hpp>

#include "eegasym/core.hpp"
#include "eegasym/ingest.hpp"
#include "eegasym/teq.hpp"

namespace eegasym {

struct Tone {
  double freq_hz{10.0};
  double amplitude_uv{0.0};
  double phase_rad{0.0};
};

struct ChannelSignal {
  ChannelId label;
  std::vector<Tone> tones;
  double noise_sigma_uv{0.0};
};

struct SignalSpec {
  std::vector<ChannelSignal> channels;
  double duration_s{60.0};
  double sample_rate_hz{256.0};
  std::uint64_t seed{0};
  std::string participant_id{"synthetic"};

  std::size_t n_samples() const {
    return static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
  }
};

// Number of PSD bins (spacing fs / nfft, up to Nyquist) inside band `b`.
inline std::size_t band_bin_count(const BandSet& bands, std::size_t b, double sample_rate_hz,
                                  std::size_t nfft) {
  std::size_t count = 0;
  for (std::size_t k = 0; k <= nfft / 2; ++k)
    if (bands.contains(b, static_cast<double>(k) * sample_rate_hz / static_cast<double>(nfft)))
      ++count;
  return count;
}

// Expected per-band content of a generated signal, before any filtering.
struct GroundTruth {
  BandSet bands;
  double sample_rate_hz{256.0};
  std::vector<ChannelId> channels;
  std::vector<std::vector<double>> tone_power;  // [channel][band], integrated uV^2 (A^2/2 sums)
  std::vector<double> noise_variance;           // [channel], uV^2

  // Integrated power in band: tones plus noise sigma^2 * bandwidth / Nyquist.
  double band_power(std::size_t channel, std::size_t band) const {
    const double nyquist = sample_rate_hz / 2.0;
    const Band& b = bands[band];
    return tone_power[channel][band] + noise_variance[channel] * (b.high_hz - b.low_hz) / nyquist;
  }

  // Expected mean PSD over the band's bins at resolution fs / nfft.
  double mean_density(std::size_t channel, std::size_t band, std::size_t nfft) const {
    const double df = sample_rate_hz / static_cast<double>(nfft);
    const auto bins = static_cast<double>(band_bin_count(bands, band, sample_rate_hz, nfft));
    return tone_power[channel][band] / (bins * df) + noise_variance[channel] / (sample_rate_hz / 2.0);
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Adds sum_k A_k sin(2 pi f_k t + phi_k) over samples [begin, end), in tone
// order, using rotating phasors re-anchored exactly every 1024 samples.
inline void add_tones(std::vector<double>& x, std::size_t begin, std::size_t end,
                      std::span<const Tone> tones, double fs) {
  const std::size_t k = tones.size();
  std::vector<double> w(k), cw(k), sw(k), s(k), c(k);
  for (std::size_t j = 0; j < k; ++j) {
    w[j] = 2.0 * std::numbers::pi * tones[j].freq_hz / fs;
    cw[j] = std::cos(w[j]);
    sw[j] = std::sin(w[j]);
  }
  for (std::size_t block = begin; block < end; block += 1024) {
    for (std::size_t j = 0; j < k; ++j) {
      const double ang = w[j] * static_cast<double>(block) + tones[j].phase_rad;
      s[j] = std::sin(ang);
      c[j] = std::cos(ang);
    }
    const std::size_t stop = std::min(end, block + 1024);
    for (std::size_t i = block; i < stop; ++i) {
      double acc = x[i];
      for (std::size_t j = 0; j < k; ++j) {
        if (tones[j].amplitude_uv == 0.0) continue;
        acc += tones[j].amplitude_uv * s[j];
        const double s2 = s[j] * cw[j] + c[j] * sw[j];
        c[j] = c[j] * cw[j] - s[j] * sw[j];
        s[j] = s2;
      }
      x[i] = acc;
    }
  }
}

inline std::size_t band_of(const BandSet& bands, double f) {
  for (std::size_t b = 0; b < bands.size(); ++b)
    if (bands.contains(b, f)) return b;
  return bands.size();
}

}  // namespace detail

struct SyntheticRecording {
  Recording recording;
  GroundTruth truth;
};

inline SyntheticRecording generate_recording(const SignalSpec& spec,
                                             const BandSet& bands = BandSet::standard()) {
  const double nyquist = spec.sample_rate_hz / 2.0;
  if (!(spec.sample_rate_hz > 0.0) || !(spec.duration_s > 0.0))
    throw std::invalid_argument("signal spec needs positive rate and duration");
  for (const auto& ch : spec.channels) {
    if (ch.noise_sigma_uv < 0.0) throw std::invalid_argument("noise sigma must be >= 0");
    for (const auto& t : ch.tones) {
      if (!(t.freq_hz >= 0.0) || t.freq_hz >= nyquist)
        throw std::invalid_argument("tone frequency >= Nyquist: " + std::to_string(t.freq_hz));
      if (t.amplitude_uv < 0.0) throw std::invalid_argument("tone amplitude must be >= 0");
    }
  }

  const std::size_t n = spec.n_samples();
  SyntheticRecording out;
  out.recording.sample_rate_hz = spec.sample_rate_hz;
  out.recording.participant_id = spec.participant_id;
  out.truth.bands = bands;
  out.truth.sample_rate_hz = spec.sample_rate_hz;

  std::mt19937_64 rng(detail::splitmix64(spec.seed));
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& ch : spec.channels) {
    std::vector<double> x(n, 0.0);
    std::vector<double> tone_power(bands.size(), 0.0);
    detail::add_tones(x, 0, n, ch.tones, spec.sample_rate_hz);
    for (const auto& t : ch.tones) {
      const auto b = detail::band_of(bands, t.freq_hz);
      if (b < bands.size()) tone_power[b] += t.amplitude_uv * t.amplitude_uv / 2.0;
    }
    if (ch.noise_sigma_uv > 0.0)
      for (double& v : x) v += ch.noise_sigma_uv * normal(rng);
    out.recording.channels.push_back(ch.label);
    out.recording.data.push_back(std::move(x));
    out.truth.channels.push_back(ch.label);
    out.truth.tone_power.push_back(std::move(tone_power));
    out.truth.noise_variance.push_back(ch.noise_sigma_uv * ch.noise_sigma_uv);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cohorts

// Mean planted asymmetry per phase for one region x band cell.
struct PlantedEffect {
  Region region{Region::Frontal};
  std::string band{"Alpha"};
  std::array<double, 3> phase_means{0.0, 0.0, 0.0};  // uV^2/Hz, PreB/VRX/PostB
};

struct EmpathyDistribution {
  double mean{67.0};
  double sd{8.0};
  double min{49.0};
  double max{86.0};
};

// Links one cell's asymmetry to the participant's empathy score:
// asym = phase mean + slope * (score - mean score) + N(0, noise_sd).
struct RegressionLink {
  Region region{Region::Frontal};
  std::string band{"Alpha"};
  Phase phase{Phase::PreB};
  double slope{-0.0625};  // uV^2/Hz per TEQ point
  double noise_sd{0.5};
};

struct CohortSpec {
  std::size_t n_participants{40};
  double sample_rate_hz{256.0};
  double lead_in_s{10.0};                         // familiarisation, discarded by the markers
  std::array<double, 3> phase_duration_s{60.0, 60.0, 60.0};
  BandSet bands = BandSet::standard();
  Montage montage = Montage::standard();
  std::vector<double> tone_freq_hz{2.0, 6.0, 10.0, 20.0, 38.0};  // one per band
  double base_density{10.0};                      // uV^2/Hz per band tone, both hemispheres
  double noise_sigma_uv{2.0};
  std::size_t analysis_segment{512};              // resolution used to convert densities
  double asym_sd{0.5};                            // per participant x phase x cell spread
  std::vector<PlantedEffect> effects{{Region::Frontal, "Alpha", {0.5, -0.5, 0.5}}};
  EmpathyDistribution empathy;
  std::optional<RegressionLink> link{RegressionLink{}};
  ReverseSet reverse_items = default_reverse_items();
  std::uint64_t seed{1};

  // Same cohort without any phase effect (null hypothesis for the omnibus).
  CohortSpec null_effects() const {
    CohortSpec c = *this;
    for (auto& e : c.effects) e.phase_means = {0.0, 0.0, 0.0};
    return c;
  }
};

inline void validate_cohort(const CohortSpec& c) {
  if (c.n_participants < 3) throw std::invalid_argument("cohort needs at least 3 participants");
  const auto& e = c.empathy;
  for (double v : {e.mean, e.min, e.max})
    if (!(v >= 0.0 && v <= kTeqMaxTotal))
      throw std::invalid_argument("score outside [0,96]: " + std::to_string(v));
  if (e.min > e.max || !(e.sd >= 0.0))
    throw std::invalid_argument("empathy distribution bounds are inconsistent");
  if (c.tone_freq_hz.size() != c.bands.size())
    throw std::invalid_argument("need one tone frequency per band");
  for (std::size_t b = 0; b < c.bands.size(); ++b)
    if (detail::band_of(c.bands, c.tone_freq_hz[b]) != b)
      throw std::invalid_argument("tone frequency " + std::to_string(c.tone_freq_hz[b]) +
                                  " lies outside band " + c.bands[b].name);
  if (c.sample_rate_hz <= 2.0 * c.bands.highest_edge())
    throw std::invalid_argument("Nyquist: sample rate too low for band set");
  for (double d : c.phase_duration_s)
    if (!(d * c.sample_rate_hz >= static_cast<double>(c.analysis_segment)))
      throw std::invalid_argument("phase shorter than one analysis segment");
  if (!(c.lead_in_s >= 0.0)) throw std::invalid_argument("lead-in must be >= 0");
  for (const auto& eff : c.effects) c.bands.index_of(eff.band);
  if (c.link) c.bands.index_of(c.link->band);
  check_reverse_set(c.reverse_items);
}

struct SyntheticParticipant {
  Recording recording;
  PhaseMarkers markers;
  TeqResponse teq;
  int empathy{0};
  AsymmetryTable planted;  // target asymmetry per cell (uV^2/Hz)
};

inline SyntheticParticipant synthesize_participant(const CohortSpec& c, std::size_t index) {
  validate_cohort(c);
  const std::size_t nb = c.bands.size();
  const std::string id = "P" + std::string(index + 1 < 10 ? "0" : "") + std::to_string(index + 1);
  // Hash the seed before mixing in the index so nearby seeds do not share participants.
  std::mt19937_64 rng(detail::splitmix64(detail::splitmix64(c.seed) ^ static_cast<std::uint64_t>(index)));
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  boost::random::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);

  SyntheticParticipant sp;
  double score = c.empathy.mean;
  if (c.empathy.sd > 0.0 && c.empathy.min < c.empathy.max) {
    do score = std::round(c.empathy.mean + c.empathy.sd * normal(rng));
    while (score < c.empathy.min || score > c.empathy.max);
  } else {
    score = std::round(std::clamp(score, c.empathy.min, c.empathy.max));
  }
  sp.empathy = static_cast<int>(score);
  sp.teq = response_for_total(id, sp.empathy, c.reverse_items);

  sp.planted = AsymmetryTable(id, nb);
  for (Phase p : kPhases)
    for (Region r : kRegions)
      for (std::size_t b = 0; b < nb; ++b) {
        double mean = 0.0;
        for (const auto& e : c.effects)
          if (e.region == r && c.bands.index_of(e.band) == b) mean += e.phase_means[index_of(p)];
        double value;
        if (c.link && c.link->region == r && c.link->phase == p && c.bands.index_of(c.link->band) == b)
          value = mean + c.link->slope * (score - c.empathy.mean) + c.link->noise_sd * normal(rng);
        else
          value = mean + c.asym_sd * normal(rng);
        sp.planted.at(p, r, b) = value;
      }

  // Layout: lead-in, PreB, VRX, PostB.
  const double fs = c.sample_rate_hz;
  auto samples = [fs](double s) { return static_cast<std::size_t>(std::llround(s * fs)); };
  std::size_t cursor = samples(c.lead_in_s);
  std::array<std::size_t, 4> bounds{0, 0, 0, 0};
  for (Phase p : kPhases) {
    sp.markers[p] = {cursor, cursor + samples(c.phase_duration_s[index_of(p)])};
    bounds[index_of(p)] = cursor;
    cursor = sp.markers[p].end;
  }
  bounds[3] = cursor;
  const std::size_t n = cursor;

  std::vector<double> width(nb);
  for (std::size_t b = 0; b < nb; ++b)
    width[b] = static_cast<double>(band_bin_count(c.bands, b, fs, c.analysis_segment)) * fs /
               static_cast<double>(c.analysis_segment);

  // Density for one channel in one phase: base +/- half the planted asymmetry.
  auto density = [&](const ChannelId& ch, Phase p, std::size_t b) {
    double d = c.base_density;
    for (Region r : kRegions) {
      const auto& pairs = c.montage.region_pairs();
      auto it = pairs.find(r);
      if (it == pairs.end()) continue;
      if (it->second.right == ch) d += sp.planted.at(p, r, b) / 2.0;
      if (it->second.left == ch) d -= sp.planted.at(p, r, b) / 2.0;
    }
    if (d < 0.0)
      throw std::invalid_argument("planted asymmetry exceeds base density for channel " + ch);
    return d;
  };

  sp.recording.sample_rate_hz = fs;
  sp.recording.participant_id = id;
  for (const auto& ch : c.montage.channel_labels()) {
    std::vector<double> x(n, 0.0);
    std::vector<Tone> tones(nb);
    for (std::size_t b = 0; b < nb; ++b) tones[b] = {c.tone_freq_hz[b], 0.0, uniform(rng)};
    for (std::size_t seg = 0; seg < 4; ++seg) {
      // The lead-in carries PreB levels.
      const Phase p = seg == 0 ? Phase::PreB : kPhases[seg - 1];
      const std::size_t begin = seg == 0 ? 0 : bounds[seg - 1];
      const std::size_t end = seg == 0 ? bounds[0] : (seg == 3 ? bounds[3] : bounds[seg]);
      for (std::size_t b = 0; b < nb; ++b) tones[b].amplitude_uv = std::sqrt(2.0 * width[b] * density(ch, p, b));
      detail::add_tones(x, begin, end, tones, fs);
    }
    // Quantize to 1e-3 uV (round half to even via the 1.5 * 2^52 shift).
    constexpr double shift = 6755399441055744.0;
    for (double& v : x) v = (((v + c.noise_sigma_uv * normal(rng)) * 1000.0 + shift) - shift) / 1000.0;
    sp.recording.channels.push_back(ch);
    sp.recording.data.push_back(std::move(x));
  }
  return sp;
}

// ---------------------------------------------------------------------------
// JSON

inline json cohort_to_json(const CohortSpec& c) {
  json effects = json::array();
  for (const auto& e : c.effects)
    effects.push_back({{"region", to_string(e.region)}, {"band", e.band}, {"phase_means", e.phase_means}});
  json j = {{"n_participants", c.n_participants},
            {"sample_rate_hz", c.sample_rate_hz},
            {"lead_in_s", c.lead_in_s},
            {"phase_duration_s", c.phase_duration_s},
            {"band_set", band_set_to_json(c.bands)},
            {"montage", montage_to_json(c.montage)},
            {"tone_freq_hz", c.tone_freq_hz},
            {"base_density", c.base_density},
            {"noise_sigma_uv", c.noise_sigma_uv},
            {"analysis_segment", c.analysis_segment},
            {"asym_sd", c.asym_sd},
            {"effects", effects},
            {"empathy",
             {{"mean", c.empathy.mean}, {"sd", c.empathy.sd}, {"min", c.empathy.min}, {"max", c.empathy.max}}},
            {"reverse_items", c.reverse_items},
            {"seed", c.seed}};
  if (c.link)
    j["link"] = {{"region", to_string(c.link->region)},
                 {"band", c.link->band},
                 {"phase", to_string(c.link->phase)},
                 {"slope", c.link->slope},
                 {"noise_sd", c.link->noise_sd}};
  else
    j["link"] = nullptr;
  return j;
}

// Missing keys keep their defaults.
inline CohortSpec cohort_from_json(const json& j, CohortSpec c = {}) {
  auto get = [&](const char* key, auto& dst) {
    if (j.contains(key)) j.at(key).get_to(dst);
  };
  get("n_participants", c.n_participants);
  get("sample_rate_hz", c.sample_rate_hz);
  get("lead_in_s", c.lead_in_s);
  get("phase_duration_s", c.phase_duration_s);
  if (j.contains("band_set")) c.bands = band_set_from_json(j.at("band_set"));
  if (j.contains("montage")) c.montage = montage_from_json(j.at("montage"));
  get("tone_freq_hz", c.tone_freq_hz);
  get("base_density", c.base_density);
  get("noise_sigma_uv", c.noise_sigma_uv);
  get("analysis_segment", c.analysis_segment);
  get("asym_sd", c.asym_sd);
  if (j.contains("effects")) {
    c.effects.clear();
    for (const auto& e : j.at("effects"))
      c.effects.push_back({region_from_string(e.at("region").get<std::string>()),
                           e.at("band").get<std::string>(),
                           e.at("phase_means").get<std::array<double, 3>>()});
  }
  if (j.contains("empathy")) {
    const auto& e = j.at("empathy");
    if (e.contains("mean")) e.at("mean").get_to(c.empathy.mean);
    if (e.contains("sd")) e.at("sd").get_to(c.empathy.sd);
    if (e.contains("min")) e.at("min").get_to(c.empathy.min);
    if (e.contains("max")) e.at("max").get_to(c.empathy.max);
  }
  if (j.contains("link")) {
    if (j.at("link").is_null()) {
      c.link.reset();
    } else {
      RegressionLink l = c.link.value_or(RegressionLink{});
      const auto& e = j.at("link");
      if (e.contains("region")) l.region = region_from_string(e.at("region").get<std::string>());
      if (e.contains("band")) e.at("band").get_to(l.band);
      if (e.contains("phase")) l.phase = phase_from_string(e.at("phase").get<std::string>());
      if (e.contains("slope")) e.at("slope").get_to(l.slope);
      if (e.contains("noise_sd")) e.at("noise_sd").get_to(l.noise_sd);
      c.link = l;
    }
  }
  get("reverse_items", c.reverse_items);
  get("seed", c.seed);
  return c;
}

struct CohortOutput {
  DatasetManifest manifest;
  fs::path manifest_path;
  json ground_truth;
};

// Writes recordings, markers, one TEQ file, manifest.json and
// ground_truth.json under `dir`.
inline CohortOutput generate_cohort(const CohortSpec& c, const fs::path& dir) {
  validate_cohort(c);
  CohortOutput out;
  std::vector<TeqResponse> teq;
  json participants = json::array();
  for (std::size_t i = 0; i < c.n_participants; ++i) {
    const auto sp = synthesize_participant(c, i);
    const std::string id = sp.recording.participant_id;
    write_recording(sp.recording, dir / "recordings" / (id + ".csv"));
    write_markers(sp.markers, dir / "markers" / (id + ".csv"));
    teq.push_back(sp.teq);
    out.manifest.participants.push_back(
        {id, fs::path("recordings") / (id + ".csv"), fs::path("markers") / (id + ".csv"), "teq.csv"});

    json planted = json::object();
    for (Phase p : kPhases)
      for (Region r : kRegions)
        for (std::size_t b = 0; b < c.bands.size(); ++b)
          planted[std::string(to_string(p))][std::string(to_string(r))][c.bands[b].name] =
              sp.planted.at(p, r, b);
    participants.push_back({{"participant_id", id}, {"empathy", sp.empathy}, {"planted_asymmetry", planted}});
  }
  write_teq(teq, dir / "teq.csv");
  out.manifest.band_set = c.bands;
  out.manifest.montage = c.montage;
  out.manifest_path = dir / "manifest.json";
  write_manifest(out.manifest, out.manifest_path);
  out.manifest = read_manifest(out.manifest_path);

  out.ground_truth = {{"cohort", cohort_to_json(c)}, {"participants", participants}};
  if (c.link)
    out.ground_truth["regression_link_slope"] = c.link->slope;
  write_text(dir / "ground_truth.json", out.ground_truth.dump(2) + "\n");
  return out;
}

}  // namespace eegasym
