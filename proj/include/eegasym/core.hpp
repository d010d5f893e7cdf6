#pragma once

// Shared vocabulary: recordings, montage, bands, phases and feature tables.

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace eegasym {

using ChannelId = std::string;

enum class Phase { PreB = 0, VRX = 1, PostB = 2 };
enum class Region { Frontal = 0, Central = 1, Parietal = 2 };

inline constexpr std::array<Phase, 3> kPhases{Phase::PreB, Phase::VRX, Phase::PostB};
inline constexpr std::array<Region, 3> kRegions{Region::Frontal, Region::Central,
                                                Region::Parietal};

inline std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::PreB: return "PreB";
    case Phase::VRX: return "VRX";
    case Phase::PostB: return "PostB";
  }
  return "?";
}

inline std::string_view to_string(Region r) {
  switch (r) {
    case Region::Frontal: return "Frontal";
    case Region::Central: return "Central";
    case Region::Parietal: return "Parietal";
  }
  return "?";
}

inline Phase phase_from_string(std::string_view s) {
  for (Phase p : kPhases)
    if (to_string(p) == s) return p;
  throw std::invalid_argument("unknown phase '" + std::string(s) + "'");
}

inline Region region_from_string(std::string_view s) {
  for (Region r : kRegions)
    if (to_string(r) == s) return r;
  throw std::invalid_argument("unknown region '" + std::string(s) + "'");
}

inline std::size_t index_of(Phase p) { return static_cast<std::size_t>(p); }
inline std::size_t index_of(Region r) { return static_cast<std::size_t>(r); }

// ---------------------------------------------------------------------------
// Bands

struct Band {
  std::string name;
  double low_hz{0.0};
  double high_hz{0.0};

  friend bool operator==(const Band&, const Band&) = default;
};

// Ordered, non-overlapping half-open bands [low, high). The last band is
// closed on top so that the upper analysis edge (50 Hz by default) is kept.
class BandSet {
 public:
  BandSet() = default;

  explicit BandSet(std::vector<Band> bands) : bands_(std::move(bands)) {
    if (bands_.empty()) throw std::invalid_argument("band set is empty");
    for (std::size_t i = 0; i < bands_.size(); ++i) {
      const Band& b = bands_[i];
      if (!(b.low_hz > 0.0) || !(b.high_hz > b.low_hz))
        throw std::invalid_argument("band '" + b.name + "' has invalid edges");
      if (i > 0 && b.low_hz < bands_[i - 1].high_hz)
        throw std::invalid_argument("band '" + b.name + "' overlaps or is out of order");
    }
  }

  static const BandSet& standard() {
    static const BandSet s({{"Delta", 0.5, 4.0},
                            {"Theta", 4.0, 8.0},
                            {"Alpha", 8.0, 13.0},
                            {"Beta", 13.0, 28.0},
                            {"Gamma", 28.0, 50.0}});
    return s;
  }

  const std::vector<Band>& bands() const { return bands_; }
  std::size_t size() const { return bands_.size(); }
  const Band& operator[](std::size_t i) const { return bands_[i]; }
  double highest_edge() const { return bands_.empty() ? 0.0 : bands_.back().high_hz; }

  // Membership with a tolerance that is small relative to any realistic bin
  // spacing, so bin centres landing exactly on an edge are classified stably.
  bool contains(std::size_t band, double freq_hz) const {
    const Band& b = bands_.at(band);
    const double eps = 1e-9 * (1.0 + std::abs(freq_hz));
    if (freq_hz < b.low_hz - eps) return false;
    if (band + 1 == bands_.size()) return freq_hz <= b.high_hz + eps;
    return freq_hz < b.high_hz - eps;
  }

  std::size_t index_of(std::string_view name) const {
    for (std::size_t i = 0; i < bands_.size(); ++i)
      if (bands_[i].name == name) return i;
    throw std::invalid_argument("unknown band '" + std::string(name) + "'");
  }

  friend bool operator==(const BandSet&, const BandSet&) = default;

 private:
  std::vector<Band> bands_;
};

// ---------------------------------------------------------------------------
// Montage

struct ChannelPair {
  ChannelId left;
  ChannelId right;

  friend bool operator==(const ChannelPair&, const ChannelPair&) = default;
};

class Montage {
 public:
  Montage() = default;

  Montage(std::vector<ChannelId> labels, std::map<Region, ChannelPair> pairs)
      : labels_(std::move(labels)), pairs_(std::move(pairs)) {
    for (const auto& [region, pair] : pairs_) {
      if (!has_channel(pair.left) || !has_channel(pair.right))
        throw std::invalid_argument("montage pair for " + std::string(to_string(region)) +
                                    " references a missing channel");
    }
  }

  static const Montage& standard() {
    static const Montage m({"F3", "Fz", "F4", "C3", "Cz", "C4", "P3", "POz", "P4"},
                           {{Region::Frontal, {"F3", "F4"}},
                            {Region::Central, {"C3", "C4"}},
                            {Region::Parietal, {"P3", "P4"}}});
    return m;
  }

  const std::vector<ChannelId>& channel_labels() const { return labels_; }
  const std::map<Region, ChannelPair>& region_pairs() const { return pairs_; }

  bool has_channel(const ChannelId& c) const {
    for (const auto& l : labels_)
      if (l == c) return true;
    return false;
  }

  const ChannelPair& pair(Region r) const {
    auto it = pairs_.find(r);
    if (it == pairs_.end())
      throw std::invalid_argument("montage has no pair for " + std::string(to_string(r)));
    return it->second;
  }

  // Same montage with every pair's left/right exchanged.
  Montage mirrored() const {
    auto swapped = pairs_;
    for (auto& [region, p] : swapped) std::swap(p.left, p.right);
    return Montage(labels_, std::move(swapped));
  }

  friend bool operator==(const Montage&, const Montage&) = default;

 private:
  std::vector<ChannelId> labels_;
  std::map<Region, ChannelPair> pairs_;
};

// ---------------------------------------------------------------------------
// Recordings

// data[channel][sample], microvolts.
struct Recording {
  double sample_rate_hz{256.0};
  std::vector<ChannelId> channels;
  std::vector<std::vector<double>> data;
  std::string participant_id;

  std::size_t n_channels() const { return data.size(); }
  std::size_t n_samples() const { return data.empty() ? 0 : data.front().size(); }

  std::size_t channel_index(const ChannelId& c) const {
    for (std::size_t i = 0; i < channels.size(); ++i)
      if (channels[i] == c) return i;
    throw std::invalid_argument("recording has no channel '" + c + "'");
  }

  // Copy of samples [begin, end) for every channel.
  Recording slice(std::size_t begin, std::size_t end) const {
    Recording out{sample_rate_hz, channels, {}, participant_id};
    out.data.reserve(data.size());
    for (const auto& row : data)
      out.data.emplace_back(row.begin() + static_cast<std::ptrdiff_t>(begin),
                            row.begin() + static_cast<std::ptrdiff_t>(end));
    return out;
  }
};

struct Violation {
  enum class Kind { Ragged, NonFinite, Nyquist, Empty, ChannelCount };
  Kind kind;
  std::string message;
};

// Every invariant breach of `r` against the band set; empty means valid.
inline std::vector<Violation> validate_recording(const Recording& r, const BandSet& bands) {
  std::vector<Violation> out;
  if (r.channels.size() != r.data.size())
    out.push_back({Violation::Kind::ChannelCount,
                   "channel labels (" + std::to_string(r.channels.size()) +
                       ") do not match data rows (" + std::to_string(r.data.size()) + ")"});
  if (r.data.empty() || r.data.front().empty())
    out.push_back({Violation::Kind::Empty, "recording has no samples"});
  const std::size_t n = r.n_samples();
  for (std::size_t c = 0; c < r.data.size(); ++c) {
    if (r.data[c].size() != n) {
      out.push_back({Violation::Kind::Ragged, "ragged channel " + std::to_string(c) + ": " +
                                                  std::to_string(r.data[c].size()) +
                                                  " samples, expected " + std::to_string(n)});
    }
    for (std::size_t i = 0; i < r.data[c].size(); ++i) {
      if (!std::isfinite(r.data[c][i]))
        out.push_back({Violation::Kind::NonFinite, "non-finite at (" + std::to_string(c) +
                                                       ", " + std::to_string(i) + ")"});
    }
  }
  if (!(r.sample_rate_hz > 0.0) || r.sample_rate_hz <= 2.0 * bands.highest_edge())
    out.push_back({Violation::Kind::Nyquist,
                   "Nyquist: sample rate " + std::to_string(r.sample_rate_hz) +
                       " Hz is not above twice the highest band edge " +
                       std::to_string(bands.highest_edge()) + " Hz"});
  return out;
}

// ---------------------------------------------------------------------------
// Phase markers

struct SampleSpan {
  std::size_t start{0};
  std::size_t end{0};  // exclusive
  std::size_t length() const { return end > start ? end - start : 0; }

  friend bool operator==(const SampleSpan&, const SampleSpan&) = default;
};

struct PhaseMarkers {
  std::array<SampleSpan, 3> spans{};

  const SampleSpan& operator[](Phase p) const { return spans[index_of(p)]; }
  SampleSpan& operator[](Phase p) { return spans[index_of(p)]; }

  friend bool operator==(const PhaseMarkers&, const PhaseMarkers&) = default;
};

// Throws std::invalid_argument naming the first broken rule.
inline void validate_markers(const PhaseMarkers& m, std::size_t n_samples) {
  for (Phase p : kPhases) {
    if (m[p].end <= m[p].start)
      throw std::invalid_argument("empty span for phase " + std::string(to_string(p)));
    if (m[p].end > n_samples)
      throw std::invalid_argument("out of bounds: phase " + std::string(to_string(p)) +
                                  " ends at " + std::to_string(m[p].end) + " > " +
                                  std::to_string(n_samples));
  }
  for (std::size_t i = 1; i < 3; ++i) {
    const auto& prev = m.spans[i - 1];
    const auto& cur = m.spans[i];
    if (cur.start < prev.start)
      throw std::invalid_argument("phase order: " + std::string(to_string(kPhases[i])) +
                                  " starts before " + std::string(to_string(kPhases[i - 1])));
    if (cur.start < prev.end)
      throw std::invalid_argument("overlap between " + std::string(to_string(kPhases[i - 1])) +
                                  " and " + std::string(to_string(kPhases[i])));
  }
}

// ---------------------------------------------------------------------------
// Feature tables

// Mean band power (uV^2/Hz) for one span: values[channel * n_bands + band].
struct BandPowers {
  std::vector<ChannelId> channels;
  std::vector<std::string> bands;
  std::vector<double> values;

  double at(std::size_t channel, std::size_t band) const {
    return values.at(channel * bands.size() + band);
  }
  double at(const ChannelId& channel, std::size_t band) const {
    for (std::size_t c = 0; c < channels.size(); ++c)
      if (channels[c] == channel) return at(c, band);
    throw std::invalid_argument("missing paired channel '" + channel + "'");
  }
};

// One participant's phase x channel x band power.
struct PowerTable {
  std::string participant_id;
  std::array<BandPowers, 3> phases;

  const BandPowers& operator[](Phase p) const { return phases[index_of(p)]; }
  BandPowers& operator[](Phase p) { return phases[index_of(p)]; }
};

// One participant's phase x region x band asymmetry (right minus left).
struct AsymmetryTable {
  std::string participant_id;
  std::size_t n_bands{0};
  std::vector<double> values;  // [phase][region][band]

  AsymmetryTable() = default;
  AsymmetryTable(std::string id, std::size_t bands)
      : participant_id(std::move(id)), n_bands(bands), values(9 * bands, 0.0) {}

  double& at(Phase p, Region r, std::size_t band) {
    return values.at((index_of(p) * 3 + index_of(r)) * n_bands + band);
  }
  double at(Phase p, Region r, std::size_t band) const {
    return values.at((index_of(p) * 3 + index_of(r)) * n_bands + band);
  }

  friend bool operator==(const AsymmetryTable&, const AsymmetryTable&) = default;
};

struct FeatureMatrix {
  BandSet bands;
  Montage montage;
  std::vector<AsymmetryTable> rows;  // one per retained participant, in input order

  std::size_t n_participants() const { return rows.size(); }
  std::size_t n_cells() const { return rows.size() * 9 * bands.size(); }

  // The cell across participants, in row order.
  std::vector<double> column(Phase p, Region r, std::size_t band) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(row.at(p, r, band));
    return out;
  }
};

}  // namespace eegasym
