#pragma once

// Online sliding-window asymmetry. Each completed hop emits the band-power
// asymmetry of the trailing window, computed with the same single-window
// periodogram and band averaging as the batch path, plus an exponentially
// smoothed copy.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "eegasym/core.hpp"
#include "eegasym/dsp.hpp"

namespace eegasym {

struct StreamConfig {
  double sample_rate_hz{256.0};
  double window_s{2.0};
  double hop_s{0.5};
  BandSet bands = BandSet::standard();
  Montage montage = Montage::standard();
  double half_life_hops{4.0};
  std::vector<Region> regions{Region::Frontal, Region::Central, Region::Parietal};

  std::size_t window_samples() const {
    return static_cast<std::size_t>(std::llround(window_s * sample_rate_hz));
  }
  std::size_t hop_samples() const {
    return static_cast<std::size_t>(std::llround(hop_s * sample_rate_hz));
  }
  // Windows that are not a power of two are zero-padded up to one.
  std::size_t fft_length() const { return next_power_of_two(window_samples()); }
  double smoothing_alpha() const { return 1.0 - std::pow(2.0, -1.0 / half_life_hops); }
};

struct AsymmetrySample {
  double timestamp_s{0.0};    // end of window
  std::size_t end_sample{0};  // exclusive, counted from stream start (or last reset)
  std::size_t n_bands{0};
  std::vector<Region> regions;
  std::vector<double> raw;       // [region][band]
  std::vector<double> smoothed;  // [region][band]

  double raw_at(std::size_t region, std::size_t band) const { return raw[region * n_bands + band]; }
  double smoothed_at(std::size_t region, std::size_t band) const {
    return smoothed[region * n_bands + band];
  }
};

class AsymmetryStream {
 public:
  explicit AsymmetryStream(StreamConfig cfg) : cfg_(std::move(cfg)) {
    window_ = cfg_.window_samples();
    hop_ = cfg_.hop_samples();
    if (hop_ == 0 || window_ == 0) throw std::invalid_argument("stream window and hop must be positive");
    if (hop_ > window_) throw std::invalid_argument("hop must not exceed window");
    if (!(cfg_.half_life_hops > 0.0)) throw std::invalid_argument("half-life must be positive");
    if (cfg_.sample_rate_hz <= 2.0 * cfg_.bands.highest_edge())
      throw std::invalid_argument("Nyquist: sample rate too low for band set");

    const auto& labels = cfg_.montage.channel_labels();
    for (Region r : cfg_.regions) {
      const auto& pair = cfg_.montage.pair(r);
      left_.push_back(used_index(pair.left, labels));
      right_.push_back(used_index(pair.right, labels));
    }
    buffers_.assign(used_.size(), std::vector<double>(window_, 0.0));
  }

  const StreamConfig& config() const { return cfg_; }
  std::size_t n_channels() const { return cfg_.montage.channel_labels().size(); }

  // `frame[channel][k]` in montage channel order. A frame with a wrong channel
  // count or a non-finite value throws and leaves the stream untouched.
  std::vector<AsymmetrySample> push(const std::vector<std::vector<double>>& frame) {
    if (frame.size() != n_channels())
      throw std::invalid_argument("frame has " + std::to_string(frame.size()) +
                                  " channels, expected " + std::to_string(n_channels()));
    const std::size_t k = frame.empty() ? 0 : frame.front().size();
    for (const auto& row : frame) {
      if (row.size() != k) throw std::invalid_argument("ragged frame");
      for (double v : row)
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite sample in frame");
    }

    std::vector<AsymmetrySample> out;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t u = 0; u < used_.size(); ++u) buffers_[u][head_] = frame[used_[u]][i];
      head_ = (head_ + 1) % window_;
      ++total_;
      if (total_ >= window_ && (total_ - window_) % hop_ == 0) out.push_back(emit());
    }
    return out;
  }

  void reset() {
    for (auto& b : buffers_) std::fill(b.begin(), b.end(), 0.0);
    head_ = 0;
    total_ = 0;
    smoothed_.clear();
  }

  std::size_t samples_seen() const { return total_; }

 private:
  std::size_t used_index(const ChannelId& label, const std::vector<ChannelId>& labels) {
    std::size_t col = labels.size();
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) col = i;
    if (col == labels.size()) throw std::invalid_argument("montage has no channel " + label);
    for (std::size_t u = 0; u < used_.size(); ++u)
      if (used_[u] == col) return u;
    used_.push_back(col);
    return used_.size() - 1;
  }

  AsymmetrySample emit() {
    Recording win;
    win.sample_rate_hz = cfg_.sample_rate_hz;
    const auto& labels = cfg_.montage.channel_labels();
    for (std::size_t u = 0; u < used_.size(); ++u) {
      win.channels.push_back(labels[used_[u]]);
      std::vector<double> x(window_);
      for (std::size_t i = 0; i < window_; ++i) x[i] = buffers_[u][(head_ + i) % window_];
      win.data.push_back(std::move(x));
    }
    const BandPowers bp = band_power(single_window_psd(win, cfg_.fft_length()), cfg_.bands);

    AsymmetrySample s;
    s.end_sample = total_;
    s.timestamp_s = static_cast<double>(total_) / cfg_.sample_rate_hz;
    s.n_bands = cfg_.bands.size();
    s.regions = cfg_.regions;
    for (std::size_t r = 0; r < cfg_.regions.size(); ++r)
      for (std::size_t b = 0; b < s.n_bands; ++b)
        s.raw.push_back(bp.at(right_[r], b) - bp.at(left_[r], b));

    const double alpha = cfg_.smoothing_alpha();
    if (smoothed_.empty()) {
      smoothed_ = s.raw;
    } else {
      for (std::size_t i = 0; i < s.raw.size(); ++i)
        smoothed_[i] = alpha * s.raw[i] + (1.0 - alpha) * smoothed_[i];
    }
    s.smoothed = smoothed_;
    return s;
  }

  StreamConfig cfg_;
  std::size_t window_{0};
  std::size_t hop_{0};
  std::vector<std::size_t> used_;   // montage column per buffered channel
  std::vector<std::size_t> left_;   // buffered index per region
  std::vector<std::size_t> right_;
  std::vector<std::vector<double>> buffers_;
  std::size_t head_{0};
  std::size_t total_{0};
  std::vector<double> smoothed_;
};

}  // namespace eegasym
