#pragma once

// Signal path: Butterworth bandpass (zero-phase), phase segmentation,
// Hann-tapered spectral estimation and per-band mean power.

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "eegasym/core.hpp"

namespace eegasym {

// Direct form II transposed second-order section, a0 == 1.
struct Biquad {
  double b0{1.0}, b1{0.0}, b2{0.0};
  double a1{0.0}, a2{0.0};

  std::complex<double> response(std::complex<double> z) const {
    const auto zi = 1.0 / z;
    return (b0 + zi * (b1 + zi * b2)) / (1.0 + zi * (a1 + zi * a2));
  }
};

struct FilterSpec {
  double low_hz{0.0};
  double high_hz{0.0};
  double sample_rate_hz{0.0};
  int order{0};  // bandpass order (number of poles)
  std::vector<Biquad> sections;
  std::vector<std::complex<double>> poles;

  std::complex<double> response(double freq_hz) const {
    const double w = 2.0 * std::numbers::pi * freq_hz / sample_rate_hz;
    const auto z = std::polar(1.0, w);
    std::complex<double> h{1.0, 0.0};
    for (const auto& s : sections) h *= s.response(z);
    return h;
  }

  double magnitude(double freq_hz) const { return std::abs(response(freq_hz)); }

  bool stable() const {
    return std::all_of(poles.begin(), poles.end(),
                       [](const auto& p) { return std::abs(p) < 1.0; });
  }
};

// Butterworth bandpass by bilinear transform of an analog prototype of order
// `order / 2`, with prewarped edges. Gain is normalised to exactly 1 at the
// digital centre frequency.
inline FilterSpec design_bandpass(double low_hz, double high_hz, double sample_rate_hz,
                                  int order) {
  const double nyquist = sample_rate_hz / 2.0;
  if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("sample rate must be positive");
  if (order < 2 || order % 2 != 0)
    throw std::invalid_argument("filter order must be even and >= 2");
  if (!(low_hz > 0.0)) throw std::invalid_argument("low edge must be > 0");
  if (high_hz >= nyquist || low_hz >= nyquist)
    throw std::invalid_argument("edge >= Nyquist (" + std::to_string(nyquist) + " Hz)");
  if (low_hz >= high_hz) throw std::invalid_argument("low >= high");

  using cd = std::complex<double>;
  const double fs2 = 2.0 * sample_rate_hz;
  const double w1 = fs2 * std::tan(std::numbers::pi * low_hz / sample_rate_hz);
  const double w2 = fs2 * std::tan(std::numbers::pi * high_hz / sample_rate_hz);
  const double w0sq = w1 * w2;
  const double bw = w2 - w1;
  const int n_proto = order / 2;

  std::vector<cd> zpoles;
  zpoles.reserve(static_cast<std::size_t>(order));
  for (int k = 1; k <= n_proto; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + n_proto - 1) / (2.0 * n_proto);
    const cd p = std::polar(1.0, theta);
    const cd half = p * bw / 2.0;
    const cd root = std::sqrt(half * half - w0sq);
    for (const cd s : {half + root, half - root}) zpoles.push_back((fs2 + s) / (fs2 - s));
  }

  // Pair complex poles with their conjugates, real poles with each other.
  const double eps = 1e-12;
  std::vector<cd> upper, real;
  for (const auto& p : zpoles) {
    if (p.imag() > eps) upper.push_back(p);
    else if (std::abs(p.imag()) <= eps) real.push_back({p.real(), 0.0});
  }
  std::sort(real.begin(), real.end(), [](cd a, cd b) { return a.real() < b.real(); });
  if (upper.size() * 2 + real.size() != zpoles.size() || real.size() % 2 != 0)
    throw std::runtime_error("unstable design: pole pairing failed");

  FilterSpec spec{low_hz, high_hz, sample_rate_hz, order, {}, zpoles};
  for (const auto& p : upper)
    spec.sections.push_back({1.0, 0.0, -1.0, -2.0 * p.real(), std::norm(p)});
  for (std::size_t i = 0; i < real.size(); i += 2) {
    const double r1 = real[i].real(), r2 = real[i + 1].real();
    spec.sections.push_back({1.0, 0.0, -1.0, -(r1 + r2), r1 * r2});
  }

  if (!spec.stable()) throw std::runtime_error("unstable design: pole on or outside unit circle");

  const double centre_hz =
      sample_rate_hz / std::numbers::pi *
      std::atan(std::sqrt(std::tan(std::numbers::pi * low_hz / sample_rate_hz) *
                          std::tan(std::numbers::pi * high_hz / sample_rate_hz)));
  const double gain = spec.magnitude(centre_hz);
  const double per_section = std::pow(gain, -1.0 / static_cast<double>(spec.sections.size()));
  for (auto& s : spec.sections) {
    s.b0 *= per_section;
    s.b1 *= per_section;
    s.b2 *= per_section;
  }
  return spec;
}

namespace detail {

// Steady-state state vectors for a unit step input through the cascade.
inline std::vector<std::array<double, 2>> sos_step_state(const std::vector<Biquad>& sections) {
  std::vector<std::array<double, 2>> zi;
  double scale = 1.0;
  for (const auto& s : sections) {
    const double g = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double z2 = s.b2 - s.a2 * g;
    const double z1 = s.b1 - s.a1 * g + z2;
    zi.push_back({scale * z1, scale * z2});
    scale *= g;
  }
  return zi;
}

inline void sos_filter(const std::vector<Biquad>& sections,
                       std::vector<std::array<double, 2>> state, std::vector<double>& x) {
  for (std::size_t k = 0; k < sections.size(); ++k) {
    const auto& s = sections[k];
    double z1 = state[k][0], z2 = state[k][1];
    for (double& v : x) {
      const double in = v;
      const double y = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * y + z2;
      z2 = s.b2 * in - s.a2 * y;
      v = y;
    }
  }
}

}  // namespace detail

// Forward-backward filtering of one channel with odd reflection padding of
// 3 * (2 * sections + 1) samples and steady-state initial conditions at both
// ends.
inline std::vector<double> filtfilt(const FilterSpec& f, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  std::size_t pad = std::min(3 * (2 * f.sections.size() + 1), n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto step = detail::sos_step_state(f.sections);
  auto scaled = [&](double v) {
    auto s = step;
    for (auto& z : s) z = {z[0] * v, z[1] * v};
    return s;
  };

  detail::sos_filter(f.sections, scaled(ext.front()), ext);
  std::reverse(ext.begin(), ext.end());
  detail::sos_filter(f.sections, scaled(ext.front()), ext);
  std::reverse(ext.begin(), ext.end());

  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

inline Recording apply_filter(const Recording& r, const FilterSpec& f) {
  if (std::abs(r.sample_rate_hz - f.sample_rate_hz) > 1e-9 * r.sample_rate_hz)
    throw std::invalid_argument("filter designed for " + std::to_string(f.sample_rate_hz) +
                                " Hz applied to a " + std::to_string(r.sample_rate_hz) +
                                " Hz recording");
  if (r.channels.size() != r.data.size())
    throw std::invalid_argument("recording shape mismatch");
  Recording out{r.sample_rate_hz, r.channels, {}, r.participant_id};
  out.data.reserve(r.data.size());
  for (const auto& row : r.data) out.data.push_back(filtfilt(f, row));
  return out;
}

// Exact sample spans per phase; samples outside every span are dropped.
inline std::array<Recording, 3> segment(const Recording& r, const PhaseMarkers& m) {
  validate_markers(m, r.n_samples());
  return {r.slice(m[Phase::PreB].start, m[Phase::PreB].end),
          r.slice(m[Phase::VRX].start, m[Phase::VRX].end),
          r.slice(m[Phase::PostB].start, m[Phase::PostB].end)};
}

// ---------------------------------------------------------------------------
// Spectra

struct Psd {
  std::vector<double> freqs_hz;
  std::vector<ChannelId> channels;
  std::vector<std::vector<double>> power;  // [channel][bin], uV^2/Hz
  std::size_t segment_length{0};           // samples per taper window
  std::size_t fft_length{0};
  double overlap{0.0};
  std::size_t n_segments{0};
  std::string taper{"hann"};

  double df() const { return freqs_hz.size() > 1 ? freqs_hz[1] - freqs_hz[0] : 0.0; }
};

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Periodic Hann taper.
inline std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(n));
  return w;
}

namespace detail {

// FFTW's planner is not re-entrant; execution on a plan's own buffers is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::span<double> input() { return {in_, n_}; }
  void execute() { fftw_execute(plan_); }
  double power(std::size_t k) const { return out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1]; }

 private:
  std::size_t n_;
  double* in_{nullptr};
  fftw_complex* out_{nullptr};
  fftw_plan plan_{nullptr};
};

// Adds the one-sided density periodogram of `x * window` (zero-padded to the
// FFT length) into `acc`.
inline void accumulate_periodogram(RealFft& fft, std::span<const double> x,
                                   const std::vector<double>& window, double scale,
                                   std::vector<double>& acc) {
  auto in = fft.input();
  std::fill(in.begin(), in.end(), 0.0);
  for (std::size_t i = 0; i < window.size(); ++i) in[i] = x[i] * window[i];
  fft.execute();
  const std::size_t nfft = in.size();
  const std::size_t half = nfft / 2;
  for (std::size_t k = 0; k <= half; ++k) {
    const double factor = (k == 0 || k == half) ? 1.0 : 2.0;
    acc[k] += factor * scale * fft.power(k);
  }
}

inline Psd empty_psd(const Recording& r, std::size_t seg_len, std::size_t nfft, double overlap) {
  Psd p;
  p.segment_length = seg_len;
  p.fft_length = nfft;
  p.overlap = overlap;
  p.channels = r.channels;
  p.freqs_hz.resize(nfft / 2 + 1);
  for (std::size_t k = 0; k < p.freqs_hz.size(); ++k)
    p.freqs_hz[k] = static_cast<double>(k) * r.sample_rate_hz / static_cast<double>(nfft);
  p.power.assign(r.n_channels(), std::vector<double>(p.freqs_hz.size(), 0.0));
  return p;
}

}  // namespace detail

// Welch estimate: Hann windows of `segment_len` samples with fractional
// overlap, density-normalised so sum(PSD) * df equals the mean square.
inline Psd welch_psd(const Recording& seg, std::size_t segment_len, double overlap) {
  if (!is_power_of_two(segment_len))
    throw std::invalid_argument("segment length must be a power of two");
  if (!(overlap >= 0.0 && overlap < 1.0))
    throw std::invalid_argument("overlap must be in [0, 1)");
  const std::size_t n = seg.n_samples();
  if (segment_len > n)
    throw std::invalid_argument("segment longer than data (" + std::to_string(segment_len) +
                                " > " + std::to_string(n) + ")");

  const auto noverlap = static_cast<std::size_t>(std::floor(overlap * static_cast<double>(segment_len)));
  const std::size_t step = segment_len - noverlap;
  const std::size_t count = (n - noverlap) / step;

  const auto window = hann_window(segment_len);
  double wss = 0.0;
  for (double w : window) wss += w * w;
  const double scale = 1.0 / (seg.sample_rate_hz * wss);

  Psd psd = detail::empty_psd(seg, segment_len, segment_len, overlap);
  psd.n_segments = count;
  detail::RealFft fft(segment_len);
  for (std::size_t c = 0; c < seg.n_channels(); ++c) {
    auto& acc = psd.power[c];
    for (std::size_t s = 0; s < count; ++s)
      detail::accumulate_periodogram(fft, std::span(seg.data[c]).subspan(s * step, segment_len),
                                     window, scale, acc);
    for (double& v : acc) v /= static_cast<double>(count);
  }
  return psd;
}

// One Hann window over the whole span, zero-padded to the next power of two
// (or to `fft_length` when larger).
inline Psd single_window_psd(const Recording& seg, std::size_t fft_length = 0) {
  const std::size_t n = seg.n_samples();
  if (n == 0) throw std::invalid_argument("empty segment");
  const std::size_t nfft = std::max(next_power_of_two(n), fft_length);
  if (!is_power_of_two(nfft)) throw std::invalid_argument("FFT length must be a power of two");

  const auto window = hann_window(n);
  double wss = 0.0;
  for (double w : window) wss += w * w;
  const double scale = 1.0 / (seg.sample_rate_hz * wss);

  Psd psd = detail::empty_psd(seg, n, nfft, 0.0);
  psd.n_segments = 1;
  detail::RealFft fft(nfft);
  for (std::size_t c = 0; c < seg.n_channels(); ++c)
    detail::accumulate_periodogram(fft, seg.data[c], window, scale, psd.power[c]);
  return psd;
}

// Mean PSD over the bins whose centre falls in each band.
inline BandPowers band_power(const Psd& p, const BandSet& bands) {
  BandPowers out;
  out.channels = p.channels;
  for (const auto& b : bands.bands()) out.bands.push_back(b.name);
  out.values.assign(p.power.size() * bands.size(), 0.0);

  std::vector<std::vector<std::size_t>> bins(bands.size());
  for (std::size_t b = 0; b < bands.size(); ++b) {
    for (std::size_t k = 0; k < p.freqs_hz.size(); ++k)
      if (bands.contains(b, p.freqs_hz[k])) bins[b].push_back(k);
    if (bins[b].empty())
      throw std::invalid_argument("empty band '" + bands[b].name +
                                  "': frequency resolution too coarse");
  }
  for (std::size_t c = 0; c < p.power.size(); ++c) {
    for (std::size_t b = 0; b < bands.size(); ++b) {
      double sum = 0.0;
      for (std::size_t k : bins[b]) sum += p.power[c][k];
      out.values[c * bands.size() + b] = sum / static_cast<double>(bins[b].size());
    }
  }
  return out;
}

}  // namespace eegasym
