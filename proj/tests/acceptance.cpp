// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below.
// Exit status is non-zero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "oracles.hpp"
#include "support.hpp"

using namespace eegasym;

namespace {

constexpr double kPhiLow = 0.655, kPhiHigh = 0.660;
constexpr double kCooksTol = 1e-10;         // relative to max(1, D)
constexpr double kExactTol = 1e-12;
constexpr double kParsevalTol = 0.05;       // of 50 uV^2
constexpr double kAlphaShare = 0.99;
constexpr int kCohortSeeds = 100;
constexpr int kPlantedHits = 95;
constexpr double kNullLow = 0.01, kNullHigh = 0.10;
constexpr int kSignHits = 99, kRegressionHits = 95;
constexpr int kPartitions = 100;

struct Outcome {
  bool pass{true};
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

Outcome chi2_anchors() {
  struct Row { const char* cell; double chi2; const char* p; };
  const Row rows[] = {
      {"Frontal Delta", 0.542, ".762"},  {"Central Delta", 8.320, ".016"}, {"Parietal Delta", 4.644, ".098"},
      {"Frontal Theta", 9.512, ".009"},  {"Central Theta", 9.348, ".009"}, {"Parietal Theta", 2.625, ".269"},
      {"Frontal Alpha", 17.175, "<.001"}, {"Central Alpha", 5.948, ".051"}, {"Parietal Alpha", 3.363, ".186"},
      {"Frontal Beta", 1.222, ".543"},   {"Central Beta", 0.805, ".669"},  {"Parietal Beta", 1.715, ".424"},
      {"Frontal Gamma", 0.553, ".758"},  {"Central Gamma", 1.136, ".567"}, {"Parietal Gamma", 0.285, ".867"}};
  Outcome o;
  int ok = 0;
  for (const auto& r : rows) {
    const auto got = format_p(chi2_sf(r.chi2, 2));
    if (got == r.p) {
      ++ok;
    } else {
      o.pass = false;
      o.detail += std::string(" mismatch ") + r.cell + " " + std::to_string(r.chi2) + ": expected " + r.p +
                  " got " + got + ";";
    }
  }
  o.detail = std::to_string(ok) + "/15 match;" + o.detail;
  return o;
}

Outcome t_anchors() {
  struct Row { double t; int df; const char* p; };
  const Row rows[] = {{-2.619, 36, ".013"}, {-0.242, 37, ".810"}, {1.152, 35, ".257"}};
  Outcome o;
  for (const auto& r : rows) {
    const auto got = format_p(std::min(1.0, 2.0 * student_t_sf(std::abs(r.t), r.df)));
    o.detail += got + " ";
    if (got != r.p) o.pass = false;
  }
  return o;
}

Outcome phi_anchor() {
  const double phi = phi_effect_size(17.175, 40);
  char buf[64];
  std::snprintf(buf, sizeof buf, "phi=%.6f", phi);
  return {phi >= kPhiLow && phi <= kPhiHigh, buf};
}

Outcome cooks() {
  Outcome o{cooks_cutoff(40) == 0.1, ""};
  std::mt19937_64 rng(4040);
  std::vector<double> x, y;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    oracle::cooks_instance(rng, trial, x, y);
    const auto d = cooks_distances(x, y);
    const auto ref = oracle::loo_cooks(x, y);
    for (std::size_t i = 0; i < d.size(); ++i)
      worst = std::max(worst, std::abs(d[i] - ref[i]) / std::max(1.0, ref[i]));
  }
  if (worst > kCooksTol) o.pass = false;
  char buf[96];
  std::snprintf(buf, sizeof buf, "cutoff(40)=%g, 1000 instances, max rel err %.2e", cooks_cutoff(40), worst);
  o.detail = buf;
  return o;
}

Outcome teq_bounds() {
  const auto rev = default_reverse_items();
  TeqResponse hi{"max", {}}, lo{"min", {}}, mid{"mid", std::vector<std::string>(16, "sometimes")};
  for (int i = 1; i <= 16; ++i) {
    const bool r = std::find(rev.begin(), rev.end(), i) != rev.end();
    hi.items.emplace_back(r ? "never" : "always");
    lo.items.emplace_back(r ? "always" : "never");
  }
  const int max = score(hi, rev).total, min = score(lo, rev).total;
  bool mid_ok = score(mid, rev).total == 48;
  // Any eight-item reverse set leaves the midpoint at 48.
  std::mt19937_64 rng(96);
  std::vector<int> items(16);
  std::iota(items.begin(), items.end(), 1);
  for (int k = 0; k < 200; ++k) {
    std::shuffle(items.begin(), items.end(), rng);
    ReverseSet set(items.begin(), items.begin() + 8);
    std::sort(set.begin(), set.end());
    mid_ok = mid_ok && score(mid, set).total == 48;
  }
  return {min == 0 && max == 96 && mid_ok,
          "min/max " + std::to_string(min) + "/" + std::to_string(max) + (mid_ok ? ", midpoint 48" : ", midpoint off")};
}

Outcome dsp_oracle() {
  SignalSpec spec;
  spec.channels = {{"F3", {{10.0, 10.0, 0.0}}, 0.0}};
  spec.duration_s = 60.0;
  const auto psd = welch_psd(generate_recording(spec).recording, 512, 0.5);
  double total = 0.0, alpha = 0.0;
  for (std::size_t k = 0; k < psd.freqs_hz.size(); ++k) {
    total += psd.power[0][k] * psd.df();
    if (BandSet::standard().contains(BandSet::standard().index_of("Alpha"), psd.freqs_hz[k]))
      alpha += psd.power[0][k] * psd.df();
  }
  Recording zero{256.0, {"F3"}, {std::vector<double>(15360, 0.0)}, "zero"};
  const auto z = welch_psd(zero, 512, 0.5);
  bool all_zero = true;
  for (double v : z.power[0]) all_zero = all_zero && v == 0.0;
  char buf[96];
  std::snprintf(buf, sizeof buf, "total %.4f uV^2, alpha share %.6f, zero->%s", total, alpha / total,
                all_zero ? "zero" : "non-zero");
  return {std::abs(total - 50.0) <= kParsevalTol * 50.0 && alpha / total >= kAlphaShare && all_zero, buf};
}

Outcome rank_exactness() {
  const std::vector<double> d{1, 2, 3}, z{0, 0, 0}, a{1, 2}, b{3, 4};
  const auto sr = wilcoxon_signed_rank(d, z);
  const auto rs = wilcoxon_rank_sum(a, b);
  bool ok = sr.exact && sr.p == 0.25 && rs.exact && std::abs(rs.p - 1.0 / 3.0) < kExactTol;
  std::mt19937_64 rng(700);
  std::uniform_int_distribution<std::size_t> size(1, 10);
  int bad = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = std::max<std::size_t>(2, size(rng));
    const auto x = oracle::tied_sample(rng, n), y = oracle::tied_sample(rng, n);
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = x[i] - y[i];
    if (std::abs(wilcoxon_signed_rank(x, y).p - oracle::enumerate_signed_rank(diff)) > kExactTol) ++bad;
  }
  for (int trial = 0; trial < 500; ++trial) {
    const auto x = oracle::tied_sample(rng, size(rng)), y = oracle::tied_sample(rng, size(rng));
    if (std::abs(wilcoxon_rank_sum(x, y).p - oracle::enumerate_rank_sum(x, y)) > kExactTol) ++bad;
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "{1,2,3} p=%.6g, {1,2}v{3,4} p=%.6g, %d/1000 enumeration mismatches", sr.p, rs.p,
                bad);
  return {ok && bad == 0, buf};
}

Outcome planted_cohorts() {
  int hits = 0, null_sig = 0;
  for (int s = 1; s <= kCohortSeeds; ++s) {
    CohortSpec c;
    c.seed = static_cast<std::uint64_t>(s);
    const auto o = testing::frontal_alpha_outcome(c);
    if (o.kw_p < 0.05 && o.mean[0] > 0.0 && o.mean[1] < 0.0) ++hits;
    CohortSpec n = c.null_effects();
    n.seed = 100000 + static_cast<std::uint64_t>(s);
    if (testing::frontal_alpha_outcome(n).kw_p < 0.05) ++null_sig;
  }
  const double null_rate = static_cast<double>(null_sig) / kCohortSeeds;
  char buf[128];
  std::snprintf(buf, sizeof buf, "planted %d/%d significant with PreB>0>VRX, null %d/%d significant", hits,
                kCohortSeeds, null_sig, kCohortSeeds);
  return {hits >= kPlantedHits && null_rate >= kNullLow && null_rate <= kNullHigh, buf};
}

Outcome regression_recovery() {
  int sign = 0, sig = 0;
  for (int s = 1; s <= kCohortSeeds; ++s) {
    CohortSpec c;
    c.seed = 200000 + static_cast<std::uint64_t>(s);
    const auto r = testing::frontal_alpha_outcome(c).pre_regression;
    if (r.slope < 0.0) ++sign;
    if (r.slope < 0.0 && r.p < 0.05) ++sig;
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "negative slope %d/%d, p<.05 %d/%d", sign, kCohortSeeds, sig, kCohortSeeds);
  return {sign >= kSignHits && sig >= kRegressionHits, buf};
}

Outcome stream_equivalence() {
  CohortSpec c;
  c.lead_in_s = 0.0;
  c.phase_duration_s = {20.0, 20.0, 20.0};
  const auto rec = synthesize_participant(c, 7).recording;
  const StreamConfig cfg;
  const std::size_t n = rec.n_samples(), w = cfg.window_samples();

  std::map<std::size_t, std::vector<double>> batch;
  for (std::size_t end = w; end <= n; end += cfg.hop_samples()) {
    const auto bp = band_power(single_window_psd(rec.slice(end - w, end), cfg.fft_length()), cfg.bands);
    std::vector<double> v;
    for (Region r : cfg.regions)
      for (std::size_t b = 0; b < cfg.bands.size(); ++b)
        v.push_back(bp.at(cfg.montage.pair(r).right, b) - bp.at(cfg.montage.pair(r).left, b));
    batch[end] = std::move(v);
  }

  std::mt19937_64 rng(1010);
  std::uniform_int_distribution<std::size_t> frame_len(1, 1000);
  int identical = 0;
  for (int trial = 0; trial < kPartitions; ++trial) {
    AsymmetryStream s(cfg);
    std::size_t emitted = 0;
    bool ok = true;
    for (std::size_t i = 0; i < n;) {
      const std::size_t k = std::min(n - i, frame_len(rng));
      std::vector<std::vector<double>> f;
      for (const auto& row : rec.data)
        f.emplace_back(row.begin() + static_cast<std::ptrdiff_t>(i), row.begin() + static_cast<std::ptrdiff_t>(i + k));
      for (const auto& e : s.push(f)) {
        ++emitted;
        const auto it = batch.find(e.end_sample);
        ok = ok && it != batch.end() && it->second == e.raw;
      }
      i += k;
    }
    if (ok && emitted == batch.size()) ++identical;
  }
  return {identical == kPartitions, std::to_string(identical) + "/" + std::to_string(kPartitions) +
                                        " partitions bitwise equal over " + std::to_string(batch.size()) +
                                        " windows"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "chi-square to p anchors", 1.0, chi2_anchors},
      {2, "Student t to p anchors", 1.0, t_anchors},
      {3, "phi effect size anchor", 1.0, phi_anchor},
      {4, "Cook's cutoff and leave-one-out oracle", 10.0, cooks},
      {5, "TEQ score bounds", 1.0, teq_bounds},
      {6, "Welch Parseval and band share", 5.0, dsp_oracle},
      {7, "exact rank tests vs enumeration", 30.0, rank_exactness},
      {8, "planted frontal alpha shift and null rate", 600.0, planted_cohorts},
      {9, "empathy regression recovery", 120.0, regression_recovery},
      {10, "stream vs batch bitwise", 60.0, stream_equivalence},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::printf("[%s] %2d %-42s %8.2fs (limit %gs)%s  %s\n", pass ? "PASS" : "FAIL", c.id, c.name, secs, c.budget_s,
                in_time ? "" : " over time", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed ? 1 : 0;
}
