#pragma once

// Rank tests (Kruskal-Wallis, Wilcoxon signed-rank and rank-sum), phi effect
// size, simple OLS with Cook's-distance exclusion, and the omnibus driver that
// produces the phase-comparison tables.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "eegasym/core.hpp"
#include "eegasym/distributions.hpp"

namespace eegasym {

// ---------------------------------------------------------------------------
// Ranking

struct Ranking {
  std::vector<double> ranks;      // mid-ranks, 1-based
  std::vector<std::size_t> ties;  // sizes of tie groups with more than one member

  double tie_sum() const {  // sum of t^3 - t
    double s = 0.0;
    for (auto t : ties) {
      const double d = static_cast<double>(t);
      s += d * d * d - d;
    }
    return s;
  }
};

inline Ranking midranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  Ranking r;
  r.ranks.assign(n, 0.0);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && x[order[j]] == x[order[i]]) ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) r.ranks[order[k]] = mid;
    if (j - i > 1) r.ties.push_back(j - i);
    i = j;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Kruskal-Wallis

struct KwResult {
  double h{0.0};
  int df{0};
  double p{1.0};
  std::vector<std::size_t> group_sizes;
};

inline KwResult kruskal_wallis(std::span<const std::vector<double>> groups) {
  if (groups.size() < 2) throw std::invalid_argument("kruskal_wallis needs at least 2 groups");
  std::vector<double> pooled;
  KwResult res;
  for (const auto& g : groups) {
    if (g.empty()) throw std::invalid_argument("kruskal_wallis: empty group");
    res.group_sizes.push_back(g.size());
    pooled.insert(pooled.end(), g.begin(), g.end());
  }
  const double n = static_cast<double>(pooled.size());
  if (pooled.size() < 3) throw std::invalid_argument("kruskal_wallis: N < 3");
  res.df = static_cast<int>(groups.size()) - 1;

  const Ranking rk = midranks(pooled);
  const double correction = 1.0 - rk.tie_sum() / (n * n * n - n);
  if (correction <= 0.0) {  // all values identical
    res.h = 0.0;
    res.p = 1.0;
    return res;
  }
  double sum = 0.0;
  std::size_t offset = 0;
  for (const auto& g : groups) {
    double rsum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) rsum += rk.ranks[offset + i];
    sum += rsum * rsum / static_cast<double>(g.size());
    offset += g.size();
  }
  const double h = 12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0);
  res.h = std::max(0.0, h / correction);
  res.p = chi2_sf(res.h, res.df);
  return res;
}

// ---------------------------------------------------------------------------
// Wilcoxon tests

enum class PairwiseMethod { SignedRank, RankSum };

inline std::string_view to_string(PairwiseMethod m) {
  return m == PairwiseMethod::SignedRank ? "signed_rank" : "rank_sum";
}

struct PairwiseResult {
  double statistic{0.0};  // min(W+, W-) or min(U_a, U_b)
  double p{1.0};
  PairwiseMethod method{PairwiseMethod::SignedRank};
  bool exact{false};
  bool degenerate{false};  // fewer than 2 non-zero differences
  std::size_t n_used{0};
};

inline constexpr std::size_t kSignedRankExactMax = 25;
inline constexpr std::size_t kRankSumExactMax = 20;

namespace detail {

// Two-sided p from an exact count distribution over integer statistic values
// (the statistic is doubled so mid-ranks stay integral).
inline double exact_two_sided(const std::vector<double>& counts, std::size_t observed) {
  double total = 0.0, lo = 0.0, hi = 0.0;
  for (std::size_t s = 0; s < counts.size(); ++s) {
    total += counts[s];
    if (s <= observed) lo += counts[s];
    if (s >= observed) hi += counts[s];
  }
  return std::min(1.0, 2.0 * std::min(lo, hi) / total);
}

inline std::size_t doubled(double rank) { return static_cast<std::size_t>(std::lround(2.0 * rank)); }

}  // namespace detail

inline PairwiseResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("signed-rank: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("signed-rank: need at least 2 pairs");

  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] - b[i] != 0.0) diffs.push_back(a[i] - b[i]);

  PairwiseResult res;
  res.method = PairwiseMethod::SignedRank;
  res.n_used = diffs.size();
  if (diffs.size() < 2) {
    res.degenerate = true;
    res.exact = true;
    if (diffs.empty()) return res;
  }

  std::vector<double> absd(diffs.size());
  for (std::size_t i = 0; i < diffs.size(); ++i) absd[i] = std::abs(diffs[i]);
  const Ranking rk = midranks(absd);
  double w_plus = 0.0, w_minus = 0.0;
  for (std::size_t i = 0; i < diffs.size(); ++i)
    (diffs[i] > 0 ? w_plus : w_minus) += rk.ranks[i];
  res.statistic = std::min(w_plus, w_minus);

  const double n = static_cast<double>(diffs.size());
  if (diffs.size() <= kSignedRankExactMax) {
    // counts[s] = number of sign assignments with doubled W+ == s
    std::size_t max_sum = 0;
    for (double r : rk.ranks) max_sum += detail::doubled(r);
    std::vector<double> counts(max_sum + 1, 0.0);
    counts[0] = 1.0;
    std::size_t reach = 0;
    for (double r : rk.ranks) {
      const std::size_t d = detail::doubled(r);
      for (std::size_t s = reach + 1; s-- > 0;) counts[s + d] += counts[s];
      reach += d;
    }
    res.p = detail::exact_two_sided(counts, detail::doubled(w_plus));
    res.exact = true;
    return res;
  }

  const double mean = n * (n + 1.0) / 4.0;
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - rk.tie_sum() / 48.0;
  if (var <= 0.0) return res;
  const double z = std::max(0.0, std::abs(w_plus - mean) - 0.5) / std::sqrt(var);
  res.p = std::min(1.0, 2.0 * normal_sf(z));
  return res;
}

inline PairwiseResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("rank-sum: empty input");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const Ranking rk = midranks(pooled);
  const std::size_t na = a.size(), nb = b.size();
  const double dna = static_cast<double>(na), dnb = static_cast<double>(nb);

  double ra = 0.0;
  for (std::size_t i = 0; i < na; ++i) ra += rk.ranks[i];
  const double ua = ra - dna * (dna + 1.0) / 2.0;

  PairwiseResult res;
  res.method = PairwiseMethod::RankSum;
  res.n_used = na + nb;
  res.statistic = std::min(ua, dna * dnb - ua);

  if (na + nb <= kRankSumExactMax) {
    // counts[k][s]: subsets of size k with doubled rank sum s
    std::size_t max_sum = 0;
    for (double r : rk.ranks) max_sum += detail::doubled(r);
    std::vector<std::vector<double>> counts(na + 1, std::vector<double>(max_sum + 1, 0.0));
    counts[0][0] = 1.0;
    for (double r : rk.ranks) {
      const std::size_t d = detail::doubled(r);
      for (std::size_t k = na; k >= 1; --k)
        for (std::size_t s = max_sum + 1; s-- > d;) counts[k][s] += counts[k - 1][s - d];
    }
    res.p = detail::exact_two_sided(counts[na], detail::doubled(ra));
    res.exact = true;
    return res;
  }

  const double nn = dna + dnb;
  const double mean = dna * dnb / 2.0;
  const double var = dna * dnb / 12.0 * ((nn + 1.0) - rk.tie_sum() / (nn * (nn - 1.0)));
  if (var <= 0.0) return res;
  const double z = std::max(0.0, std::abs(ua - mean) - 0.5) / std::sqrt(var);
  res.p = std::min(1.0, 2.0 * normal_sf(z));
  return res;
}

// ---------------------------------------------------------------------------
// Effect size

inline double phi_effect_size(double chi2, std::size_t n) {
  if (n == 0) throw std::invalid_argument("phi: n must be >= 1");
  if (chi2 < 0.0) throw std::invalid_argument("phi: chi2 must be >= 0");
  return std::sqrt(chi2 / static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// Regression

struct RegressionResult {
  double intercept{0.0};
  double slope{0.0};
  double standardized_slope{0.0};
  double t{0.0};
  int df{0};
  double p{1.0};
  double r_squared{0.0};
  std::size_t n_used{0};
  bool perfect_fit{false};  // zero residual variance: t is infinite, p == 0
  std::vector<std::size_t> excluded_indices;
  std::vector<double> cooks_distances;  // per original point; empty from ols_regression
};

namespace detail {

struct LineFit {
  double intercept, slope, mean_x, sxx, syy, sse;
  std::size_t n;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw std::invalid_argument("regression: x has zero variance");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (intercept + slope * x[i]);
    sse += e * e;
  }
  return {intercept, slope, mx, sxx, syy, sse, n};
}

}  // namespace detail

inline RegressionResult ols_regression(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("regression: length mismatch");
  if (x.size() < 3) throw std::invalid_argument("regression: n < 3");
  const auto fit = detail::fit_line(x, y);

  RegressionResult r;
  r.intercept = fit.intercept;
  r.slope = fit.slope;
  r.n_used = x.size();
  r.df = static_cast<int>(x.size()) - 2;
  r.standardized_slope = fit.syy > 0.0 ? fit.slope * std::sqrt(fit.sxx / fit.syy) : 0.0;
  r.r_squared = fit.syy > 0.0 ? 1.0 - fit.sse / fit.syy : 1.0;

  // Residuals below rounding noise of y are treated as an exact fit.
  const double s2 = fit.sse / r.df;
  if (fit.sse <= 1e-24 * std::max(fit.syy, 1e-300) || s2 == 0.0) {
    r.perfect_fit = true;
    r.t = fit.slope == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), fit.slope);
    r.p = fit.slope == 0.0 ? 1.0 : 0.0;
    r.r_squared = 1.0;
    return r;
  }
  r.t = fit.slope / std::sqrt(s2 / fit.sxx);
  r.p = student_t_two_tailed(r.t, r.df);
  return r;
}

// D_i = e_i^2 / (2 s^2) * h_ii / (1 - h_ii)^2 on the full-data fit.
inline std::vector<double> cooks_distances(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("cooks: length mismatch");
  if (x.size() < 3) throw std::invalid_argument("cooks: n < 3");
  const auto fit = detail::fit_line(x, y);
  const double n = static_cast<double>(x.size());
  const double s2 = fit.sse / (n - 2.0);
  std::vector<double> d(x.size(), 0.0);
  if (fit.sse <= 1e-24 * std::max(fit.syy, 1e-300)) return d;  // exact line
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - fit.mean_x;
    const double h = 1.0 / n + dx * dx / fit.sxx;
    const double e = y[i] - (fit.intercept + fit.slope * x[i]);
    if (s2 == 0.0 || e == 0.0) continue;
    d[i] = e * e / (2.0 * s2) * h / ((1.0 - h) * (1.0 - h));
  }
  return d;
}

inline double cooks_cutoff(std::size_t n) { return 4.0 / static_cast<double>(n); }

struct CooksExclusion {
  std::vector<std::size_t> kept;
  RegressionResult fit;  // on the kept points, with full-data distances attached
};

// One pass: drop points with D_i > 4/n, refit on the rest.
inline CooksExclusion cooks_exclude(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("cooks: length mismatch");
  if (x.size() < 4) throw std::invalid_argument("cooks: n < 4");
  const auto d = cooks_distances(x, y);
  const double cutoff = cooks_cutoff(x.size());
  CooksExclusion out;
  std::vector<std::size_t> excluded;
  std::vector<double> kx, ky;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (d[i] > cutoff) {
      excluded.push_back(i);
    } else {
      out.kept.push_back(i);
      kx.push_back(x[i]);
      ky.push_back(y[i]);
    }
  }
  if (out.kept.size() < 3)
    throw std::invalid_argument("cooks: fewer than 3 points survive exclusion");
  out.fit = ols_regression(kx, ky);
  out.fit.excluded_indices = std::move(excluded);
  out.fit.cooks_distances = d;
  return out;
}

// ---------------------------------------------------------------------------
// Reporting

// Three decimals without the leading zero; below .001 as "<.001".
inline std::string format_p(double p) {
  if (p < 0.001) return "<.001";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", p);
  std::string s(buf);
  if (s.rfind("0.", 0) == 0) s.erase(0, 1);
  return s;
}

inline double round_to(double v, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(v * scale) / scale;
}

// ---------------------------------------------------------------------------
// Omnibus analysis over a feature matrix

enum class PhiDenominator { Participants, Observations };

struct OmnibusOptions {
  double alpha{0.05};
  PairwiseMethod headline{PairwiseMethod::SignedRank};
  PhiDenominator phi_n{PhiDenominator::Participants};
};

struct OmnibusRow {
  Region region{};
  std::string band;
  KwResult kw;
  double phi{0.0};
  std::size_t phi_n{0};
};

struct PairwiseRow {
  Region region{};
  std::string band;
  Phase first{};
  Phase second{};
  PairwiseResult signed_rank;
  PairwiseResult rank_sum;
  PairwiseMethod headline{PairwiseMethod::SignedRank};

  double headline_p() const {
    return headline == PairwiseMethod::SignedRank ? signed_rank.p : rank_sum.p;
  }
};

struct RegressionRow {
  std::string label;  // "PreB", "VRX", "VRX-PreB"
  RegressionResult result;
  std::vector<std::string> excluded_participants;
};

struct AnalysisTables {
  std::vector<OmnibusRow> omnibus;
  std::vector<PairwiseRow> pairwise;
  std::vector<RegressionRow> regression;
};

inline constexpr std::array<std::pair<Phase, Phase>, 3> kPhasePairs{
    {{Phase::PreB, Phase::VRX}, {Phase::VRX, Phase::PostB}, {Phase::PreB, Phase::PostB}}};

// One Kruskal-Wallis test per region x band over the three phase groups;
// pairwise tests only where the omnibus p is below alpha.
inline AnalysisTables omnibus_analysis(const FeatureMatrix& fm, const OmnibusOptions& opt = {}) {
  if (fm.rows.empty()) throw std::invalid_argument("omnibus: feature matrix has no participants");
  AnalysisTables out;
  const std::size_t n = fm.n_participants();
  for (Region r : kRegions) {
    for (std::size_t b = 0; b < fm.bands.size(); ++b) {
      std::vector<std::vector<double>> groups;
      for (Phase p : kPhases) groups.push_back(fm.column(p, r, b));
      OmnibusRow row;
      row.region = r;
      row.band = fm.bands[b].name;
      row.kw = kruskal_wallis(groups);
      row.phi_n = opt.phi_n == PhiDenominator::Participants ? n : 3 * n;
      row.phi = phi_effect_size(row.kw.h, row.phi_n);
      out.omnibus.push_back(row);

      if (!(row.kw.p < opt.alpha)) continue;
      for (const auto& [first, second] : kPhasePairs) {
        const auto& ga = groups[index_of(first)];
        const auto& gb = groups[index_of(second)];
        PairwiseRow pr;
        pr.region = r;
        pr.band = row.band;
        pr.first = first;
        pr.second = second;
        pr.headline = opt.headline;
        pr.signed_rank = n >= 2 ? wilcoxon_signed_rank(ga, gb) : PairwiseResult{};
        pr.rank_sum = wilcoxon_rank_sum(ga, gb);
        out.pairwise.push_back(pr);
      }
    }
  }
  return out;
}

}  // namespace eegasym
