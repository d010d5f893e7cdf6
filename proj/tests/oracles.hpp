#pragma once

// Brute-force reference implementations shared by the unit tests and the
// acceptance binary. Deliberately naive: enumeration and explicit refits.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace eegasym::oracle {

inline std::vector<double> naive_midranks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double below = 0, equal = 0;
    for (double v : x) {
      if (v < x[i]) ++below;
      if (v == x[i]) ++equal;
    }
    r[i] = below + (equal + 1.0) / 2.0;
  }
  return r;
}

inline double two_sided(const std::vector<double>& null_stats, double observed) {
  double lo = 0, hi = 0;
  for (double s : null_stats) {
    if (s <= observed + 1e-9) ++lo;
    if (s >= observed - 1e-9) ++hi;
  }
  return std::min(1.0, 2.0 * std::min(lo, hi) / static_cast<double>(null_stats.size()));
}

// Every one of the 2^n sign patterns over the mid-ranks of |d|.
inline double enumerate_signed_rank(const std::vector<double>& d) {
  std::vector<double> nz;
  for (double v : d)
    if (v != 0.0) nz.push_back(v);
  if (nz.empty()) return 1.0;
  std::vector<double> absd;
  for (double v : nz) absd.push_back(std::abs(v));
  const auto r = naive_midranks(absd);
  double observed = 0;
  for (std::size_t i = 0; i < nz.size(); ++i)
    if (nz[i] > 0) observed += r[i];
  std::vector<double> all;
  for (std::uint32_t mask = 0; mask < (1u << nz.size()); ++mask) {
    double w = 0;
    for (std::size_t i = 0; i < nz.size(); ++i)
      if (mask & (1u << i)) w += r[i];
    all.push_back(w);
  }
  return two_sided(all, observed);
}

// Every one of the C(na + nb, na) assignments of pooled mid-ranks to group a.
inline double enumerate_rank_sum(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto r = naive_midranks(pooled);
  double observed = 0;
  for (std::size_t i = 0; i < a.size(); ++i) observed += r[i];
  std::vector<double> all;
  const std::size_t n = pooled.size(), k = a.size();
  const std::uint32_t last = 1u << n;
  // Gosper's hack walks the k-subsets in increasing order.
  for (std::uint32_t mask = (1u << k) - 1; mask < last;) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) s += r[i];
    all.push_back(s);
    const std::uint32_t c = mask & (~mask + 1), rr = mask + c;
    mask = (((rr ^ mask) >> 2) / c) | rr;
  }
  return two_sided(all, observed);
}

inline std::vector<double> tied_sample(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> level(-6, 6);
  std::vector<double> x(n);
  for (double& v : x) v = 0.5 * level(rng);
  return x;
}

// Cook's distance by refitting without each point, in long double:
// D_i = sum_j (yhat_j - yhat_j(-i))^2 / (2 s^2).
inline std::vector<double> loo_cooks(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  auto fit = [&](std::size_t skip) {
    long double sx = 0, sy = 0, m = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != skip) sx += x[j], sy += y[j], ++m;
    const long double mx = sx / m, my = sy / m;
    long double sxx = 0, sxy = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != skip) sxx += (x[j] - mx) * (x[j] - mx), sxy += (x[j] - mx) * (y[j] - my);
    const long double slope = sxy / sxx;
    return std::pair<long double, long double>{my - slope * mx, slope};
  };
  const auto [a, b] = fit(n);
  long double sse = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const long double e = y[j] - a - b * x[j];
    sse += e * e;
  }
  const long double s2 = sse / static_cast<long double>(n - 2);
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [ai, bi] = fit(i);
    long double shift = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const long double delta = (a + b * x[j]) - (ai + bi * x[j]);
      shift += delta * delta;
    }
    d[i] = static_cast<double>(shift / (2.0L * s2));
  }
  return d;
}

// Regression instance with n in [4, 50]; every seventh one carries an outlier.
inline void cooks_instance(std::mt19937_64& rng, int trial, std::vector<double>& x, std::vector<double>& y) {
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<std::size_t> size(4, 50);
  const std::size_t n = size(rng);
  x.assign(n, 0.0);
  y.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = normal(rng);
    y[i] = 0.7 * x[i] + normal(rng) * (trial % 2 ? 0.2 : 3.0);
  }
  if (trial % 7 == 0) y[static_cast<std::size_t>(trial) % n] += 8.0;
}

}  // namespace eegasym::oracle
