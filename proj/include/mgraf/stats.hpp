#pragma once

// Small statistics toolbox: moments, quantiles, Student-t tail areas via the
// regularized incomplete beta function, Welch's t-test, Benjamini-Hochberg
// step-up, and log-log slope fitting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "mgraf/types.hpp"

namespace mgraf {

inline double mean_of(const std::vector<double>& x) {
  require(!x.empty(), "mean_of: empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// Sample standard deviation (n-1 denominator).
inline double sd_of(const std::vector<double>& x) {
  require(x.size() >= 2, "sd_of: need at least two values");
  const double m = mean_of(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

// Linear-interpolation quantile on a copy of the data (R type-7).
inline double quantile_of(std::vector<double> x, double q) {
  require(!x.empty(), "quantile_of: empty sample");
  require(q >= 0.0 && q <= 1.0, "quantile_of: q outside [0,1]");
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

inline double median_of(const std::vector<double>& x) { return quantile_of(x, 0.5); }

namespace detail {

// Continued fraction for the incomplete beta function (Lentz's method).
inline double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double ibeta_reg(double a, double b, double x) {
  require(a > 0.0 && b > 0.0, "ibeta_reg: a,b must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * detail::beta_cf(a, b, x) / a;
  }
  return 1.0 - std::exp(std::lgamma(a + b) - std::lgamma(b) - std::lgamma(a) +
                        b * std::log1p(-x) + a * std::log(x)) *
                   detail::beta_cf(b, a, 1.0 - x) / b;
}

// Two-sided p-value for a t statistic: P(|T_df| >= |t|).
inline double t_two_sided_pvalue(double t, double df) {
  require(df > 0.0, "t_two_sided_pvalue: df must be positive");
  if (!std::isfinite(t)) return 0.0;
  const double x = df / (df + t * t);
  return ibeta_reg(0.5 * df, 0.5, x);
}

inline double t_cdf(double t, double df) {
  const double p2 = t_two_sided_pvalue(t, df);
  return t >= 0.0 ? 1.0 - 0.5 * p2 : 0.5 * p2;
}

// Upper quantile t_{p,df} with P(T <= q) = p, by bisection.
inline double t_quantile(double p, double df) {
  require(p > 0.0 && p < 1.0, "t_quantile: p outside (0,1)");
  double lo = -1e3, hi = 1e3;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (t_cdf(mid, df) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

// Welch's two-sample t-test (unequal variances), two-sided. When both sample
// variances are zero the statistic is undefined; by convention p = 1.
inline WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() >= 2 && b.size() >= 2, "welch_t_test: each group needs >= 2 values");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = mean_of(a), mb = mean_of(b);
  const double va = sd_of(a) * sd_of(a), vb = sd_of(b) * sd_of(b);
  const double se2 = va / na + vb / nb;
  WelchResult r;
  if (se2 <= 0.0) {
    r.t = 0.0;
    r.df = 0.0;
    r.p = 1.0;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(se2);
  r.df = se2 * se2 / (va * va / (na * na * (na - 1.0)) + vb * vb / (nb * nb * (nb - 1.0)));
  r.p = t_two_sided_pvalue(r.t, r.df);
  return r;
}

// Benjamini-Hochberg step-up at level q; returns the rejection mask.
inline std::vector<std::uint8_t> bh_reject(const std::vector<double>& pvals, double q) {
  require(q > 0.0 && q < 1.0, "bh_reject: q outside (0,1)");
  const std::size_t m = pvals.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return pvals[i] < pvals[j]; });
  std::size_t cutoff = 0;  // number of rejections
  for (std::size_t r = m; r >= 1; --r) {
    if (pvals[order[r - 1]] <= q * static_cast<double>(r) / static_cast<double>(m)) {
      cutoff = r;
      break;
    }
  }
  std::vector<std::uint8_t> reject(m, 0);
  for (std::size_t r = 0; r < cutoff; ++r) reject[order[r]] = 1;
  return reject;
}

// Least-squares slope of log(y) on log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "loglog_slope: need >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0 && y[i] > 0, "loglog_slope: values must be positive");
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace mgraf
