#pragma once
// Order-statistic quantiles, bootstrap/jackknife resampling, the two-sample
// Kolmogorov–Smirnov test, and least-squares fits used by the experiment
// harness.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "rng.hpp"

namespace lgd {

inline double mean(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("mean: empty");
  double s = 0;
  for (double x : v) s += x;
  return s / v.size();
}

// Unbiased sample variance.  A constant sample returns exactly zero (the
// accumulated mean can round, leaving ~ulp^2 dust otherwise).
inline double variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  if (*mn == *mx) return 0.0;
  double m = mean(v), s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / (v.size() - 1);
}

// Lower quantile convention: value at 1-based index ceil(p*n) of the sorted
// sample.  p = 1/n gives the minimum.
inline double quantile_lower(std::vector<double> v, double p) {
  if (v.empty()) throw std::invalid_argument("quantile_lower: empty");
  if (p <= 0.0 || p > 1.0) throw std::invalid_argument("quantile_lower: p outside (0,1]");
  std::sort(v.begin(), v.end());
  // Guard against ceil(0.5*200) -> 101 from floating error.
  size_t idx = (size_t)std::ceil(p * v.size() - 1e-9);
  if (idx < 1) idx = 1;
  if (idx > v.size()) idx = v.size();
  return v[idx - 1];
}

struct CI {
  double lo = 0, hi = 0;
  double width() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

// Percentile bootstrap over an arbitrary statistic; B resamples (default 1000
// per the experiment conventions), symmetric level.
inline CI bootstrap_ci(const std::vector<double>& data,
                       const std::function<double(const std::vector<double>&)>& stat,
                       std::uint64_t seed, int B = 1000, double level = 0.95) {
  if (data.empty()) throw std::invalid_argument("bootstrap_ci: empty");
  GaussianStream rng(derive_seed(seed, 0xb001ULL));
  std::vector<double> reps(B);
  std::vector<double> resample(data.size());
  for (int b = 0; b < B; ++b) {
    for (size_t i = 0; i < data.size(); ++i) resample[i] = data[rng.index(data.size())];
    reps[b] = stat(resample);
  }
  double a = (1.0 - level) / 2.0;
  return {quantile_lower(reps, a), quantile_lower(reps, 1.0 - a)};
}

// Jackknife standard error of an arbitrary statistic (leave-one-out).
inline double jackknife_se(const std::vector<double>& data,
                           const std::function<double(const std::vector<double>&)>& stat) {
  size_t n = data.size();
  if (n < 2) return 0.0;
  std::vector<double> loo;
  loo.reserve(n - 1);
  std::vector<double> reps(n);
  for (size_t i = 0; i < n; ++i) {
    loo.clear();
    for (size_t j = 0; j < n; ++j)
      if (j != i) loo.push_back(data[j]);
    reps[i] = stat(loo);
  }
  double m = mean(reps), s = 0;
  for (double r : reps) s += (r - m) * (r - m);
  return std::sqrt(s * (n - 1) / n);
}

// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} e^{-2k^2 l^2}.
inline double kolmogorov_q(double lambda) {
  if (lambda < 1e-9) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0;  // sup |F1 - F2|
  double p_value = 1;
};

// Two-sample KS test with the Stephens small-sample correction.  With
// integer-valued (tied) data the continuous p-value is conservative, which
// only makes equality acceptance harder to fake.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0;
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs((double)i / a.size() - (double)j / b.size()));
  }
  double ne = (double)a.size() * b.size() / (a.size() + b.size());
  double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  return {d, kolmogorov_q(lambda)};
}

struct LinearFit {
  double slope = 0, intercept = 0;
  double slope_se = 0;
  CI slope_ci;  // normal-approximation 95%
  int n = 0;
};

inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_fit: bad input");
  int n = (int)x.size();
  double mx = mean(x), my = mean(y), sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("linear_fit: degenerate x");
  LinearFit f;
  f.n = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0;
  for (int i = 0; i < n; ++i) {
    double r = y[i] - f.intercept - f.slope * x[i];
    rss += r * r;
  }
  f.slope_se = n > 2 ? std::sqrt(rss / (n - 2) / sxx) : 0.0;
  f.slope_ci = {f.slope - 1.96 * f.slope_se, f.slope + 1.96 * f.slope_se};
  return f;
}

}  // namespace lgd
