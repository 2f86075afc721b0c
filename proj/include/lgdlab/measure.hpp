#pragma once
// gamma-LQG measure approximation on the inner grid: per-cell masses
//     m(c) = eps^{gamma^2/2} * exp(gamma * h_eps(center(c))) * cell_area
// with h_eps the circle average of the field at radius eps.  Mass queries for
// Euclidean balls use the open-ball-of-cell-centers rule and accumulate in
// row-major order, so they agree bit-for-bit with a direct double loop over
// cells; box queries (half-open, center rule) go through per-row prefix sums.

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "field.hpp"
#include "geometry.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace lgd {

struct MeasureGrid {
  GridSpec spec;
  double gamma = 0.0;
  double epsilon = 0.0;
  std::uint64_t field_seed = 0;
  std::vector<double> cell_mass;   // inner_w × inner_h, row-major
  std::vector<double> row_prefix;  // (inner_w+1) entries per row
  double total = 0.0;              // row-major sum of cell_mass

  double mass_at(int i, int j) const { return cell_mass[(size_t)j * spec.inner_w + i]; }
  double prefix(int j, int i) const { return row_prefix[(size_t)j * (spec.inner_w + 1) + i]; }
  Point cell_center(int i, int j) const {
    return {(i + 0.5) * spec.cell, (j + 0.5) * spec.cell};
  }
  double total_mass() const { return total; }
};

// eps must be cell_size * 2^j for integer j >= 0.
inline bool dyadic_epsilon(double eps, double cell) {
  if (!(eps > 0)) return false;
  double ratio = eps / cell;
  double j = std::round(std::log2(ratio));
  if (j < 0) return false;
  return std::abs(ratio - std::exp2(j)) <= 1e-12 * ratio;
}

// Largest circle radius around an inner cell center that circle_average can
// integrate (its sample points must stay a cell inside the padded box).
inline double max_epsilon(const GridSpec& spec) {
  Rect safe = spec.padded_box().grown(-spec.cell);
  double m = std::min(std::min(0.5 * spec.cell - safe.x0, safe.x1 - (spec.inner_w - 0.5) * spec.cell),
                      std::min(0.5 * spec.cell - safe.y0, safe.y1 - (spec.inner_h - 0.5) * spec.cell));
  return m;
}

inline MeasureGrid cell_measures(const FieldSample& field, double gamma, double epsilon) {
  const GridSpec& spec = field.spec;
  if (!(gamma > 0.0) || !(gamma < 2.0))
    throw std::invalid_argument("cell_measures: gamma must lie in (0, 2)");
  if (!dyadic_epsilon(epsilon, spec.cell))
    throw std::invalid_argument("cell_measures: epsilon must be a power-of-two multiple of the cell size");
  if (epsilon > max_epsilon(spec))
    throw std::invalid_argument("cell_measures: epsilon circle leaves the padded domain");

  MeasureGrid m;
  m.spec = spec;
  m.gamma = gamma;
  m.epsilon = epsilon;
  m.field_seed = field.seed;
  int W = spec.inner_w, H = spec.inner_h;
  m.cell_mass.resize((size_t)W * H);
  double area = spec.cell * spec.cell;
  double pre = std::pow(epsilon, 0.5 * gamma * gamma);
  for (int j = 0; j < H; ++j)
    for (int i = 0; i < W; ++i) {
      double h = circle_average(field, m.cell_center(i, j), epsilon);
      double v = pre * std::exp(gamma * h) * area;
      if (!(v > 0.0) || !std::isfinite(v))
        throw std::runtime_error("cell_measures: non-finite or vanishing cell mass");
      m.cell_mass[(size_t)j * W + i] = v;
    }
  m.row_prefix.assign((size_t)(W + 1) * H, 0.0);
  for (int j = 0; j < H; ++j)
    for (int i = 0; i < W; ++i)
      m.row_prefix[(size_t)j * (W + 1) + i + 1] =
          m.row_prefix[(size_t)j * (W + 1) + i] + m.cell_mass[(size_t)j * W + i];
  m.total = 0.0;
  for (double v : m.cell_mass) m.total += v;
  return m;
}

// Visit the per-row runs of inner cells whose centers lie in the open ball
// (strictly dx^2 + dy^2 < r^2).  Index bounds come from arithmetic and are
// fixed up against the exact predicate, so callers see precisely the cells a
// per-cell test would select.
template <typename Fn>
inline void for_each_ball_row(const GridSpec& spec, Point center, double radius, Fn&& fn) {
  if (!(radius > 0)) return;
  int W = spec.inner_w, H = spec.inner_h;
  double s = spec.cell;
  double r2 = radius * radius;
  auto inside = [&](int i, double dy2) {
    double dx = (i + 0.5) * s - center.x;
    return dx * dx + dy2 < r2;
  };
  int j_lo = std::max(0, (int)std::floor((center.y - radius) / s - 0.5));
  int j_hi = std::min(H - 1, (int)std::ceil((center.y + radius) / s - 0.5));
  for (int j = j_lo; j <= j_hi; ++j) {
    double dy = (j + 0.5) * s - center.y;
    double dy2 = dy * dy;
    if (dy2 >= r2) continue;
    double w = std::sqrt(r2 - dy2);
    int lo = (int)std::ceil((center.x - w) / s - 0.5);
    int hi = (int)std::floor((center.x + w) / s - 0.5);
    lo = std::max(lo - 1, 0);
    hi = std::min(hi + 1, W - 1);
    while (lo <= hi && !inside(lo, dy2)) ++lo;
    while (lo <= hi && !inside(hi, dy2)) --hi;
    if (lo > hi) continue;
    // neighbors beyond the fixed-up bounds must be outside
    if (lo > 0 && inside(lo - 1, dy2)) --lo;
    if (hi < W - 1 && inside(hi + 1, dy2)) ++hi;
    fn(j, lo, hi);
  }
}

inline double ball_mass(const MeasureGrid& m, Point center, double radius) {
  double acc = 0.0;
  const int W = m.spec.inner_w;
  for_each_ball_row(m.spec, center, radius, [&](int j, int lo, int hi) {
    const double* row = m.cell_mass.data() + (size_t)j * W;
    for (int i = lo; i <= hi; ++i) acc += row[i];
  });
  return acc;
}

// Mass of the half-open box [x0,x1) × [y0,y1) under the cell-center rule,
// via the row prefix sums.
inline double box_mass(const MeasureGrid& m, const Rect& box) {
  const GridSpec& spec = m.spec;
  double s = spec.cell;
  // index of the first cell whose center (i+1/2)s is >= x, clamped to [0, n]
  auto first_at_or_after = [&](double x, int n) {
    int i = std::max(0, std::min(n, (int)std::ceil(x / s - 0.5)));
    while (i < n && (i + 0.5) * s < x) ++i;
    while (i > 0 && (i - 0.5) * s >= x) --i;
    return i;
  };
  int i_lo = first_at_or_after(box.x0, spec.inner_w);
  int i_hi = first_at_or_after(box.x1, spec.inner_w);
  int j_lo = first_at_or_after(box.y0, spec.inner_h);
  int j_hi = first_at_or_after(box.y1, spec.inner_h);
  double acc = 0.0;
  for (int j = j_lo; j < j_hi; ++j) acc += m.prefix(j, i_hi) - m.prefix(j, i_lo);
  return acc;
}

inline MeasureGrid scale_measure(const MeasureGrid& m, double alpha) {
  if (!(alpha > 0)) throw std::invalid_argument("scale_measure: alpha must be positive");
  MeasureGrid out = m;
  for (double& v : out.cell_mass) v *= alpha;
  int W = out.spec.inner_w, H = out.spec.inner_h;
  for (int j = 0; j < H; ++j)
    for (int i = 0; i < W; ++i)
      out.row_prefix[(size_t)j * (W + 1) + i + 1] =
          out.row_prefix[(size_t)j * (W + 1) + i] + out.cell_mass[(size_t)j * W + i];
  out.total = 0.0;
  for (double v : out.cell_mass) out.total += v;
  return out;
}

struct MomentEstimate {
  double estimate = 0.0;
  CI ci;
};

// Empirical nu-th moment of total masses with a bootstrap percentile CI.
inline MomentEstimate moment_estimate(const std::vector<double>& samples, double nu,
                                      std::uint64_t seed = 0xA0ULL) {
  if (samples.empty()) throw std::invalid_argument("moment_estimate: empty sample set");
  std::vector<double> powed(samples.size());
  for (size_t k = 0; k < samples.size(); ++k) {
    if (!(samples[k] > 0)) throw std::invalid_argument("moment_estimate: nonpositive mass");
    powed[k] = std::pow(samples[k], nu);
  }
  MomentEstimate out;
  out.estimate = mean(powed);
  out.ci = bootstrap_ci(powed, [](const std::vector<double>& x) { return mean(x); }, seed);
  return out;
}

}  // namespace lgd
