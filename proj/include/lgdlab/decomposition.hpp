#pragma once
// White-noise heat-kernel representation of the Dirichlet DGFF, with
// independent resampling of space-time blocks (early times) and of the whole
// late-time part.
//
// Writing p_t = exp(-t L/(2s^2)) for the lattice heat semigroup (L = graph
// Laplacian, s = cell side), the field
//     h(x) = sqrt(pi) * int_0^inf sum_y p_{t/2}(x,y) W(dy,dt)
// has covariance pi * int_0^inf p_t dt = 2 pi L^{-1}, i.e. the DGFF at the
// default calibration.  Time is discretized geometrically, with slice
// boundaries t = s^2 * 2^k starting from the first slice (0, s^2], one extra
// boundary inserted at t = S^2 (S = physical block side) so the fine part
// (t <= S^2) and the coarse part (t > S^2) separate exactly, and the grid
// capped at the squared padded diameter; the analytic tail beyond the cap is
// folded into the last slice (the folded mass is reported as the truncation
// tolerance, the covariance itself stays exact).
//
// Within a slice the operator applied to the noise is diagonal in the sine
// basis with weight sqrt(tau/(s^2 dt)), where
//     tau(lambda) = (2 pi / lambda) * (exp(-lambda u_lo) - exp(-lambda u_hi)),
// u = t/(2 s^2), is the exact integrated slice variance of the mode -- not a
// midpoint kernel evaluation, which misweights the high modes badly.  Slice
// variances therefore telescope to 2 pi / lambda without quadrature error.
//
// Noise lives on the cells of the padded grid, one entry per (cell, slice),
// scaled by sqrt(cell_area * slice_length).  Cell (i,j) feeds interior vertex
// (i+1, j+1) (its far corner); the last cell row/column abuts the Dirichlet
// boundary and stays inert, which keeps the cell/vertex count mismatch out of
// every transform.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "dst.hpp"
#include "field.hpp"
#include "geometry.hpp"
#include "rng.hpp"

namespace lgd {

struct TimeSlice {
  double t_lo = 0.0, t_hi = 0.0;  // physical time interval (t_lo, t_hi]
  double u_lo = 0.0, u_hi = 0.0;  // u = t / (2 s^2)
  bool folded = false;            // last slice absorbs the t > t_hi tail
  double length() const { return t_hi - t_lo; }
};

// Axis-aligned block of padded-grid cells.
struct BlockRect {
  int i0 = 0, j0 = 0, w = 0, h = 0;
  int cell_count() const { return w * h; }
};

// Geometric slice boundaries in u: 0, 1/2, 1, 2, ... with u = S^2/(2s^2)
// inserted, capped at the first boundary >= (padded diameter)^2 / (2 s^2).
inline std::vector<TimeSlice> make_time_slices(const GridSpec& spec, int block_side,
                                               int* fine_count_out) {
  double u_split = 0.5 * (double)block_side * block_side;
  double u_cap = 0.5 * ((double)spec.padded_w * spec.padded_w +
                        (double)spec.padded_h * spec.padded_h);
  std::vector<double> bounds{0.0};
  for (double u = 0.5;; u *= 2.0) {
    bounds.push_back(u);
    if (u >= u_cap) break;
  }
  auto pos = std::lower_bound(bounds.begin(), bounds.end(), u_split);
  if (pos == bounds.end() || *pos != u_split) bounds.insert(pos, u_split);

  double s2 = spec.cell * spec.cell;
  std::vector<TimeSlice> slices;
  for (size_t k = 0; k + 1 < bounds.size(); ++k) {
    TimeSlice sl;
    sl.u_lo = bounds[k];
    sl.u_hi = bounds[k + 1];
    sl.t_lo = 2.0 * s2 * sl.u_lo;
    sl.t_hi = 2.0 * s2 * sl.u_hi;
    slices.push_back(sl);
  }
  slices.back().folded = true;
  int fine = 0;
  while (fine < (int)slices.size() && slices[fine].u_hi <= u_split) ++fine;
  if (fine_count_out) *fine_count_out = fine;
  return slices;
}

// Cut positions along one axis: multiples of b, with a short tail (< b/10)
// merged into the preceding block.
inline std::vector<int> block_axis_cuts(int n, int b) {
  std::vector<int> cuts{0};
  for (int x = b; x < n; x += b) cuts.push_back(x);
  cuts.push_back(n);
  if (cuts.size() >= 3) {
    int tail = n - cuts[cuts.size() - 2];
    if (tail * 10 < b) cuts.erase(cuts.end() - 2);
  }
  return cuts;
}

struct WhiteNoiseDecomposition {
  GridSpec spec;
  int block_side = 0;
  std::vector<TimeSlice> slices;
  int fine_count = 0;  // slices[0..fine_count) have t_hi <= S^2
  std::vector<int> cuts_x, cuts_y;
  std::vector<BlockRect> blocks;  // row-major over (cut row, cut column)
  std::vector<double> noise;      // [slice][cell], cell = j*padded_w + i, scaled
  FieldSample base;               // field assembled from `noise`
  double truncation_tolerance = 0.0;  // variance mass folded in from beyond the cap
  std::uint64_t seed = 0;

  std::int64_t ncells() const { return (std::int64_t)spec.padded_w * spec.padded_h; }
  int nblocks() const { return (int)blocks.size(); }
  double noise_at(int slice, int ci, int cj) const {
    return noise[(size_t)slice * ncells() + (size_t)cj * spec.padded_w + ci];
  }
  // Standard deviation of the raw noise entries in slice k.
  double noise_sd(int k) const {
    return spec.cell * spec.cell * std::sqrt(2.0 * (slices[k].u_hi - slices[k].u_lo));
  }
  int block_at(int ci, int cj) const {
    auto ix = std::upper_bound(cuts_x.begin(), cuts_x.end(), ci) - cuts_x.begin() - 1;
    auto jy = std::upper_bound(cuts_y.begin(), cuts_y.end(), cj) - cuts_y.begin() - 1;
    return (int)(jy * (cuts_x.size() - 1) + ix);
  }
};

// Scale projected noise by sqrt(tau/(s^2 dt)) per mode and add into the
// spectral accumulator.  exp(-lambda u) factors over the two axes, so only
// O(nx+ny) exponentials are evaluated.
inline void accumulate_slice_weights(const TimeSlice& sl, double s2dt, const LaplaceEigen& eig,
                                     const std::vector<double>& proj, std::vector<double>& acc) {
  int nx = eig.nx, ny = eig.ny;
  std::vector<double> ax(nx), bx(nx), ay(ny), by(ny);
  for (int j = 0; j < nx; ++j) {
    ax[j] = std::exp(-eig.lx[j] * sl.u_lo);
    bx[j] = sl.folded ? 0.0 : std::exp(-eig.lx[j] * sl.u_hi);
  }
  for (int k = 0; k < ny; ++k) {
    ay[k] = std::exp(-eig.ly[k] * sl.u_lo);
    by[k] = sl.folded ? 0.0 : std::exp(-eig.ly[k] * sl.u_hi);
  }
  const double two_pi = 2.0 * std::numbers::pi;
  for (int k = 0; k < ny; ++k) {
    for (int j = 0; j < nx; ++j) {
      double lambda = eig.lx[j] + eig.ly[k];
      double tau = two_pi * (ax[j] * ay[k] - bx[j] * by[k]) / lambda;
      acc[(size_t)k * nx + j] += std::sqrt(tau / s2dt) * proj[(size_t)k * nx + j];
    }
  }
}

// Assemble the field determined by dec.noise (ignores dec.base).
inline FieldSample assemble_field(const WhiteNoiseDecomposition& dec) {
  const GridSpec& spec = dec.spec;
  int nx = spec.interior_x(), ny = spec.interior_y();
  int pw = spec.padded_w;
  double s2 = spec.cell * spec.cell;
  std::vector<double> acc((size_t)nx * ny, 0.0), tmp((size_t)nx * ny);
  LaplaceEigen eig(nx, ny);
  for (int k = 0; k < (int)dec.slices.size(); ++k) {
    const double* src = dec.noise.data() + (size_t)k * dec.ncells();
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) tmp[(size_t)j * nx + i] = src[(size_t)j * pw + i];
    dst_project(nx, ny, tmp);
    accumulate_slice_weights(dec.slices[k], s2 * dec.slices[k].length(), eig, tmp, acc);
  }
  dst_expand(nx, ny, acc);
  return field_from_interior(spec, acc, kDefaultCalibration, dec.seed,
                             SamplerKind::kDecomposition);
}

inline WhiteNoiseDecomposition build_decomposition(const GridSpec& spec, int block_side,
                                                   std::uint64_t seed) {
  if (block_side <= 0) throw std::invalid_argument("build_decomposition: non-positive block side");
  if (block_side > std::min(spec.padded_w, spec.padded_h))
    throw std::invalid_argument("build_decomposition: block larger than padded grid");
  WhiteNoiseDecomposition dec;
  dec.spec = spec;
  dec.block_side = block_side;
  dec.seed = seed;
  dec.slices = make_time_slices(spec, block_side, &dec.fine_count);
  dec.cuts_x = block_axis_cuts(spec.padded_w, block_side);
  dec.cuts_y = block_axis_cuts(spec.padded_h, block_side);
  for (size_t jy = 0; jy + 1 < dec.cuts_y.size(); ++jy)
    for (size_t ix = 0; ix + 1 < dec.cuts_x.size(); ++ix)
      dec.blocks.push_back({dec.cuts_x[ix], dec.cuts_y[jy], dec.cuts_x[ix + 1] - dec.cuts_x[ix],
                            dec.cuts_y[jy + 1] - dec.cuts_y[jy]});

  dec.noise.resize((size_t)dec.ncells() * dec.slices.size());
  GaussianStream g(derive_seed(seed, 0x57ULL));
  for (int k = 0; k < (int)dec.slices.size(); ++k) {
    double sd = dec.noise_sd(k);
    double* dst = dec.noise.data() + (size_t)k * dec.ncells();
    for (std::int64_t c = 0; c < dec.ncells(); ++c) dst[c] = sd * g();
  }
  dec.base = assemble_field(dec);

  LaplaceEigen eig(spec.interior_x(), spec.interior_y());
  double lmin = eig.lambda_min();
  dec.truncation_tolerance =
      2.0 * std::numbers::pi / lmin * std::exp(-lmin * dec.slices.back().u_hi);
  return dec;
}

// Replacement noise for (block, fine slices), slice-major then row-major over
// block cells.  Shared by the exact and the restricted resampling paths so
// both see bit-identical redraws.
inline std::vector<double> block_redraw(const WhiteNoiseDecomposition& dec, int block_id,
                                        std::uint64_t seed) {
  const BlockRect& blk = dec.blocks[block_id];
  GaussianStream g(derive_seed(seed, 0xb1ULL, (std::uint64_t)block_id));
  std::vector<double> out((size_t)dec.fine_count * blk.cell_count());
  size_t q = 0;
  for (int k = 0; k < dec.fine_count; ++k) {
    double sd = dec.noise_sd(k);
    for (int j = 0; j < blk.h; ++j)
      for (int i = 0; i < blk.w; ++i) out[q++] = sd * g();
  }
  return out;
}

// Difference field produced by redrawing one block, restricted to a vertex
// window.  Offsets are in padded-grid vertex coordinates.
struct LocalField {
  int vi0 = 0, vj0 = 0, vw = 0, vh = 0;
  std::vector<double> values;  // row-major vw × vh

  double at(int gi, int gj) const {  // global vertex coords; 0 outside window
    int i = gi - vi0, j = gj - vj0;
    if (i < 0 || j < 0 || i >= vw || j >= vh) return 0.0;
    return values[(size_t)j * vw + i];
  }
  void add_to(FieldSample& f) const {
    for (int j = 0; j < vh; ++j)
      for (int i = 0; i < vw; ++i) f.at(vi0 + i, vj0 + j) += values[(size_t)j * vw + i];
  }
};

namespace detail {

// Spatial reach, in cells, of the slice operator applied to a point load:
// the weight acts like the heat semigroup at u <= u_hi (spatial variance u per
// axis), so mass beyond sqrt(2 u ln(1/tol)) is below tol.
inline int slice_margin(double u_hi, double tol) {
  return (int)std::ceil(std::sqrt(2.0 * u_hi * std::log(1.0 / tol))) + 8;
}

struct CellSpan {
  int lo = 0, hi = 0;  // cells [lo, hi)
  int width() const { return hi - lo; }
};

// Grow [i0, i0+w) by margin m, clip to [0, n), and pad up to an FFT-friendly
// width when room allows.
inline CellSpan grown_span(int i0, int w, int m, int n) {
  int lo = std::max(0, i0 - m), hi = std::min(n, i0 + w + m);
  int want = std::min(n, fft_friendly(hi - lo));
  lo = std::max(0, std::min(lo, n - want));
  return {lo, std::min(n, lo + want)};
}

}  // namespace detail

// Difference field (resampled minus original) for one block redraw, computed
// on per-slice subgrids just large enough that the part outside is below
// tol × (per-mode scale).  Each subgrid gets Dirichlet conditions on its own
// boundary; by the locality of the slice operator this matches the full-grid
// application within the same tolerance.
inline LocalField block_delta(const WhiteNoiseDecomposition& dec, int block_id, std::uint64_t seed,
                              double tol = 1e-12) {
  if (block_id < 0 || block_id >= dec.nblocks())
    throw std::out_of_range("block_delta: invalid block id");
  const GridSpec& spec = dec.spec;
  const BlockRect& blk = dec.blocks[block_id];
  int pw = spec.padded_w, ph = spec.padded_h;
  double s2 = spec.cell * spec.cell;
  std::vector<double> redraw = block_redraw(dec, block_id, seed);

  std::vector<detail::CellSpan> sx(dec.fine_count), sy(dec.fine_count);
  for (int k = 0; k < dec.fine_count; ++k) {
    int m = detail::slice_margin(dec.slices[k].u_hi, tol);
    sx[k] = detail::grown_span(blk.i0, blk.w, m, pw);
    sy[k] = detail::grown_span(blk.j0, blk.h, m, ph);
  }
  int hx0 = sx[0].lo, hx1 = sx[0].hi, hy0 = sy[0].lo, hy1 = sy[0].hi;
  for (int k = 1; k < dec.fine_count; ++k) {
    hx0 = std::min(hx0, sx[k].lo);
    hx1 = std::max(hx1, sx[k].hi);
    hy0 = std::min(hy0, sy[k].lo);
    hy1 = std::max(hy1, sy[k].hi);
  }

  LocalField out;
  out.vi0 = hx0;
  out.vj0 = hy0;
  out.vw = hx1 - hx0 + 1;
  out.vh = hy1 - hy0 + 1;
  out.values.assign((size_t)out.vw * out.vh, 0.0);

  std::vector<double> buf;
  for (int k = 0; k < dec.fine_count; ++k) {
    int nsx = sx[k].width() - 1, nsy = sy[k].width() - 1;  // interior vertices
    buf.assign((size_t)nsx * nsy, 0.0);
    const double* redraw_k = redraw.data() + (size_t)k * blk.cell_count();
    const double* old_k = dec.noise.data() + (size_t)k * dec.ncells();
    for (int j = 0; j < blk.h; ++j) {
      int cj = blk.j0 + j;
      int lj = cj + 1 - sy[k].lo;  // local vertex row of cell's far corner
      if (lj < 1 || lj > nsy) continue;
      for (int i = 0; i < blk.w; ++i) {
        int ci = blk.i0 + i;
        int li = ci + 1 - sx[k].lo;
        if (li < 1 || li > nsx) continue;
        buf[(size_t)(lj - 1) * nsx + (li - 1)] =
            redraw_k[(size_t)j * blk.w + i] - old_k[(size_t)cj * pw + ci];
      }
    }
    dst_project(nsx, nsy, buf);
    std::vector<double> acc((size_t)nsx * nsy, 0.0);
    LaplaceEigen eig(nsx, nsy);
    accumulate_slice_weights(dec.slices[k], s2 * dec.slices[k].length(), eig, buf, acc);
    dst_expand(nsx, nsy, acc);
    for (int j = 0; j < nsy; ++j) {
      int gj = sy[k].lo + 1 + j;
      double* row = out.values.data() + (size_t)(gj - out.vj0) * out.vw;
      for (int i = 0; i < nsx; ++i) row[sx[k].lo + 1 + i - out.vi0] += acc[(size_t)j * nsx + i];
    }
  }
  return out;
}

enum class ResamplePath { kFast, kExact };

// Full-grid difference assembly for a noise delta that lives on `cells` within
// the given slice range.  cells holds (ci, cj, delta) triples.
inline std::vector<double> full_grid_delta(const WhiteNoiseDecomposition& dec, int k_lo, int k_hi,
                                           const std::vector<std::vector<double>>& slice_deltas) {
  const GridSpec& spec = dec.spec;
  int nx = spec.interior_x(), ny = spec.interior_y();
  int pw = spec.padded_w;
  double s2 = spec.cell * spec.cell;
  std::vector<double> acc((size_t)nx * ny, 0.0), tmp((size_t)nx * ny);
  LaplaceEigen eig(nx, ny);
  for (int k = k_lo; k < k_hi; ++k) {
    const std::vector<double>& d = slice_deltas[k - k_lo];  // full cell grid
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) tmp[(size_t)j * nx + i] = d[(size_t)j * pw + i];
    dst_project(nx, ny, tmp);
    accumulate_slice_weights(dec.slices[k], s2 * dec.slices[k].length(), eig, tmp, acc);
  }
  dst_expand(nx, ny, acc);
  return acc;
}

// Redraw the noise of one block over the fine slices (t <= S^2) and return the
// reassembled field.  The fast path evaluates the difference on a restricted
// subgrid (below tol elsewhere); the exact path transforms the full grid.
inline FieldSample resample_block(const WhiteNoiseDecomposition& dec, int block_id,
                                  std::uint64_t seed, ResamplePath path = ResamplePath::kFast,
                                  double tol = 1e-12) {
  if (block_id < 0 || block_id >= dec.nblocks())
    throw std::out_of_range("resample_block: invalid block id");
  FieldSample out = dec.base;
  out.seed = seed;
  out.kind = SamplerKind::kResampleBlock;
  out.aux = (std::uint64_t)block_id;
  if (path == ResamplePath::kFast) {
    block_delta(dec, block_id, seed, tol).add_to(out);
    return out;
  }
  const BlockRect& blk = dec.blocks[block_id];
  int pw = dec.spec.padded_w;
  std::vector<double> redraw = block_redraw(dec, block_id, seed);
  std::vector<std::vector<double>> deltas(dec.fine_count);
  for (int k = 0; k < dec.fine_count; ++k) {
    deltas[k].assign((size_t)dec.ncells(), 0.0);
    const double* redraw_k = redraw.data() + (size_t)k * blk.cell_count();
    const double* old_k = dec.noise.data() + (size_t)k * dec.ncells();
    for (int j = 0; j < blk.h; ++j)
      for (int i = 0; i < blk.w; ++i) {
        size_t c = (size_t)(blk.j0 + j) * pw + (blk.i0 + i);
        deltas[k][c] = redraw_k[(size_t)j * blk.w + i] - old_k[c];
      }
  }
  std::vector<double> d = full_grid_delta(dec, 0, dec.fine_count, deltas);
  int nx = dec.spec.interior_x();
  for (int j = 0; j < dec.spec.interior_y(); ++j)
    for (int i = 0; i < nx; ++i) out.at(i + 1, j + 1) += d[(size_t)j * nx + i];
  return out;
}

// Redraw all noise at t > S^2 (every cell, coarse slices) and reassemble.
inline FieldSample resample_coarse(const WhiteNoiseDecomposition& dec, std::uint64_t seed) {
  const GridSpec& spec = dec.spec;
  int n_slices = (int)dec.slices.size();
  GaussianStream g(derive_seed(seed, 0xc5ULL));
  std::vector<std::vector<double>> deltas(n_slices - dec.fine_count);
  for (int k = dec.fine_count; k < n_slices; ++k) {
    double sd = dec.noise_sd(k);
    std::vector<double>& d = deltas[k - dec.fine_count];
    d.resize((size_t)dec.ncells());
    const double* old_k = dec.noise.data() + (size_t)k * dec.ncells();
    for (std::int64_t c = 0; c < dec.ncells(); ++c) d[c] = sd * g() - old_k[c];
  }
  std::vector<double> d = full_grid_delta(dec, dec.fine_count, n_slices, deltas);
  FieldSample out = dec.base;
  out.seed = seed;
  out.kind = SamplerKind::kResampleCoarse;
  int nx = spec.interior_x();
  for (int j = 0; j < spec.interior_y(); ++j)
    for (int i = 0; i < nx; ++i) out.at(i + 1, j + 1) += d[(size_t)j * nx + i];
  return out;
}

}  // namespace lgd
