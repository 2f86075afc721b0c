#pragma once

// Ball catalogs: the finite families of Euclidean balls over which the
// chain distances are minimized.  Centers sit on a sub-lattice of cell
// centers (spacing stride * cell), radii run over the dyadic ladder
// {2^j * cell : j >= 1} up to a cap, and every ball carries the measure
// of its open disk, computed by the same summation path as ball_mass so
// stored and freshly computed masses agree bitwise.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lgdlab/geometry.hpp"
#include "lgdlab/measure.hpp"

namespace lgd {

struct Ball {
  Point center;
  double radius = 0.0;
  double mass = 0.0;
  int index = -1;
};

// Balls are indexed radius-class-major, then row-major over the center
// lattice; the index order is the deterministic tie-break order of the
// search routines.
struct BallCatalog {
  const MeasureGrid* measure = nullptr;  // not owned; caller keeps it alive
  GridSpec spec;
  Rect inner;
  int stride = 1;
  double r_cap = 0.0;
  std::vector<double> radii;  // ascending dyadic ladder
  int nx = 0, ny = 0;         // center lattice dimensions
  std::vector<double> mass;   // [class * ncenters + cidx]

  int ncenters() const { return nx * ny; }
  int nclasses() const { return (int)radii.size(); }
  int nballs() const { return nclasses() * ncenters(); }

  Point center_at(int cidx) const {
    int i = cidx % nx, j = cidx / nx;
    return {((double)(i * stride) + 0.5) * spec.cell,
            ((double)(j * stride) + 0.5) * spec.cell};
  }
  Ball ball(int b) const {
    int k = b / ncenters(), c = b % ncenters();
    return {center_at(c), radii[k], mass[b], b};
  }
  double radius_of(int b) const { return radii[b / ncenters()]; }
  double mass_of(int b) const { return mass[b]; }
};

// Open-disk overlap: the adjacency predicate of the chain graph.  Kept as
// the single shared expression so every search path (optimized and brute
// force) decides adjacency identically, bit for bit.
inline bool balls_overlap(Point c1, double r1, Point c2, double r2) {
  double dx = c1.x - c2.x, dy = c1.y - c2.y, s = r1 + r2;
  return dx * dx + dy * dy < s * s;
}

// Closed containment of a point: used for endpoint membership.
inline bool ball_contains(Point c, double r, Point p) {
  double dx = c.x - p.x, dy = c.y - p.y;
  return dx * dx + dy * dy <= r * r;
}

inline BallCatalog build_catalog(const MeasureGrid& m, int stride, double r_cap) {
  const GridSpec& spec = m.spec;
  if (stride < 1) throw std::invalid_argument("build_catalog: stride must be >= 1");
  double diam = spec.inner_box().diameter();
  if (r_cap > diam * (1.0 + 1e-12))
    throw std::invalid_argument("build_catalog: radius cap exceeds the box diameter");
  if (r_cap < 2.0 * spec.cell * (1.0 - 1e-12))
    throw std::invalid_argument("build_catalog: radius cap below the minimum ball radius");

  BallCatalog cat;
  cat.measure = &m;
  cat.spec = spec;
  cat.inner = spec.inner_box();
  cat.stride = stride;
  cat.r_cap = r_cap;
  for (double r = 2.0 * spec.cell; r <= r_cap * (1.0 + 1e-12); r *= 2.0)
    cat.radii.push_back(r);
  cat.nx = (spec.inner_w + stride - 1) / stride;
  cat.ny = (spec.inner_h + stride - 1) / stride;

  cat.mass.resize((size_t)cat.nballs());
  for (int k = 0; k < cat.nclasses(); ++k) {
    double r = cat.radii[k];
    for (int c = 0; c < cat.ncenters(); ++c)
      cat.mass[(size_t)k * cat.ncenters() + c] = ball_mass(m, cat.center_at(c), r);
  }
  return cat;
}

// Recompute the stored masses of every ball whose disk meets `changed`,
// against `m` (which must share the catalog's grid).  Used after a local
// field update; each refreshed mass equals a fresh ball_mass call.
inline void refresh_masses(BallCatalog& cat, const MeasureGrid& m, const Rect& changed) {
  if (m.spec.inner_w != cat.spec.inner_w || m.spec.inner_h != cat.spec.inner_h ||
      m.spec.cell != cat.spec.cell)
    throw std::invalid_argument("refresh_masses: measure grid does not match catalog");
  cat.measure = &m;
  for (int k = 0; k < cat.nclasses(); ++k) {
    double r = cat.radii[k];
    for (int c = 0; c < cat.ncenters(); ++c) {
      Point p = cat.center_at(c);
      if (dist_to_rect(p, changed) < r)
        cat.mass[(size_t)k * cat.ncenters() + c] = ball_mass(m, p, r);
    }
  }
}

// Row-major bit grid over the center lattice, one per (layer, radius
// class) during a search; supports masked scans of a row interval.
class BitGrid {
 public:
  BitGrid() = default;
  BitGrid(int nx, int ny, bool ones) : nx_(nx), ny_(ny), wpr_((nx + 63) / 64) {
    words_.assign((size_t)wpr_ * ny, ones ? ~0ull : 0ull);
    if (ones && nx % 64 != 0) {
      uint64_t last = (1ull << (nx % 64)) - 1;
      for (int j = 0; j < ny; ++j) words_[(size_t)j * wpr_ + (wpr_ - 1)] = last;
    }
  }
  bool test(int i, int j) const {
    return (words_[(size_t)j * wpr_ + (i >> 6)] >> (i & 63)) & 1ull;
  }
  void clear(int i, int j) {
    words_[(size_t)j * wpr_ + (i >> 6)] &= ~(1ull << (i & 63));
  }
  void set(int i, int j) {
    words_[(size_t)j * wpr_ + (i >> 6)] |= 1ull << (i & 63);
  }
  bool any() const {
    for (uint64_t w : words_)
      if (w) return true;
    return false;
  }
  // Visit set bits with i in [i0, i1], ascending, within row j.
  template <typename Fn>
  void scan_row(int j, int i0, int i1, Fn&& fn) const {
    if (i0 < 0) i0 = 0;
    if (i1 > nx_ - 1) i1 = nx_ - 1;
    if (i0 > i1) return;
    const uint64_t* row = &words_[(size_t)j * wpr_];
    int w0 = i0 >> 6, w1 = i1 >> 6;
    for (int w = w0; w <= w1; ++w) {
      uint64_t bits = row[w];
      if (w == w0) bits &= ~0ull << (i0 & 63);
      if (w == w1 && (i1 & 63) != 63) bits &= (1ull << ((i1 & 63) + 1)) - 1;
      while (bits) {
        int b = __builtin_ctzll(bits);
        bits &= bits - 1;
        fn(w * 64 + b);
      }
    }
  }

 private:
  int nx_ = 0, ny_ = 0, wpr_ = 0;
  std::vector<uint64_t> words_;
};

}  // namespace lgd
