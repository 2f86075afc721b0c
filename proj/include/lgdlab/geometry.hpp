#pragma once
// Grid geometry: the inner (continuum) box, its padded ambient box, and the
// coordinate conventions shared by every module.
//
// Conventions.  The inner box is [0, W·s] × [0, H·s] with W×H cells of side s.
// Field values live on the *vertices* of the padded grid; vertex (i,j) sits at
// continuum position (x0 + i·s, y0 + j·s) where (x0, y0) is the padded box
// origin (negative coordinates: the pad extends beyond the inner box on every
// side).  Cell (i,j) of the inner grid has center ((i+1/2)s, (j+1/2)s).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace lgd {

struct Point {
  double x = 0.0, y = 0.0;
};

inline double dist(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Axis-aligned rectangle [x0,x1] × [y0,y1].
struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  bool contains(Point p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
  bool contains(const Rect& r) const {
    return r.x0 >= x0 && r.x1 <= x1 && r.y0 >= y0 && r.y1 <= y1;
  }
  Point center() const { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }
  double diameter() const { return std::hypot(width(), height()); }
  Rect grown(double m) const { return {x0 - m, y0 - m, x1 + m, y1 + m}; }
};

// Euclidean distance from a point to a closed rectangle (0 inside).
inline double dist_to_rect(Point p, const Rect& r) {
  double dx = std::max({r.x0 - p.x, 0.0, p.x - r.x1});
  double dy = std::max({r.y0 - p.y, 0.0, p.y - r.y1});
  return std::hypot(dx, dy);
}

// Smallest size >= n whose only prime factors are 2,3,5,7 (and even), so the
// DST-I of the padded grid (logical FFT size 2·n) stays fast.
inline int fft_friendly(int n) {
  auto smooth = [](int v) {
    for (int p : {2, 3, 5, 7})
      while (v % p == 0) v /= p;
    return v == 1;
  };
  int v = std::max(n, 2);
  if (v % 2) ++v;
  while (!smooth(v)) v += 2;
  return v;
}

// Discretization of a continuum box together with its padded ambient box.
//
// The ambient (padded) box extends beyond the inner box by at least
// padding_factor × (inner Euclidean diameter) on each side; the realized
// margin may be slightly larger because the padded dimensions are rounded up
// to FFT-friendly sizes.
struct GridSpec {
  int inner_w = 0;             // inner cells along x
  int inner_h = 0;             // inner cells along y
  double cell = 1.0;           // continuum length per cell
  double padding_factor = 2.0; // margin in units of the inner diameter

  int pad_x = 0, pad_y = 0;    // realized pad, in cells, per side
  int padded_w = 0, padded_h = 0;

  GridSpec() = default;
  GridSpec(int w, int h, double cell_size = 1.0, double padding = 2.0)
      : inner_w(w), inner_h(h), cell(cell_size), padding_factor(padding) {
    if (w <= 0 || h <= 0) throw std::invalid_argument("GridSpec: non-positive dimensions");
    if (cell_size <= 0) throw std::invalid_argument("GridSpec: non-positive cell size");
    if (padding <= 0) throw std::invalid_argument("GridSpec: non-positive padding factor");
    double diam_cells = std::hypot((double)w, (double)h);
    int pad = (int)std::ceil(padding * diam_cells);
    padded_w = fft_friendly(w + 2 * pad);
    padded_h = fft_friendly(h + 2 * pad);
    pad_x = (padded_w - w) / 2;
    pad_y = (padded_h - h) / 2;
  }

  // Oracle-path constructor: exact padded dimensions, no FFT-friendly
  // rounding.  Used by the dense-covariance comparisons on tiny grids.
  static GridSpec with_padded(int w, int h, double cell_size, int padded_w, int padded_h) {
    if (padded_w < w || padded_h < h || padded_w < 2 || padded_h < 2)
      throw std::invalid_argument("GridSpec: padded box must contain inner box");
    GridSpec s;
    s.inner_w = w;
    s.inner_h = h;
    s.cell = cell_size;
    s.padded_w = padded_w;
    s.padded_h = padded_h;
    s.pad_x = (padded_w - w) / 2;
    s.pad_y = (padded_h - h) / 2;
    s.padding_factor = std::min(s.pad_x, s.pad_y) * cell_size / (std::hypot((double)w, (double)h) * cell_size);
    return s;
  }

  double inner_width() const { return inner_w * cell; }
  double inner_height() const { return inner_h * cell; }
  double inner_diameter() const { return std::hypot(inner_width(), inner_height()); }
  Rect inner_box() const { return {0.0, 0.0, inner_width(), inner_height()}; }
  Rect padded_box() const {
    return {-pad_x * cell, -pad_y * cell, (inner_w + (padded_w - inner_w - pad_x)) * cell,
            (inner_h + (padded_h - inner_h - pad_y)) * cell};
  }

  // Vertex counts of the padded grid (values live on vertices).
  int vx() const { return padded_w + 1; }
  int vy() const { return padded_h + 1; }
  int interior_x() const { return padded_w - 1; }
  int interior_y() const { return padded_h - 1; }
  std::int64_t interior_count() const { return (std::int64_t)interior_x() * interior_y(); }

  Point vertex_pos(int i, int j) const {
    return {(i - pad_x) * cell, (j - pad_y) * cell};
  }
  Point cell_center(int i, int j) const { return {(i + 0.5) * cell, (j + 0.5) * cell}; }

  bool operator==(const GridSpec& o) const {
    return inner_w == o.inner_w && inner_h == o.inner_h && cell == o.cell &&
           padding_factor == o.padding_factor;
  }
};

}  // namespace lgd
