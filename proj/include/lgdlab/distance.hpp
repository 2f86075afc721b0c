#pragma once

// Chain distances over ball catalogs.  A chain is a sequence of balls in
// which consecutive open disks overlap; the counting distance minimizes
// the number of balls of mass <= delta linking two points, the modified
// distance minimizes the sum of kappa_delta(mass) = max(1, mass/delta)
// over balls of radius <= R.  Both are computed by a best-first search
// specialized to head-only edge weights: a node's distance is final the
// first time a settled neighbor reaches it, so each ball is touched once
// and neighbor enumeration runs over per-radius-class bit grids of the
// not-yet-reached centers.  Tie-breaking is deterministic throughout:
// smaller value, then fewer balls, then smaller ball index.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "lgdlab/catalog.hpp"
#include "lgdlab/geometry.hpp"

namespace lgd {

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

struct DistanceResult {
  double value = kUnreachable;
  int hops = 0;            // balls in the chain
  std::vector<int> chain;  // ball indices, source end first
  bool reached = false;
};

inline double kappa_weight(double mass, double delta) {
  return std::max(1.0, mass / delta);
}

// Admissibility and weighting of a single query.
struct QueryFilter {
  double delta = kUnreachable;
  double radius_cap = kUnreachable;  // closed: radius <= cap
  bool weighted = true;              // kappa weights; else unit weights over mass <= delta
  const Rect* region = nullptr;      // chain ball centers restricted to a closed box
};

namespace detail {

// Lattice index range [lo, hi] whose centers can lie within reach of q,
// widened by one so an exact predicate makes the final call.
inline void lattice_range(double q, double reach, double cell, int stride, int n,
                          int& lo, int& hi) {
  lo = (int)std::floor(((q - reach) / cell - 0.5) / stride) - 1;
  hi = (int)std::ceil(((q + reach) / cell - 0.5) / stride) + 1;
  lo = std::max(lo, 0);
  hi = std::min(hi, n - 1);
}

}  // namespace detail

// One query's worth of search state.  Layered: node = layer * nballs + ball;
// a flip predicate on edges moves between layers (used by the annulus
// circuit search, which runs on a two-sheet cover cut along a ray).
class BallSearch {
 public:
  BallSearch(const BallCatalog& cat, const QueryFilter& filt, int layers = 1,
             const std::function<bool(Point)>& keep_center = nullptr)
      : cat_(cat), filt_(filt), layers_(layers) {
    int nc = cat.ncenters();
    center_ok_.assign((size_t)nc, 1);
    for (int c = 0; c < nc; ++c) {
      Point p = cat.center_at(c);
      if (filt.region && !filt.region->contains(p)) center_ok_[c] = 0;
      else if (keep_center && !keep_center(p)) center_ok_[c] = 0;
    }
    for (int k = 0; k < cat.nclasses(); ++k) {
      if (cat.radii[k] <= filt.radius_cap * (1.0 + 1e-12)) classes_.push_back(k);
    }
    base_.resize(cat.nclasses());
    for (int k : classes_) {
      BitGrid g(cat.nx, cat.ny, false);
      for (int c = 0; c < nc; ++c) {
        if (!center_ok_[c]) continue;
        if (!filt.weighted && cat.mass[(size_t)k * nc + c] > filt.delta) continue;
        g.set(c % cat.nx, c / cat.nx);
      }
      base_[k] = std::move(g);
    }
    remaining_.resize((size_t)layers_);
    for (int l = 0; l < layers_; ++l) remaining_[l] = base_;
    int nn = layers_ * cat.nballs();
    value_.assign((size_t)nn, kUnreachable);
    hops_.assign((size_t)nn, 0);
    pred_.assign((size_t)nn, -1);
  }

  bool active(int ball) const {
    int k = ball / cat_.ncenters(), c = ball % cat_.ncenters();
    return std::find(classes_.begin(), classes_.end(), k) != classes_.end() &&
           remaining_[0][k].test(c % cat_.nx, c / cat_.nx);
  }

  double weight(int ball) const {
    return filt_.weighted ? kappa_weight(cat_.mass[(size_t)ball], filt_.delta) : 1.0;
  }

  // Enumerate still-active balls whose closed disk contains p.
  template <typename Fn>
  void for_covering(Point p, Fn&& fn) const {
    for (int k : classes_) {
      double r = cat_.radii[k];
      int jlo, jhi;
      detail::lattice_range(p.y, r, cat_.spec.cell, cat_.stride, cat_.ny, jlo, jhi);
      for (int j = jlo; j <= jhi; ++j) {
        double cy = ((double)(j * cat_.stride) + 0.5) * cat_.spec.cell;
        int ilo, ihi;
        detail::lattice_range(p.x, r, cat_.spec.cell, cat_.stride, cat_.nx, ilo, ihi);
        remaining_[0][k].scan_row(j, ilo, ihi, [&](int i) {
          int c = j * cat_.nx + i;
          Point q{((double)(i * cat_.stride) + 0.5) * cat_.spec.cell, cy};
          if (ball_contains(q, r, p)) fn(k * cat_.ncenters() + c);
        });
      }
    }
  }

  // Enumerate still-active balls whose open disk meets the rect.
  template <typename Fn>
  void for_overlapping(const Rect& rect, Fn&& fn) const {
    for (int k : classes_) {
      double r = cat_.radii[k];
      int jlo, jhi;
      detail::lattice_range(0.5 * (rect.y0 + rect.y1), r + 0.5 * (rect.y1 - rect.y0),
                            cat_.spec.cell, cat_.stride, cat_.ny, jlo, jhi);
      for (int j = jlo; j <= jhi; ++j) {
        double cy = ((double)(j * cat_.stride) + 0.5) * cat_.spec.cell;
        int ilo, ihi;
        detail::lattice_range(0.5 * (rect.x0 + rect.x1), r + 0.5 * (rect.x1 - rect.x0),
                              cat_.spec.cell, cat_.stride, cat_.nx, ilo, ihi);
        remaining_[0][k].scan_row(j, ilo, ihi, [&](int i) {
          int c = j * cat_.nx + i;
          Point q{((double)(i * cat_.stride) + 0.5) * cat_.spec.cell, cy};
          if (dist_to_rect(q, rect) < r) fn(k * cat_.ncenters() + c);
        });
      }
    }
  }

  // Finalize a source node.  No-op if the ball is filtered out or taken.
  void seed(int ball, int layer = 0) {
    int k = ball / cat_.ncenters(), c = ball % cat_.ncenters();
    if (std::find(classes_.begin(), classes_.end(), k) == classes_.end()) return;
    int i = c % cat_.nx, j = c / cat_.nx;
    if (!remaining_[layer][k].test(i, j)) return;
    remaining_[layer][k].clear(i, j);
    int node = layer * cat_.nballs() + ball;
    value_[node] = weight(ball);
    hops_[node] = 1;
    pred_[node] = -1;
    queue_.push({value_[node], hops_[node], node});
  }

  // Best-first sweep.  `is_target` is checked when a node is popped;
  // `flips` (may be null) sends an edge to the other layer; a target
  // entered with `free_target` costs nothing on entry.  Stops early once
  // the frontier value reaches `prune_above`.
  DistanceResult run(const std::function<bool(int)>& is_target,
                     const std::function<bool(int, int)>& flips = nullptr,
                     bool free_target = false, double prune_above = kUnreachable) {
    int nb = cat_.nballs(), nc = cat_.ncenters();
    while (!queue_.empty()) {
      auto [val, hop, node] = queue_.top();
      queue_.pop();
      if (val > prune_above) return {};
      if (is_target(node)) return reconstruct(node);
      int ball = node % nb, layer = node / nb;
      int ku = ball / nc, cu = ball % nc;
      Point pu = cat_.center_at(cu);
      double ru = cat_.radii[ku];
      for (int k : classes_) {
        double reach = ru + cat_.radii[k];
        int jlo, jhi;
        detail::lattice_range(pu.y, reach, cat_.spec.cell, cat_.stride, cat_.ny, jlo, jhi);
        for (int j = jlo; j <= jhi; ++j) {
          double cy = ((double)(j * cat_.stride) + 0.5) * cat_.spec.cell;
          int ilo, ihi;
          detail::lattice_range(pu.x, reach, cat_.spec.cell, cat_.stride, cat_.nx, ilo, ihi);
          for (int l2 = 0; l2 < layers_; ++l2) {
            remaining_[l2][k].scan_row(j, ilo, ihi, [&](int i) {
              int c = j * cat_.nx + i;
              int vball = k * nc + c;
              Point pv{((double)(i * cat_.stride) + 0.5) * cat_.spec.cell, cy};
              if (!balls_overlap(pu, ru, pv, cat_.radii[k])) return;
              bool flip = flips && flips(ball, vball);
              int ltarget = flip ? 1 - layer : layer;
              if (ltarget != l2) return;
              remaining_[l2][k].clear(i, j);
              int vnode = l2 * nb + vball;
              bool free_entry = free_target && is_target(vnode);
              value_[vnode] = val + (free_entry ? 0.0 : weight(vball));
              hops_[vnode] = hop + 1;
              pred_[vnode] = node;
              queue_.push({value_[vnode], hops_[vnode], vnode});
            });
          }
        }
      }
    }
    return {};
  }

  // After an exhaustive run (is_target always false): the settled result at
  // p, i.e. the minimal (value, hops, node) over admissible balls covering p.
  // Nodes settle in exactly pop order, so this reproduces the result a
  // dedicated point query would have returned, chain included.
  DistanceResult result_at(Point p) const {
    int nc = cat_.ncenters();
    int best = -1;
    for (int k : classes_) {
      double r = cat_.radii[k];
      int jlo, jhi;
      detail::lattice_range(p.y, r, cat_.spec.cell, cat_.stride, cat_.ny, jlo, jhi);
      for (int j = jlo; j <= jhi; ++j) {
        double cy = ((double)(j * cat_.stride) + 0.5) * cat_.spec.cell;
        int ilo, ihi;
        detail::lattice_range(p.x, r, cat_.spec.cell, cat_.stride, cat_.nx, ilo, ihi);
        base_[k].scan_row(j, ilo, ihi, [&](int i) {
          int c = j * cat_.nx + i;
          Point q{((double)(i * cat_.stride) + 0.5) * cat_.spec.cell, cy};
          if (!ball_contains(q, r, p)) return;
          int node = k * nc + c;  // layer 0
          if (value_[node] == kUnreachable) return;
          if (best < 0 || std::make_tuple(value_[node], hops_[node], node) <
                              std::make_tuple(value_[best], hops_[best], best))
            best = node;
        });
      }
    }
    return best < 0 ? DistanceResult{} : reconstruct(best);
  }

 private:
  DistanceResult reconstruct(int node) const {
    DistanceResult res;
    res.value = value_[node];
    res.hops = hops_[node];
    res.reached = true;
    for (int n = node; n >= 0; n = pred_[n]) res.chain.push_back(n % cat_.nballs());
    std::reverse(res.chain.begin(), res.chain.end());
    return res;
  }

  const BallCatalog& cat_;
  QueryFilter filt_;
  int layers_;
  std::vector<int> classes_;
  std::vector<uint8_t> center_ok_;
  std::vector<BitGrid> base_;
  std::vector<std::vector<BitGrid>> remaining_;  // [layer][class]
  std::vector<double> value_;
  std::vector<int> hops_, pred_;
  std::priority_queue<std::tuple<double, int, int>,
                      std::vector<std::tuple<double, int, int>>,
                      std::greater<std::tuple<double, int, int>>>
      queue_;
};

namespace detail {

inline void check_endpoint(const BallCatalog& cat, Point p, const char* what) {
  if (!cat.inner.contains(p))
    throw std::invalid_argument(std::string(what) + ": endpoint outside the box");
}

inline DistanceResult point_query(const BallCatalog& cat, const QueryFilter& filt,
                                  Point x, Point y) {
  if (x.x == y.x && x.y == y.y) return {0.0, 0, {}, true};
  BallSearch s(cat, filt);
  s.for_covering(x, [&](int b) { s.seed(b); });
  int nb = cat.nballs();
  return s.run([&](int node) {
    int b = node % nb;
    return ball_contains(cat.center_at(b % cat.ncenters()), cat.radius_of(b), y);
  });
}

}  // namespace detail

// Minimal number of balls of mass <= delta whose chain links x to y.
inline DistanceResult count_distance(const BallCatalog& cat, double delta, Point x,
                                     Point y, const Rect* region = nullptr) {
  if (!(delta > 0)) throw std::invalid_argument("count_distance: delta must be positive");
  detail::check_endpoint(cat, x, "count_distance");
  detail::check_endpoint(cat, y, "count_distance");
  QueryFilter f;
  f.delta = delta;
  f.weighted = false;
  f.region = region;
  return detail::point_query(cat, f, x, y);
}

// Minimal sum of kappa_delta(mass) over chains of balls of radius <= R.
inline DistanceResult modified_distance(const BallCatalog& cat, double delta, double R,
                                        Point x, Point y, const Rect* region = nullptr) {
  if (!(delta > 0)) throw std::invalid_argument("modified_distance: delta must be positive");
  if (!(R > 0) || R > cat.r_cap * (1.0 + 1e-12))
    throw std::invalid_argument("modified_distance: radius bound outside (0, catalog cap]");
  detail::check_endpoint(cat, x, "modified_distance");
  detail::check_endpoint(cat, y, "modified_distance");
  QueryFilter f;
  f.delta = delta;
  f.radius_cap = R;
  f.weighted = true;
  f.region = region;
  return detail::point_query(cat, f, x, y);
}

// Distances from x to every target out of one exhaustive sweep.  Each entry
// equals the corresponding modified_distance(cat, delta, R, x, t) exactly
// (value, hops, and chain), at the cost of a single search.
inline std::vector<DistanceResult> multi_point_distance(const BallCatalog& cat, double delta,
                                                        double R, Point x,
                                                        const std::vector<Point>& targets,
                                                        const Rect* region = nullptr) {
  if (!(delta > 0)) throw std::invalid_argument("multi_point_distance: delta must be positive");
  if (!(R > 0) || R > cat.r_cap * (1.0 + 1e-12))
    throw std::invalid_argument("multi_point_distance: radius bound outside (0, catalog cap]");
  detail::check_endpoint(cat, x, "multi_point_distance");
  for (const Point& t : targets) detail::check_endpoint(cat, t, "multi_point_distance");
  QueryFilter f;
  f.delta = delta;
  f.radius_cap = R;
  f.weighted = true;
  f.region = region;
  BallSearch s(cat, f);
  s.for_covering(x, [&](int b) { s.seed(b); });
  s.run([](int) { return false; });
  std::vector<DistanceResult> out;
  out.reserve(targets.size());
  for (const Point& t : targets) {
    if (t.x == x.x && t.y == x.y)
      out.push_back({0.0, 0, {}, true});
    else
      out.push_back(s.result_at(t));
  }
  return out;
}

// Cheapest chain from one rect to another (side membership: the open
// disk meets the rect).  Building block for the crossing searches.
inline DistanceResult crossing_between(const BallCatalog& cat, const QueryFilter& filt,
                                       const Rect& source, const Rect& target) {
  BallSearch s(cat, filt);
  s.for_overlapping(source, [&](int b) { s.seed(b); });
  int nb = cat.nballs(), nc = cat.ncenters();
  return s.run([&](int node) {
    int b = node % nb;
    return dist_to_rect(cat.center_at(b % nc), target) < cat.radius_of(b);
  });
}

enum class CrossMode { kLR, kEasy, kHard };

// Side-to-side chain distance of a box (default: the whole inner box).
// Sides are the one-cell-thick strips along the box edges; the hard
// direction crosses along the longer axis.
inline DistanceResult crossing_distance(const BallCatalog& cat, double delta, double R,
                                        CrossMode mode, const Rect* box_in = nullptr) {
  if (!(delta > 0)) throw std::invalid_argument("crossing_distance: delta must be positive");
  if (!(R > 0) || R > cat.r_cap * (1.0 + 1e-12))
    throw std::invalid_argument("crossing_distance: radius bound outside (0, catalog cap]");
  Rect box = box_in ? *box_in : cat.inner;
  double cell = cat.spec.cell;
  bool lr;
  if (mode == CrossMode::kLR) {
    lr = true;
  } else {
    if (box.width() == box.height())
      throw std::invalid_argument("crossing_distance: square box has no easy/hard direction");
    bool wide = box.width() > box.height();
    lr = (mode == CrossMode::kHard) ? wide : !wide;
  }
  Rect src = lr ? Rect{box.x0, box.y0, box.x0 + cell, box.y1}
                : Rect{box.x0, box.y0, box.x1, box.y0 + cell};
  Rect dst = lr ? Rect{box.x1 - cell, box.y0, box.x1, box.y1}
                : Rect{box.x0, box.y1 - cell, box.x1, box.y1};
  QueryFilter f;
  f.delta = delta;
  f.radius_cap = R;
  f.weighted = true;
  f.region = &box;
  return crossing_between(cat, f, src, dst);
}

namespace detail {

// Half-open crossing test of segment (a -> b) against the rightward
// horizontal ray from `o`: counts boundary hits on one side only, so a
// closed polyline's crossing parity is well defined.
inline bool segment_crosses_ray(Point a, Point b, Point o) {
  bool up = a.y <= o.y && o.y < b.y;
  bool down = b.y <= o.y && o.y < a.y;
  if (!up && !down) return false;
  double xint = a.x + (o.y - a.y) * (b.x - a.x) / (b.y - a.y);
  return xint >= o.x;
}

inline double dist_to_ray(Point p, Point o) {
  if (p.x >= o.x) return std::abs(p.y - o.y);
  return std::hypot(p.x - o.x, p.y - o.y);
}

// A maximal run of dclip-boundary pieces inside the annulus; `strips`
// are the pieces thickened one cell into the clip box.
struct BoundaryComponent {
  std::vector<Rect> strips;
};

inline bool strictly_inside(Point p, const Rect& r) {
  return p.x > r.x0 && p.x < r.x1 && p.y > r.y0 && p.y < r.y1;
}

// Pieces of dclip inside outer \ open(hole), as parameter intervals
// along the boundary cycle, merged across shared corners.
inline std::vector<BoundaryComponent> clip_boundary_components(const Rect& clip,
                                                               const Rect& outer,
                                                               const Rect& hole,
                                                               double cell) {
  struct Piece {
    double t0, t1;  // cyclic boundary parameter
    Rect strip;
  };
  std::vector<Piece> pieces;
  double W = clip.width(), H = clip.height();
  // Edge walk: bottom, right, top, left; param = accumulated arc length.
  struct Edge {
    Point a, b;
    double t0;
    int dir;  // 0 bottom, 1 right, 2 top, 3 left
  };
  Edge edges[4] = {
      {{clip.x0, clip.y0}, {clip.x1, clip.y0}, 0.0, 0},
      {{clip.x1, clip.y0}, {clip.x1, clip.y1}, W, 1},
      {{clip.x1, clip.y1}, {clip.x0, clip.y1}, W + H, 2},
      {{clip.x0, clip.y1}, {clip.x0, clip.y0}, 2 * W + H, 3},
  };
  auto add_piece = [&](const Edge& e, double s0, double s1) {
    if (s1 - s0 <= 1e-12) return;
    Point p0 = {e.a.x + (e.b.x - e.a.x) * s0 / (e.dir % 2 ? H : W),
                e.a.y + (e.b.y - e.a.y) * s0 / (e.dir % 2 ? H : W)};
    Point p1 = {e.a.x + (e.b.x - e.a.x) * s1 / (e.dir % 2 ? H : W),
                e.a.y + (e.b.y - e.a.y) * s1 / (e.dir % 2 ? H : W)};
    Rect seg{std::min(p0.x, p1.x), std::min(p0.y, p1.y), std::max(p0.x, p1.x),
             std::max(p0.y, p1.y)};
    Rect strip = seg;
    switch (e.dir) {
      case 0: strip.y1 += cell; break;  // bottom edge thickens up
      case 1: strip.x0 -= cell; break;  // right edge thickens left
      case 2: strip.y0 -= cell; break;  // top edge thickens down
      case 3: strip.x1 += cell; break;  // left edge thickens right
    }
    pieces.push_back({e.t0 + s0, e.t0 + s1, strip});
  };
  for (const Edge& e : edges) {
    double len = e.dir % 2 ? H : W;
    // Clamp to the outer box along the edge direction.
    double s0 = 0.0, s1 = len;
    bool horizontal = e.dir % 2 == 0;
    double fixed = horizontal ? e.a.y : e.a.x;
    if (horizontal ? (fixed < outer.y0 || fixed > outer.y1)
                   : (fixed < outer.x0 || fixed > outer.x1))
      continue;
    auto param_of = [&](double coord) {
      double along = horizontal ? (coord - e.a.x) / (e.b.x - e.a.x)
                                : (coord - e.a.y) / (e.b.y - e.a.y);
      return along * len;
    };
    double plo = param_of(horizontal ? outer.x0 : outer.y0);
    double phi = param_of(horizontal ? outer.x1 : outer.y1);
    s0 = std::max(s0, std::min(plo, phi));
    s1 = std::min(s1, std::max(plo, phi));
    if (s1 <= s0) continue;
    // Subtract the open hole if the edge line passes through it.
    bool through_hole = horizontal ? (fixed > hole.y0 && fixed < hole.y1)
                                   : (fixed > hole.x0 && fixed < hole.x1);
    if (through_hole) {
      double hlo = param_of(horizontal ? hole.x0 : hole.y0);
      double hhi = param_of(horizontal ? hole.x1 : hole.y1);
      double a = std::min(hlo, hhi), b = std::max(hlo, hhi);
      if (b > s0 && a < s1) {
        add_piece(e, s0, std::max(s0, a));
        add_piece(e, std::min(s1, b), s1);
        continue;
      }
    }
    add_piece(e, s0, s1);
  }
  if (pieces.empty()) return {};
  std::sort(pieces.begin(), pieces.end(),
            [](const Piece& a, const Piece& b) { return a.t0 < b.t0; });
  std::vector<BoundaryComponent> comps;
  double last_t1 = -1.0;
  for (const Piece& p : pieces) {
    if (comps.empty() || p.t0 > last_t1 + 1e-9) comps.push_back({});
    comps.back().strips.push_back(p.strip);
    last_t1 = p.t1;
  }
  // Wrap-around: boundary is a cycle, so merge last into first if they touch.
  double perim = 2 * (W + H);
  if (comps.size() > 1 && pieces.front().t0 < 1e-9 && last_t1 > perim - 1e-9) {
    for (const Rect& r : comps.back().strips) comps.front().strips.push_back(r);
    comps.pop_back();
  }
  return comps;
}

}  // namespace detail

// Cheapest chain circling the hole inside the annulus outer \ hole, over
// balls with centers in the closed annulus.  With a clip box, the search
// is confined to clip (which must cut the ring open, leaving exactly two
// boundary arcs) and the value is the chain distance between those arcs.
inline DistanceResult around_distance(const BallCatalog& cat, double delta, double R,
                                      const Rect& hole, const Rect& outer,
                                      const Rect* clip = nullptr) {
  if (!(delta > 0)) throw std::invalid_argument("around_distance: delta must be positive");
  if (!(R > 0) || R > cat.r_cap * (1.0 + 1e-12))
    throw std::invalid_argument("around_distance: radius bound outside (0, catalog cap]");
  if (!(hole.x0 > outer.x0 && hole.x1 < outer.x1 && hole.y0 > outer.y0 &&
        hole.y1 < outer.y1))
    throw std::invalid_argument("around_distance: outer box must strictly contain the hole");

  QueryFilter f;
  f.delta = delta;
  f.radius_cap = R;
  f.weighted = true;
  auto in_annulus = [outer, hole](Point p) {
    return outer.contains(p) && !detail::strictly_inside(p, hole);
  };

  if (clip) {
    Rect c = *clip;
    auto comps = detail::clip_boundary_components(c, outer, hole, cat.spec.cell);
    if (comps.size() != 2)
      throw std::invalid_argument(
          "around_distance: clip boundary must meet the annulus in exactly two arcs");
    auto keep = [in_annulus, c](Point p) { return in_annulus(p) && c.contains(p); };
    BallSearch s(cat, f, 1, keep);
    auto overlaps_comp = [&](const detail::BoundaryComponent& comp, Point p, double r) {
      for (const Rect& strip : comp.strips)
        if (dist_to_rect(p, strip) < r) return true;
      return false;
    };
    for (const Rect& strip : comps[0].strips)
      s.for_overlapping(strip, [&](int b) { s.seed(b); });
    int nb = cat.nballs(), nc = cat.ncenters();
    return s.run([&](int node) {
      int b = node % nb;
      return overlaps_comp(comps[1], cat.center_at(b % nc), cat.radius_of(b));
    });
  }

  // Full ring: a two-sheet cover cut along the rightward ray from the
  // hole center.  Circuits of odd winding become paths from a ball's
  // copy on sheet 0 to its copy on sheet 1; every such circuit meets the
  // ray, so start balls range over disks meeting the ray.
  Point o = hole.center();
  std::vector<int> starts;
  {
    BallSearch probe(cat, f, 1, in_annulus);
    for (int b = 0; b < cat.nballs(); ++b) {
      if (!probe.active(b)) continue;
      Point p = cat.center_at(b % cat.ncenters());
      if (detail::dist_to_ray(p, o) < cat.radius_of(b)) starts.push_back(b);
    }
  }
  DistanceResult best;
  int nb = cat.nballs();
  for (int b0 : starts) {
    BallSearch s(cat, f, 2, in_annulus);
    s.seed(b0, 0);
    int target = nb + b0;
    auto flips = [&](int u, int v) {
      return detail::segment_crosses_ray(cat.center_at(u % cat.ncenters()),
                                         cat.center_at(v % cat.ncenters()), o);
    };
    DistanceResult r = s.run([target](int node) { return node == target; }, flips,
                             /*free_target=*/true, best.value);
    if (r.reached) {
      r.chain.pop_back();  // drop the closing copy of the start ball
      r.hops -= 1;
      if (!best.reached || std::make_pair(r.value, r.hops) <
                               std::make_pair(best.value, best.hops))
        best = r;
    }
  }
  return best;
}

// Minimum over source points s (on the source_stride sub-lattice of cell
// centers) of the chain distance from s to the far set {y : |y - s| >=
// a * diam}: a ball is a target once its closed disk reaches that set.
inline DistanceResult min_separated_distance(const BallCatalog& cat, double delta,
                                             double R, double a, int source_stride) {
  if (!(delta > 0))
    throw std::invalid_argument("min_separated_distance: delta must be positive");
  if (!(R > 0) || R > cat.r_cap * (1.0 + 1e-12))
    throw std::invalid_argument("min_separated_distance: radius bound outside (0, catalog cap]");
  if (!(a > 0.0 && a < 1.0))
    throw std::invalid_argument("min_separated_distance: separation fraction outside (0, 1)");
  if (source_stride < 1)
    throw std::invalid_argument("min_separated_distance: source stride must be >= 1");
  double need = a * cat.inner.diameter();
  QueryFilter f;
  f.delta = delta;
  f.radius_cap = R;
  f.weighted = true;
  DistanceResult best;
  int nb = cat.nballs(), nc = cat.ncenters();
  for (int j = 0; j * source_stride < cat.spec.inner_h; ++j) {
    for (int i = 0; i * source_stride < cat.spec.inner_w; ++i) {
      Point s{((double)(i * source_stride) + 0.5) * cat.spec.cell,
              ((double)(j * source_stride) + 0.5) * cat.spec.cell};
      BallSearch bs(cat, f);
      bs.for_covering(s, [&](int b) { bs.seed(b); });
      DistanceResult r = bs.run(
          [&](int node) {
            int b = node % nb;
            Point c = cat.center_at(b % nc);
            return std::hypot(c.x - s.x, c.y - s.y) + cat.radius_of(b) >= need;
          },
          nullptr, false, best.value);
      if (r.reached && (!best.reached || std::make_pair(r.value, r.hops) <
                                             std::make_pair(best.value, best.hops)))
        best = r;
    }
  }
  return best;
}

// Reference engine: label-correcting relaxation over all ball pairs with
// the lexicographic (value, hops, predecessor) improvement rule.  Meant
// for oracle comparisons on small catalogs only.
inline DistanceResult brute_force_between(const BallCatalog& cat, const QueryFilter& filt,
                                          const std::vector<int>& sources,
                                          const std::vector<int>& targets) {
  int nb = cat.nballs();
  if (nb > 2000)
    throw std::invalid_argument("brute force: catalog too large (over 2000 balls)");
  std::vector<uint8_t> ok((size_t)nb, 0);
  for (int b = 0; b < nb; ++b) {
    if (cat.radius_of(b) > filt.radius_cap * (1.0 + 1e-12)) continue;
    if (!filt.weighted && cat.mass[(size_t)b] > filt.delta) continue;
    if (filt.region && !filt.region->contains(cat.center_at(b % cat.ncenters()))) continue;
    ok[(size_t)b] = 1;
  }
  std::vector<double> value((size_t)nb, kUnreachable);
  std::vector<int> hops((size_t)nb, 0), pred((size_t)nb, -1);
  auto w = [&](int b) {
    return filt.weighted ? kappa_weight(cat.mass[(size_t)b], filt.delta) : 1.0;
  };
  for (int b : sources) {
    if (!ok[(size_t)b]) continue;
    value[(size_t)b] = w(b);
    hops[(size_t)b] = 1;
    pred[(size_t)b] = -1;
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (int u = 0; u < nb; ++u) {
      if (!ok[(size_t)u] || value[(size_t)u] == kUnreachable) continue;
      Point pu = cat.center_at(u % cat.ncenters());
      double ru = cat.radius_of(u);
      for (int v = 0; v < nb; ++v) {
        if (v == u || !ok[(size_t)v]) continue;
        if (!balls_overlap(pu, ru, cat.center_at(v % cat.ncenters()), cat.radius_of(v)))
          continue;
        double nv = value[(size_t)u] + w(v);
        auto cand = std::make_tuple(nv, hops[(size_t)u] + 1, u);
        auto cur = std::make_tuple(value[(size_t)v], hops[(size_t)v], pred[(size_t)v]);
        if (cand < cur) {
          value[(size_t)v] = nv;
          hops[(size_t)v] = hops[(size_t)u] + 1;
          pred[(size_t)v] = u;
          changed = true;
        }
      }
    }
  }
  DistanceResult best;
  for (int t : targets) {
    if (!ok[(size_t)t] || value[(size_t)t] == kUnreachable) continue;
    if (!best.reached || std::make_pair(value[(size_t)t], hops[(size_t)t]) <
                             std::make_pair(best.value, best.hops)) {
      best.reached = true;
      best.value = value[(size_t)t];
      best.hops = hops[(size_t)t];
      best.chain.clear();
      for (int n = t; n >= 0; n = pred[(size_t)n]) best.chain.push_back(n);
      std::reverse(best.chain.begin(), best.chain.end());
    }
  }
  return best;
}

inline DistanceResult brute_force_distance(const BallCatalog& cat, double delta, Point x,
                                           Point y, bool weighted,
                                           double R = kUnreachable) {
  if (!(delta > 0))
    throw std::invalid_argument("brute_force_distance: delta must be positive");
  detail::check_endpoint(cat, x, "brute_force_distance");
  detail::check_endpoint(cat, y, "brute_force_distance");
  if (x.x == y.x && x.y == y.y) return {0.0, 0, {}, true};
  QueryFilter f;
  f.delta = delta;
  f.radius_cap = weighted ? std::min(R, cat.r_cap) : kUnreachable;
  f.weighted = weighted;
  std::vector<int> sources, targets;
  for (int b = 0; b < cat.nballs(); ++b) {
    Point c = cat.center_at(b % cat.ncenters());
    double r = cat.radius_of(b);
    if (ball_contains(c, r, x)) sources.push_back(b);
    if (ball_contains(c, r, y)) targets.push_back(b);
  }
  return brute_force_between(cat, f, sources, targets);
}

}  // namespace lgd
