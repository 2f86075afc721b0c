#pragma once
// Monte Carlo harness over the sampling pipeline (field -> measure -> catalog
// -> chain distances): crossing-distance quantile tables, the delta power-law
// scan, ratio stability across the scale ladder, log-distance variance and the
// quantile-gap factor, diameter comparability, the hard/easy ratio chi with
// its running sup, block-resampling variance decomposition, exponent
// regressions, and the two-scale distribution test.
//
// Determinism: every draw's seed is a counter derivation of (master seed, a
// role tag, scale, auxiliary index, sample index), so each experiment is
// bit-reproducible from its config alone and subsets of one experiment match
// the corresponding draws of another.  Samples are aggregated in sample-index
// order.  Bootstrap streams derive from the master seed the same way.
//
// Unreachable draws (no admissible chain) are excluded from every statistic
// and their rate reported; a table cell with more than half its draws
// unreachable is marked invalid.  Statistical targets get a three-way verdict:
// pass/fail only when the bootstrap interval is clear of the target, else
// inconclusive — never a silent pass.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "decomposition.hpp"
#include "distance.hpp"
#include "stats.hpp"

namespace lgd {

// Worker count for the outer Monte Carlo loops.  Each sample is an
// independent pipeline (field -> measure -> catalog -> distances) writing its
// own result slot, and every random stream is a counter derivation of the
// sample index, so the thread count changes wall time only, never a result.
// Set before launching a scan; not synchronized with one in flight.
inline int& experiment_threads() { static int count = 1; return count; }

// Pinned acceptance targets for the verdicts below.
inline constexpr double kRswStabilityTarget = 3.0;   // max/min hard-easy ratio across scales
inline constexpr double kLogVarGrowthTarget = 2.0;   // max variance / first-scale variance
inline constexpr double kDiameterSpreadTarget = 2.0; // max/min 90th-pct diameter ratio
inline constexpr double kChiBandTarget = 4.0;        // quantiles / normalizer band width
inline constexpr double kScalingPTarget = 0.01;      // KS p-value threshold
inline constexpr double kMaxUnreachableRate = 0.5;   // beyond this a cell is invalid

enum class Verdict { kPass, kFail, kInconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::kPass: return "pass";
    case Verdict::kFail: return "fail";
    default: return "inconclusive";
  }
}

struct ExperimentConfig {
  double gamma = 1.0;
  std::vector<int> scales = {64, 128, 256};  // inner cells per side, increasing
  double cell_size = 1.0;
  double padding_factor = 2.0;  // sampler pad per side, in inner diameters
  int epsilon_cells = 2;        // coarse-graining circle radius, in cells (power of two)
  std::vector<double> deltas = {1.0};
  double r_cap_fraction = 0.25;  // ball-radius cap = fraction * scale * cell
  int stride = 1;                // catalog stride at scale stride_ref...
  int stride_ref = 64;           // ...kept proportional at other scales
  int samples = 100;
  std::vector<double> percentiles = {0.1, 0.25, 0.5, 0.75, 0.9};
  double p_low = 0.1;   // easy-crossing quantile role in ratio statistics
  double p_high = 0.9;  // hard-crossing quantile role in ratio statistics
  double rsw_percentile = 0.5;
  double crossing_aspect = 2.0;  // rectangle long/short side for easy-hard runs
  std::vector<double> holder_fractions = {0.125, 0.25, 0.5};  // pair separation / scale
  int diameter_points = 4;   // sub-lattice points per axis for the diameter proxy
  int diameter_samples = 60;
  int block_ratio = 4;             // K: resampling block side = scale / K
  double es_padding_factor = 0.5;  // decomposition pad (noise is stored per slice,
                                   // so the full sampler pad would not fit in memory)
  int es_margin_blocks = 0;  // extra block rings beyond the box, -1 = every block
  int bootstrap_reps = 1000;
  std::uint64_t master_seed = 1;

  double epsilon() const { return epsilon_cells * cell_size; }

  int stride_for(int scale) const {
    return std::max(1, (int)(((std::int64_t)stride * scale) / stride_ref));
  }

  double r_cap_for(int scale) const { return r_cap_fraction * scale * cell_size; }

  int rect_long_side(int scale) const { return (int)std::llround(crossing_aspect * scale); }

  void validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("config: " + what); };
    if (!(gamma > 0.0) || !(gamma < 2.0)) fail("gamma must lie in (0, 2)");
    if (scales.empty()) fail("scales must be nonempty");
    for (size_t i = 0; i < scales.size(); ++i) {
      if (scales[i] < 4) fail("scales entries must be at least 4");
      if (i && scales[i] <= scales[i - 1]) fail("scales must be strictly increasing");
    }
    if (!(cell_size > 0)) fail("cell_size must be positive");
    if (!(padding_factor > 0)) fail("padding_factor must be positive");
    if (!(es_padding_factor > 0)) fail("es_padding_factor must be positive");
    if (epsilon_cells < 1 || (epsilon_cells & (epsilon_cells - 1)))
      fail("epsilon_cells must be a power of two");
    if (deltas.empty()) fail("deltas must be nonempty");
    for (double d : deltas)
      if (!(d > 0)) fail("deltas must be positive");
    if (!(r_cap_fraction > 0) || r_cap_fraction > 1.0) fail("r_cap_fraction must lie in (0, 1]");
    if (r_cap_for(scales.front()) < 2.0 * cell_size)
      fail("r_cap_fraction too small for the smallest scale (cap below one ball radius)");
    if (stride < 1) fail("stride must be at least 1");
    if (stride_ref < 1) fail("stride_ref must be at least 1");
    if (samples < 1) fail("samples must be at least 1");
    if (diameter_samples < 1) fail("diameter_samples must be at least 1");
    if (diameter_points < 1) fail("diameter_points must be at least 1");
    if (percentiles.empty()) fail("percentiles must be nonempty");
    for (size_t i = 0; i < percentiles.size(); ++i) {
      if (!(percentiles[i] > 0) || !(percentiles[i] < 1))
        fail("percentiles must lie in (0, 1)");
      if (i && percentiles[i] <= percentiles[i - 1]) fail("percentiles must be increasing");
    }
    for (double p : {p_low, p_high, rsw_percentile})
      if (!(p > 0) || !(p < 1)) fail("p_low, p_high, rsw_percentile must lie in (0, 1)");
    if (!(crossing_aspect >= 1.0 / 3.0) || !(crossing_aspect <= 3.0))
      fail("crossing_aspect must lie in [1/3, 3]");
    for (int s : scales)
      if (rect_long_side(s) == s) fail("crossing_aspect gives a square rectangle");
    if (holder_fractions.empty()) fail("holder_fractions must be nonempty");
    for (size_t i = 0; i < holder_fractions.size(); ++i) {
      if (!(holder_fractions[i] > 0) || !(holder_fractions[i] < 1))
        fail("holder_fractions must lie in (0, 1)");
      if (i && holder_fractions[i] <= holder_fractions[i - 1])
        fail("holder_fractions must be increasing");
    }
    if (block_ratio < 1 || block_ratio > scales.front())
      fail("block_ratio must lie in [1, smallest scale]");
    if (es_margin_blocks < -1) fail("es_margin_blocks must be at least -1");
    if (bootstrap_reps < 2) fail("bootstrap_reps must be at least 2");
  }
};

// One emitted CSV row: a single Monte Carlo value with its provenance.
struct SampleRecord {
  int sample = 0;
  std::uint64_t seed = 0;
  int scale = 0, grid_w = 0, grid_h = 0;
  double delta = 0, r_cap = 0;
  int stride = 1;
  std::string kind;  // "lr", "easy", "hard", "diam", "pair", "es-base", ...
  double aux = 0;    // pair separation, block id, ... (kind-specific)
  double value = kUnreachable;
  int hops = 0;
  bool reached = false;
};

namespace detail {

constexpr std::uint64_t kTagSquare = 1, kTagRect = 2, kTagScaleBase = 3, kTagScaleDoubled = 4,
                        kTagEsDecomp = 5, kTagEsCoarse = 6, kTagEsBlock = 7, kTagBootstrap = 8;

inline std::uint64_t mc_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t scale,
                             std::uint64_t aux, std::uint64_t sample) {
  return derive_seed(master, (tag << 48) | (scale << 20) | aux, sample);
}

// fn(k) for k in [0, n) over the configured worker pool.  Callers write
// per-sample slots and fold serially afterwards, so scheduling order is
// invisible.  The first exception wins and stops further claims.
template <typename Fn>
inline void for_samples(int n, Fn&& fn) {
  int workers = std::min(experiment_threads(), n);
  if (workers <= 1) {
    for (int k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int k; !stop.load(std::memory_order_relaxed) && (k = next.fetch_add(1)) < n;) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!err) err = std::current_exception();
          stop.store(true, std::memory_order_relaxed);
        }
      }
    });
  for (std::thread& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

inline double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

inline std::vector<double> finite_of(const std::vector<double>& v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (double x : v)
    if (std::isfinite(x)) out.push_back(x);
  return out;
}

inline CI reps_ci(std::vector<double> reps, double level = 0.95) {
  if (reps.empty()) return {nan_value(), nan_value()};
  double a = (1.0 - level) / 2.0;
  double lo = quantile_lower(reps, a);
  double hi = quantile_lower(reps, 1.0 - a);
  return {lo, hi};
}

inline double reps_se(const std::vector<double>& reps) {
  return reps.size() < 2 ? 0.0 : std::sqrt(variance(reps));
}

}  // namespace detail

// Bootstrap CIs for several quantiles of one sample, sharing the resamples.
inline std::vector<CI> bootstrap_quantile_cis(const std::vector<double>& data,
                                              const std::vector<double>& ps, std::uint64_t seed,
                                              int B) {
  std::vector<CI> out(ps.size(), {detail::nan_value(), detail::nan_value()});
  if (data.empty()) return out;
  GaussianStream rng(derive_seed(seed, 0x9b00ULL));
  std::vector<std::vector<double>> reps(ps.size(), std::vector<double>(B));
  std::vector<double> re(data.size());
  for (int b = 0; b < B; ++b) {
    for (size_t i = 0; i < data.size(); ++i) re[i] = data[rng.index(data.size())];
    std::sort(re.begin(), re.end());
    for (size_t q = 0; q < ps.size(); ++q) {
      size_t idx = (size_t)std::ceil(ps[q] * re.size() - 1e-9);
      idx = std::min(std::max<size_t>(idx, 1), re.size());
      reps[q][b] = re[idx - 1];
    }
  }
  for (size_t q = 0; q < ps.size(); ++q) out[q] = detail::reps_ci(reps[q]);
  return out;
}

// ---------------------------------------------------------------------------
// Crossing-sample collection: the shared Monte Carlo primitive.

// One draw at one scale.  Per-delta vectors follow the config's delta order;
// unreachable crossings hold kUnreachable.  Reachability does not depend on
// delta (weights are finite for any mass), so one row is excluded for either
// every delta or none.
struct CrossingRow {
  int sample = 0;
  std::uint64_t square_seed = 0, rect_seed = 0;
  bool wide = true;  // rectangle orientation (alternates with the sample index)
  std::vector<double> lr, easy, hard;
  std::vector<int> lr_hops, easy_hops, hard_hops;
};

struct CrossingSamples {
  int scale = 0;
  int rect_w = 0, rect_h = 0;  // wide orientation; tall rows swap the two
  double r_cap = 0;
  int stride = 1;
  std::vector<double> deltas;
  std::vector<CrossingRow> rows;  // sample-index order
};

// Draw `cfg.samples` fields at one scale and compute the side-to-side
// distances: left-right on the square box, easy/hard on the aspect-ratio
// rectangle (orientation alternating so both appear).  Either half can be
// skipped when an experiment only consumes the other.
inline CrossingSamples collect_crossing_samples(const ExperimentConfig& cfg, int scale,
                                                bool with_square = true, bool with_rect = true) {
  CrossingSamples out;
  out.scale = scale;
  out.deltas = cfg.deltas;
  out.r_cap = cfg.r_cap_for(scale);
  out.stride = cfg.stride_for(scale);
  int L = cfg.rect_long_side(scale);
  out.rect_w = L;  // wide orientation; tall rows swap the two
  out.rect_h = scale;
  out.rows.resize(cfg.samples);
  detail::for_samples(cfg.samples, [&](int k) {
    CrossingRow& row = out.rows[k];
    row.sample = k;
    row.wide = (k % 2 == 0);
    if (with_square) {
      row.square_seed = detail::mc_seed(cfg.master_seed, detail::kTagSquare, scale, 0, k);
      GridSpec spec(scale, scale, cfg.cell_size, cfg.padding_factor);
      MeasureGrid m = cell_measures(sample_dgff(spec, row.square_seed), cfg.gamma, cfg.epsilon());
      BallCatalog cat = build_catalog(m, out.stride, out.r_cap);
      for (double d : cfg.deltas) {
        DistanceResult r = crossing_distance(cat, d, out.r_cap, CrossMode::kLR);
        row.lr.push_back(r.reached ? r.value : kUnreachable);
        row.lr_hops.push_back(r.hops);
      }
    }
    if (with_rect) {
      row.rect_seed = detail::mc_seed(cfg.master_seed, detail::kTagRect, scale, 0, k);
      int w = row.wide ? L : scale, h = row.wide ? scale : L;
      GridSpec spec(w, h, cfg.cell_size, cfg.padding_factor);
      MeasureGrid m = cell_measures(sample_dgff(spec, row.rect_seed), cfg.gamma, cfg.epsilon());
      BallCatalog cat = build_catalog(m, out.stride, out.r_cap);
      for (double d : cfg.deltas) {
        DistanceResult re = crossing_distance(cat, d, out.r_cap, CrossMode::kEasy);
        DistanceResult rh = crossing_distance(cat, d, out.r_cap, CrossMode::kHard);
        row.easy.push_back(re.reached ? re.value : kUnreachable);
        row.easy_hops.push_back(re.hops);
        row.hard.push_back(rh.reached ? rh.value : kUnreachable);
        row.hard_hops.push_back(rh.hops);
      }
    }
  });
  return out;
}

namespace detail {

inline void append_crossing_records(std::vector<SampleRecord>& out, const CrossingSamples& cs,
                                    const ExperimentConfig& cfg, int scale) {
  for (const CrossingRow& row : cs.rows) {
    for (size_t di = 0; di < cs.deltas.size(); ++di) {
      auto push = [&](const char* kind, std::uint64_t seed, int w, int h,
                      const std::vector<double>& vals, const std::vector<int>& hops) {
        if (vals.empty()) return;
        SampleRecord r;
        r.sample = row.sample;
        r.seed = seed;
        r.scale = scale;
        r.grid_w = w;
        r.grid_h = h;
        r.delta = cs.deltas[di];
        r.r_cap = cs.r_cap;
        r.stride = cs.stride;
        r.kind = kind;
        r.value = vals[di];
        r.hops = hops[di];
        r.reached = std::isfinite(vals[di]);
        out.push_back(std::move(r));
      };
      push("lr", row.square_seed, scale, scale, row.lr, row.lr_hops);
      int w = row.wide ? cfg.rect_long_side(scale) : scale;
      int h = row.wide ? scale : cfg.rect_long_side(scale);
      push("easy", row.rect_seed, w, h, row.easy, row.easy_hops);
      push("hard", row.rect_seed, w, h, row.hard, row.hard_hops);
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Quantile tables.

struct QuantileCell {
  int scale = 0;
  double delta = 0;
  int samples_total = 0;
  int lr_used = 0, easy_used = 0, hard_used = 0;
  double lr_unreachable = 0, easy_unreachable = 0, hard_unreachable = 0;
  bool valid = true;
  // Per percentile; empty when the corresponding crossings were not collected.
  std::vector<double> theta_lr, theta_easy, theta_hard;
  std::vector<CI> theta_lr_ci, theta_easy_ci, theta_hard_ci;
};

struct QuantileTable {
  std::vector<double> percentiles;
  std::vector<double> deltas;
  std::vector<int> scales;
  std::vector<QuantileCell> cells;  // scale-major, delta-minor
  std::vector<SampleRecord> records;

  const QuantileCell& cell(size_t scale_idx, size_t delta_idx) const {
    return cells.at(scale_idx * deltas.size() + delta_idx);
  }

  // Quantiles nondecreasing in the percentile, and nondecreasing as delta
  // shrinks (per-sample weight monotonicity survives the order statistics
  // exactly, so these are hard errors, not tolerances).
  void check_invariants() const {
    auto check_row = [](const std::vector<double>& t, const char* what) {
      for (size_t i = 1; i < t.size(); ++i)
        if (t[i] < t[i - 1]) throw std::logic_error(std::string("quantile table: ") + what +
                                                    " decreasing in percentile");
    };
    for (const QuantileCell& c : cells) {
      check_row(c.theta_lr, "lr");
      check_row(c.theta_easy, "easy");
      check_row(c.theta_hard, "hard");
    }
    for (size_t si = 0; si < scales.size(); ++si) {
      for (size_t a = 0; a < deltas.size(); ++a) {
        for (size_t b = 0; b < deltas.size(); ++b) {
          if (!(deltas[a] > deltas[b])) continue;  // b is the smaller delta
          const QuantileCell& ca = cell(si, a);
          const QuantileCell& cb = cell(si, b);
          if (!ca.valid || !cb.valid) continue;
          auto pairwise = [&](const std::vector<double>& big_delta,
                              const std::vector<double>& small_delta) {
            for (size_t q = 0; q < big_delta.size() && q < small_delta.size(); ++q)
              if (std::isfinite(big_delta[q]) && std::isfinite(small_delta[q]) &&
                  small_delta[q] < big_delta[q])
                throw std::logic_error("quantile table: quantile decreased as delta shrank");
          };
          pairwise(ca.theta_lr, cb.theta_lr);
          pairwise(ca.theta_easy, cb.theta_easy);
          pairwise(ca.theta_hard, cb.theta_hard);
        }
      }
    }
  }
};

// Order-statistic quantiles of the three crossing kinds with bootstrap CIs.
// Columns may contain kUnreachable entries (excluded, rate reported) or be
// empty (kind not collected).
inline QuantileCell make_quantile_cell(int scale, double delta, const std::vector<double>& lr,
                                       const std::vector<double>& easy,
                                       const std::vector<double>& hard,
                                       const std::vector<double>& percentiles,
                                       std::uint64_t ci_seed, int B) {
  QuantileCell cell;
  cell.scale = scale;
  cell.delta = delta;
  cell.samples_total = (int)std::max({lr.size(), easy.size(), hard.size()});
  auto one = [&](const std::vector<double>& col, int& used, double& rate,
                 std::vector<double>& theta, std::vector<CI>& ci, std::uint64_t salt) {
    if (col.empty()) return;
    std::vector<double> fin = detail::finite_of(col);
    used = (int)fin.size();
    rate = 1.0 - (double)fin.size() / col.size();
    if (rate > kMaxUnreachableRate) cell.valid = false;
    if (fin.empty()) {
      theta.assign(percentiles.size(), detail::nan_value());
      ci.assign(percentiles.size(), {detail::nan_value(), detail::nan_value()});
      return;
    }
    for (double p : percentiles) theta.push_back(quantile_lower(fin, p));
    ci = bootstrap_quantile_cis(fin, percentiles, derive_seed(ci_seed, salt), B);
  };
  one(lr, cell.lr_used, cell.lr_unreachable, cell.theta_lr, cell.theta_lr_ci, 1);
  one(easy, cell.easy_used, cell.easy_unreachable, cell.theta_easy, cell.theta_easy_ci, 2);
  one(hard, cell.hard_used, cell.hard_unreachable, cell.theta_hard, cell.theta_hard_ci, 3);
  return cell;
}

inline QuantileTable estimate_quantiles(const ExperimentConfig& cfg) {
  cfg.validate();
  QuantileTable table;
  table.percentiles = cfg.percentiles;
  table.deltas = cfg.deltas;
  table.scales = cfg.scales;
  for (int scale : cfg.scales) {
    CrossingSamples cs = collect_crossing_samples(cfg, scale);
    for (size_t di = 0; di < cfg.deltas.size(); ++di) {
      std::vector<double> lr, easy, hard;
      for (const CrossingRow& row : cs.rows) {
        lr.push_back(row.lr[di]);
        easy.push_back(row.easy[di]);
        hard.push_back(row.hard[di]);
      }
      table.cells.push_back(make_quantile_cell(
          scale, cfg.deltas[di], lr, easy, hard, cfg.percentiles,
          detail::mc_seed(cfg.master_seed, detail::kTagBootstrap, scale, di, 0),
          cfg.bootstrap_reps));
    }
    detail::append_crossing_records(table.records, cs, cfg, scale);
  }
  table.check_invariants();
  return table;
}

// ---------------------------------------------------------------------------
// Delta power-law scan.

struct QDeltaScan {
  int scale = 0;
  std::vector<double> deltas;
  std::vector<double> q_median;  // per delta, NaN when invalid
  std::vector<CI> q_ci;
  std::vector<bool> valid;
  int monotone_violations = 0;  // samples whose values decreased as delta shrank
  LinearFit fit;                // log Q vs log(1/delta) over valid cells
  CI slope_ci;                  // bootstrap over samples
  bool fit_ok = false;
  std::vector<SampleRecord> records;
};

inline QDeltaScan q_delta_scan(const ExperimentConfig& cfg) {
  cfg.validate();
  double dmin = *std::min_element(cfg.deltas.begin(), cfg.deltas.end());
  double dmax = *std::max_element(cfg.deltas.begin(), cfg.deltas.end());
  if (!(dmax / dmin >= 8.0 * (1.0 - 1e-9)))
    throw std::invalid_argument("q_delta_scan: delta list must span at least three octaves");
  QDeltaScan scan;
  scan.scale = cfg.scales.front();
  scan.deltas = cfg.deltas;
  CrossingSamples cs = collect_crossing_samples(cfg, scan.scale, true, false);
  size_t nd = cfg.deltas.size();

  // Delta order, largest first, for the per-sample monotonicity audit.
  std::vector<size_t> by_delta(nd);
  for (size_t i = 0; i < nd; ++i) by_delta[i] = i;
  std::sort(by_delta.begin(), by_delta.end(),
            [&](size_t a, size_t b) { return cfg.deltas[a] > cfg.deltas[b]; });
  for (const CrossingRow& row : cs.rows) {
    bool bad = false;
    for (size_t i = 1; i < nd; ++i) {
      double prev = row.lr[by_delta[i - 1]], cur = row.lr[by_delta[i]];
      if (std::isfinite(prev) && std::isfinite(cur) && cur < prev) bad = true;
    }
    if (bad) ++scan.monotone_violations;
  }

  for (size_t di = 0; di < nd; ++di) {
    std::vector<double> col;
    for (const CrossingRow& row : cs.rows) col.push_back(row.lr[di]);
    std::vector<double> fin = detail::finite_of(col);
    double rate = col.empty() ? 1.0 : 1.0 - (double)fin.size() / col.size();
    bool ok = !fin.empty() && rate <= kMaxUnreachableRate;
    scan.valid.push_back(ok);
    scan.q_median.push_back(ok ? quantile_lower(fin, 0.5) : detail::nan_value());
    std::vector<double> p50 = {0.5};
    scan.q_ci.push_back(
        ok ? bootstrap_quantile_cis(
                 fin, p50, detail::mc_seed(cfg.master_seed, detail::kTagBootstrap, scan.scale, di, 1),
                 cfg.bootstrap_reps)[0]
           : CI{detail::nan_value(), detail::nan_value()});
  }

  std::vector<double> xs, ys;
  std::vector<size_t> fit_cells;
  for (size_t di = 0; di < nd; ++di) {
    if (!scan.valid[di] || !(scan.q_median[di] > 0)) continue;
    fit_cells.push_back(di);
    xs.push_back(std::log(1.0 / cfg.deltas[di]));
    ys.push_back(std::log(scan.q_median[di]));
  }
  if (xs.size() >= 2) {
    scan.fit = linear_fit(xs, ys);
    scan.fit_ok = true;
    // Slope CI honoring the shared-sample structure: resample rows jointly.
    GaussianStream rng(detail::mc_seed(cfg.master_seed, detail::kTagBootstrap, scan.scale, 0, 2));
    std::vector<double> slopes;
    size_t n = cs.rows.size();
    for (int b = 0; b < cfg.bootstrap_reps; ++b) {
      std::vector<size_t> idx(n);
      for (size_t i = 0; i < n; ++i) idx[i] = rng.index(n);
      std::vector<double> bx, by;
      bool ok = true;
      for (size_t di : fit_cells) {
        std::vector<double> fin;
        for (size_t i : idx)
          if (std::isfinite(cs.rows[i].lr[di])) fin.push_back(cs.rows[i].lr[di]);
        if (fin.empty()) {
          ok = false;
          break;
        }
        double q = quantile_lower(fin, 0.5);
        if (!(q > 0)) {
          ok = false;
          break;
        }
        bx.push_back(std::log(1.0 / cfg.deltas[di]));
        by.push_back(std::log(q));
      }
      if (ok) slopes.push_back(linear_fit(bx, by).slope);
    }
    scan.slope_ci = detail::reps_ci(slopes);
  }
  detail::append_crossing_records(scan.records, cs, cfg, scan.scale);
  return scan;
}

// ---------------------------------------------------------------------------
// Hard/easy ratio stability across the dyadic ladder.

struct RswCell {
  int scale = 0;
  double hard_q = 0, easy_q = 0;
  double ratio = 0;
  CI ratio_ci;
  double violation_rate = 0;  // paired samples with hard < easy
  int pairs = 0;
  bool valid = false;
};

struct RswScan {
  double percentile = 0.5;
  std::vector<RswCell> cells;
  double stability = 0;  // max ratio / min ratio over valid cells
  CI stability_ci;
  bool stability_ok = false;
  Verdict stable = Verdict::kInconclusive;  // target: stability < kRswStabilityTarget
  std::vector<SampleRecord> records;
};

// Aggregation from raw columns (kUnreachable entries excluded; indices pair
// the two columns).  Public so synthetic distributions can be injected.
inline RswCell rsw_cell_from_samples(int scale, const std::vector<double>& hard,
                                     const std::vector<double>& easy, double percentile,
                                     std::uint64_t ci_seed, int B) {
  RswCell cell;
  cell.scale = scale;
  std::vector<double> fh = detail::finite_of(hard), fe = detail::finite_of(easy);
  double rate_h = hard.empty() ? 1.0 : 1.0 - (double)fh.size() / hard.size();
  double rate_e = easy.empty() ? 1.0 : 1.0 - (double)fe.size() / easy.size();
  cell.valid = !fh.empty() && !fe.empty() && rate_h <= kMaxUnreachableRate &&
               rate_e <= kMaxUnreachableRate;
  if (fh.empty() || fe.empty()) {
    cell.ratio = detail::nan_value();
    return cell;
  }
  cell.hard_q = quantile_lower(fh, percentile);
  cell.easy_q = quantile_lower(fe, percentile);
  cell.ratio = cell.hard_q / cell.easy_q;
  size_t n = std::min(hard.size(), easy.size());
  int violations = 0;
  for (size_t i = 0; i < n; ++i) {
    if (!std::isfinite(hard[i]) || !std::isfinite(easy[i])) continue;
    ++cell.pairs;
    if (hard[i] < easy[i]) ++violations;
  }
  cell.violation_rate = cell.pairs ? (double)violations / cell.pairs : 0.0;
  return cell;
}

inline RswScan rsw_ratio(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.scales.size() < 3)
    throw std::invalid_argument("rsw_ratio: needs at least three scales");
  for (size_t i = 1; i < cfg.scales.size(); ++i)
    if (cfg.scales[i] != 2 * cfg.scales[i - 1])
      throw std::invalid_argument("rsw_ratio: scales must form a dyadic ladder");
  RswScan scan;
  scan.percentile = cfg.rsw_percentile;
  std::vector<std::vector<double>> hard_cols, easy_cols;
  for (int scale : cfg.scales) {
    CrossingSamples cs = collect_crossing_samples(cfg, scale, false, true);
    std::vector<double> hard, easy;
    for (const CrossingRow& row : cs.rows) {
      hard.push_back(row.hard[0]);
      easy.push_back(row.easy[0]);
    }
    RswCell cell = rsw_cell_from_samples(
        scale, hard, easy, cfg.rsw_percentile,
        detail::mc_seed(cfg.master_seed, detail::kTagBootstrap, scale, 3, 0), cfg.bootstrap_reps);
    // Joint bootstrap of the ratio (shared rows drive both quantiles).
    GaussianStream rng(detail::mc_seed(cfg.master_seed, detail::kTagBootstrap, scale, 4, 0));
    std::vector<double> reps;
    size_t n = hard.size();
    for (int b = 0; b < cfg.bootstrap_reps; ++b) {
      std::vector<double> bh, be;
      for (size_t i = 0; i < n; ++i) {
        size_t j = rng.index(n);
        if (std::isfinite(hard[j])) bh.push_back(hard[j]);
        if (std::isfinite(easy[j])) be.push_back(easy[j]);
      }
      if (bh.empty() || be.empty()) continue;
      reps.push_back(quantile_lower(bh, cfg.rsw_percentile) /
                     quantile_lower(be, cfg.rsw_percentile));
    }
    cell.ratio_ci = detail::reps_ci(reps);
    scan.cells.push_back(cell);
    hard_cols.push_back(std::move(hard));
    easy_cols.push_back(std::move(easy));
    detail::append_crossing_records(scan.records, cs, cfg, scale);
  }

  std::vector<size_t> valid_cells;
  for (size_t i = 0; i < scan.cells.size(); ++i)
    if (scan.cells[i].valid) valid_cells.push_back(i);
  if (valid_cells.size() >= 2) {
    double lo = kUnreachable, hi = 0;
    for (size_t i : valid_cells) {
      lo = std::min(lo, scan.cells[i].ratio);
      hi = std::max(hi, scan.cells[i].ratio);
    }
    scan.stability = hi / lo;
    scan.stability_ok = true;
    GaussianStream rng(detail::mc_seed(cfg.master_seed, detail::kTagBootstrap, 0, 5, 0));
    std::vector<double> reps;
    for (int b = 0; b < cfg.bootstrap_reps; ++b) {
      double blo = kUnreachable, bhi = 0;
      bool ok = true;
      for (size_t i : valid_cells) {
        const std::vector<double>&hard = hard_cols[i], &easy = easy_cols[i];
        std::vector<double> bh, be;
        size_t n = hard.size();
        for (size_t t = 0; t < n; ++t) {
          size_t j = rng.index(n);
          if (std::isfinite(hard[j])) bh.push_back(hard[j]);
          if (std::isfinite(easy[j])) be.push_back(easy[j]);
        }
        if (bh.empty() || be.empty()) {
          ok = false;
          break;
        }
        double r = quantile_lower(bh, cfg.rsw_percentile) / quantile_lower(be, cfg.rsw_percentile);
        blo = std::min(blo, r);
        bhi = std::max(bhi, r);
      }
      if (ok) reps.push_back(bhi / blo);
    }
    scan.stability_ci = detail::reps_ci(reps);
    if (scan.stability < kRswStabilityTarget && scan.stability_ci.hi < kRswStabilityTarget)
      scan.stable = Verdict::kPass;
    else if (scan.stability >= kRswStabilityTarget && scan.stability_ci.lo > kRswStabilityTarget)
      scan.stable = Verdict::kFail;
  }
  return scan;
}

// ---------------------------------------------------------------------------
// Log-distance variance and the quantile-gap factor.

// Upper bound on the ratio of the q-th to the p-th quantile of a positive
// variable whose logarithm has variance at most v: Gaussian-style tail bounds
// give exp{ sqrt(v) * ((1-q)^{-1/2} + p^{-1/2}) }.
inline double quantile_gap_bound(double variance, double p, double q) {
  if (!(variance >= 0)) throw std::invalid_argument("quantile_gap_bound: variance must be >= 0");
  if (!(p > 0) || !(p < 1) || !(q > 0) || !(q < 1))
    throw std::invalid_argument("quantile_gap_bound: p and q must lie in (0, 1)");
  return std::exp(std::sqrt(variance) * (1.0 / std::sqrt(1.0 - q) + 1.0 / std::sqrt(p)));
}

struct LogVarCell {
  int scale = 0;
  int used = 0;
  double unreachable_rate = 0;
  bool valid = false;
  double var = 0;  // sample variance of log hard-crossing distance
  CI var_ci;       // normal approximation via the jackknife standard error
  double gap_ratio = 0;  // hard quantile at p_high over quantile at p_low
  CI gap_ci;
  double bound_at_var_lo = 0, bound_at_var_hi = 0;
  Verdict gap_within_bound = Verdict::kInconclusive;
};

struct LogVarScan {
  double p_low = 0, p_high = 0;
  std::vector<LogVarCell> cells;
  double growth = 0;  // max variance over the ladder / first-scale variance
  CI growth_ci;
  bool growth_ok = false;
  Verdict bounded_growth = Verdict::kInconclusive;  // target: < kLogVarGrowthTarget
  std::vector<SampleRecord> records;
};

inline LogVarScan logvar_scan(const ExperimentConfig& cfg) {
  cfg.validate();
  LogVarScan scan;
  scan.p_low = cfg.p_low;
  scan.p_high = cfg.p_high;
  std::vector<std::vector<double>> logs_per_scale;
  for (int scale : cfg.scales) {
    CrossingSamples cs = collect_crossing_samples(cfg, scale, false, true);
    LogVarCell cell;
    cell.scale = scale;
    std::vector<double> hard;
    for (const CrossingRow& row : cs.rows) hard.push_back(row.hard[0]);
    std::vector<double> fin = detail::finite_of(hard);
    cell.used = (int)fin.size();
    cell.unreachable_rate = hard.empty() ? 1.0 : 1.0 - (double)fin.size() / hard.size();
    cell.valid = !fin.empty() && cell.unreachable_rate <= kMaxUnreachableRate;
    std::vector<double> logs;
    for (double v : fin) logs.push_back(std::log(v));
    if (logs.size() >= 2) {
      cell.var = variance(logs);
      double se = jackknife_se(logs, [](const std::vector<double>& v) { return variance(v); });
      cell.var_ci = {std::max(0.0, cell.var - 1.96 * se), cell.var + 1.96 * se};
      cell.gap_ratio = quantile_lower(fin, cfg.p_high) / quantile_lower(fin, cfg.p_low);
      GaussianStream rng(detail::mc_seed(cfg.master_seed, detail::kTagBootstrap, scale, 6, 0));
      std::vector<double> reps;
      for (int b = 0; b < cfg.bootstrap_reps; ++b) {
        std::vector<double> re(fin.size());
        for (size_t i = 0; i < fin.size(); ++i) re[i] = fin[rng.index(fin.size())];
        reps.push_back(quantile_lower(re, cfg.p_high) / quantile_lower(re, cfg.p_low));
      }
      cell.gap_ci = detail::reps_ci(reps);
      cell.bound_at_var_lo = quantile_gap_bound(cell.var_ci.lo, cfg.p_low, cfg.p_high);
      cell.bound_at_var_hi = quantile_gap_bound(cell.var_ci.hi, cfg.p_low, cfg.p_high);
      // The bound must hold at the true variance; compare the gap interval
      // against the bound evaluated across the variance interval.
      if (cell.gap_ci.hi <= cell.bound_at_var_lo)
        cell.gap_within_bound = Verdict::kPass;
      else if (cell.gap_ci.lo > cell.bound_at_var_hi)
        cell.gap_within_bound = Verdict::kFail;
    } else if (logs.size() == 1) {
      cell.var = 0;
      cell.var_ci = {0, 0};
      cell.gap_ratio = 1;
      cell.gap_ci = {1, 1};
      cell.bound_at_var_lo = cell.bound_at_var_hi = 1;
      cell.gap_within_bound = Verdict::kPass;
    }
    logs_per_scale.push_back(std::move(logs));
    scan.cells.push_back(cell);
    detail::append_crossing_records(scan.records, cs, cfg, scale);
  }

  if (!scan.cells.empty() && scan.cells.front().valid) {
    double v0 = scan.cells.front().var;
    double vmax = 0;
    bool all_valid = true;
    for (const LogVarCell& c : scan.cells) {
      if (!c.valid) all_valid = false;
      vmax = std::max(vmax, c.var);
    }
    if (all_valid) {
      if (v0 == 0) {
        // Degenerate reference scale: growth is only meaningful when every
        // scale is equally degenerate.
        scan.growth = vmax == 0 ? 1.0 : detail::nan_value();
        scan.growth_ci = {scan.growth, scan.growth};
        scan.growth_ok = vmax == 0;
        scan.bounded_growth = vmax == 0 ? Verdict::kPass : Verdict::kFail;
      } else {
        scan.growth = vmax / v0;
        scan.growth_ok = true;
        GaussianStream rng(detail::mc_seed(cfg.master_seed, detail::kTagBootstrap, 0, 7, 0));
        std::vector<double> reps;
        for (int b = 0; b < cfg.bootstrap_reps; ++b) {
          double b0 = 0, bmax = 0;
          bool ok = true;
          for (size_t s = 0; s < logs_per_scale.size(); ++s) {
            const std::vector<double>& logs = logs_per_scale[s];
            if (logs.size() < 2) {
              ok = false;
              break;
            }
            std::vector<double> re(logs.size());
            for (size_t i = 0; i < logs.size(); ++i) re[i] = logs[rng.index(logs.size())];
            double v = variance(re);
            if (s == 0) b0 = v;
            bmax = std::max(bmax, v);
          }
          if (ok && b0 > 0) reps.push_back(bmax / b0);
        }
        scan.growth_ci = detail::reps_ci(reps);
        if (scan.growth < kLogVarGrowthTarget && scan.growth_ci.hi < kLogVarGrowthTarget)
          scan.bounded_growth = Verdict::kPass;
        else if (scan.growth >= kLogVarGrowthTarget && scan.growth_ci.lo > kLogVarGrowthTarget)
          scan.bounded_growth = Verdict::kFail;
      }
    }
  }
  return scan;
}

// ---------------------------------------------------------------------------
// Diameter comparability: max pairwise point distance over a sub-lattice
// versus the same-sample left-right crossing.

struct DiameterCell {
  int scale = 0;
  int used = 0;       // samples with both a finite diameter and a finite crossing
  int samples = 0;
  double unreachable_rate = 0;
  bool valid = false;
  double median_lr = 0;
  double p90_ratio = 0;  // 90th percentile of diameter / median crossing
  CI p90_ci;
  bool ci_defined = false;
  std::vector<double> ratios;
};

struct DiameterScan {
  std::vector<DiameterCell> cells;
  double spread = 0;  // max p90 over min p90 across valid cells
  CI spread_ci;
  bool spread_ok = false;
  Verdict comparable = Verdict::kInconclusive;  // target: < kDiameterSpreadTarget
  std::vector<SampleRecord> records;
};

inline DiameterScan diameter_ratio(const ExperimentConfig& cfg) {
  cfg.validate();
  DiameterScan scan;
  std::vector<std::vector<double>> lr_cols, diam_cols;
  double delta = cfg.deltas.front();
  for (int scale : cfg.scales) {
    DiameterCell cell;
    cell.scale = scale;
    cell.samples = cfg.diameter_samples;
    double r_cap = cfg.r_cap_for(scale);
    int stride = cfg.stride_for(scale);
    // Interior probe lattice at fractions (i+1)/(P+1) of the box side.
    std::vector<Point> pts;
    int P = cfg.diameter_points;
    std::vector<int> axis;
    for (int i = 0; i < P; ++i) {
      int ci = std::clamp((int)std::llround((double)(i + 1) * scale / (P + 1) - 0.5), 0, scale - 1);
      if (axis.empty() || axis.back() != ci) axis.push_back(ci);
    }
    for (int cj : axis)
      for (int ci : axis)
        pts.push_back({(ci + 0.5) * cfg.cell_size, (cj + 0.5) * cfg.cell_size});

    std::vector<double> lr_col(cfg.diameter_samples), diam_col(cfg.diameter_samples);
    std::vector<int> lr_hops(cfg.diameter_samples);
    detail::for_samples(cfg.diameter_samples, [&](int k) {
      std::uint64_t seed = detail::mc_seed(cfg.master_seed, detail::kTagSquare, scale, 0, k);
      GridSpec spec(scale, scale, cfg.cell_size, cfg.padding_factor);
      MeasureGrid m = cell_measures(sample_dgff(spec, seed), cfg.gamma, cfg.epsilon());
      BallCatalog cat = build_catalog(m, stride, r_cap);
      DistanceResult lr = crossing_distance(cat, delta, r_cap, CrossMode::kLR);
      double diam = 0;
      for (size_t a = 0; a + 1 < pts.size() && std::isfinite(diam); ++a) {
        std::vector<Point> targets(pts.begin() + a + 1, pts.end());
        std::vector<DistanceResult> res = multi_point_distance(cat, delta, r_cap, pts[a], targets);
        for (const DistanceResult& r : res)
          diam = std::max(diam, r.reached ? r.value : kUnreachable);
      }
      lr_col[k] = lr.reached ? lr.value : kUnreachable;
      lr_hops[k] = lr.hops;
      diam_col[k] = diam;
    });
    for (int k = 0; k < cfg.diameter_samples; ++k) {
      SampleRecord rec;
      rec.sample = k;
      rec.seed = detail::mc_seed(cfg.master_seed, detail::kTagSquare, scale, 0, k);
      rec.scale = scale;
      rec.grid_w = rec.grid_h = scale;
      rec.delta = delta;
      rec.r_cap = r_cap;
      rec.stride = stride;
      rec.kind = "lr";
      rec.value = lr_col[k];
      rec.hops = lr_hops[k];
      rec.reached = std::isfinite(lr_col[k]);
      scan.records.push_back(rec);
      rec.kind = "diam";
      rec.value = diam_col[k];
      rec.hops = 0;
      rec.reached = std::isfinite(diam_col[k]);
      scan.records.push_back(rec);
    }

    std::vector<double> fin_lr = detail::finite_of(lr_col);
    int bad = 0;
    for (size_t i = 0; i < lr_col.size(); ++i)
      if (!std::isfinite(lr_col[i]) || !std::isfinite(diam_col[i])) ++bad;
    cell.unreachable_rate = (double)bad / cfg.diameter_samples;
    if (!fin_lr.empty()) {
      cell.median_lr = quantile_lower(fin_lr, 0.5);
      if (cell.median_lr > 0)
        for (size_t i = 0; i < lr_col.size(); ++i)
          if (std::isfinite(lr_col[i]) && std::isfinite(diam_col[i]))
            cell.ratios.push_back(diam_col[i] / cell.median_lr);
    }
    cell.used = (int)cell.ratios.size();
    cell.valid = cell.used > 0 && cell.unreachable_rate <= kMaxUnreachableRate;
    if (cell.used > 0) cell.p90_ratio = quantile_lower(cell.ratios, 0.9);
    if (cell.used >= 2) {
      // Joint bootstrap over samples: the median and the ratio quantile move
      // together.
      GaussianStream rng(detail::mc_seed(cfg.master_seed, detail::kTagBootstrap, scale, 8, 0));
      std::vector<double> reps;
      size_t n = lr_col.size();
      for (int b = 0; b < cfg.bootstrap_reps; ++b) {
        std::vector<double> blr, bratio_num;
        std::vector<size_t> idx(n);
        for (size_t i = 0; i < n; ++i) idx[i] = rng.index(n);
        for (size_t i : idx)
          if (std::isfinite(lr_col[i])) blr.push_back(lr_col[i]);
        if (blr.empty()) continue;
        double med = quantile_lower(blr, 0.5);
        if (!(med > 0)) continue;
        std::vector<double> bratios;
        for (size_t i : idx)
          if (std::isfinite(lr_col[i]) && std::isfinite(diam_col[i]))
            bratios.push_back(diam_col[i] / med);
        if (bratios.empty()) continue;
        reps.push_back(quantile_lower(bratios, 0.9));
      }
      cell.p90_ci = detail::reps_ci(reps);
      cell.ci_defined = !reps.empty();
    } else {
      cell.p90_ci = {detail::nan_value(), detail::nan_value()};
    }
    lr_cols.push_back(std::move(lr_col));
    diam_cols.push_back(std::move(diam_col));
    scan.cells.push_back(std::move(cell));
  }

  std::vector<size_t> valid_cells;
  for (size_t i = 0; i < scan.cells.size(); ++i)
    if (scan.cells[i].valid && scan.cells[i].ci_defined) valid_cells.push_back(i);
  if (valid_cells.size() >= 2) {
    double lo = kUnreachable, hi = 0;
    for (size_t i : valid_cells) {
      lo = std::min(lo, scan.cells[i].p90_ratio);
      hi = std::max(hi, scan.cells[i].p90_ratio);
    }
    scan.spread = hi / lo;
    scan.spread_ok = true;
    GaussianStream rng(detail::mc_seed(cfg.master_seed, detail::kTagBootstrap, 0, 9, 0));
    std::vector<double> reps;
    for (int b = 0; b < cfg.bootstrap_reps; ++b) {
      double blo = kUnreachable, bhi = 0;
      bool ok = true;
      for (size_t s : valid_cells) {
        size_t n = lr_cols[s].size();
        std::vector<size_t> idx(n);
        for (size_t i = 0; i < n; ++i) idx[i] = rng.index(n);
        std::vector<double> blr;
        for (size_t i : idx)
          if (std::isfinite(lr_cols[s][i])) blr.push_back(lr_cols[s][i]);
        if (blr.empty()) {
          ok = false;
          break;
        }
        double med = quantile_lower(blr, 0.5);
        std::vector<double> bratios;
        if (med > 0)
          for (size_t i : idx)
            if (std::isfinite(lr_cols[s][i]) && std::isfinite(diam_cols[s][i]))
              bratios.push_back(diam_cols[s][i] / med);
        if (bratios.empty()) {
          ok = false;
          break;
        }
        double p = quantile_lower(bratios, 0.9);
        blo = std::min(blo, p);
        bhi = std::max(bhi, p);
      }
      if (ok) reps.push_back(bhi / blo);
    }
    scan.spread_ci = detail::reps_ci(reps);
    if (scan.spread < kDiameterSpreadTarget && scan.spread_ci.hi < kDiameterSpreadTarget)
      scan.comparable = Verdict::kPass;
    else if (scan.spread >= kDiameterSpreadTarget && scan.spread_ci.lo > kDiameterSpreadTarget)
      scan.comparable = Verdict::kFail;
  }
  return scan;
}

// ---------------------------------------------------------------------------
// Hard/easy quantile ratio chi and its running sup across scales.

struct ChiCell {
  int scale = 0;
  double theta_hard_high = 0, theta_easy_low = 0, theta_star = 0;
  double chi = 0;  // hard quantile at p_high over easy quantile at p_low
  CI chi_ci;
  double chi_bar = 0;  // running max of chi up the ladder
  double easy_rel = 0, hard_rel = 0;  // the two quantiles over theta_star
  int hard_used = 0, easy_used = 0;
  bool valid = false;
};

struct ChiEstimate {
  double p_low = 0, p_high = 0;
  std::vector<ChiCell> cells;
  double band_width = 0;  // smallest c with every normalized quantile in [1/c, c]
  CI band_ci;
  bool band_ok = false;
  Verdict banded = Verdict::kInconclusive;  // target: < kChiBandTarget
  std::vector<SampleRecord> records;

  void check_invariants() const {
    double prev = -kUnreachable;
    for (const ChiCell& c : cells) {
      if (!c.valid) continue;
      if (!(c.chi >= 0)) throw std::logic_error("chi estimate: negative ratio");
      if (c.chi_bar + 1e-12 < prev)
        throw std::logic_error("chi estimate: running sup decreased");
      prev = c.chi_bar;
    }
  }
};

// Aggregation from raw columns; public for synthetic injection.
inline ChiCell chi_cell_from_samples(int scale, const std::vector<double>& hard,
                                     const std::vector<double>& easy, double p_low, double p_high,
                                     std::uint64_t ci_seed, int B) {
  ChiCell cell;
  cell.scale = scale;
  std::vector<double> fh = detail::finite_of(hard), fe = detail::finite_of(easy);
  cell.hard_used = (int)fh.size();
  cell.easy_used = (int)fe.size();
  double rate_h = hard.empty() ? 1.0 : 1.0 - (double)fh.size() / hard.size();
  double rate_e = easy.empty() ? 1.0 : 1.0 - (double)fe.size() / easy.size();
  cell.valid = !fh.empty() && !fe.empty() && rate_h <= kMaxUnreachableRate &&
               rate_e <= kMaxUnreachableRate;
  if (fh.empty() || fe.empty()) {
    cell.chi = detail::nan_value();
    return cell;
  }
  cell.theta_hard_high = quantile_lower(fh, p_high);
  cell.theta_easy_low = quantile_lower(fe, p_low);
  cell.theta_star = quantile_lower(fh, 0.5);
  cell.chi = cell.theta_hard_high / cell.theta_easy_low;
  if (cell.theta_star > 0) {
    cell.easy_rel = cell.theta_easy_low / cell.theta_star;
    cell.hard_rel = cell.theta_hard_high / cell.theta_star;
  }
  GaussianStream rng(derive_seed(ci_seed, 0xc1ULL));
  std::vector<double> reps;
  size_t n = std::max(hard.size(), easy.size());
  for (int b = 0; b < B; ++b) {
    std::vector<double> bh, be;
    for (size_t i = 0; i < n; ++i) {
      size_t j = rng.index(n);
      if (j < hard.size() && std::isfinite(hard[j])) bh.push_back(hard[j]);
      if (j < easy.size() && std::isfinite(easy[j])) be.push_back(easy[j]);
    }
    if (bh.empty() || be.empty()) continue;
    reps.push_back(quantile_lower(bh, p_high) / quantile_lower(be, p_low));
  }
  cell.chi_ci = detail::reps_ci(reps);
  return cell;
}

inline ChiEstimate chi_estimate(const ExperimentConfig& cfg) {
  cfg.validate();
  ChiEstimate est;
  est.p_low = cfg.p_low;
  est.p_high = cfg.p_high;
  std::vector<std::vector<double>> hard_cols, easy_cols;
  double running = 0;
  bool have_running = false;
  for (int scale : cfg.scales) {
    CrossingSamples cs = collect_crossing_samples(cfg, scale, false, true);
    std::vector<double> hard, easy;
    for (const CrossingRow& row : cs.rows) {
      hard.push_back(row.hard[0]);
      easy.push_back(row.easy[0]);
    }
    ChiCell cell = chi_cell_from_samples(
        scale, hard, easy, cfg.p_low, cfg.p_high,
        detail::mc_seed(cfg.master_seed, detail::kTagBootstrap, scale, 10, 0), cfg.bootstrap_reps);
    if (cell.valid) {
      running = have_running ? std::max(running, cell.chi) : cell.chi;
      have_running = true;
    }
    cell.chi_bar = have_running ? running : detail::nan_value();
    est.cells.push_back(cell);
    hard_cols.push_back(std::move(hard));
    easy_cols.push_back(std::move(easy));
    detail::append_crossing_records(est.records, cs, cfg, scale);
  }

  std::vector<size_t> valid_cells;
  for (size_t i = 0; i < est.cells.size(); ++i)
    if (est.cells[i].valid && est.cells[i].theta_star > 0) valid_cells.push_back(i);
  if (!valid_cells.empty()) {
    // Smallest factor c with every normalized quantile inside [1/c, c]: the
    // common constant band around the normalizer, over all scales.
    double lo = kUnreachable, hi = 0;
    for (size_t i : valid_cells) {
      lo = std::min({lo, est.cells[i].easy_rel, est.cells[i].hard_rel});
      hi = std::max({hi, est.cells[i].easy_rel, est.cells[i].hard_rel});
    }
    if (lo > 0) {
      est.band_width = std::max(hi, 1.0 / lo);
      est.band_ok = true;
      GaussianStream rng(detail::mc_seed(cfg.master_seed, detail::kTagBootstrap, 0, 11, 0));
      std::vector<double> reps;
      for (int b = 0; b < cfg.bootstrap_reps; ++b) {
        double blo = kUnreachable, bhi = 0;
        bool ok = true;
        for (size_t s : valid_cells) {
          const std::vector<double>&hard = hard_cols[s], &easy = easy_cols[s];
          std::vector<double> bh, be;
          size_t n = hard.size();
          for (size_t t = 0; t < n; ++t) {
            size_t j = rng.index(n);
            if (std::isfinite(hard[j])) bh.push_back(hard[j]);
            if (std::isfinite(easy[j])) be.push_back(easy[j]);
          }
          if (bh.empty() || be.empty()) {
            ok = false;
            break;
          }
          double star = quantile_lower(bh, 0.5);
          if (!(star > 0)) {
            ok = false;
            break;
          }
          double er = quantile_lower(be, cfg.p_low) / star;
          double hr = quantile_lower(bh, cfg.p_high) / star;
          blo = std::min({blo, er, hr});
          bhi = std::max({bhi, er, hr});
        }
        if (ok && blo > 0) reps.push_back(std::max(bhi, 1.0 / blo));
      }
      est.band_ci = detail::reps_ci(reps);
      if (est.band_width < kChiBandTarget && est.band_ci.hi < kChiBandTarget)
        est.banded = Verdict::kPass;
      else if (est.band_width >= kChiBandTarget && est.band_ci.lo > kChiBandTarget)
        est.banded = Verdict::kFail;
    }
  }
  est.check_invariants();
  return est;
}

// ---------------------------------------------------------------------------
// Block-resampling variance decomposition.

struct EsOptions {
  GridSpec spec{8, 8, 1.0, 0.5};
  int block_side = 2;  // padded-grid cells
  int samples = 50;
  std::uint64_t master_seed = 1;
  int margin_blocks = 0;  // extra rings beyond blocks meeting the box; -1 = all
  int bootstrap_reps = 1000;
};

struct EsResult {
  int samples = 0, invalid_samples = 0;
  int blocks = 0;  // blocks actually resampled
  int block_side = 0;
  double var_f = 0;
  CI var_ci;
  double coarse_term = 0;  // half the mean squared change under a base redraw
  CI coarse_ci;
  double block_sum = 0;  // sum over blocks of half the mean squared change
  CI block_sum_ci;
  std::vector<int> block_ids;
  std::vector<double> block_terms;
  double bound = 0;   // coarse_term + block_sum
  double slack = 0;   // bound - var_f (the inequality predicts >= 0)
  CI slack_ci;
  double slack_se = 0;
  double coarse_share = 0;  // coarse_term / bound
  Verdict holds = Verdict::kInconclusive;
  std::vector<SampleRecord> records;
};

// Core driver: statistics of `stat` under independent redraws, with one-block
// and coarse-layer resampling deltas.  The variance bound
//   Var f  <=  E[ (f - f_coarse)^2 ] / 2  +  sum_i E[ (f - f_i)^2 ] / 2
// is exact for the full block partition; restricting to blocks near the box
// only drops nonnegative terms when the statistic ignores the far padding, so
// the reported bound is still a valid target for statistics supported on the
// inner box, up to Monte Carlo error.
inline EsResult efron_stein_core(const EsOptions& opt,
                                 const std::function<double(const FieldSample&)>& stat) {
  if (opt.samples < 2) throw std::invalid_argument("efron_stein_core: needs at least 2 samples");
  EsResult res;
  res.samples = opt.samples;
  res.block_side = opt.block_side;

  std::vector<double> f0(opt.samples, detail::nan_value());
  std::vector<double> fc(opt.samples, detail::nan_value());
  std::vector<std::vector<double>> fb;  // [block][sample]

  if (opt.block_side <= 0 || opt.block_side > std::min(opt.spec.padded_w, opt.spec.padded_h))
    throw std::invalid_argument("efron_stein_core: block side outside the padded grid");

  // Pick the resampled blocks up front; the layout is sample-independent.
  {
    std::vector<int> cuts_x = block_axis_cuts(opt.spec.padded_w, opt.block_side);
    std::vector<int> cuts_y = block_axis_cuts(opt.spec.padded_h, opt.block_side);
    int x0 = opt.spec.pad_x, y0 = opt.spec.pad_y;
    int x1 = x0 + opt.spec.inner_w, y1 = y0 + opt.spec.inner_h;
    if (opt.margin_blocks > 0) {
      int g = opt.margin_blocks * opt.block_side;
      x0 -= g;
      y0 -= g;
      x1 += g;
      y1 += g;
    }
    int b = 0;
    for (size_t jy = 0; jy + 1 < cuts_y.size(); ++jy)
      for (size_t ix = 0; ix + 1 < cuts_x.size(); ++ix, ++b) {
        bool keep = opt.margin_blocks < 0 ||
                    (cuts_x[ix] < x1 && cuts_x[ix + 1] > x0 && cuts_y[jy] < y1 &&
                     cuts_y[jy + 1] > y0);
        if (keep) res.block_ids.push_back(b);
      }
    res.blocks = (int)res.block_ids.size();
    fb.assign(res.block_ids.size(), std::vector<double>(opt.samples, detail::nan_value()));
  }

  std::uint64_t scale_key = (std::uint64_t)opt.spec.inner_w * 131u + (std::uint64_t)opt.spec.inner_h;
  detail::for_samples(opt.samples, [&](int k) {
    std::uint64_t dec_seed =
        detail::mc_seed(opt.master_seed, detail::kTagEsDecomp, scale_key & 0xfffffu, 0, k);
    WhiteNoiseDecomposition dec = build_decomposition(opt.spec, opt.block_side, dec_seed);
    f0[k] = stat(dec.base);
    {
      std::uint64_t s =
          detail::mc_seed(opt.master_seed, detail::kTagEsCoarse, scale_key & 0xfffffu, 0, k);
      fc[k] = stat(resample_coarse(dec, s));
    }
    for (size_t bi = 0; bi < res.block_ids.size(); ++bi) {
      std::uint64_t s = detail::mc_seed(opt.master_seed, detail::kTagEsBlock, scale_key & 0xfffffu,
                                        (std::uint64_t)res.block_ids[bi], k);
      fb[bi][k] = stat(resample_block(dec, res.block_ids[bi], s));
    }
  });
  for (int k = 0; k < opt.samples; ++k) {
    auto rec = [&](const char* kind, double aux, double value) {
      SampleRecord r;
      r.sample = k;
      r.seed = detail::mc_seed(opt.master_seed, detail::kTagEsDecomp, scale_key & 0xfffffu, 0, k);
      r.scale = opt.spec.inner_h;
      r.grid_w = opt.spec.inner_w;
      r.grid_h = opt.spec.inner_h;
      r.kind = kind;
      r.aux = aux;
      r.value = std::isfinite(value) ? value : kUnreachable;
      r.reached = std::isfinite(value);
      res.records.push_back(std::move(r));
    };
    rec("es-base", 0, f0[k]);
    rec("es-coarse", 0, fc[k]);
    for (size_t bi = 0; bi < res.block_ids.size(); ++bi)
      rec("es-block", (double)res.block_ids[bi], fb[bi][k]);
  }

  for (int k = 0; k < opt.samples; ++k)
    if (!std::isfinite(f0[k])) ++res.invalid_samples;

  // Pairwise exclusion: each expectation uses the samples where both of its
  // evaluations are finite.
  auto mean_sq_half = [&](const std::vector<double>& g) {
    double acc = 0;
    int n = 0;
    for (int k = 0; k < opt.samples; ++k) {
      if (!std::isfinite(f0[k]) || !std::isfinite(g[k])) continue;
      double d = f0[k] - g[k];
      acc += d * d;
      ++n;
    }
    return n ? 0.5 * acc / n : detail::nan_value();
  };

  std::vector<double> f0_fin = detail::finite_of(f0);
  res.var_f = f0_fin.size() >= 2 ? variance(f0_fin) : detail::nan_value();
  res.coarse_term = mean_sq_half(fc);
  res.block_terms.resize(fb.size());
  res.block_sum = 0;
  bool terms_ok = std::isfinite(res.var_f) && std::isfinite(res.coarse_term);
  for (size_t bi = 0; bi < fb.size(); ++bi) {
    res.block_terms[bi] = mean_sq_half(fb[bi]);
    if (!std::isfinite(res.block_terms[bi])) terms_ok = false;
    else res.block_sum += res.block_terms[bi];
  }
  if (terms_ok) {
    res.bound = res.coarse_term + res.block_sum;
    res.slack = res.bound - res.var_f;
    res.coarse_share = res.bound > 0 ? res.coarse_term / res.bound : 0.0;

    GaussianStream rng(derive_seed(opt.master_seed, 0xe5b007ULL));
    std::vector<double> reps;
    std::vector<int> idx(opt.samples);
    for (int b = 0; b < opt.bootstrap_reps; ++b) {
      for (int i = 0; i < opt.samples; ++i) idx[i] = (int)rng.index(opt.samples);
      std::vector<double> bf;
      for (int i : idx)
        if (std::isfinite(f0[i])) bf.push_back(f0[i]);
      if (bf.size() < 2) continue;
      double bvar = variance(bf);
      auto half = [&](const std::vector<double>& g, bool& ok) {
        double acc = 0;
        int n = 0;
        for (int i : idx) {
          if (!std::isfinite(f0[i]) || !std::isfinite(g[i])) continue;
          double d = f0[i] - g[i];
          acc += d * d;
          ++n;
        }
        if (!n) ok = false;
        return n ? 0.5 * acc / n : 0.0;
      };
      bool ok = true;
      double bound = half(fc, ok);
      for (const std::vector<double>& g : fb) bound += half(g, ok);
      if (ok) reps.push_back(bound - bvar);
    }
    res.slack_ci = detail::reps_ci(reps);
    res.slack_se = detail::reps_se(reps);
    if (std::isfinite(res.slack_ci.lo) && res.slack_ci.lo >= 0)
      res.holds = Verdict::kPass;
    else if (res.slack + 3.0 * res.slack_se < 0)
      res.holds = Verdict::kFail;

    // Variance and term CIs from the same resampling stream layout.
    GaussianStream rng2(derive_seed(opt.master_seed, 0xe5b008ULL));
    std::vector<double> var_reps, coarse_reps, sum_reps;
    for (int b = 0; b < opt.bootstrap_reps; ++b) {
      for (int i = 0; i < opt.samples; ++i) idx[i] = (int)rng2.index(opt.samples);
      std::vector<double> bf;
      for (int i : idx)
        if (std::isfinite(f0[i])) bf.push_back(f0[i]);
      if (bf.size() < 2) continue;
      bool ok = true;
      auto half = [&](const std::vector<double>& g, bool& okk) {
        double acc = 0;
        int n = 0;
        for (int i : idx) {
          if (!std::isfinite(f0[i]) || !std::isfinite(g[i])) continue;
          double d = f0[i] - g[i];
          acc += d * d;
          ++n;
        }
        if (!n) okk = false;
        return n ? 0.5 * acc / n : 0.0;
      };
      double bc = half(fc, ok);
      double bs = 0;
      for (const std::vector<double>& g : fb) bs += half(g, ok);
      if (!ok) continue;
      var_reps.push_back(variance(bf));
      coarse_reps.push_back(bc);
      sum_reps.push_back(bs);
    }
    res.var_ci = detail::reps_ci(var_reps);
    res.coarse_ci = detail::reps_ci(coarse_reps);
    res.block_sum_ci = detail::reps_ci(sum_reps);
  }
  return res;
}

// The decomposition experiment proper: the statistic is the log hard-crossing
// distance of the smallest-scale rectangle, blocks of side scale/block_ratio.
inline EsResult efron_stein_decomposition(const ExperimentConfig& cfg) {
  cfg.validate();
  int scale = cfg.scales.front();
  int L = cfg.rect_long_side(scale);
  EsOptions opt;
  opt.spec = GridSpec(L, scale, cfg.cell_size, cfg.es_padding_factor);
  opt.block_side = std::max(1, scale / cfg.block_ratio);
  opt.samples = cfg.samples;
  opt.master_seed = cfg.master_seed;
  opt.margin_blocks = cfg.es_margin_blocks;
  opt.bootstrap_reps = cfg.bootstrap_reps;
  double r_cap = cfg.r_cap_for(scale);
  int stride = cfg.stride_for(scale);
  double delta = cfg.deltas.front();
  auto stat = [&cfg, r_cap, stride, delta](const FieldSample& f) {
    MeasureGrid m = cell_measures(f, cfg.gamma, cfg.epsilon());
    BallCatalog cat = build_catalog(m, stride, r_cap);
    DistanceResult r = crossing_distance(cat, delta, r_cap, CrossMode::kHard);
    return r.reached ? std::log(r.value) : detail::nan_value();
  };
  return efron_stein_core(opt, stat);
}

// ---------------------------------------------------------------------------
// Distance-measure exponent regressions.

struct HolderCell {
  int scale = 0;
  double theta_star = 0;  // median hard crossing, the normalization
  std::vector<int> separations;  // cells
  int pairs_used = 0;
  double unreachable_rate = 0;
  bool degenerate = false;
  LinearFit forward;  // log distance on log(separation / scale)
  LinearFit inverse;  // the swapped regression
  CI forward_ci, inverse_ci;  // bootstrap over samples
  bool ci_defined = false;
};

struct HolderScan {
  std::vector<HolderCell> cells;
  Verdict exponents_positive = Verdict::kInconclusive;  // both CIs exclude zero
  std::vector<SampleRecord> records;
};

inline HolderScan holder_scan(const ExperimentConfig& cfg) {
  cfg.validate();
  HolderScan scan;
  double delta = cfg.deltas.front();
  bool all_pos = true, any_ci = false, any_nonpos = false;
  for (int scale : cfg.scales) {
    HolderCell cell;
    cell.scale = scale;
    double r_cap = cfg.r_cap_for(scale);
    int stride = cfg.stride_for(scale);

    {  // Normalizer from the rectangle ensemble at this scale.
      CrossingSamples cs = collect_crossing_samples(cfg, scale, false, true);
      std::vector<double> hard;
      for (const CrossingRow& row : cs.rows)
        if (std::isfinite(row.hard[0])) hard.push_back(row.hard[0]);
      cell.theta_star = hard.empty() ? detail::nan_value() : quantile_lower(hard, 0.5);
      detail::append_crossing_records(scan.records, cs, cfg, scale);
    }
    // Distances regress normalized by the typical crossing; the shift moves
    // the intercept only, never the slopes.
    double norm = std::isfinite(cell.theta_star) && cell.theta_star > 0
                      ? std::log(cell.theta_star)
                      : 0.0;

    for (double fr : cfg.holder_fractions) {
      int h = (int)std::llround(fr * scale);
      h = std::clamp(h, 1, scale - 1);
      if (cell.separations.empty() || cell.separations.back() != h) cell.separations.push_back(h);
    }
    int hmax = cell.separations.back();

    // Pooled regression points and their per-sample grouping for the bootstrap.
    std::vector<std::vector<std::pair<double, double>>> by_sample(cfg.samples);
    std::vector<std::vector<DistanceResult>> by_pair(cfg.samples);
    detail::for_samples(cfg.samples, [&](int k) {
      std::uint64_t seed = detail::mc_seed(cfg.master_seed, detail::kTagSquare, scale, 0, k);
      GridSpec spec(scale, scale, cfg.cell_size, cfg.padding_factor);
      MeasureGrid m = cell_measures(sample_dgff(spec, seed), cfg.gamma, cfg.epsilon());
      BallCatalog cat = build_catalog(m, stride, r_cap);
      bool horiz = (k % 2 == 0);
      int lo = (scale - hmax) / 2, mid = scale / 2;
      auto center = [&](int ci, int cj) {
        return Point{(ci + 0.5) * cfg.cell_size, (cj + 0.5) * cfg.cell_size};
      };
      Point x = horiz ? center(lo, mid) : center(mid, lo);
      std::vector<Point> targets;
      for (int h : cell.separations)
        targets.push_back(horiz ? center(lo + h, mid) : center(mid, lo + h));
      by_pair[k] = multi_point_distance(cat, delta, r_cap, x, targets);
      for (size_t t = 0; t < targets.size(); ++t) {
        if (!by_pair[k][t].reached) continue;
        double lx = std::log((double)cell.separations[t] / scale);
        double ly = std::log(by_pair[k][t].value) - norm;
        by_sample[k].push_back({lx, ly});
      }
    });
    int attempted = 0, unreachable = 0;
    for (int k = 0; k < cfg.samples; ++k) {
      std::uint64_t seed = detail::mc_seed(cfg.master_seed, detail::kTagSquare, scale, 0, k);
      for (size_t t = 0; t < by_pair[k].size(); ++t) {
        ++attempted;
        SampleRecord rec;
        rec.sample = k;
        rec.seed = seed;
        rec.scale = scale;
        rec.grid_w = rec.grid_h = scale;
        rec.delta = delta;
        rec.r_cap = r_cap;
        rec.stride = stride;
        rec.kind = "pair";
        rec.aux = cell.separations[t];
        rec.value = by_pair[k][t].reached ? by_pair[k][t].value : kUnreachable;
        rec.hops = by_pair[k][t].hops;
        rec.reached = by_pair[k][t].reached;
        scan.records.push_back(rec);
        if (!by_pair[k][t].reached) ++unreachable;
      }
    }
    cell.unreachable_rate = attempted ? (double)unreachable / attempted : 1.0;

    std::vector<double> xs, ys;
    for (const auto& grp : by_sample)
      for (const auto& [lx, ly] : grp) {
        xs.push_back(lx);
        ys.push_back(ly);
      }
    cell.pairs_used = (int)xs.size();
    double x_min = xs.empty() ? 0 : *std::min_element(xs.begin(), xs.end());
    double x_max = xs.empty() ? 0 : *std::max_element(xs.begin(), xs.end());
    cell.degenerate = xs.size() < 2 || !(x_max > x_min);
    if (!cell.degenerate) {
      cell.forward = linear_fit(xs, ys);
      cell.inverse = linear_fit(ys, xs);
      GaussianStream rng(detail::mc_seed(cfg.master_seed, detail::kTagBootstrap, scale, 12, 0));
      std::vector<double> fwd, inv;
      for (int b = 0; b < cfg.bootstrap_reps; ++b) {
        std::vector<double> bx, by;
        for (int i = 0; i < cfg.samples; ++i) {
          const auto& grp = by_sample[rng.index(cfg.samples)];
          for (const auto& [lx, ly] : grp) {
            bx.push_back(lx);
            by.push_back(ly);
          }
        }
        if (bx.size() < 2) continue;
        double mn = *std::min_element(bx.begin(), bx.end());
        double mx = *std::max_element(bx.begin(), bx.end());
        if (!(mx > mn)) continue;
        fwd.push_back(linear_fit(bx, by).slope);
        std::vector<double> byy = by;
        double ymn = *std::min_element(byy.begin(), byy.end());
        double ymx = *std::max_element(byy.begin(), byy.end());
        if (ymx > ymn) inv.push_back(linear_fit(by, bx).slope);
      }
      cell.forward_ci = detail::reps_ci(fwd);
      cell.inverse_ci = detail::reps_ci(inv);
      cell.ci_defined = !fwd.empty() && !inv.empty();
      if (cell.ci_defined) {
        any_ci = true;
        if (!(cell.forward_ci.lo > 0) || !(cell.inverse_ci.lo > 0)) {
          all_pos = false;
          if (cell.forward_ci.hi < 0 || cell.inverse_ci.hi < 0) any_nonpos = true;
        }
      } else {
        all_pos = false;
      }
    } else {
      all_pos = false;
    }
    scan.cells.push_back(std::move(cell));
  }
  if (any_ci && all_pos)
    scan.exponents_positive = Verdict::kPass;
  else if (any_nonpos)
    scan.exponents_positive = Verdict::kFail;
  return scan;
}

// ---------------------------------------------------------------------------
// Two-scale distribution comparison.

struct ScalingCovariance {
  int base_scale = 0, doubled_scale = 0;
  double base_delta = 0, doubled_delta = 0;
  double delta_factor = 0;  // 2^{gamma^2/2 + 2}
  int base_used = 0, doubled_used = 0;
  KsResult ks;
  Verdict matches = Verdict::kInconclusive;  // target: p > kScalingPTarget
  std::vector<SampleRecord> records;
};

// Left-right crossings at (N, delta) against (2N, delta * 2^{gamma^2/2 + 2})
// with the coarse-graining radius, ball cap, and stride all doubled: the
// scaling under which the renormalized distances should agree in law.
inline ScalingCovariance scaling_covariance_test(const ExperimentConfig& cfg) {
  cfg.validate();
  ScalingCovariance out;
  out.base_scale = cfg.scales.front();
  out.doubled_scale = 2 * out.base_scale;
  out.base_delta = cfg.deltas.front();
  out.delta_factor = std::pow(2.0, 0.5 * cfg.gamma * cfg.gamma + 2.0);
  out.doubled_delta = out.base_delta * out.delta_factor;

  auto run = [&](int scale, double delta, double eps, std::uint64_t tag,
                 std::vector<double>& col) {
    double r_cap = cfg.r_cap_for(scale);
    int stride = cfg.stride_for(scale);
    col.assign(cfg.samples, kUnreachable);
    std::vector<int> hops(cfg.samples, 0);
    detail::for_samples(cfg.samples, [&](int k) {
      std::uint64_t seed = detail::mc_seed(cfg.master_seed, tag, scale, 0, k);
      GridSpec spec(scale, scale, cfg.cell_size, cfg.padding_factor);
      MeasureGrid m = cell_measures(sample_dgff(spec, seed), cfg.gamma, eps);
      BallCatalog cat = build_catalog(m, stride, r_cap);
      DistanceResult r = crossing_distance(cat, delta, r_cap, CrossMode::kLR);
      col[k] = r.reached ? r.value : kUnreachable;
      hops[k] = r.hops;
    });
    for (int k = 0; k < cfg.samples; ++k) {
      SampleRecord rec;
      rec.sample = k;
      rec.seed = detail::mc_seed(cfg.master_seed, tag, scale, 0, k);
      rec.scale = scale;
      rec.grid_w = rec.grid_h = scale;
      rec.delta = delta;
      rec.r_cap = r_cap;
      rec.stride = stride;
      rec.kind = tag == detail::kTagScaleBase ? "lr-base" : "lr-doubled";
      rec.value = col[k];
      rec.hops = hops[k];
      rec.reached = std::isfinite(col[k]);
      out.records.push_back(std::move(rec));
    }
  };
  std::vector<double> base, doubled;
  run(out.base_scale, out.base_delta, cfg.epsilon(), detail::kTagScaleBase, base);
  run(out.doubled_scale, out.doubled_delta, 2.0 * cfg.epsilon(), detail::kTagScaleDoubled, doubled);

  std::vector<double> fb = detail::finite_of(base), fd = detail::finite_of(doubled);
  out.base_used = (int)fb.size();
  out.doubled_used = (int)fd.size();
  if (fb.size() >= 2 && fd.size() >= 2) {
    out.ks = ks_two_sample(fb, fd);
    out.matches = out.ks.p_value > kScalingPTarget ? Verdict::kPass : Verdict::kFail;
  }
  return out;
}

}  // namespace lgd
