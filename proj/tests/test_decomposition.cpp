#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "lgdlab/decomposition.hpp"
#include "lgdlab/field.hpp"

using namespace lgd;

namespace {

// Sum over slices of exp(-lambda u_lo) - exp(-lambda u_hi); telescopes to 1
// when the slices tile (0, inf) with the tail folded into the last one.
double tau_sum(const std::vector<TimeSlice>& slices, double lambda) {
  double s = 0.0;
  for (const auto& sl : slices)
    s += std::exp(-lambda * sl.u_lo) - (sl.folded ? 0.0 : std::exp(-lambda * sl.u_hi));
  return s;
}

// Marginal variance of the assembled field at a vertex: 2 pi G(x,x), with G
// from the Dirichlet solve of a point load.
double analytic_variance(const GridSpec& spec, int vi, int vj) {
  int nx = spec.interior_x(), ny = spec.interior_y();
  std::vector<double> f((size_t)nx * ny, 0.0);
  f[(size_t)(vj - 1) * nx + (vi - 1)] = 1.0;
  dirichlet_solve(nx, ny, f);
  return 2.0 * std::numbers::pi * f[(size_t)(vj - 1) * nx + (vi - 1)];
}

double sup_abs_diff(const FieldSample& a, const FieldSample& b) {
  double m = 0.0;
  for (size_t q = 0; q < a.values.size(); ++q) m = std::max(m, std::abs(a.values[q] - b.values[q]));
  return m;
}

}  // namespace

TEST_CASE("time slices tile (0, inf) with the split boundary inserted", "[decomposition]") {
  GridSpec spec = GridSpec::with_padded(7, 7, 1.0, 8, 8);

  int fine = 0;
  auto slices = make_time_slices(spec, 2, &fine);
  REQUIRE(slices.size() >= 3);
  CHECK(slices.front().u_lo == 0.0);
  CHECK(slices.front().u_hi == 0.5);
  CHECK(slices.front().t_hi == Catch::Approx(1.0));  // first slice (0, s^2]
  for (size_t k = 0; k + 1 < slices.size(); ++k) {
    CHECK(slices[k].u_hi == slices[k + 1].u_lo);
    CHECK(slices[k].u_hi == 2.0 * std::max(slices[k].u_lo, 0.25));
    CHECK_FALSE(slices[k].folded);
  }
  CHECK(slices.back().folded);
  // cap at the squared padded diameter
  CHECK(slices.back().u_hi >= 0.5 * (8.0 * 8 + 8.0 * 8));
  // fine/coarse split exactly at u = b^2/2 = 2
  CHECK(fine > 0);
  CHECK(slices[fine - 1].u_hi == 2.0);
  CHECK(slices[fine].u_lo == 2.0);

  // b = 3: u = 4.5 is off the dyadic grid and must be inserted
  auto slices3 = make_time_slices(spec, 3, &fine);
  CHECK(slices3[fine - 1].u_hi == 4.5);
  CHECK(slices3[fine].u_lo == 4.5);
  bool has_half_step = false;
  for (auto& sl : slices3) has_half_step = has_half_step || (sl.u_lo == 4.0 && sl.u_hi == 4.5);
  CHECK(has_half_step);

  for (double lambda : {0.01, 0.3045, 2.0, 7.9}) {
    CHECK(tau_sum(slices, lambda) == Catch::Approx(1.0).margin(1e-12));
    CHECK(tau_sum(slices3, lambda) == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("block partition covers the padded grid with the tail-merge rule", "[decomposition]") {
  // short tails merge only below a tenth of the block side
  CHECK(block_axis_cuts(9, 2) == std::vector<int>{0, 2, 4, 6, 8, 9});
  CHECK(block_axis_cuts(35, 32) == std::vector<int>{0, 35});
  CHECK(block_axis_cuts(67, 32) == std::vector<int>{0, 32, 67});
  CHECK(block_axis_cuts(68, 32) == std::vector<int>{0, 32, 64, 68});
  CHECK(block_axis_cuts(99, 32) == std::vector<int>{0, 32, 64, 99});
  CHECK(block_axis_cuts(8, 2) == std::vector<int>{0, 2, 4, 6, 8});

  GridSpec spec(8, 8, 1.0, 0.75);
  auto dec = build_decomposition(spec, 5, 3);
  std::vector<int> hit((size_t)spec.padded_w * spec.padded_h, 0);
  for (const auto& blk : dec.blocks) {
    CHECK(blk.w >= 1);
    CHECK(blk.h >= 1);
    CHECK(blk.w * 10 >= dec.block_side);
    CHECK(blk.h * 10 >= dec.block_side);
    CHECK(blk.w <= dec.block_side + (dec.block_side + 9) / 10);
    for (int j = 0; j < blk.h; ++j)
      for (int i = 0; i < blk.w; ++i) hit[(size_t)(blk.j0 + j) * spec.padded_w + (blk.i0 + i)]++;
  }
  CHECK(*std::min_element(hit.begin(), hit.end()) == 1);
  CHECK(*std::max_element(hit.begin(), hit.end()) == 1);
  for (int cj = 0; cj < spec.padded_h; ++cj)
    for (int ci = 0; ci < spec.padded_w; ++ci) {
      const auto& blk = dec.blocks[dec.block_at(ci, cj)];
      CHECK((ci >= blk.i0 && ci < blk.i0 + blk.w && cj >= blk.j0 && cj < blk.j0 + blk.h));
    }

  CHECK_THROWS_AS(build_decomposition(spec, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_decomposition(spec, spec.padded_w + 1, 1), std::invalid_argument);
}

TEST_CASE("assembled covariance matches the exact Green's function", "[decomposition]") {
  GridSpec spec = GridSpec::with_padded(7, 7, 1.0, 8, 8);
  auto dec = build_decomposition(spec, 2, 11);
  int n = spec.interior_x() * spec.interior_y();

  // The assembly is linear in the stored noise; push unit loads through it and
  // accumulate the implied covariance sum_q col_q col_q^T Var(noise_q).
  Eigen::MatrixXd impl = Eigen::MatrixXd::Zero(n, n);
  WhiteNoiseDecomposition probe = dec;
  std::fill(probe.noise.begin(), probe.noise.end(), 0.0);
  for (int k = 0; k < (int)dec.slices.size(); ++k) {
    double var = spec.cell * spec.cell * dec.slices[k].length();
    for (std::int64_t c = 0; c < dec.ncells(); ++c) {
      size_t q = (size_t)k * dec.ncells() + c;
      probe.noise[q] = 1.0;
      FieldSample col = assemble_field(probe);
      probe.noise[q] = 0.0;
      Eigen::VectorXd v(n);
      for (int j = 0; j < spec.interior_y(); ++j)
        for (int i = 0; i < spec.interior_x(); ++i)
          v[(size_t)j * spec.interior_x() + i] = col.at(i + 1, j + 1);
      impl += var * v * v.transpose();
    }
  }
  Eigen::MatrixXd exact = exact_covariance(spec);
  double err = (impl - exact).cwiseAbs().maxCoeff();
  INFO("implied-covariance error " << err << ", declared tolerance " << dec.truncation_tolerance);
  CHECK(err < dec.truncation_tolerance + 1e-9);
  // the folded tail keeps the representation far inside the declared bound
  CHECK(err < 1e-10);
}

TEST_CASE("zero noise assembles to the zero field", "[decomposition]") {
  GridSpec spec = GridSpec::with_padded(7, 7, 1.0, 8, 8);
  auto dec = build_decomposition(spec, 2, 5);
  WhiteNoiseDecomposition z = dec;
  std::fill(z.noise.begin(), z.noise.end(), 0.0);
  FieldSample f = assemble_field(z);
  for (double v : f.values) CHECK(v == 0.0);
}

TEST_CASE("decomposition build is deterministic in the seed", "[decomposition]") {
  GridSpec spec(4, 4, 1.0, 0.75);
  auto a = build_decomposition(spec, 3, 99);
  auto b = build_decomposition(spec, 3, 99);
  CHECK(a.noise == b.noise);
  CHECK(a.base.values == b.base.values);
  auto c = build_decomposition(spec, 3, 100);
  CHECK(a.noise != c.noise);

  FieldSample r1 = resample_block(a, 2, 7);
  FieldSample r2 = resample_block(b, 2, 7);
  CHECK(r1.values == r2.values);
  FieldSample s1 = resample_coarse(a, 8);
  FieldSample s2 = resample_coarse(b, 8);
  CHECK(s1.values == s2.values);
  CHECK_THROWS_AS(resample_block(a, a.nblocks(), 1), std::out_of_range);
  CHECK_THROWS_AS(resample_block(a, -1, 1), std::out_of_range);
}

TEST_CASE("block resampling equals reassembly with swapped noise", "[decomposition]") {
  GridSpec spec(6, 6, 1.0, 0.75);
  auto dec = build_decomposition(spec, 4, 21);
  int blk_id = dec.nblocks() / 2;
  const BlockRect& blk = dec.blocks[blk_id];
  std::uint64_t rs = 31;

  WhiteNoiseDecomposition swapped = dec;
  std::vector<double> redraw = block_redraw(dec, blk_id, rs);
  for (int k = 0; k < dec.fine_count; ++k)
    for (int j = 0; j < blk.h; ++j)
      for (int i = 0; i < blk.w; ++i)
        swapped.noise[(size_t)k * dec.ncells() + (size_t)(blk.j0 + j) * spec.padded_w +
                      (blk.i0 + i)] = redraw[((size_t)k * blk.h + j) * blk.w + i];
  FieldSample ref = assemble_field(swapped);

  FieldSample exact = resample_block(dec, blk_id, rs, ResamplePath::kExact);
  CHECK(sup_abs_diff(exact, ref) < 1e-9);
  CHECK(exact.kind == SamplerKind::kResampleBlock);
  CHECK(exact.aux == (std::uint64_t)blk_id);

  // coarse: swap every cell over the coarse slices, same stream as the op
  WhiteNoiseDecomposition cswap = dec;
  GaussianStream g(derive_seed(rs, 0xc5ULL));
  for (int k = dec.fine_count; k < (int)dec.slices.size(); ++k) {
    double sd = dec.noise_sd(k);
    for (std::int64_t c = 0; c < dec.ncells(); ++c)
      cswap.noise[(size_t)k * dec.ncells() + c] = sd * g();
  }
  FieldSample cref = assemble_field(cswap);
  FieldSample coarse = resample_coarse(dec, rs);
  CHECK(sup_abs_diff(coarse, cref) < 1e-9);
  CHECK(coarse.kind == SamplerKind::kResampleCoarse);
}

TEST_CASE("restricted block delta matches the full-grid path", "[decomposition]") {
  GridSpec spec(64, 64);  // padded well beyond the subgrid windows
  auto dec = build_decomposition(spec, 16, 40);
  int nbx = (int)dec.cuts_x.size() - 1;
  int center = (nbx / 2) * nbx + nbx / 2;
  for (int blk_id : {center, 0, dec.nblocks() - 1}) {
    FieldSample fast = resample_block(dec, blk_id, 17, ResamplePath::kFast);
    FieldSample exact = resample_block(dec, blk_id, 17, ResamplePath::kExact);
    INFO("block " << blk_id << " sup diff " << sup_abs_diff(fast, exact));
    CHECK(sup_abs_diff(fast, exact) < 1e-8);
  }
}

TEST_CASE("block influence decays away from the block", "[decomposition]") {
  GridSpec spec(128, 128);
  auto dec = build_decomposition(spec, 32, 7);
  int nbx = (int)dec.cuts_x.size() - 1;
  int blk_id = (nbx / 2) * nbx + nbx / 2;
  const BlockRect& blk = dec.blocks[blk_id];

  // sup |delta| over the cell-corner vertices at Chebyshev cell distance D
  auto ring_sup = [&](const LocalField& d, int D) {
    double m = 0.0;
    int lo_i = blk.i0 - D, hi_i = blk.i0 + blk.w - 1 + D;
    int lo_j = blk.j0 - D, hi_j = blk.j0 + blk.h - 1 + D;
    for (int cj = lo_j; cj <= hi_j; ++cj)
      for (int ci = lo_i; ci <= hi_i; ++ci) {
        bool edge = (ci == lo_i || ci == hi_i || cj == lo_j || cj == hi_j);
        if (D > 0 && !edge) continue;
        m = std::max(m, std::abs(d.at(ci + 1, cj + 1)));
      }
    return m;
  };

  const int samples = 200;
  std::vector<double> near(samples), far(samples);
  for (int r = 0; r < samples; ++r) {
    LocalField d = block_delta(dec, blk_id, 1000 + r);
    near[r] = ring_sup(d, 0);
    far[r] = ring_sup(d, 4 * dec.block_side);
  }
  std::nth_element(near.begin(), near.begin() + samples / 2, near.end());
  std::nth_element(far.begin(), far.begin() + samples / 2, far.end());
  double med_near = near[samples / 2], med_far = far[samples / 2];
  INFO("median sup at block " << med_near << ", at 4x block side " << med_far);
  CHECK(med_far < 0.2 * med_near);
}

TEST_CASE("resampled fields keep the field's marginal law", "[decomposition]") {
  // empirical covariance over fresh decompositions, block- and coarse-resampled
  GridSpec spec = GridSpec::with_padded(7, 7, 1.0, 8, 8);
  int n = spec.interior_x() * spec.interior_y();
  Eigen::MatrixXd exact = exact_covariance(spec);
  const int samples = 4000;

  auto run = [&](auto make) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
    for (int r = 0; r < samples; ++r) {
      FieldSample f = make(r);
      Eigen::VectorXd v(n);
      for (int j = 0; j < spec.interior_y(); ++j)
        for (int i = 0; i < spec.interior_x(); ++i)
          v[(size_t)j * spec.interior_x() + i] = f.at(i + 1, j + 1);
      acc += v * v.transpose();
    }
    return Eigen::MatrixXd(acc / samples);
  };

  auto check_close = [&](const Eigen::MatrixXd& emp) {
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        double se = std::sqrt((exact(a, a) * exact(b, b) + exact(a, b) * exact(a, b)) / samples);
        REQUIRE(std::abs(emp(a, b) - exact(a, b)) < 6.0 * se);
      }
  };

  check_close(run([&](int r) {
    auto dec = build_decomposition(spec, 2, 5000 + r);
    return resample_block(dec, 4, 9000 + r, ResamplePath::kExact);
  }));
  check_close(run([&](int r) {
    auto dec = build_decomposition(spec, 2, 15000 + r);
    return resample_coarse(dec, 19000 + r);
  }));
}

TEST_CASE("probe-vertex variances match the Green's function", "[decomposition]") {
  GridSpec spec(32, 32);
  const int samples = 150;
  std::vector<std::pair<int, int>> probes;
  for (int k = 0; k < 10; ++k)
    probes.emplace_back(spec.pad_x + 2 + 3 * k, spec.pad_y + 30 - 2 * k);

  std::vector<double> var_ref;
  for (auto [vi, vj] : probes) var_ref.push_back(analytic_variance(spec, vi, vj));

  std::vector<std::vector<double>> base_v(probes.size()), blk_v(probes.size()),
      coarse_v(probes.size());
  for (int r = 0; r < samples; ++r) {
    auto dec = build_decomposition(spec, 8, 700 + r);
    FieldSample fb = resample_block(dec, dec.nblocks() / 2, 800 + r);
    FieldSample fc = resample_coarse(dec, 900 + r);
    for (size_t p = 0; p < probes.size(); ++p) {
      auto [vi, vj] = probes[p];
      base_v[p].push_back(dec.base.at(vi, vj));
      blk_v[p].push_back(fb.at(vi, vj));
      coarse_v[p].push_back(fc.at(vi, vj));
    }
  }
  auto sample_var = [](const std::vector<double>& x) {
    double m = 0.0;
    for (double v : x) m += v;
    m /= x.size();
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / (x.size() - 1);
  };
  double rel3 = 3.0 * std::sqrt(2.0 / (samples - 1));
  for (size_t p = 0; p < probes.size(); ++p) {
    INFO("probe " << p << " ref " << var_ref[p]);
    CHECK(std::abs(sample_var(base_v[p]) - var_ref[p]) < rel3 * var_ref[p]);
    CHECK(std::abs(sample_var(blk_v[p]) - var_ref[p]) < rel3 * var_ref[p]);
    CHECK(std::abs(sample_var(coarse_v[p]) - var_ref[p]) < rel3 * var_ref[p]);
  }
}
