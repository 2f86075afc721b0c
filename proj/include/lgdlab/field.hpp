#pragma once
// Discrete Gaussian free field with Dirichlet boundary on the padded grid:
// spectral sampler, dense-oracle covariance, circle averages, harmonic
// extensions (Gibbs–Markov split).
//
// Normalization.  The raw DGFF has covariance L^{-1}, the inverse of the graph
// Laplacian with Dirichlet boundary (a single interior vertex has variance
// 1/4).  Fields are scaled by a calibration constant c, giving covariance
// c^2 L^{-1}.  The default c = sqrt(2·pi) makes the circle-average variance
// grow by 1 per e-fold of radius — the continuum normalization in which the
// covariance kernel is pi * int_0^inf p_t(x,y) dt; the lattice identity
// pi * int_0^inf p_t dt = 2*pi*L^{-1} (p_t the discrete Dirichlet heat kernel
// at Brownian speed) ties the two together.  The acceptance suite verifies the
// slope empirically rather than trusting the constant.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dst.hpp"
#include "geometry.hpp"
#include "rng.hpp"

namespace lgd {

inline constexpr double kDefaultCalibration = 2.5066282746310002;  // sqrt(2*pi)

enum class SamplerKind : std::uint32_t {
  kSpectral = 0,
  kDecomposition = 1,
  kResampleBlock = 2,
  kResampleCoarse = 3,
  kSynthetic = 4,
};

struct FieldSample {
  GridSpec spec;
  std::vector<double> values;  // (padded_w+1) × (padded_h+1) vertices, row-major
  double calibration = kDefaultCalibration;
  std::uint64_t seed = 0;
  SamplerKind kind = SamplerKind::kSpectral;
  std::uint64_t aux = 0;  // e.g. resampled block id

  double at(int i, int j) const { return values[(size_t)j * (spec.padded_w + 1) + i]; }
  double& at(int i, int j) { return values[(size_t)j * (spec.padded_w + 1) + i]; }

  // Bilinear interpolation at a continuum point inside the padded box.
  double interpolate(Point p) const {
    double fx = p.x / spec.cell + spec.pad_x;
    double fy = p.y / spec.cell + spec.pad_y;
    int i = (int)std::floor(fx), j = (int)std::floor(fy);
    i = std::clamp(i, 0, spec.padded_w - 1);
    j = std::clamp(j, 0, spec.padded_h - 1);
    double tx = fx - i, ty = fy - j;
    return (1 - tx) * (1 - ty) * at(i, j) + tx * (1 - ty) * at(i + 1, j) +
           (1 - tx) * ty * at(i, j + 1) + tx * ty * at(i + 1, j + 1);
  }
};

// Copy an interior (row-major, interior_x × interior_y) array into a
// zero-boundary vertex array.
inline FieldSample field_from_interior(const GridSpec& spec, const std::vector<double>& interior,
                                       double calibration, std::uint64_t seed, SamplerKind kind) {
  FieldSample f;
  f.spec = spec;
  f.calibration = calibration;
  f.seed = seed;
  f.kind = kind;
  f.values.assign((size_t)(spec.padded_w + 1) * (spec.padded_h + 1), 0.0);
  int nx = spec.interior_x();
  for (int j = 0; j < spec.interior_y(); ++j)
    for (int i = 0; i < nx; ++i) f.at(i + 1, j + 1) = interior[(size_t)j * nx + i];
  return f;
}

// Spectral sampler: independent N(0,1) per sine eigenmode, scaled by
// calibration / sqrt(lambda), expanded by the DST.
inline FieldSample sample_dgff(const GridSpec& spec, std::uint64_t seed,
                               double calibration = kDefaultCalibration) {
  int nx = spec.interior_x(), ny = spec.interior_y();
  if (nx <= 0 || ny <= 0) throw std::invalid_argument("sample_dgff: degenerate grid");
  LaplaceEigen eig(nx, ny);
  GaussianStream g(derive_seed(seed, 0x5fULL));
  std::vector<double> a((size_t)nx * ny);
  for (int k = 0; k < ny; ++k)
    for (int j = 0; j < nx; ++j)
      a[(size_t)k * nx + j] = calibration * g() / std::sqrt(eig.lambda(j, k));
  dst_expand(nx, ny, a);
  return field_from_interior(spec, a, calibration, seed, SamplerKind::kSpectral);
}

// Dense Green's function of the five-point Dirichlet Laplacian with nx × ny
// interior points; entry (m,m') with m = k·nx + j.  Oracle path.
inline Eigen::MatrixXd dirichlet_green_dense(int nx, int ny) {
  int n = nx * ny;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < ny; ++k)
    for (int j = 0; j < nx; ++j) {
      int m = k * nx + j;
      L(m, m) = 4.0;
      if (j > 0) L(m, m - 1) = -1.0;
      if (j + 1 < nx) L(m, m + 1) = -1.0;
      if (k > 0) L(m, m - nx) = -1.0;
      if (k + 1 < ny) L(m, m + nx) = -1.0;
    }
  return L.llt().solve(Eigen::MatrixXd::Identity(n, n));
}

// calibration^2 × Green's function of the padded grid.  Guarded: dense path.
inline Eigen::MatrixXd exact_covariance(const GridSpec& spec,
                                        double calibration = kDefaultCalibration) {
  if (spec.vx() > 64 || spec.vy() > 64)
    throw std::invalid_argument("exact_covariance: padded grid exceeds 64x64 vertices");
  return calibration * calibration * dirichlet_green_dense(spec.interior_x(), spec.interior_y());
}

// Covariance implied by the spectral sampler's linear map (columns pushed
// through the same DST pathway the sampler uses).  Deterministic; small grids.
inline Eigen::MatrixXd spectral_covariance(const GridSpec& spec,
                                           double calibration = kDefaultCalibration) {
  int nx = spec.interior_x(), ny = spec.interior_y();
  int n = nx * ny;
  if (n > 4096) throw std::invalid_argument("spectral_covariance: grid too large");
  LaplaceEigen eig(nx, ny);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> col(n);
  for (int m = 0; m < n; ++m) {
    std::fill(col.begin(), col.end(), 0.0);
    col[m] = calibration / std::sqrt(eig.lambda(m % nx, m / nx));
    dst_expand(nx, ny, col);
    Eigen::Map<Eigen::VectorXd> v(col.data(), n);
    cov.noalias() += v * v.transpose();
  }
  return cov;
}

// Average of the bilinear field interpolation over K = max(16, ceil(2πr/s))
// equispaced points of the circle; radius < cell/2 degenerates to point
// evaluation at the (interpolated) center.
inline double circle_average(const FieldSample& f, Point center, double radius) {
  const GridSpec& spec = f.spec;
  if (radius < 0) throw std::invalid_argument("circle_average: negative radius");
  Rect safe = spec.padded_box().grown(-spec.cell);  // interpolation stencil margin
  if (radius < 0.5 * spec.cell) {
    if (!safe.contains(center)) throw std::invalid_argument("circle_average: center outside domain");
    return f.interpolate(center);
  }
  if (!safe.contains(Point{center.x - radius, center.y - radius}) ||
      !safe.contains(Point{center.x + radius, center.y + radius}))
    throw std::invalid_argument("circle_average: circle exits padded domain");
  int K = std::max(16, (int)std::ceil(2.0 * M_PI * radius / spec.cell));
  double sum = 0.0;
  for (int t = 0; t < K; ++t) {
    double th = 2.0 * M_PI * t / K;
    sum += f.interpolate({center.x + radius * std::cos(th), center.y + radius * std::sin(th)});
  }
  return sum / K;
}

// Vertex-aligned subbox of the padded grid: vertices i0..i0+nxc, j0..j0+nyc.
struct SubBox {
  int i0 = 0, j0 = 0, nxc = 0, nyc = 0;  // nxc × nyc cells

  // Subbox spanning the given inner-grid cell rectangle.
  static SubBox inner_cells(const GridSpec& spec, int ci, int cj, int w, int h) {
    return {spec.pad_x + ci, spec.pad_y + cj, w, h};
  }
};

// Discrete harmonic function on the subbox matching the field on the subbox
// boundary (the Gibbs–Markov harmonic extension h_{A:B}).  Returned as a
// (nxc+1)×(nyc+1) vertex array, row-major.
inline std::vector<double> harmonic_extension(const FieldSample& f, const SubBox& b) {
  const GridSpec& spec = f.spec;
  if (b.nxc < 2 || b.nyc < 2) throw std::invalid_argument("harmonic_extension: degenerate subbox");
  if (b.i0 < 1 || b.j0 < 1 || b.i0 + b.nxc > spec.padded_w || b.j0 + b.nyc > spec.padded_h)
    throw std::invalid_argument("harmonic_extension: subbox not strictly inside padded domain");
  int nx = b.nxc - 1, ny = b.nyc - 1;  // interior vertices
  std::vector<double> rhs((size_t)nx * ny, 0.0);
  for (int k = 0; k < ny; ++k)
    for (int j = 0; j < nx; ++j) {
      int gi = b.i0 + 1 + j, gj = b.j0 + 1 + k;
      double s = 0.0;
      if (j == 0) s += f.at(b.i0, gj);
      if (j == nx - 1) s += f.at(b.i0 + b.nxc, gj);
      if (k == 0) s += f.at(gi, b.j0);
      if (k == ny - 1) s += f.at(gi, b.j0 + b.nyc);
      rhs[(size_t)k * nx + j] = s;
    }
  dirichlet_solve(nx, ny, rhs);
  std::vector<double> out((size_t)(b.nxc + 1) * (b.nyc + 1));
  for (int k = 0; k <= b.nyc; ++k)
    for (int j = 0; j <= b.nxc; ++j) {
      bool boundary = (j == 0 || j == b.nxc || k == 0 || k == b.nyc);
      out[(size_t)k * (b.nxc + 1) + j] =
          boundary ? f.at(b.i0 + j, b.j0 + k) : rhs[(size_t)(k - 1) * (b.nxc - 1) + (j - 1)];
    }
  return out;
}

// field − extension on the subbox (zero on its boundary): the conditional
// interior field h_B, independent of the extension.
inline std::vector<double> gibbs_markov_residual(const FieldSample& f, const SubBox& b) {
  std::vector<double> ext = harmonic_extension(f, b);
  for (int k = 0; k <= b.nyc; ++k)
    for (int j = 0; j <= b.nxc; ++j)
      ext[(size_t)k * (b.nxc + 1) + j] =
          f.at(b.i0 + j, b.j0 + k) - ext[(size_t)k * (b.nxc + 1) + j];
  return ext;
}

}  // namespace lgd
