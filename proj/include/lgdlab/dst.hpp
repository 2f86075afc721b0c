#pragma once
// DST-I machinery for the five-point Dirichlet Laplacian on a rectangle.
//
// The interior vertices of an (nx+1)×(ny+1)-cell grid diagonalize the graph
// Laplacian L (4 on the diagonal, -1 per neighbor, Dirichlet outside) in the
// product sine basis
//     phi_{jk}(x,y) = sqrt(2/(nx+1)) sin(pi j x/(nx+1)) · (same in y),
//     lambda_{jk}  = 4 sin^2(pi j / (2(nx+1))) + 4 sin^2(pi k / (2(ny+1))).
// FFTW's RODFT00 computes the unnormalized DST-I; composing it twice
// multiplies by 2(n+1) per axis.  All expansions below account for that.

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <mutex>
#include <map>
#include <vector>

#include "geometry.hpp"

namespace lgd {

// Plan creation in FFTW is not thread-safe; execution on distinct buffers is.
// One cached in-place plan per interior size, guarded by a mutex.
class DstPlan {
 public:
  static DstPlan& get(int nx, int ny) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, DstPlan*> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(nx, ny);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, new DstPlan(nx, ny)).first;
    return *it->second;
  }

  // In-place 2D DST-I of data (row-major, ny rows of nx), unnormalized.
  void execute(double* data) const { fftw_execute_r2r(plan_, data, data); }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double norm() const { return 4.0 * (nx_ + 1) * (ny_ + 1); }  // fwd∘fwd multiplier

 private:
  DstPlan(int nx, int ny) : nx_(nx), ny_(ny) {
    std::vector<double> buf((size_t)nx * ny);
    // FFTW_ESTIMATE: plan choice is deterministic (no runtime measurement), so
    // repeated runs produce bit-identical transforms.
    plan_ = fftw_plan_r2r_2d(ny, nx, buf.data(), buf.data(), FFTW_RODFT00,
                             FFTW_RODFT00, FFTW_ESTIMATE);
  }
  int nx_, ny_;
  fftw_plan plan_;
};

// Laplacian eigenvalue along one axis, mode j in 1..n (n interior points).
inline double dst_eigenvalue_1d(int j, int n) {
  double s = std::sin(0.5 * M_PI * j / (n + 1));
  return 4.0 * s * s;
}

// Scratch holding the interior eigenvalues of a grid, precomputed per axis.
struct LaplaceEigen {
  int nx, ny;
  std::vector<double> lx, ly;  // lx[j-1], ly[k-1]
  explicit LaplaceEigen(int nx_, int ny_) : nx(nx_), ny(ny_), lx(nx_), ly(ny_) {
    for (int j = 1; j <= nx; ++j) lx[j - 1] = dst_eigenvalue_1d(j, nx);
    for (int k = 1; k <= ny; ++k) ly[k - 1] = dst_eigenvalue_1d(k, ny);
  }
  double lambda(int j, int k) const { return lx[j] + ly[k]; }  // 0-based mode index
  double lambda_min() const { return lx[0] + ly[0]; }
  double lambda_max() const { return lx[nx - 1] + ly[ny - 1]; }
};

// Solve L u = f on the interior (Dirichlet), in place.  f and u are row-major
// ny×nx interior arrays.
inline void dirichlet_solve(int nx, int ny, std::vector<double>& f) {
  auto& plan = DstPlan::get(nx, ny);
  LaplaceEigen eig(nx, ny);
  plan.execute(f.data());
  double inv_norm = 1.0 / plan.norm();
  for (int k = 0; k < ny; ++k)
    for (int j = 0; j < nx; ++j) f[(size_t)k * nx + j] *= inv_norm / eig.lambda(j, k);
  plan.execute(f.data());
}

// Expand orthonormal-basis coefficients a_{jk} into interior values, in place.
inline void dst_expand(int nx, int ny, std::vector<double>& a) {
  auto& plan = DstPlan::get(nx, ny);
  double scale = 1.0 / std::sqrt(plan.norm());
  for (auto& v : a) v *= scale;
  plan.execute(a.data());
}

// Project interior values onto orthonormal-basis coefficients, in place.
inline void dst_project(int nx, int ny, std::vector<double>& v) {
  auto& plan = DstPlan::get(nx, ny);
  plan.execute(v.data());
  double scale = 1.0 / std::sqrt(plan.norm());
  for (auto& c : v) c *= scale;
}

}  // namespace lgd
