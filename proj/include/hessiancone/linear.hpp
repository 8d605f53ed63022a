#pragma once

// Linear systems sum_{k,l} C_kl D_kl v = b on the interior with v = 0 on the
// boundary faces. Vectors span every node; boundary rows are the identity.
//
// Solved by right-preconditioned BiCGSTAB. The preconditioner inverts the
// constant-coefficient operator sum_k cbar_k D_kk exactly with real
// trigonometric transforms (half-complex DFT along periodic axes, DST-I along
// the Dirichlet axis).

#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include <fftw3.h>

#include "hessiancone/error.hpp"
#include "hessiancone/grid.hpp"
#include "hessiancone/hessian.hpp"
#include "hessiancone/parallel.hpp"

namespace hessiancone {

/// out = sum_{k,l} C_kl D_kl v at interior nodes, out = v on the boundary.
inline void apply_operator(const CoefficientField& C, std::span<const double> v, std::span<double> out) {
  const GridGeometry& g = *C.grid;
  const int m = g.axes();
  const auto& interior = g.interior();
  parallel_chunks(interior.size(), [&](std::size_t lo, std::size_t hi) {
    std::array<double, kMaxAxes * kMaxAxes> d{};
    for (std::size_t k = lo; k < hi; ++k) {
      const auto node = static_cast<std::size_t>(interior[k]);
      detail::second_differences(g, v.data(), node, d.data(), C.active.data());
      const double* c = C.at(node);
      double s = 0.0;
      for (int a = 0; a < m; ++a) {
        s += c[a * m + a] * d[a * kMaxAxes + a];
        for (int b = a + 1; b < m; ++b)
          if (C.active[a * kMaxAxes + b]) s += 2.0 * c[a * m + b] * d[a * kMaxAxes + b];
      }
      out[node] = s;
    }
  });
  for (const std::int32_t node : g.boundary()) out[node] = v[node];
}

/// Coefficient field with constant diagonal coefficients and no mixed terms.
inline CoefficientField constant_diagonal(GridPtr grid, std::span<const double> diag) {
  CoefficientField C;
  C.grid = grid;
  C.axes = grid->axes();
  const int m = C.axes;
  C.values.assign(grid->size() * static_cast<std::size_t>(m * m), 0.0);
  for (const std::int32_t node : grid->interior())
    for (int a = 0; a < m; ++a) C.at(node)[a * m + a] = diag[a];
  C.active.fill(false);
  for (int a = 0; a < m; ++a) C.active[a * kMaxAxes + a] = true;
  return C;
}

/// Exact inverse of sum_k c_k D_kk with zero Dirichlet data.
class SpectralPreconditioner {
 public:
  SpectralPreconditioner(GridPtr grid, std::span<const double> diag) : grid_(std::move(grid)) {
    const GridGeometry& g = *grid_;
    const int m = g.axes();
    std::array<int, kMaxAxes> dims{};
    std::array<fftw_r2r_kind, kMaxAxes> fwd{}, bwd{};
    scale_ = 1.0;
    for (int a = 0; a < m; ++a) {
      if (g.periodic(a)) {
        dims[a] = g.intervals(a);
        fwd[a] = FFTW_R2HC;
        bwd[a] = FFTW_HC2R;
        scale_ *= dims[a];
      } else {
        dims[a] = g.intervals(a) - 1;
        fwd[a] = bwd[a] = FFTW_RODFT00;
        scale_ *= 2.0 * g.intervals(a);
      }
    }
    count_ = g.interior().size();
    buffer_ = static_cast<double*>(fftw_malloc(sizeof(double) * count_));
    if (!buffer_) fail(ErrorKind::NumericFailure, "transform buffer allocation failed");
    forward_ = fftw_plan_r2r(m, dims.data(), buffer_, buffer_, fwd.data(), FFTW_ESTIMATE);
    backward_ = fftw_plan_r2r(m, dims.data(), buffer_, buffer_, bwd.data(), FFTW_ESTIMATE);
    if (!forward_ || !backward_) fail(ErrorKind::NumericFailure, "transform planning failed");

    // Symbol of the second difference per axis and mode.
    std::array<std::vector<double>, kMaxAxes> mu;
    for (int a = 0; a < m; ++a) {
      const double h = g.h(a);
      const int N = g.intervals(a);
      mu[a].resize(dims[a]);
      for (int j = 0; j < dims[a]; ++j) {
        const double s = g.periodic(a) ? std::sin(std::numbers::pi * j / N) : std::sin(std::numbers::pi * (j + 1) / (2.0 * N));
        mu[a][j] = -4.0 / (h * h) * s * s * diag[a];
      }
    }
    // The interior grid has the same row-major layout as the transform, so
    // the k-th interior node is the k-th transform entry.
    inverse_symbol_.resize(count_);
    std::array<int, kMaxAxes> idx{};
    for (std::size_t k = 0; k < count_; ++k) {
      double lam = 0.0;
      for (int a = 0; a < m; ++a) lam += mu[a][idx[a]];
      if (!(lam < 0.0)) fail(ErrorKind::NumericFailure, "preconditioner symbol is not negative definite");
      inverse_symbol_[k] = 1.0 / (lam * scale_);
      for (int a = m - 1; a >= 0; --a) {
        if (++idx[a] < dims[a]) break;
        idx[a] = 0;
      }
    }
  }
  SpectralPreconditioner(const SpectralPreconditioner&) = delete;
  SpectralPreconditioner& operator=(const SpectralPreconditioner&) = delete;
  ~SpectralPreconditioner() {
    if (forward_) fftw_destroy_plan(forward_);
    if (backward_) fftw_destroy_plan(backward_);
    if (buffer_) fftw_free(buffer_);
  }

  /// out = P^{-1} in on the interior, 0 on the boundary.
  void apply(std::span<const double> in, std::span<double> out) const {
    const auto& interior = grid_->interior();
    for (std::size_t k = 0; k < count_; ++k) buffer_[k] = in[interior[k]];
    fftw_execute(forward_);
    for (std::size_t k = 0; k < count_; ++k) buffer_[k] *= inverse_symbol_[k];
    fftw_execute(backward_);
    for (const std::int32_t node : grid_->boundary()) out[node] = 0.0;
    for (std::size_t k = 0; k < count_; ++k) out[interior[k]] = buffer_[k];
  }

 private:
  GridPtr grid_;
  std::size_t count_ = 0;
  double scale_ = 1.0;
  double* buffer_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
  std::vector<double> inverse_symbol_;
};

/// Mean of each diagonal coefficient over the interior.
inline std::vector<double> mean_diagonal(const CoefficientField& C) {
  const GridGeometry& g = *C.grid;
  const int m = C.axes;
  const auto& interior = g.interior();
  std::vector<double> diag(m);
  for (int a = 0; a < m; ++a)
    diag[a] = deterministic_sum(interior.size(), [&](std::size_t k) { return C.at(interior[k])[a * m + a]; }) /
              static_cast<double>(interior.size());
  return diag;
}

struct KrylovResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  return deterministic_sum(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

/// Right-preconditioned BiCGSTAB for A x = b starting from x.
template <class Op, class Prec>
KrylovResult bicgstab(Op&& A, Prec&& M, std::span<const double> b, std::span<double> x, double rel_tol,
                      int max_iter) {
  const std::size_t n = b.size();
  std::vector<double> r(n), r0(n), p(n, 0.0), v(n, 0.0), s(n), t(n), ph(n), sh(n);
  A(std::span<const double>(x), std::span<double>(r));
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
  r0 = r;
  const double bnorm = std::sqrt(dot(b, b));
  KrylovResult res;
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    res.converged = true;
    return res;
  }
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  double rnorm = std::sqrt(dot(r, r));
  for (int it = 1; it <= max_iter; ++it) {
    if (rnorm <= rel_tol * bnorm) {
      res.converged = true;
      break;
    }
    const double rho_new = dot(r0, r);
    if (rho_new == 0.0 || omega == 0.0) break;
    const double beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    M(std::span<const double>(p), std::span<double>(ph));
    A(std::span<const double>(ph), std::span<double>(v));
    const double r0v = dot(r0, v);
    if (r0v == 0.0) break;
    alpha = rho / r0v;
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    res.iterations = it;
    const double snorm = std::sqrt(dot(s, s));
    if (snorm <= rel_tol * bnorm) {
      for (std::size_t i = 0; i < n; ++i) x[i] += alpha * ph[i];
      rnorm = snorm;
      res.converged = true;
      break;
    }
    M(std::span<const double>(s), std::span<double>(sh));
    A(std::span<const double>(sh), std::span<double>(t));
    const double tt = dot(t, t);
    omega = tt > 0.0 ? dot(t, s) / tt : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * ph[i] + omega * sh[i];
      r[i] = s[i] - omega * t[i];
    }
    rnorm = std::sqrt(dot(r, r));
  }
  if (!res.converged && rnorm <= rel_tol * bnorm) res.converged = true;
  res.relative_residual = rnorm / bnorm;
  return res;
}

/// Solves sum C_kl D_kl v = rhs (interior) with v = 0 on the boundary.
inline KrylovResult solve_linearized(const CoefficientField& C, std::span<const double> rhs, std::span<double> v,
                                     double rel_tol = 1e-10, int max_iter = 500) {
  const auto diag = mean_diagonal(C);
  for (double c : diag)
    if (!(c > 0.0)) fail(ErrorKind::NumericFailure, "linearized operator is not elliptic on average");
  SpectralPreconditioner pre(C.grid, diag);
  std::vector<double> b(rhs.begin(), rhs.end());
  for (const std::int32_t node : C.grid->boundary()) b[node] = 0.0;
  std::fill(v.begin(), v.end(), 0.0);
  auto A = [&](std::span<const double> in, std::span<double> out) { apply_operator(C, in, out); };
  auto M = [&](std::span<const double> in, std::span<double> out) { pre.apply(in, out); };
  return bicgstab(A, M, b, v, rel_tol, max_iter);
}

}  // namespace hessiancone
