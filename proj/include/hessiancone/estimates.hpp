#pragma once

// Discrete norms of solved fields and the comparison functions that bound
// them: sup|u|, gradients, the complex Hessian on the boundary, the harmonic
// majorant, and the comparison-principle check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "hessiancone/error.hpp"
#include "hessiancone/grid.hpp"
#include "hessiancone/hessian.hpp"
#include "hessiancone/linear.hpp"

namespace hessiancone {

struct NewtonRecord {
  double t = 0.0;
  double residual_before = 0.0;
  double residual_after = 0.0;
  double damping = 1.0;
  int linear_iterations = 0;
};

struct SolveReport {
  double sup_u = 0.0;
  double sup_grad_interior = 0.0;
  double sup_grad_boundary = 0.0;
  double sup_ddbar_interior = 0.0;
  double sup_ddbar_boundary = 0.0;
  /// sup over the boundary of |dd^c u| / (1 + sup |grad u|^2).
  double boundary_ratio = 0.0;
  /// sup over the boundary of |u_{alpha nbar}| / (1 + sup |grad u|).
  double tangential_normal_ratio = 0.0;
  double sup_laplacian = 0.0;
  std::int64_t comparison_violations = 0;

  int continuity_steps = 0;
  int rejected_steps = 0;
  int newton_iterations = 0;
  long linear_iterations = 0;
  double final_t = 0.0;
  double final_residual = 0.0;
  std::vector<NewtonRecord> history;

  /// Real model only: smallest eigenvalue of the tangential block of
  /// g - g_sub over boundary nodes, and whether it clears -10 h^2.
  double tangential_gap_min = 0.0;
  bool tangential_pass = true;

  [[nodiscard]] double sup_grad() const { return std::max(sup_grad_interior, sup_grad_boundary); }
};

inline constexpr const char* kSolveReportHeader =
    "sup_u,sup_grad_interior,sup_grad_boundary,sup_ddbar_interior,sup_ddbar_boundary,boundary_ratio,"
    "tangential_normal_ratio,sup_laplacian,comparison_violations,continuity_steps,rejected_steps,"
    "newton_iterations,linear_iterations,final_t,final_residual";

inline std::string to_csv_row(const SolveReport& r) {
  std::ostringstream os;
  os.precision(10);
  os << r.sup_u << ',' << r.sup_grad_interior << ',' << r.sup_grad_boundary << ',' << r.sup_ddbar_interior << ','
     << r.sup_ddbar_boundary << ',' << r.boundary_ratio << ',' << r.tangential_normal_ratio << ',' << r.sup_laplacian
     << ',' << r.comparison_violations << ',' << r.continuity_steps << ',' << r.rejected_steps << ','
     << r.newton_iterations << ',' << r.linear_iterations << ',' << r.final_t << ',' << r.final_residual;
  return os.str();
}

namespace detail {

/// First derivative along `axis`: centered, or second-order one-sided at a
/// boundary face for the Dirichlet axis.
inline double first_difference(const GridGeometry& g, const double* u, std::size_t node, int axis) {
  const double h = g.h(axis);
  const std::int32_t p = g.neighbor(node, axis, true);
  const std::int32_t m = g.neighbor(node, axis, false);
  if (p >= 0 && m >= 0) return (u[p] - u[m]) / (2.0 * h);
  if (m < 0) return (-3.0 * u[node] + 4.0 * u[p] - u[g.neighbor(p, axis, true)]) / (2.0 * h);
  return (3.0 * u[node] - 4.0 * u[m] + u[g.neighbor(m, axis, false)]) / (2.0 * h);
}

/// Second derivative table at a boundary node: tangential pairs centered on
/// the face, normal-normal and tangential-normal from one-sided stencils.
inline void boundary_second_differences(const GridGeometry& g, const double* u, std::size_t node, double* d) {
  const int m = g.axes();
  const int nrm = g.normal_axis();
  const double hn = g.h(nrm);
  const bool low = g.neighbor(node, nrm, false) < 0;
  auto inward = [&](std::size_t x) { return static_cast<std::size_t>(g.neighbor(x, nrm, low)); };
  for (int k = 0; k < m; ++k) {
    if (k == nrm) continue;
    const std::int32_t kp = g.neighbor(node, k, true);
    const std::int32_t km = g.neighbor(node, k, false);
    const double hk = g.h(k);
    d[k * kMaxAxes + k] = (u[kp] - 2.0 * u[node] + u[km]) / (hk * hk);
    for (int l = k + 1; l < m; ++l) {
      if (l == nrm) continue;
      const double v = (u[g.neighbor(kp, l, true)] - u[g.neighbor(kp, l, false)] - u[g.neighbor(km, l, true)] +
                        u[g.neighbor(km, l, false)]) /
                       (4.0 * hk * g.h(l));
      d[k * kMaxAxes + l] = d[l * kMaxAxes + k] = v;
    }
    const double v = (first_difference(g, u, kp, nrm) - first_difference(g, u, km, nrm)) / (2.0 * hk);
    d[k * kMaxAxes + nrm] = d[nrm * kMaxAxes + k] = v;
  }
  const std::size_t n1 = inward(node), n2 = inward(n1), n3 = inward(n2);
  d[nrm * kMaxAxes + nrm] = (2.0 * u[node] - 5.0 * u[n1] + 4.0 * u[n2] - u[n3]) / (hn * hn);
}

inline double spectral_norm(SpectralKernel& kernel, const Form& H) {
  std::array<double, kMaxAxes> lam{};
  kernel.eigenvalues(H, lam.data());
  return std::max(std::abs(lam[0]), std::abs(lam[H.rows() - 1]));
}

}  // namespace detail

/// Norms of u: interior quantities use centered differences, boundary ones
/// one-sided second-order stencils in the normal direction.
inline SolveReport estimate_report(const ScalarField& u) {
  const GridGeometry& g = *u.grid;
  if (g.intervals(g.normal_axis()) < 3) fail(ErrorKind::InvalidArgument, "normal axis too coarse for one-sided stencils");
  const int m = g.axes();
  const int n = g.dim();
  const double* v = u.values.data();
  SolveReport r;
  SpectralKernel kernel;
  std::array<double, kMaxAxes * kMaxAxes> d{};
  Form H;
  double tn = 0.0;
  for (std::size_t node = 0; node < g.size(); ++node) {
    r.sup_u = std::max(r.sup_u, std::abs(v[node]));
    double grad2 = 0.0;
    for (int a = 0; a < m; ++a) {
      const double da = detail::first_difference(g, v, node, a);
      grad2 += da * da;
    }
    const bool bnd = g.on_boundary(node);
    (bnd ? r.sup_grad_boundary : r.sup_grad_interior) =
        std::max(bnd ? r.sup_grad_boundary : r.sup_grad_interior, std::sqrt(grad2));
    if (bnd) {
      detail::boundary_second_differences(g, v, node, d.data());
      detail::form_from_second(g, d.data(), H);
      r.sup_ddbar_boundary = std::max(r.sup_ddbar_boundary, detail::spectral_norm(kernel, H));
      for (int a = 0; a < n - 1; ++a) tn = std::max(tn, std::abs(H(a, n - 1)));
    } else {
      detail::second_differences(g, v, node, d.data());
      detail::form_from_second(g, d.data(), H);
      r.sup_ddbar_interior = std::max(r.sup_ddbar_interior, detail::spectral_norm(kernel, H));
      r.sup_laplacian = std::max(r.sup_laplacian, std::abs(H.trace().real()));
    }
  }
  const double G = r.sup_grad();
  r.boundary_ratio = r.sup_ddbar_boundary / (1.0 + G * G);
  r.tangential_normal_ratio = tn / (1.0 + G);
  return r;
}

/// Laplacian coefficient per real axis: the complex Laplacian sum_i d_i d_ibar
/// is a quarter of the real one.
inline std::vector<double> laplacian_coefficients(const GridGeometry& g) {
  return std::vector<double>(g.axes(), g.is_complex() ? 0.25 : 1.0);
}

/// Solves Delta w + tr chi = 0 in M, w = phi on the boundary.
inline ScalarField harmonic_majorant(const HermitianFormField& chi, const ScalarField& phi) {
  const GridGeometry& g = *phi.grid;
  if (chi.dim() != g.dim() || chi.nodes() != g.size()) fail(ErrorKind::DimensionMismatch, "chi does not match the grid");
  ScalarField w(phi.grid);
  for (const std::int32_t node : g.boundary()) w[node] = phi[node];
  const CoefficientField C = constant_diagonal(phi.grid, laplacian_coefficients(g));
  std::vector<double> r(g.size(), 0.0), delta(g.size(), 0.0);
  apply_operator(C, w.values, r);
  for (const std::int32_t node : g.interior()) {
    double tr = 0.0;
    for (int i = 0; i < g.dim(); ++i) tr += chi.entry(node, i, i).real();
    r[node] = -(r[node] + tr);
  }
  const KrylovResult kr = solve_linearized(C, r, delta, 1e-13, 50);
  if (!kr.converged && kr.relative_residual > 1e-10) fail(ErrorKind::NumericFailure, "harmonic majorant solve failed");
  for (const std::int32_t node : g.interior()) w[node] += delta[node];
  return w;
}

/// Nodes violating u_sub - tol <= u <= w + tol, tol = 10 h^2 + 1e-8.
inline std::int64_t comparison_check(const ScalarField& u, const ScalarField& sub, const ScalarField& w) {
  require_same_grid(u, sub, "comparison_check");
  require_same_grid(u, w, "comparison_check");
  const double h = u.grid->h_max();
  const double tol = 10.0 * h * h + 1e-8;
  std::int64_t count = 0;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (u[i] < sub[i] - tol || u[i] > w[i] + tol) ++count;
  return count;
}

}  // namespace hessiancone
