#pragma once

// Boundary barrier diagnostics and the degenerate approximation sweep.
//
// The barrier near a boundary point p0 is
//   Psi = A1 sqrt(b1) (u_sub - u) - A2 sqrt(b1) rho^2 + A3 sqrt(b1) (N sigma^2 - t sigma)
//         + (1/sqrt(b1)) sum_{tau<n} |(u - phi)_tau|^2 + D(u - phi),
// b1 = 1 + sup|grad(u - phi)|^2 + sup|grad phi|^2, rho the flat distance to p0,
// sigma the distance to the boundary, D a tangential derivative.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "hessiancone/error.hpp"
#include "hessiancone/estimates.hpp"
#include "hessiancone/grid.hpp"
#include "hessiancone/hessian.hpp"
#include "hessiancone/linear.hpp"
#include "hessiancone/solver.hpp"

namespace hessiancone {

struct BarrierSpec {
  double A1 = 1.0;
  double A2 = 1.0;
  double A3 = 1.0;
  double N = 1.0;
  double t = 0.1;
  double delta = 0.1;
};

/// Tangential derivative direction: a real axis other than the normal pair,
/// with a sign.
struct TangentialDirection {
  int axis = 0;
  int sign = 1;
};

struct BarrierResult {
  ScalarField psi;
  double b1 = 1.0;
  /// min of L Psi over interior nodes with rho < delta.
  double min_l = std::numeric_limits<double>::infinity();
  /// max of Psi over the discrete boundary of {rho < delta} together with
  /// boundary nodes with rho <= delta.
  double max_boundary = -std::numeric_limits<double>::infinity();
  std::size_t region_nodes = 0;
  /// Nodes of that boundary set.
  std::vector<std::int32_t> shell;
};

namespace detail {

/// Flat distance between two nodes, periodic axes by minimum image.
inline double flat_distance(const GridGeometry& g, std::size_t a, std::size_t b) {
  double s = 0.0;
  for (int k = 0; k < g.axes(); ++k) {
    double d = std::abs(g.position(a, k) - g.position(b, k));
    if (g.periodic(k)) d = std::min(d, 1.0 - d);
    s += d * d;
  }
  return std::sqrt(s);
}

/// Axes tangent to the boundary but not in the normal complex direction.
inline std::vector<int> lower_tangential_axes(const GridGeometry& g) {
  std::vector<int> axes;
  const int limit = g.is_complex() ? 2 * (g.dim() - 1) : g.dim() - 1;
  for (int a = 0; a < limit; ++a) axes.push_back(a);
  return axes;
}

inline double sup_gradient_squared(const GridGeometry& g, const std::vector<double>& v) {
  double best = 0.0;
  for (std::size_t node = 0; node < g.size(); ++node) {
    double s = 0.0;
    for (int a = 0; a < g.axes(); ++a) {
      const double d = first_difference(g, v.data(), node, a);
      s += d * d;
    }
    best = std::max(best, s);
  }
  return best;
}

}  // namespace detail

/// Evaluates the barrier for a solved u and reports the sign data used by the
/// maximum-principle argument. L is the linearization at u.
inline BarrierResult barrier_eval(const Problem& problem, const ScalarField& u, const BarrierSpec& spec,
                                  std::size_t p0, TangentialDirection dir) {
  const ScalarField& sub = problem.subsolution;
  const ScalarField& phi = problem.phi;
  require_same_grid(u, sub, "barrier_eval");
  require_same_grid(u, phi, "barrier_eval");
  const GridGeometry& g = *u.grid;
  if (!(spec.delta > 0.0) || spec.delta > 0.5) fail(ErrorKind::InvalidArgument, "delta must lie in (0, 1/2]");
  if (spec.N * spec.delta - spec.t > 1e-15) fail(ErrorKind::InvalidArgument, "barrier needs N delta - t <= 0");
  if (p0 >= g.size() || !g.on_boundary(p0)) fail(ErrorKind::InvalidArgument, "p0 must be a boundary node");
  const auto lower = detail::lower_tangential_axes(g);
  if (std::find(lower.begin(), lower.end(), dir.axis) == lower.end() || (dir.sign != 1 && dir.sign != -1))
    fail(ErrorKind::InvalidArgument, "D must be +- d/dx_alpha or +- d/dy_alpha with alpha < n");

  std::vector<double> diff(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) diff[i] = u[i] - phi[i];
  BarrierResult out;
  out.b1 = 1.0 + detail::sup_gradient_squared(g, diff) + detail::sup_gradient_squared(g, phi.values);
  const double sb = std::sqrt(out.b1);

  out.psi = ScalarField(u.grid);
  std::vector<double> rho(g.size());
  for (std::size_t node = 0; node < g.size(); ++node) {
    rho[node] = detail::flat_distance(g, node, p0);
    const double sigma = g.boundary_distance(node);
    double tang = 0.0;
    if (g.is_complex()) {
      for (std::size_t k = 0; k + 1 < lower.size(); k += 2) {
        const double dx = detail::first_difference(g, diff.data(), node, lower[k]);
        const double dy = detail::first_difference(g, diff.data(), node, lower[k + 1]);
        tang += 0.25 * (dx * dx + dy * dy);
      }
    } else {
      for (int a : lower) {
        const double d = detail::first_difference(g, diff.data(), node, a);
        tang += d * d;
      }
    }
    const double Dv = dir.sign * detail::first_difference(g, diff.data(), node, dir.axis);
    out.psi[node] = spec.A1 * sb * (sub[node] - u[node]) - spec.A2 * sb * rho[node] * rho[node] +
                    spec.A3 * sb * (spec.N * sigma * sigma - spec.t * sigma) + tang / sb + Dv;
  }

  std::vector<double> scratch;
  CoefficientField C;
  const OperatorEvaluation ev = evaluate_operator(u, problem.chi, problem.fun, scratch, &C);
  if (!ev.admissible) fail(ErrorKind::NotInCone, "barrier_eval: u is not admissible");
  std::vector<double> lpsi(g.size());
  apply_operator(C, out.psi.values, lpsi);

  for (std::size_t node = 0; node < g.size(); ++node) {
    const bool inside = rho[node] < spec.delta;
    if (inside && !g.on_boundary(node)) {
      ++out.region_nodes;
      out.min_l = std::min(out.min_l, lpsi[node]);
    }
    bool shell = g.on_boundary(node) && rho[node] <= spec.delta;
    if (!inside && !shell) {
      for (int a = 0; a < g.axes() && !shell; ++a)
        for (bool up : {true, false}) {
          const std::int32_t nb = g.neighbor(node, a, up);
          if (nb >= 0 && rho[nb] < spec.delta) shell = true;
        }
    }
    if (shell) {
      out.shell.push_back(static_cast<std::int32_t>(node));
      out.max_boundary = std::max(out.max_boundary, out.psi[node]);
    }
  }
  return out;
}

/// Numerical counterpart of the constant choices: A3 and N first (t = N
/// delta), then A2 so that Psi <= 0 on the shell, then A1 doubled until
/// L Psi >= -tol on the region. The A1 term is nonpositive wherever
/// u_sub <= u, so it is fixed last without disturbing the shell bound.
inline std::pair<BarrierSpec, BarrierResult> barrier_recipe(const Problem& problem, const ScalarField& u,
                                                            std::size_t p0, TangentialDirection dir, double delta,
                                                            double tol, double A3 = 1.0, double N = 1.0) {
  BarrierSpec spec;
  spec.delta = delta;
  spec.A3 = A3;
  spec.N = N;
  spec.t = N * delta;
  spec.A1 = 0.0;
  spec.A2 = 0.0;
  // Psi with A1 = A2 = 0 on the shell; A2 sqrt(b1) rho^2 must dominate it.
  const BarrierResult probe = barrier_eval(problem, u, spec, p0, dir);
  const GridGeometry& g = *u.grid;
  double worst = 0.0;
  for (const std::int32_t node : probe.shell) {
    if (probe.psi[node] <= 0.0) continue;
    const double r = detail::flat_distance(g, static_cast<std::size_t>(node), p0);
    worst = std::max(worst, probe.psi[node] / (std::sqrt(probe.b1) * r * r));
  }
  spec.A2 = 2.0 * worst + 1.0;
  spec.A1 = 1.0;
  BarrierResult res = barrier_eval(problem, u, spec, p0, dir);
  for (int k = 0; k < 60 && res.min_l < -tol; ++k) {
    spec.A1 *= 2.0;
    res = barrier_eval(problem, u, spec, p0, dir);
  }
  return {spec, res};
}

struct DegenerateRow {
  double eps = 0.0;
  bool converged = false;
  double sup_grad = 0.0;
  double sup_laplacian = 0.0;
  double final_residual = 0.0;
  int newton_iterations = 0;
  std::int64_t comparison_violations = 0;
  std::string error;
};

/// Solves with psi + eps for each eps; failures are recorded per row.
inline std::vector<DegenerateRow> degenerate_sweep(const Problem& base, const std::vector<double>& eps_list,
                                                   const SolverConfig& config = {}) {
  std::vector<DegenerateRow> rows;
  for (double eps : eps_list) {
    DegenerateRow row;
    row.eps = eps;
    try {
      if (!(eps > 0.0)) fail(ErrorKind::InvalidArgument, "eps must be positive");
      Problem p = base;
      for (double& v : p.psi.values) v += eps;
      const SolveResult res = continuity_solve(p, config);
      row.converged = true;
      row.sup_grad = res.report.sup_grad();
      row.sup_laplacian = res.report.sup_laplacian;
      row.final_residual = res.report.final_residual;
      row.newton_iterations = res.report.newton_iterations;
      row.comparison_violations = res.report.comparison_violations;
    } catch (const Error& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace hessiancone
