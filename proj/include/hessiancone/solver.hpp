#pragma once

// Continuity-method Newton solver for f(lambda(chi + Hess u)) = psi in M,
// u = phi on the boundary, started from an admissible subsolution u_sub.
//
// The path is psi_t = (1 - t) f(lambda(g[u_sub])) + t psi, t in [0, 1]. Each
// stage runs damped Newton; a damping factor is accepted only when every
// interior node stays in the cone and the sup-norm residual decreases.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "hessiancone/error.hpp"
#include "hessiancone/estimates.hpp"
#include "hessiancone/grid.hpp"
#include "hessiancone/hessian.hpp"
#include "hessiancone/linear.hpp"
#include "hessiancone/symmetric_function.hpp"

namespace hessiancone {

struct Problem {
  SymmetricFunction fun;
  HermitianFormField chi;
  ScalarField psi;
  ScalarField phi;
  ScalarField subsolution;
};

struct SolverConfig {
  double tolerance = 1e-8;
  /// Residual target for intermediate continuity stages.
  double stage_tolerance = 1e-6;
  double initial_step = 0.1;
  double min_step = 1e-4;
  int max_newton = 30;
  int max_halvings = 10;
  double linear_tolerance = 1e-10;
  int linear_max_iterations = 500;
};

struct ContinuityState {
  double t = 0.0;
  ScalarField u;
  /// psi_t at interior nodes (boundary entries unused).
  std::vector<double> psi_t;
  std::vector<NewtonRecord> history;
};

namespace detail {

inline std::string node_label(const GridGeometry& g, std::int64_t node) {
  std::ostringstream os;
  os << "node " << node << " (";
  for (int a = 0; a < g.axes(); ++a) os << (a ? "," : "") << g.coord(static_cast<std::size_t>(node), a);
  os << ")";
  return os.str();
}

inline double sup_interior(const GridGeometry& g, const std::vector<double>& v) {
  double s = 0.0;
  for (const std::int32_t node : g.interior()) s = std::max(s, std::abs(v[node]));
  return s;
}

/// values - psi_t at interior nodes, in place; returns the sup norm.
inline double subtract_target(const GridGeometry& g, std::vector<double>& values, const std::vector<double>& psi_t) {
  double s = 0.0;
  for (const std::int32_t node : g.interior()) {
    values[node] -= psi_t[node];
    s = std::max(s, std::abs(values[node]));
  }
  for (const std::int32_t node : g.boundary()) values[node] = 0.0;
  return s;
}

}  // namespace detail

/// f(lambda(chi + Hess u)) - psi_t on the interior, zero on the boundary.
inline ScalarField residual(const ScalarField& u, const HermitianFormField& chi, const SymmetricFunction& fun,
                            const std::vector<double>& psi_t) {
  ScalarField r(u.grid);
  const OperatorEvaluation ev = evaluate_operator(u, chi, fun, r.values);
  if (!ev.admissible)
    fail(ErrorKind::NotInCone, "residual: " + detail::node_label(*u.grid, ev.bad_node) + " outside " + fun.cone_name());
  detail::subtract_target(*u.grid, r.values, psi_t);
  return r;
}

/// One damped Newton step at the state's t. Throws StepTooLarge when no
/// damping factor keeps the iterate admissible while reducing the residual.
/// An iterate whose residual is already at most `accept` is left unchanged.
inline NewtonRecord newton_step(ContinuityState& state, const Problem& problem, const SolverConfig& config,
                                double accept = 0.0) {
  const GridGeometry& g = *state.u.grid;
  NewtonRecord rec;
  rec.t = state.t;
  std::vector<double> r;
  CoefficientField C;
  const OperatorEvaluation ev = evaluate_operator(state.u, problem.chi, problem.fun, r, &C);
  if (!ev.admissible)
    fail(ErrorKind::NotInCone, "newton_step: iterate is not admissible at " + detail::node_label(g, ev.bad_node));
  rec.residual_before = detail::subtract_target(g, r, state.psi_t);
  if (rec.residual_before <= accept) {
    rec.damping = 0.0;
    state.history.push_back(rec);
    return rec;
  }
  for (double& x : r) x = -x;
  std::vector<double> delta(g.size(), 0.0);
  const KrylovResult kr = solve_linearized(C, r, delta, config.linear_tolerance, config.linear_max_iterations);
  rec.linear_iterations = kr.iterations;
  if (!kr.converged && !(kr.relative_residual < 1e-6))
    fail(ErrorKind::NumericFailure, "linear solve stalled at relative residual " + std::to_string(kr.relative_residual));

  ScalarField trial(state.u.grid);
  std::vector<double> values;
  double alpha = 1.0;
  for (int k = 0; k <= config.max_halvings; ++k, alpha *= 0.5) {
    for (std::size_t i = 0; i < g.size(); ++i) trial.values[i] = state.u.values[i] + alpha * delta[i];
    if (!evaluate_operator(trial, problem.chi, problem.fun, values).admissible) continue;
    const double after = detail::subtract_target(g, values, state.psi_t);
    if (after < rec.residual_before) {
      state.u.values.swap(trial.values);
      rec.residual_after = after;
      rec.damping = alpha;
      state.history.push_back(rec);
      return rec;
    }
  }
  fail(ErrorKind::StepTooLarge, "no damping factor keeps the iterate admissible and reduces the residual");
}

namespace detail {

inline void validate_problem(const Problem& p) {
  const GridPtr& grid = p.subsolution.grid;
  if (!grid) fail(ErrorKind::InvalidArgument, "subsolution has no grid");
  require_same_grid(p.subsolution, p.psi, "problem");
  require_same_grid(p.subsolution, p.phi, "problem");
  if (p.fun.dim() != grid->dim()) fail(ErrorKind::DimensionMismatch, "function dimension differs from the grid");
  if (p.chi.dim() != grid->dim() || p.chi.nodes() != grid->size())
    fail(ErrorKind::DimensionMismatch, "chi does not match the grid");
  for (const std::int32_t node : grid->boundary())
    if (std::abs(p.subsolution[node] - p.phi[node]) > 1e-12 * (1.0 + std::abs(p.phi[node])))
      fail(ErrorKind::SubsolutionViolation,
           "subsolution differs from the boundary data at " + node_label(*grid, node));
}

}  // namespace detail

/// Values f(lambda(g[u_sub])) at interior nodes after checking that u_sub is
/// an admissible subsolution.
inline std::vector<double> subsolution_values(const Problem& p) {
  detail::validate_problem(p);
  const GridGeometry& g = *p.subsolution.grid;
  std::vector<double> f0;
  const OperatorEvaluation ev = evaluate_operator(p.subsolution, p.chi, p.fun, f0);
  if (!ev.admissible)
    fail(ErrorKind::SubsolutionViolation, "subsolution is not admissible at " + detail::node_label(g, ev.bad_node));
  for (const std::int32_t node : g.interior())
    if (f0[node] < p.psi[node] - 1e-12 * (1.0 + std::abs(p.psi[node])))
      fail(ErrorKind::SubsolutionViolation,
           "f(lambda(g[u_sub])) < psi at " + detail::node_label(g, node) + ": " + std::to_string(f0[node]) + " < " +
               std::to_string(p.psi[node]));
  return f0;
}

struct SolveResult {
  ScalarField u;
  SolveReport report;
};

/// Continuity path from u_sub to the solution, then the estimate report and
/// comparison check against u_sub and the harmonic majorant.
inline SolveResult continuity_solve(const Problem& p, const SolverConfig& config = {}) {
  const std::vector<double> f0 = subsolution_values(p);
  const GridGeometry& g = *p.subsolution.grid;

  ContinuityState state;
  state.u = p.subsolution;
  state.psi_t.assign(g.size(), 0.0);
  auto set_target = [&](double t) {
    state.t = t;
    for (const std::int32_t node : g.interior()) state.psi_t[node] = (1.0 - t) * f0[node] + t * p.psi[node];
  };

  SolveReport report;
  double t = 0.0;
  double dt = config.initial_step;
  double last_residual = 0.0;
  while (t < 1.0) {
    // Snap to 1 so rounding in the accumulated t cannot leave a sliver stage.
    const double target = t + dt >= 1.0 - 1e-9 ? 1.0 : t + dt;
    const double tol = target >= 1.0 ? config.tolerance : config.stage_tolerance;
    set_target(target);
    ScalarField saved = state.u;
    const std::size_t history_mark = state.history.size();
    bool ok = false;
    try {
      for (int it = 0; it < config.max_newton; ++it) {
        const NewtonRecord rec = newton_step(state, p, config, tol);
        ++report.newton_iterations;
        report.linear_iterations += rec.linear_iterations;
        last_residual = rec.damping == 0.0 ? rec.residual_before : rec.residual_after;
        if (last_residual <= tol) {
          ok = true;
          break;
        }
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::StepTooLarge && e.kind() != ErrorKind::NumericFailure) throw;
    }
    if (ok) {
      t = target;
      ++report.continuity_steps;
      dt = std::min(config.initial_step, 2.0 * dt);
      continue;
    }
    ++report.rejected_steps;
    state.u = std::move(saved);
    state.history.resize(history_mark);
    dt *= 0.5;
    if (dt < config.min_step) {
      std::ostringstream os;
      os << "continuity path stalled at t = " << t << " (last residual " << last_residual << ")";
      fail(ErrorKind::ContinuityStall, os.str());
    }
  }

  SolveReport norms = estimate_report(state.u);
  norms.continuity_steps = report.continuity_steps;
  norms.rejected_steps = report.rejected_steps;
  norms.newton_iterations = report.newton_iterations;
  norms.linear_iterations = report.linear_iterations;
  norms.final_t = 1.0;
  norms.final_residual = last_residual;
  norms.history = std::move(state.history);
  const ScalarField w = harmonic_majorant(p.chi, p.phi);
  norms.comparison_violations = comparison_check(state.u, p.subsolution, w);
  return {std::move(state.u), std::move(norms)};
}

/// Smallest eigenvalue of the tangential block of (Hess u - Hess u_sub) over
/// boundary nodes (tangential second differences on the boundary faces).
inline double tangential_gap(const ScalarField& u, const ScalarField& sub) {
  require_same_grid(u, sub, "tangential_gap");
  const GridGeometry& g = *u.grid;
  const int nrm = g.normal_axis();
  std::vector<int> tang;
  for (int a = 0; a < g.axes(); ++a)
    if (a != nrm) tang.push_back(a);
  if (tang.empty()) return 0.0;
  const int k = static_cast<int>(tang.size());
  std::vector<double> diff(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) diff[i] = u[i] - sub[i];
  double worst = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd T(k, k);
  for (const std::int32_t node : g.boundary()) {
    for (int i = 0; i < k; ++i) {
      const int a = tang[i];
      const std::int32_t ap = g.neighbor(node, a, true), am = g.neighbor(node, a, false);
      T(i, i) = (diff[ap] - 2.0 * diff[node] + diff[am]) / (g.h(a) * g.h(a));
      for (int j = i + 1; j < k; ++j) {
        const int b = tang[j];
        T(i, j) = T(j, i) = (diff[g.neighbor(ap, b, true)] - diff[g.neighbor(ap, b, false)] -
                             diff[g.neighbor(am, b, true)] + diff[g.neighbor(am, b, false)]) /
                            (4.0 * g.h(a) * g.h(b));
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T, Eigen::EigenvaluesOnly);
    worst = std::min(worst, es.eigenvalues()[0]);
  }
  return worst;
}

/// The real-Hessian variant on the flat cylinder T^{d-1} x [0,1]; also
/// checks that g - g_sub is nonnegative on boundary tangential directions.
inline SolveResult solve_riemannian(const Problem& p, const SolverConfig& config = {}) {
  if (!p.subsolution.grid || p.subsolution.grid->is_complex())
    fail(ErrorKind::InvalidArgument, "solve_riemannian needs the real model");
  SolveResult res = continuity_solve(p, config);
  const double h = res.u.grid->h_max();
  res.report.tangential_gap_min = tangential_gap(res.u, p.subsolution);
  res.report.tangential_pass = res.report.tangential_gap_min >= -10.0 * h * h;
  return res;
}

}  // namespace hessiancone
