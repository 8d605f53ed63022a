#pragma once

// Named analytic problem families on the flat model grids.
//
//   trivial       chi = I, psi = f(1,...,1), phi = 0, u_sub = 0; solution u = 0
//   manufactured  u* = A cos(2 pi x_1) cos(2 pi y_1) sin(pi x_n)  (complex)
//                 u* = A cos(2 pi x_1) sin(pi x_d)                (real)
//                 psi = f(lambda(chi + exact Hess u*)), phi = 0,
//                 u_sub = u* - K x_n (1 - x_n)
//   scaling       phi = s a cos(2 pi x_1) cos(2 pi m y_n), psi = f(1,...,1),
//                 u_sub = phi (extended constantly in x_n) - K_s x_n (1 - x_n)
//   degenerate    psi = psi0 sin^2(pi x_1) + eps, phi = 0,
//                 u_sub = -c x_n (1 - x_n)

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>

#include "hessiancone/error.hpp"
#include "hessiancone/grid.hpp"
#include "hessiancone/hessian.hpp"
#include "hessiancone/solver.hpp"
#include "hessiancone/symmetric_function.hpp"

namespace hessiancone::presets {

struct PresetProblem {
  Problem problem;
  std::optional<ScalarField> exact;
  double amplitude = 0.0;
  double bump = 0.0;
};

namespace detail {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kPi = std::numbers::pi;

inline double x_normal(const GridGeometry& g, std::span<const double> x) { return x[g.normal_axis()]; }

/// Exact second derivatives of the manufactured u* with amplitude A, as a
/// kMaxAxes x kMaxAxes table.
inline void manufactured_second(const GridGeometry& g, std::span<const double> x, double A, double* d) {
  std::fill(d, d + kMaxAxes * kMaxAxes, 0.0);
  const int nrm = g.normal_axis();
  const double xn = x[nrm];
  const double s = std::sin(kPi * xn), cn = std::cos(kPi * xn);
  const double c1 = std::cos(kTwoPi * x[0]), s1 = std::sin(kTwoPi * x[0]);
  auto set = [&](int a, int b, double v) { d[a * kMaxAxes + b] = d[b * kMaxAxes + a] = v; };
  if (g.is_complex()) {
    const double c2 = std::cos(kTwoPi * x[1]), s2 = std::sin(kTwoPi * x[1]);
    const double u = A * c1 * c2 * s;
    set(0, 0, -kTwoPi * kTwoPi * u);
    set(1, 1, -kTwoPi * kTwoPi * u);
    set(nrm, nrm, -kPi * kPi * u);
    set(0, 1, A * kTwoPi * kTwoPi * s1 * s2 * s);
    set(0, nrm, -A * kTwoPi * kPi * s1 * c2 * cn);
    set(1, nrm, -A * kTwoPi * kPi * c1 * s2 * cn);
  } else {
    const double u = A * c1 * s;
    set(0, 0, -kTwoPi * kTwoPi * u);
    set(nrm, nrm, -kPi * kPi * u);
    set(0, nrm, -A * kTwoPi * kPi * s1 * cn);
  }
}

inline double manufactured_value(const GridGeometry& g, std::span<const double> x, double A) {
  const double s = std::sin(kPi * x_normal(g, x));
  if (g.is_complex()) return A * std::cos(kTwoPi * x[0]) * std::cos(kTwoPi * x[1]) * s;
  return A * std::cos(kTwoPi * x[0]) * s;
}

inline std::array<double, kMaxAxes> node_position(const GridGeometry& g, std::size_t node) {
  std::array<double, kMaxAxes> x{};
  for (int a = 0; a < g.axes(); ++a) x[a] = g.position(node, a);
  return x;
}

}  // namespace detail

inline HermitianFormField identity_chi(const GridGeometry& g) { return HermitianFormField::identity(g.dim(), g.size()); }

inline double value_at_ones(const SymmetricFunction& fun) { return fun.value(Lambda(fun.dim(), 1.0)); }

inline PresetProblem trivial(GridPtr grid, const SymmetricFunction& fun) {
  const double c = value_at_ones(fun);
  PresetProblem out{Problem{fun, identity_chi(*grid), ScalarField(grid, c), ScalarField(grid), ScalarField(grid)},
                    ScalarField(grid), 0.0, 0.0};
  return out;
}

/// Largest amplitude among 0.1, 0.05, 0.025, ... for which the exact form
/// chi + Hess u* has all eigenvalues >= 1/2 at every node.
inline double manufactured_amplitude(const GridGeometry& g, const HermitianFormField& chi) {
  std::array<double, kMaxAxes * kMaxAxes> d{};
  std::array<double, kMaxAxes> lam{};
  SpectralKernel kernel;
  Form H;
  for (double A = 0.1; A > 1e-6; A *= 0.5) {
    bool ok = true;
    for (std::size_t node = 0; node < g.size() && ok; ++node) {
      const auto x = detail::node_position(g, node);
      detail::manufactured_second(g, std::span<const double>(x.data(), g.axes()), A, d.data());
      hessiancone::detail::form_from_second(g, d.data(), H);
      H += chi.at(node);
      kernel.eigenvalues(H, lam.data());
      ok = lam[0] >= 0.5;
    }
    if (ok) return A;
  }
  fail(ErrorKind::NumericFailure, "no admissible manufactured amplitude");
}

/// amplitude <= 0 picks one with manufactured_amplitude.
inline PresetProblem manufactured(GridPtr grid, const SymmetricFunction& fun, double amplitude = 0.0,
                                  double bump = 1.0) {
  const GridGeometry& g = *grid;
  HermitianFormField chi = identity_chi(g);
  const double A = amplitude > 0.0 ? amplitude : manufactured_amplitude(g, chi);
  ScalarField exact(grid), psi(grid), sub(grid);
  std::array<double, kMaxAxes * kMaxAxes> d{};
  std::array<double, kMaxAxes> lam{};
  SpectralKernel kernel;
  Form H;
  for (std::size_t node = 0; node < g.size(); ++node) {
    const auto x = detail::node_position(g, node);
    const std::span<const double> xs(x.data(), g.axes());
    exact[node] = detail::manufactured_value(g, xs, A);
    const double xn = detail::x_normal(g, xs);
    sub[node] = exact[node] - bump * xn * (1.0 - xn);
    detail::manufactured_second(g, xs, A, d.data());
    hessiancone::detail::form_from_second(g, d.data(), H);
    H += chi.at(node);
    kernel.eigenvalues(H, lam.data());
    psi[node] = fun.value(std::span<const double>(lam.data(), g.dim()));
  }
  ScalarField phi(grid);
  for (const std::int32_t node : g.boundary()) phi[node] = exact[node];
  return {Problem{fun, std::move(chi), std::move(psi), std::move(phi), std::move(sub)}, std::move(exact), A, bump};
}

/// Boundary datum of the scaling family at amplitude s * a.
inline ScalarField scaling_phi(GridPtr grid, double s, double a, int m) {
  const GridGeometry& g = *grid;
  const int yn = g.normal_axis() + (g.is_complex() ? 1 : 0);
  return ScalarField::from_function(grid, [&](std::span<const double> x) {
    return s * a * std::cos(detail::kTwoPi * x[0]) * std::cos(detail::kTwoPi * m * x[yn]);
  });
}

/// The scaling family with the smallest K_s in {1, 2, 4, ...} for which
/// u_sub is a discrete subsolution.
inline PresetProblem scaling(GridPtr grid, const SymmetricFunction& fun, double s, double a = 0.01, int m = 2) {
  const GridGeometry& g = *grid;
  const ScalarField ext = scaling_phi(grid, s, a, m);
  ScalarField phi(grid);
  for (const std::int32_t node : g.boundary()) phi[node] = ext[node];
  const double c = value_at_ones(fun);
  for (double K = 1.0; K <= 1e6; K *= 2.0) {
    ScalarField sub = ScalarField::from_function(grid, [&](std::span<const double> x) {
      const double xn = x[g.normal_axis()];
      return -K * xn * (1.0 - xn);
    });
    for (std::size_t i = 0; i < g.size(); ++i) sub[i] += ext[i];
    Problem p{fun, identity_chi(g), ScalarField(grid, c), phi, std::move(sub)};
    try {
      (void)subsolution_values(p);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::SubsolutionViolation) continue;
      throw;
    }
    return {std::move(p), std::nullopt, s * a, K};
  }
  fail(ErrorKind::SubsolutionViolation, "no subsolution found for the scaling family");
}

/// psi = psi0 sin^2(pi x_1) + eps with the strict subsolution -c x_n (1 - x_n).
inline PresetProblem degenerate(GridPtr grid, const SymmetricFunction& fun, double eps, double psi0 = 1.0,
                                double c = 4.0) {
  const GridGeometry& g = *grid;
  ScalarField psi = ScalarField::from_function(grid, [&](std::span<const double> x) {
    const double s = std::sin(detail::kPi * x[0]);
    return psi0 * s * s + eps;
  });
  ScalarField sub = ScalarField::from_function(grid, [&](std::span<const double> x) {
    const double xn = x[g.normal_axis()];
    return -c * xn * (1.0 - xn);
  });
  return {Problem{fun, identity_chi(g), std::move(psi), ScalarField(grid), std::move(sub)}, std::nullopt, psi0, c};
}

/// min over interior nodes of f(lambda(g[u_sub])) - psi.
inline double subsolution_margin(const Problem& p) {
  const auto f0 = subsolution_values(p);
  double m = std::numeric_limits<double>::infinity();
  for (const std::int32_t node : p.subsolution.grid->interior()) m = std::min(m, f0[node] - p.psi[node]);
  return m;
}

inline double sup_error(const ScalarField& u, const ScalarField& exact) {
  require_same_grid(u, exact, "sup_error");
  double e = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) e = std::max(e, std::abs(u[i] - exact[i]));
  return e;
}

}  // namespace hessiancone::presets
