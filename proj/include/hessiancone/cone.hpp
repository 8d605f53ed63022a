#pragma once

// Structure checks and level-set geometry for symmetric functions on cones.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "hessiancone/error.hpp"
#include "hessiancone/symmetric_function.hpp"

namespace hessiancone::cone {

inline bool in_cone(const SymmetricFunction& fun, std::span<const double> lambda) { return fun.in_cone(lambda); }

inline double f_eval(const SymmetricFunction& fun, std::span<const double> lambda) { return fun.value(lambda); }

inline Lambda f_grad(const SymmetricFunction& fun, std::span<const double> lambda) { return fun.gradient(lambda); }

inline double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline Lambda ones(int n, double scale = 1.0) { return Lambda(n, scale); }

/// Df / |Df|.
inline Lambda unit_normal(const SymmetricFunction& fun, std::span<const double> lambda) {
  Lambda g = fun.gradient(lambda);
  const double norm = std::sqrt(dot(g, g));
  for (double& x : g) x /= norm;
  return g;
}

struct ConcavityCheck {
  double midpoint_gap = 0.0;  // f((l+m)/2) - (f(l)+f(m))/2
  double gradient_gap = 0.0;  // sum f_i(l)(m_i - l_i) - (f(m) - f(l))
  bool pass = false;
};

inline ConcavityCheck check_concavity(const SymmetricFunction& fun, std::span<const double> lambda,
                                      std::span<const double> mu) {
  const double fl = fun.value(lambda);
  const double fm = fun.value(mu);
  Lambda mid(lambda.size());
  Lambda diff(lambda.size());
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    mid[i] = 0.5 * (lambda[i] + mu[i]);
    diff[i] = mu[i] - lambda[i];
  }
  ConcavityCheck c;
  c.midpoint_gap = fun.value(mid) - 0.5 * (fl + fm);
  c.gradient_gap = dot(fun.gradient(lambda), diff) - (fm - fl);
  c.pass = c.midpoint_gap >= -1e-10 && c.gradient_gap >= -1e-10;
  return c;
}

/// sum_i f_i(lambda) lambda_i; equals f(lambda) for degree-one homogeneous f.
inline double euler_positivity(const SymmetricFunction& fun, std::span<const double> lambda) {
  return dot(fun.gradient(lambda), lambda);
}

/// Unique t > 0 with f(t lambda) = sigma, by bracketing followed by safeguarded
/// Newton on the increasing map t -> f(t lambda). Only the monotonicity of the
/// ray map is used, not homogeneity.
inline double ray_intersect(const SymmetricFunction& fun, std::span<const double> lambda, double sigma) {
  if (!fun.in_cone(lambda)) fail(ErrorKind::NotInCone, "ray base point outside " + fun.cone_name());
  if (!(sigma > fun.boundary_sup()) || !std::isfinite(sigma))
    fail(ErrorKind::OutOfRange, "level must lie in (sup over the cone boundary, sup over the cone)");

  const std::size_t n = lambda.size();
  Lambda point(n), grad(n);
  auto along = [&](double t, double* value, bool with_grad) {
    for (std::size_t i = 0; i < n; ++i) point[i] = t * lambda[i];
    fun.evaluate(point, value, with_grad ? std::span<double>(grad) : std::span<double>());
  };

  double lo = 1.0, hi = 1.0, f_lo = 0.0, f_hi = 0.0;
  along(1.0, &f_lo, false);
  f_hi = f_lo;
  int guard = 0;
  while (f_hi < sigma) {
    hi *= 2.0;
    along(hi, &f_hi, false);
    if (++guard > 2000 || !std::isfinite(f_hi)) fail(ErrorKind::BracketingFailure, "f(t lambda) never reaches the level");
  }
  guard = 0;
  while (f_lo > sigma) {
    lo *= 0.5;
    along(lo, &f_lo, false);
    if (++guard > 2000 || lo == 0.0) fail(ErrorKind::BracketingFailure, "f(t lambda) never drops below the level");
  }

  const double tol = 1e-14 * (1.0 + std::abs(sigma));
  double t = 0.5 * (lo + hi);
  for (int iter = 0; iter < 500; ++iter) {
    double ft = 0.0;
    along(t, &ft, true);
    const double r = ft - sigma;
    if (std::abs(r) <= tol || hi - lo <= 4e-16 * t) return t;
    if (r < 0.0) lo = t; else hi = t;
    const double slope = dot(grad, lambda);
    double next = slope > 0.0 ? t - r / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    t = next;
  }
  fail(ErrorKind::NumericFailure, "ray intersection did not converge");
}

struct LevelSetPoint {
  Lambda lambda;
  double sigma = 0.0;
  Lambda normal;
};

/// Projects lambda along its ray onto the level set f = sigma.
inline LevelSetPoint make_level_set_point(const SymmetricFunction& fun, std::span<const double> lambda, double sigma) {
  const double t = ray_intersect(fun, lambda, sigma);
  LevelSetPoint p;
  p.lambda.assign(lambda.begin(), lambda.end());
  for (double& x : p.lambda) x *= t;
  p.sigma = sigma;
  p.normal = unit_normal(fun, p.lambda);
  return p;
}

inline void validate(const SymmetricFunction& fun, const LevelSetPoint& p) {
  if (!fun.in_cone(p.lambda)) fail(ErrorKind::NotInCone, "level-set point outside the cone");
  if (std::abs(fun.value(p.lambda) - p.sigma) > 1e-9 * (1.0 + std::abs(p.sigma)))
    fail(ErrorKind::InvalidArgument, "level-set point is off its level");
  if (std::abs(std::sqrt(dot(p.normal, p.normal)) - 1.0) > 1e-12)
    fail(ErrorKind::InvalidArgument, "level-set normal is not a unit vector");
}

/// sum_i f_i(lambda) > (f(t 1) - sigma)/t on the level set f = sigma.
inline bool check_fi_sum_bound(const SymmetricFunction& fun, const LevelSetPoint& point, double t) {
  if (!(t > 0.0)) fail(ErrorKind::InvalidArgument, "t must be positive");
  validate(fun, point);
  const Lambda g = fun.gradient(point.lambda);
  const double lhs = std::accumulate(g.begin(), g.end(), 0.0);
  const double rhs = (fun.value(ones(fun.dim(), t)) - point.sigma) / t;
  return lhs > rhs - 1e-10;
}

struct SubsolutionGapSpec {
  double beta = 0.0;
  double epsilon = 0.0;
};

/// Half the distance from a unit normal in Gamma_n to the boundary of Gamma_n.
inline double beta_for(std::span<const double> reference_normal) {
  return 0.5 * *std::min_element(reference_normal.begin(), reference_normal.end());
}

enum class GapBranch { NormalNear, NormalFar };

struct GapResult {
  GapBranch branch = GapBranch::NormalNear;
  double normal_distance = 0.0;
  /// NormalNear: min_i f_i - (beta/sqrt n) sum_j f_j (asserted >= 0).
  /// NormalFar: largest eps' with
  ///   sum f_i(l)(mu_i - l_i) >= f(mu) - f(l) + eps'(1 + sum f_i(l)).
  double residual = 0.0;
  bool holds = false;
  /// NormalFar only: whether the measured eps' reaches spec.epsilon.
  bool meets_spec_epsilon = false;
};

/// The normal-near / normal-far dichotomy for a subsolution eigenvalue point
/// (mu) against a point lambda.
inline GapResult subsolution_gap(const SymmetricFunction& fun, std::span<const double> sub_lambda,
                                 std::span<const double> lambda, const SubsolutionGapSpec& spec) {
  if (!(spec.beta > 0.0) || !(spec.epsilon > 0.0))
    fail(ErrorKind::InvalidArgument, "beta and epsilon must be positive");
  const Lambda nu_sub = unit_normal(fun, sub_lambda);
  const Lambda nu = unit_normal(fun, lambda);
  const Lambda g = fun.gradient(lambda);
  const double gsum = std::accumulate(g.begin(), g.end(), 0.0);

  GapResult r;
  double dist2 = 0.0;
  for (std::size_t i = 0; i < nu.size(); ++i) dist2 += (nu[i] - nu_sub[i]) * (nu[i] - nu_sub[i]);
  r.normal_distance = std::sqrt(dist2);

  if (r.normal_distance < spec.beta) {
    r.branch = GapBranch::NormalNear;
    const double floor = spec.beta / std::sqrt(static_cast<double>(fun.dim())) * gsum;
    r.residual = *std::min_element(g.begin(), g.end()) - floor;
    r.holds = r.residual >= 0.0;
    return r;
  }
  r.branch = GapBranch::NormalFar;
  // The inequality is affine in eps', so the largest admissible value is exact.
  Lambda diff(lambda.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = sub_lambda[i] - lambda[i];
  r.residual = (dot(g, diff) - fun.value(sub_lambda) + fun.value(lambda)) / (1.0 + gsum);
  r.holds = r.residual > 0.0;
  r.meets_spec_epsilon = r.residual >= spec.epsilon;
  return r;
}

/// inf psi - sup over the cone boundary of f.
inline double delta_nondegeneracy(const SymmetricFunction& fun, std::span<const double> psi_values) {
  if (psi_values.empty()) fail(ErrorKind::InvalidArgument, "psi sample is empty");
  return *std::min_element(psi_values.begin(), psi_values.end()) - fun.boundary_sup();
}

/// kappa = (f((1+c0) 1) - sup psi)/(1 + c0) with f(c0 1) = sup psi; a lower
/// bound for sum_i f_i at any admissible solution.
inline double kappa_lower_bound(const SymmetricFunction& fun, double sup_psi) {
  const Lambda one = ones(fun.dim());
  const double c0 = ray_intersect(fun, one, sup_psi);
  return (fun.value(ones(fun.dim(), 1.0 + c0)) - sup_psi) / (1.0 + c0);
}

}  // namespace hessiancone::cone
