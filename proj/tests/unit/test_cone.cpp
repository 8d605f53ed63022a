#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numeric>

#include "hessiancone/cone.hpp"
#include "hessiancone/random.hpp"
#include "oracles.hpp"

using namespace hessiancone;
using namespace hessiancone::cone;

namespace {

// sigma_k by brute-force subset enumeration.
double sigma_subsets(const Lambda& x, int k) {
  const int n = static_cast<int>(x.size());
  double total = 0.0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) != k) continue;
    double p = 1.0;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) p *= x[i];
    total += p;
  }
  return total;
}

bool in_gamma_subsets(const Lambda& x, int m) {
  for (int j = 1; j <= m; ++j)
    if (!(sigma_subsets(x, j) > 0.0)) return false;
  return true;
}

double f_subsets(const SymmetricFunction& fun, const Lambda& x) {
  if (fun.kind() == FunctionKind::HessianQuotient)
    return std::pow(sigma_subsets(x, fun.cone_order()) / sigma_subsets(x, fun.lower_order()),
                    1.0 / (fun.cone_order() - fun.lower_order()));
  return std::pow(sigma_subsets(x, fun.cone_order()), 1.0 / fun.cone_order());
}

// Complex-step derivative of the subset formula: Im f(x + i h e_j) / h is free
// of cancellation, so it matches an analytic gradient to rounding level.
Lambda complex_step_gradient(const SymmetricFunction& fun, const Lambda& x) {
  using Z = std::complex<double>;
  const int n = static_cast<int>(x.size());
  const double h = 1e-30;
  auto sigma = [&](const std::vector<Z>& z, int k) {
    Z total = 0.0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      if (__builtin_popcount(mask) != k) continue;
      Z p = 1.0;
      for (int i = 0; i < n; ++i)
        if (mask & (1u << i)) p *= z[i];
      total += p;
    }
    return total;
  };
  Lambda g(n);
  for (int j = 0; j < n; ++j) {
    std::vector<Z> z(x.begin(), x.end());
    z[j] += Z(0.0, h);
    const int m = fun.cone_order();
    const int k = fun.kind() == FunctionKind::HessianQuotient ? fun.lower_order() : 0;
    const Z f = std::pow(sigma(z, m) / sigma(z, k), 1.0 / (m - k));
    g[j] = f.imag() / h;
  }
  return g;
}

std::vector<SymmetricFunction> all_kinds(int n) {
  std::vector<SymmetricFunction> out{SymmetricFunction::sigma_root(n, 1), SymmetricFunction::monge_ampere(n)};
  if (n >= 2) {
    out.push_back(SymmetricFunction::sigma_root(n, 2));
    out.push_back(SymmetricFunction::hessian_quotient(n, 1, 2));
    out.push_back(SymmetricFunction::hessian_quotient(n, 0, n));
  }
  if (n >= 3) out.push_back(SymmetricFunction::hessian_quotient(n, 1, 3));
  return out;
}

// A point of the cone: shift a random vector along (1,...,1) until admissible.
Lambda random_cone_point(Rng& rng, const SymmetricFunction& fun) {
  Lambda x(fun.dim());
  for (double& v : x) v = rng.uniform(-3.0, 3.0);
  while (!fun.in_cone(x) || (fun.kind() == FunctionKind::HessianQuotient &&
                             sigma_subsets(x, fun.lower_order()) < 1e-6))
    for (double& v : x) v += 0.5;
  return x;
}

}  // namespace

TEST(SymmetricFunction, HandValues) {
  EXPECT_NEAR(SymmetricFunction::sigma_root(3, 1).value(Lambda{1, 2, 3}), 6.0, 1e-15);
  EXPECT_NEAR(SymmetricFunction::sigma_root(3, 2).value(Lambda{1, 2, 3}), std::sqrt(11.0), 1e-14);
  EXPECT_NEAR(SymmetricFunction::monge_ampere(3).value(Lambda{1, 2, 4}), 2.0, 1e-14);
  EXPECT_NEAR(SymmetricFunction::hessian_quotient(3, 1, 2).value(Lambda{1, 2, 3}), 11.0 / 6.0, 1e-14);
  EXPECT_NEAR(SymmetricFunction::monge_ampere(2).value(Lambda{3, 1.0 / 3.0}), 1.0, 1e-14);
}

TEST(SymmetricFunction, ParseNames) {
  EXPECT_EQ(SymmetricFunction::parse("sigma1", 3).name(), "sigma1");
  EXPECT_EQ(SymmetricFunction::parse("ma", 3).cone_order(), 3);
  EXPECT_EQ(SymmetricFunction::parse("sigmaK:2", 3).cone_order(), 2);
  const auto q = SymmetricFunction::parse("quotient:1:3", 4);
  EXPECT_EQ(q.lower_order(), 1);
  EXPECT_EQ(q.cone_order(), 3);
  EXPECT_EQ(q.name(), "quotient:1:3");
  EXPECT_THROW(SymmetricFunction::parse("sigmaK:5", 3), Error);
  EXPECT_THROW(SymmetricFunction::parse("quotient:2:1", 3), Error);
  EXPECT_THROW(SymmetricFunction::parse("quotient:1", 3), Error);
  EXPECT_THROW(SymmetricFunction::parse("bogus", 3), Error);
  EXPECT_THROW(SymmetricFunction::sigma_root(17, 1), Error);
}

TEST(SymmetricFunction, DimensionMismatch) {
  try {
    (void)SymmetricFunction::sigma_root(3, 1).value(Lambda{1, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
}

TEST(SymmetricFunction, OutsideConeThrows) {
  try {
    (void)SymmetricFunction::monge_ampere(2).value(Lambda{1, -1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotInCone);
  }
  double v = 0.0;
  EXPECT_FALSE(SymmetricFunction::sigma_root(2, 2).try_evaluate(Lambda{1, -1}, &v, {}));
}

TEST(SymmetricFunction, MembershipMatchesSubsetOracle) {
  Rng rng(21);
  for (int trial = 0; trial < 3000; ++trial) {
    const int n = 1 + trial % 6;
    Lambda x(n);
    for (double& v : x) v = rng.uniform(-2.0, 4.0);
    for (int m = 1; m <= n; ++m)
      EXPECT_EQ(SymmetricFunction::sigma_root(n, m).in_cone(x), in_gamma_subsets(x, m));
  }
}

TEST(SymmetricFunction, ValuesMatchSubsetOracle) {
  Rng rng(22);
  for (int n = 1; n <= 6; ++n)
    for (const auto& fun : all_kinds(n))
      for (int trial = 0; trial < 100; ++trial) {
        const Lambda x = random_cone_point(rng, fun);
        const double want = f_subsets(fun, x);
        EXPECT_NEAR(fun.value(x), want, 1e-11 * (1.0 + want)) << fun.name();
      }
}

TEST(SymmetricFunction, GradientMatchesComplexStep) {
  Rng rng(23);
  for (int n = 1; n <= 6; ++n)
    for (const auto& fun : all_kinds(n))
      for (int trial = 0; trial < 50; ++trial) {
        const Lambda x = random_cone_point(rng, fun);
        const Lambda g = fun.gradient(x);
        const Lambda fd = complex_step_gradient(fun, x);
        for (int i = 0; i < n; ++i) EXPECT_NEAR(g[i], fd[i], 1e-9 * (1.0 + std::abs(fd[i]))) << fun.name();
      }
}

TEST(SymmetricFunction, SymmetricUnderPermutation) {
  const auto fun = SymmetricFunction::hessian_quotient(4, 1, 3);
  Lambda x{5, 1, 3, 2};
  const double v = fun.value(x);
  std::sort(x.begin(), x.end());
  do {
    EXPECT_NEAR(fun.value(x), v, 1e-13);
  } while (std::next_permutation(x.begin(), x.end()));
}

TEST(SymmetricFunction, QuotientDefinedAlongWholeRay) {
  // Degree-one homogeneity, exact under power-of-two scaling, far from 1.
  const auto q = SymmetricFunction::hessian_quotient(3, 1, 2);
  const Lambda x{0.2, 1.0, 2.5};
  const double f1 = q.value(x);
  for (int j : {-60, -40, 40, 60}) {
    Lambda z = x;
    for (double& v : z) v = std::ldexp(v, j);
    EXPECT_DOUBLE_EQ(q.value(z), std::ldexp(f1, j)) << j;
  }
}

TEST(Structure, GradientPositiveInCone) {
  Rng rng(24);
  for (int n = 1; n <= 8; ++n)
    for (const auto& fun : all_kinds(n))
      for (int trial = 0; trial < 100; ++trial) {
        const Lambda g = f_grad(fun, random_cone_point(rng, fun));
        for (double gi : g) EXPECT_GT(gi, 0.0) << fun.name();
      }
}

TEST(Structure, Concavity) {
  Rng rng(25);
  for (int n = 1; n <= 6; ++n)
    for (const auto& fun : all_kinds(n))
      for (int trial = 0; trial < 100; ++trial) {
        const Lambda a = random_cone_point(rng, fun);
        const Lambda b = random_cone_point(rng, fun);
        const auto c = check_concavity(fun, a, b);
        EXPECT_TRUE(c.pass) << fun.name() << " " << c.midpoint_gap << " " << c.gradient_gap;
      }
}

TEST(Structure, EulerIdentity) {
  Rng rng(26);
  for (int n = 1; n <= 8; ++n)
    for (const auto& fun : all_kinds(n))
      for (int trial = 0; trial < 50; ++trial) {
        const Lambda x = random_cone_point(rng, fun);
        const double e = euler_positivity(fun, x);
        EXPECT_GT(e, 0.0);
        EXPECT_NEAR(e, fun.value(x), 1e-10 * (1.0 + e));
      }
}

TEST(Structure, BoundaryLimitIsZero) {
  // Approaching the cone boundary along a segment drives f to 0.
  const auto fun = SymmetricFunction::sigma_root(3, 2);
  const Lambda base{1, 1, 1};
  const Lambda dir{0, 0, -1};
  // sigma_2(1,1,1-s) = 1 + 2(1-s) vanishes at s = 1.5.
  for (double gap : {1e-2, 1e-4, 1e-8}) {
    Lambda x = base;
    x[2] -= 1.5 - gap;
    EXPECT_NEAR(fun.value(x), std::sqrt(2.0 * gap), 1e-7);
  }
  EXPECT_EQ(fun.boundary_sup(), 0.0);
  (void)dir;
}

TEST(RayIntersect, HandValues) {
  EXPECT_NEAR(ray_intersect(SymmetricFunction::sigma_root(2, 1), Lambda{1, 1}, 1.0), 0.5, 1e-12);
  EXPECT_NEAR(ray_intersect(SymmetricFunction::monge_ampere(2), Lambda{1, 4}, 4.0), 2.0, 1e-10);
}

TEST(RayIntersect, LogGridUniqueAndHomogeneous) {
  Rng rng(27);
  for (int n = 1; n <= 8; ++n)
    for (const auto& fun : all_kinds(n))
      for (int trial = 0; trial < 10; ++trial) {
        const Lambda x = random_cone_point(rng, fun);
        const double fx = fun.value(x);
        for (double sigma = 1e-3; sigma <= 1e3; sigma *= 10.0) {
          const double t = ray_intersect(fun, x, sigma);
          EXPECT_NEAR(t, sigma / fx, 1e-9 * (1.0 + sigma / fx)) << fun.name();
          const auto p = make_level_set_point(fun, x, sigma);
          EXPECT_NO_THROW(validate(fun, p));
        }
      }
}

TEST(RayIntersect, Errors) {
  const auto fun = SymmetricFunction::monge_ampere(2);
  EXPECT_THROW(ray_intersect(fun, Lambda{1, -1}, 1.0), Error);
  EXPECT_THROW(ray_intersect(fun, Lambda{1, 1}, 0.0), Error);
  EXPECT_THROW(ray_intersect(fun, Lambda{1, 1}, -1.0), Error);
  EXPECT_THROW(ray_intersect(fun, Lambda{1, 1}, std::numeric_limits<double>::infinity()), Error);
}

TEST(FiSumBound, HoldsOnRandomLevelSets) {
  Rng rng(28);
  for (int n = 2; n <= 6; ++n)
    for (const auto& fun : all_kinds(n))
      for (int trial = 0; trial < 50; ++trial) {
        const double sigma = std::exp(rng.uniform(-3.0, 3.0));
        const auto p = make_level_set_point(fun, random_cone_point(rng, fun), sigma);
        const Lambda g = fun.gradient(p.lambda);
        const double gsum = std::accumulate(g.begin(), g.end(), 0.0);
        for (double t : {0.1, 1.0, 10.0}) {
          EXPECT_TRUE(check_fi_sum_bound(fun, p, t));
          // Independent restatement of the bound via the value at t(1,...,1).
          EXPECT_GT(gsum, (f_subsets(fun, Lambda(n, t)) - sigma) / t - 1e-10);
        }
      }
}

TEST(FiSumBound, RejectsNonPositiveT) {
  const auto fun = SymmetricFunction::sigma_root(2, 1);
  const auto p = make_level_set_point(fun, Lambda{1, 1}, 1.0);
  EXPECT_THROW(check_fi_sum_bound(fun, p, 0.0), Error);
}

TEST(SubsolutionGap, FarBranchHandExample) {
  const auto fun = SymmetricFunction::monge_ampere(2);
  const Lambda sub{1, 1};
  const Lambda lam{3, 1.0 / 3.0};
  const double beta = beta_for(unit_normal(fun, sub));
  EXPECT_NEAR(beta, 0.5 / std::sqrt(2.0), 1e-15);
  const auto r = subsolution_gap(fun, sub, lam, {beta, 0.1});
  EXPECT_EQ(r.branch, GapBranch::NormalFar);
  // Df(lam) = (1/6, 3/2); sum f_i (mu - lam) = 1/6*(-2) + 3/2*(2/3) = 2/3,
  // f(mu) - f(lam) = 0, so eps' = (2/3) / (1 + 5/3) = 0.25.
  EXPECT_NEAR(r.residual, 0.25, 1e-12);
  EXPECT_TRUE(r.holds);
  EXPECT_TRUE(r.meets_spec_epsilon);
}

TEST(SubsolutionGap, NearBranch) {
  const auto fun = SymmetricFunction::monge_ampere(2);
  const Lambda sub{1, 1};
  const double beta = beta_for(unit_normal(fun, sub));
  const auto r = subsolution_gap(fun, sub, Lambda{1.1, 0.9}, {beta, 0.1});
  EXPECT_EQ(r.branch, GapBranch::NormalNear);
  EXPECT_TRUE(r.holds);
  EXPECT_THROW(subsolution_gap(fun, sub, sub, {0.0, 0.1}), Error);
}

TEST(SubsolutionGap, RandomDichotomyHolds) {
  Rng rng(29);
  for (int n = 2; n <= 5; ++n) {
    for (const auto& fun : all_kinds(n)) {
      for (int trial = 0; trial < 50; ++trial) {
        const Lambda sub = random_cone_point(rng, fun);
        const double beta = beta_for(unit_normal(fun, sub));
        // Level sets above the subsolution value.
        const double sigma = fun.value(sub) * rng.uniform(1.0, 1.5);
        const auto p = make_level_set_point(fun, random_cone_point(rng, fun), sigma);
        Lambda mu = sub;
        // Shift the subsolution so that f(mu) = f(lambda) keeps the comparison meaningful.
        const double s = ray_intersect(fun, sub, sigma);
        for (double& v : mu) v *= s;
        const auto r = subsolution_gap(fun, mu, p.lambda, {beta, 1e-3});
        if (r.branch == GapBranch::NormalFar) EXPECT_TRUE(r.holds) << fun.name();
      }
    }
  }
}

TEST(Kappa, HandValues) {
  EXPECT_NEAR(kappa_lower_bound(SymmetricFunction::sigma_root(3, 1), 3.0), 1.5, 1e-10);
  EXPECT_NEAR(kappa_lower_bound(SymmetricFunction::monge_ampere(2), 1.0), 0.5, 1e-10);
}

TEST(Kappa, ClosedFormForDegreeOne) {
  // With c = f(1,...,1): c0 = s/c and kappa = c/(1 + s/c).
  for (int n = 2; n <= 6; ++n)
    for (const auto& fun : all_kinds(n)) {
      const double c = f_subsets(fun, Lambda(n, 1.0));
      for (double s : {0.1, 1.0, 7.0}) EXPECT_NEAR(kappa_lower_bound(fun, s), c / (1.0 + s / c), 1e-9) << fun.name();
    }
}

TEST(Kappa, BoundsGradientSumOnLevelSet) {
  Rng rng(30);
  for (int n = 2; n <= 6; ++n)
    for (const auto& fun : all_kinds(n))
      for (int trial = 0; trial < 30; ++trial) {
        const double sup_psi = std::exp(rng.uniform(-2.0, 2.0));
        const double kappa = kappa_lower_bound(fun, sup_psi);
        EXPECT_GT(kappa, 0.0);
        const auto p = make_level_set_point(fun, random_cone_point(rng, fun), sup_psi * rng.uniform(0.2, 1.0));
        const Lambda g = fun.gradient(p.lambda);
        EXPECT_GE(std::accumulate(g.begin(), g.end(), 0.0), kappa - 1e-10) << fun.name();
      }
}

TEST(Delta, Nondegeneracy) {
  const auto fun = SymmetricFunction::monge_ampere(2);
  EXPECT_DOUBLE_EQ(delta_nondegeneracy(fun, std::vector<double>{0.5, 0.2, 0.9}), 0.2);
  EXPECT_THROW(delta_nondegeneracy(fun, std::vector<double>{}), Error);
}
