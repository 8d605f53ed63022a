#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "hessiancone/arrowhead.hpp"
#include "hessiancone/hessian.hpp"
#include "hessiancone/linear.hpp"
#include "hessiancone/random.hpp"
#include "oracles.hpp"

using namespace hessiancone;
using Z = std::complex<double>;

namespace {

// Nodes whose stencils never wrap a periodic axis, so polynomials that are
// not periodic are still differenced exactly there.
std::vector<std::size_t> unwrapped_interior(const GridGeometry& g) {
  std::vector<std::size_t> out;
  for (const std::int32_t node : g.interior()) {
    bool ok = true;
    for (int a = 0; a < g.axes(); ++a)
      if (g.periodic(a)) {
        const int c = g.coord(node, a);
        ok = ok && c >= 1 && c + 1 < g.extent(a);
      }
    if (ok) out.push_back(static_cast<std::size_t>(node));
  }
  return out;
}

Form random_hermitian(Rng& rng, int n, double scale) {
  Form m(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = rng.uniform(-scale, scale);
    for (int j = i + 1; j < n; ++j) {
      m(i, j) = Z(rng.uniform(-scale, scale), rng.uniform(-scale, scale));
      m(j, i) = std::conj(m(i, j));
    }
  }
  return m;
}

std::vector<Z> row_major(const Form& m) {
  std::vector<Z> out;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  return out;
}

}  // namespace

TEST(Grid, ComplexModelLayout) {
  const auto g = GridGeometry::complex_model(2, 8);
  EXPECT_EQ(g->axes(), 4);
  EXPECT_EQ(g->normal_axis(), 2);
  EXPECT_EQ(g->extent(0), 8);
  EXPECT_EQ(g->extent(2), 9);
  EXPECT_EQ(g->size(), 8u * 8u * 9u * 8u);
  EXPECT_EQ(g->stride(3), 1u);
  EXPECT_EQ(g->interior().size() + g->boundary().size(), g->size());
  EXPECT_EQ(g->boundary().size(), 2u * 8u * 8u * 8u);
}

TEST(Grid, NeighborsWrapAndStop) {
  const auto g = GridGeometry::real_model(2, std::vector<int>{5, 4});
  const std::array<int, 2> corner{0, 0};
  const std::size_t node = g->index(corner);
  const std::array<int, 2> wrapped{4, 0};
  EXPECT_EQ(g->neighbor(node, 0, false), static_cast<std::int32_t>(g->index(wrapped)));
  EXPECT_EQ(g->neighbor(node, 1, false), -1);
  const std::array<int, 2> top{2, 4};
  EXPECT_EQ(g->neighbor(g->index(top), 1, true), -1);
  EXPECT_TRUE(g->on_boundary(g->index(top)));
  EXPECT_DOUBLE_EQ(g->h(0), 0.2);
  EXPECT_DOUBLE_EQ(g->h(1), 0.25);
}

TEST(Grid, CoordinatesRoundTrip) {
  const auto g = GridGeometry::complex_model(2, std::vector<int>{3, 4, 5, 6});
  for (std::size_t node = 0; node < g->size(); ++node) {
    std::array<int, 4> c{};
    for (int a = 0; a < 4; ++a) c[a] = g->coord(node, a);
    EXPECT_EQ(g->index(c), node);
  }
  const std::array<int, 4> bad{0, 0, 6, 0};
  EXPECT_THROW((void)g->index(bad), Error);
}

TEST(Grid, RejectsBadShapes) {
  EXPECT_THROW(GridGeometry::complex_model(1, 8), Error);
  EXPECT_THROW(GridGeometry::complex_model(4, 8), Error);
  EXPECT_THROW(GridGeometry::real_model(2, 2), Error);
  EXPECT_THROW(GridGeometry::real_model(2, std::vector<int>{4, 4, 4}), Error);
}

TEST(ComplexHessian, AbsZ1Squared) {
  const auto g = GridGeometry::complex_model(2, 8);
  const auto u = ScalarField::from_function(g, [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1]; });
  const auto H = complex_hessian(u, HermitianFormField::identity(2, g->size()));
  for (const std::size_t node : unwrapped_interior(*g)) {
    const Form m = H.at(node);
    EXPECT_NEAR(m(0, 0).real(), 2.0, 1e-10);
    EXPECT_NEAR(m(1, 1).real(), 1.0, 1e-10);
    EXPECT_NEAR(std::abs(m(0, 1)), 0.0, 1e-10);
  }
}

TEST(ComplexHessian, PluriharmonicLeavesChi) {
  const auto g = GridGeometry::complex_model(2, 8);
  // Re(z1^2) = x1^2 - y1^2.
  const auto u = ScalarField::from_function(g, [](std::span<const double> x) { return x[0] * x[0] - x[1] * x[1]; });
  Form chi(2, 2);
  chi << Z(2, 0), Z(0.5, 0.25), Z(0.5, -0.25), Z(3, 0);
  const auto H = complex_hessian(u, HermitianFormField::uniform(chi, g->size()));
  for (const std::size_t node : unwrapped_interior(*g)) EXPECT_LT((H.at(node) - chi).norm(), 1e-10);
}

TEST(ComplexHessian, MixedTermConvention) {
  // u = Re(a z1 conj(z2)) has d_1 dbar_2 u = a / 2.
  const auto g = GridGeometry::complex_model(2, 8);
  for (const Z a : {Z(1, 0), Z(0, 1), Z(0.3, -0.7)}) {
    const auto u = ScalarField::from_function(g, [&](std::span<const double> x) {
      const Z z1(x[0], x[1]), z2(x[2], x[3]);
      return (a * z1 * std::conj(z2)).real();
    });
    Form zero = Form::Zero(2, 2);
    const auto H = complex_hessian(u, HermitianFormField::uniform(zero, g->size()));
    for (const std::size_t node : unwrapped_interior(*g)) {
      const Form m = H.at(node);
      EXPECT_NEAR(std::abs(m(0, 1) - a / 2.0), 0.0, 1e-10);
      EXPECT_NEAR(std::abs(m(1, 0) - std::conj(a) / 2.0), 0.0, 1e-10);
      EXPECT_NEAR(std::abs(m(0, 0)) + std::abs(m(1, 1)), 0.0, 1e-10);
    }
  }
}

TEST(RealHessian, Quadratic) {
  const auto g = GridGeometry::real_model(2, 8);
  const auto u = ScalarField::from_function(g, [](std::span<const double> x) { return 1.5 * x[1] * x[1] + x[0] * x[1]; });
  const auto H = real_hessian(u, HermitianFormField::identity(2, g->size()));
  for (const std::size_t node : unwrapped_interior(*g)) {
    const Form m = H.at(node);
    EXPECT_NEAR(m(0, 0).real(), 1.0, 1e-10);
    EXPECT_NEAR(m(1, 1).real(), 4.0, 1e-10);
    EXPECT_NEAR(m(0, 1).real(), 1.0, 1e-10);
  }
  EXPECT_THROW(complex_hessian(u, HermitianFormField::identity(2, g->size())), Error);
}

TEST(EigenField, TwoByTwoHandValue) {
  Form m(2, 2);
  m << Z(2, 0), Z(1, 0), Z(1, 0), Z(2, 0);
  const auto e = eigen_field(HermitianFormField::uniform(m, 3));
  for (std::size_t node = 0; node < 3; ++node) {
    EXPECT_NEAR(e.at(node)[0], 1.0, 1e-14);
    EXPECT_NEAR(e.at(node)[1], 3.0, 1e-14);
  }
}

TEST(EigenField, MatchesJacobiOracle) {
  Rng rng(41);
  for (int n = 2; n <= 6; ++n) {
    auto field = HermitianFormField::per_node(n, 50);
    for (std::size_t node = 0; node < 50; ++node) field.set(node, random_hermitian(rng, n, 5.0));
    const auto e = eigen_field(field);
    for (std::size_t node = 0; node < 50; ++node) {
      const auto ref = oracle::hermitian_eigenvalues(row_major(field.at(node)), n);
      for (int i = 0; i < n; ++i) EXPECT_NEAR(e.at(node)[i], ref[i], 1e-10);
    }
  }
}

TEST(EigenField, AgreesWithArrowheadModule) {
  Rng rng(42);
  for (int n = 2; n <= 6; ++n) {
    auto field = HermitianFormField::per_node(n, 40);
    std::vector<arrowhead::ArrowheadSpec> specs;
    for (std::size_t node = 0; node < 40; ++node) {
      auto spec = arrowhead::random_spec(rng, n);
      spec.corner = rng.uniform(-10.0, 10.0);
      field.set(node, Form(arrowhead::assemble(spec)));
      specs.push_back(spec);
    }
    const auto e = eigen_field(field);
    for (std::size_t node = 0; node < 40; ++node) {
      const auto ref = arrowhead::eigenvalues(specs[node]).values;
      for (int i = 0; i < n; ++i) EXPECT_NEAR(e.at(node)[i], ref[i], 1e-10);
    }
  }
}

TEST(EigenField, ClosedFormTwoByTwoNearCoalescence) {
  Rng rng(43);
  SpectralKernel kernel;
  for (int trial = 0; trial < 200; ++trial) {
    Form m(2, 2);
    const double d = rng.uniform(-3.0, 3.0);
    const double gap = std::pow(10.0, rng.uniform(-14.0, 0.0));
    m << Z(d + gap, 0), Z(gap * rng.unit(), gap * rng.unit()), Z(0, 0), Z(d, 0);
    m(1, 0) = std::conj(m(0, 1));
    std::array<double, kMaxAxes> lam{};
    kernel.eigenvalues(m, lam.data());
    const auto ref = oracle::hermitian_eigenvalues(row_major(m), 2);
    EXPECT_NEAR(lam[0], ref[0], 1e-12);
    EXPECT_NEAR(lam[1], ref[1], 1e-12);
  }
}

TEST(Linearize, MongeAmpereDiagonal) {
  // f = sqrt(l1 l2) at diag(1, 4): f_1 = 1, f_2 = 1/4.
  const auto g = GridGeometry::complex_model(2, 4);
  Form chi = Form::Zero(2, 2);
  chi(0, 0) = 1.0;
  chi(1, 1) = 4.0;
  const auto B = linearize(ScalarField(g), HermitianFormField::uniform(chi, g->size()), SymmetricFunction::monge_ampere(2));
  for (const std::int32_t node : g->interior()) {
    const Form m = B.at(node);
    EXPECT_NEAR(m(0, 0).real(), 1.0, 1e-14);
    EXPECT_NEAR(m(1, 1).real(), 0.25, 1e-14);
    EXPECT_NEAR(std::abs(m(0, 1)), 0.0, 1e-14);
  }
}

TEST(Linearize, RepeatedEigenvalues) {
  // At the identity every f_i is 1/2 for ma n = 2, so B = I / 2.
  const auto g = GridGeometry::complex_model(2, 4);
  const auto B = linearize(ScalarField(g), HermitianFormField::identity(2, g->size()), SymmetricFunction::monge_ampere(2));
  for (const std::int32_t node : g->interior()) EXPECT_LT((B.at(node) - Form::Identity(2, 2) * 0.5).norm(), 1e-14);
}

TEST(Linearize, TraceAgainstDirectionMatchesDifferenceQuotient) {
  // dF(G)[E] = tr(B E) for Hermitian E, checked by central differences.
  Rng rng(44);
  SpectralKernel kernel;
  for (int n = 2; n <= 3; ++n)
    for (const auto& fun : {SymmetricFunction::monge_ampere(n), SymmetricFunction::sigma_root(n, 2),
                            SymmetricFunction::hessian_quotient(n, 1, 2)})
      for (int trial = 0; trial < 30; ++trial) {
        Form G = random_hermitian(rng, n, 0.5) + Form::Identity(n, n) * 2.0;
        const Form E = random_hermitian(rng, n, 1.0);
        std::array<double, kMaxAxes> lam{}, grad{};
        auto F = [&](const Form& M) {
          kernel.eigenvalues(M, lam.data());
          return fun.value(std::span<const double>(lam.data(), n));
        };
        const double t = 1e-6;
        const double fd = (F(G + t * E) - F(G - t * E)) / (2.0 * t);
        kernel.eigenvalues(G, lam.data());
        double f = 0.0;
        ASSERT_TRUE(fun.try_evaluate(std::span<const double>(lam.data(), n), &f, std::span<double>(grad.data(), n)));
        Form B;
        kernel.spectral_derivative(G, lam.data(), grad.data(), B);
        EXPECT_NEAR((B * E).trace().real(), fd, 1e-4 * (1.0 + std::abs(fd))) << fun.name();
        // F^{i jbar} is positive definite.
        kernel.eigenvalues(B, lam.data());
        EXPECT_GT(lam[0], 0.0);
      }
}

TEST(Linearize, OperatorMatchesFieldDifference) {
  // The assembled coefficients reproduce the derivative of u -> F[u] along v.
  for (const bool complex : {true, false}) {
    const auto g = complex ? GridGeometry::complex_model(2, 6) : GridGeometry::real_model(2, 12);
    const auto fun = SymmetricFunction::monge_ampere(2);
    const auto chi = HermitianFormField::identity(2, g->size());
    const auto u = ScalarField::from_function(g, [](std::span<const double> x) {
      return 0.02 * std::cos(2 * std::numbers::pi * x[0]) * std::sin(std::numbers::pi * x.back());
    });
    const auto v = ScalarField::from_function(g, [](std::span<const double> x) {
      return std::sin(2 * std::numbers::pi * (x[0] + 0.3)) * x.back() * (1 - x.back());
    });
    std::vector<double> base, plus, minus, lv(g->size());
    CoefficientField C;
    ASSERT_TRUE(evaluate_operator(u, chi, fun, base, &C).admissible);
    apply_operator(C, v.values, lv);
    const double t = 1e-6;
    ScalarField up(g), um(g);
    for (std::size_t i = 0; i < g->size(); ++i) {
      up[i] = u[i] + t * v[i];
      um[i] = u[i] - t * v[i];
    }
    ASSERT_TRUE(evaluate_operator(up, chi, fun, plus).admissible);
    ASSERT_TRUE(evaluate_operator(um, chi, fun, minus).admissible);
    for (const std::int32_t node : g->interior()) {
      const double fd = (plus[node] - minus[node]) / (2.0 * t);
      EXPECT_NEAR(lv[node], fd, 1e-4 * (1.0 + std::abs(fd)));
    }
  }
}

TEST(EvaluateOperator, ReportsInadmissibleNode) {
  const auto g = GridGeometry::complex_model(2, 6);
  Form chi = Form::Identity(2, 2) * -1.0;
  std::vector<double> values;
  const auto ev = evaluate_operator(ScalarField(g), HermitianFormField::uniform(chi, g->size()),
                                    SymmetricFunction::monge_ampere(2), values);
  EXPECT_FALSE(ev.admissible);
  EXPECT_EQ(ev.bad_node, g->interior().front());
}

TEST(Preconditioner, InvertsConstantCoefficientOperator) {
  Rng rng(45);
  for (const bool complex : {true, false}) {
    const auto g = complex ? GridGeometry::complex_model(2, std::vector<int>{4, 6, 5, 8})
                           : GridGeometry::real_model(3, std::vector<int>{5, 6, 7});
    std::vector<double> diag(g->axes());
    for (double& d : diag) d = rng.uniform(0.2, 2.0);
    const auto C = constant_diagonal(g, diag);
    std::vector<double> v(g->size(), 0.0), b(g->size()), back(g->size());
    for (const std::int32_t node : g->interior()) v[node] = rng.uniform(-1.0, 1.0);
    apply_operator(C, v, b);
    for (const std::int32_t node : g->boundary()) b[node] = 0.0;
    SpectralPreconditioner(g, diag).apply(b, back);
    for (std::size_t i = 0; i < g->size(); ++i) EXPECT_NEAR(back[i], v[i], 1e-10);
  }
}

TEST(Krylov, SolvesVariableCoefficientOperator) {
  const auto g = GridGeometry::complex_model(2, 8);
  const auto fun = SymmetricFunction::monge_ampere(2);
  const auto u = ScalarField::from_function(g, [](std::span<const double> x) {
    return 0.03 * std::cos(2 * std::numbers::pi * x[1]) * std::sin(std::numbers::pi * x[2]);
  });
  std::vector<double> values;
  CoefficientField C;
  ASSERT_TRUE(evaluate_operator(u, HermitianFormField::identity(2, g->size()), fun, values, &C).admissible);
  Rng rng(46);
  std::vector<double> x_true(g->size(), 0.0), b(g->size()), x(g->size(), 0.0), check(g->size());
  for (const std::int32_t node : g->interior()) x_true[node] = rng.uniform(-1.0, 1.0);
  apply_operator(C, x_true, b);
  const auto kr = solve_linearized(C, b, x);
  EXPECT_TRUE(kr.converged);
  EXPECT_LE(kr.relative_residual, 1e-10);
  apply_operator(C, x, check);
  double rn = 0.0, bn = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i) {
    rn += (check[i] - b[i]) * (check[i] - b[i]);
    bn += b[i] * b[i];
  }
  EXPECT_LE(std::sqrt(rn / bn), 1e-9);
}
