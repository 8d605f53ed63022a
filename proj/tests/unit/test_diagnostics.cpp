#include <gtest/gtest.h>

#include <cmath>

#include "hessiancone/diagnostics.hpp"
#include "hessiancone/presets.hpp"

using namespace hessiancone;

namespace {

std::size_t bottom_node(const GridGeometry& g) {
  std::array<int, kMaxAxes> c{};
  return g.index(std::span<const int>(c.data(), g.axes()));
}

double flat_rho(const GridGeometry& g, std::size_t a, std::size_t b) {
  double s = 0.0;
  for (int k = 0; k < g.axes(); ++k) {
    double d = std::abs(g.position(a, k) - g.position(b, k));
    if (k != g.normal_axis()) d = std::min(d, 1.0 - d);
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

TEST(Barrier, AllZeroFieldsHandFormula) {
  const auto g = GridGeometry::complex_model(2, 8);
  const auto pp = presets::trivial(g, SymmetricFunction::monge_ampere(2));
  const std::size_t p0 = bottom_node(*g);
  BarrierSpec spec;
  spec.A1 = 3.0;
  spec.A2 = 2.0;
  spec.A3 = 1.5;
  spec.N = 2.0;
  spec.delta = 0.25;
  spec.t = 0.5;
  const auto res = barrier_eval(pp.problem, ScalarField(g), spec, p0, {0, 1});
  EXPECT_DOUBLE_EQ(res.b1, 1.0);
  for (std::size_t node = 0; node < g->size(); ++node) {
    const double sigma = std::min(g->position(node, 2), 1.0 - g->position(node, 2));
    const double rho = flat_rho(*g, node, p0);
    const double expected = spec.A3 * (spec.N * sigma * sigma - spec.t * sigma) - spec.A2 * rho * rho;
    EXPECT_NEAR(res.psi[node], expected, 1e-14);
    if (spec.N * sigma <= spec.t) EXPECT_LE(res.psi[node], 1e-15);
  }
  EXPECT_LE(res.max_boundary, 0.0);
  EXPECT_GT(res.region_nodes, 0u);
}

TEST(Barrier, MatchingSubsolutionLargeA2NonpositiveOnShell) {
  const auto g = GridGeometry::complex_model(2, 8);
  const auto pp = presets::manufactured(g, SymmetricFunction::monge_ampere(2), 0.0, 1.0);
  // u = u_sub: the A1 term vanishes and A2 dominates the gradient terms.
  BarrierSpec spec;
  spec.A2 = 1e4;
  spec.delta = 0.25;
  spec.N = 1.0;
  spec.t = 0.25;
  for (const TangentialDirection dir : {TangentialDirection{0, 1}, TangentialDirection{1, -1}}) {
    const auto res = barrier_eval(pp.problem, pp.problem.subsolution, spec, bottom_node(*g), dir);
    EXPECT_LE(res.max_boundary, 0.0);
  }
}

TEST(Barrier, InputValidation) {
  const auto g = GridGeometry::complex_model(2, 8);
  const auto pp = presets::trivial(g, SymmetricFunction::monge_ampere(2));
  const std::size_t p0 = bottom_node(*g);
  BarrierSpec spec;
  spec.delta = 0.6;
  spec.t = 1.0;
  EXPECT_THROW((void)barrier_eval(pp.problem, ScalarField(g), spec, p0, {0, 1}), Error);
  spec.delta = 0.25;
  spec.N = 2.0;
  spec.t = 0.25;  // N delta > t
  EXPECT_THROW((void)barrier_eval(pp.problem, ScalarField(g), spec, p0, {0, 1}), Error);
  spec.N = 1.0;
  EXPECT_THROW((void)barrier_eval(pp.problem, ScalarField(g), spec, g->interior().front(), {0, 1}), Error);
  EXPECT_THROW((void)barrier_eval(pp.problem, ScalarField(g), spec, p0, {2, 1}), Error);
  EXPECT_THROW((void)barrier_eval(pp.problem, ScalarField(g), spec, p0, {0, 0}), Error);
}

TEST(Barrier, RecipeOnSolvedManufacturedProblem) {
  const auto g = GridGeometry::complex_model(2, 8);
  const auto pp = presets::manufactured(g, SymmetricFunction::monge_ampere(2));
  const auto res = continuity_solve(pp.problem);
  const double tol = 10.0 * g->h_max();
  for (const TangentialDirection dir : {TangentialDirection{0, 1}, TangentialDirection{1, -1}}) {
    const auto [spec, out] = barrier_recipe(pp.problem, res.u, bottom_node(*g), dir, 0.25, tol);
    EXPECT_GE(out.min_l, -tol);
    EXPECT_LE(out.max_boundary, 1e-12);
    EXPECT_DOUBLE_EQ(spec.t, spec.N * spec.delta);
  }
}

TEST(Presets, ManufacturedAmplitudes) {
  const auto fun = SymmetricFunction::monge_ampere(2);
  EXPECT_DOUBLE_EQ(presets::manufactured(GridGeometry::complex_model(2, 8), fun).amplitude, 0.025);
  EXPECT_DOUBLE_EQ(presets::manufactured(GridGeometry::real_model(2, 16), fun).amplitude, 0.0125);
}

TEST(Presets, ManufacturedSubsolutionIsValid) {
  for (const auto& fun : {SymmetricFunction::monge_ampere(2), SymmetricFunction::sigma_root(2, 1)}) {
    const auto pp = presets::manufactured(GridGeometry::complex_model(2, 8), fun);
    EXPECT_GT(presets::subsolution_margin(pp.problem), 0.0);
  }
}

TEST(Presets, ScalingAtZeroIsTrivial) {
  const auto g = GridGeometry::complex_model(2, 8);
  const auto pp = presets::scaling(g, SymmetricFunction::monge_ampere(2), 0.0);
  for (double v : pp.problem.phi.values) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(pp.bump, 1.0);
}

TEST(Presets, DegenerateMargin) {
  // f(lambda(I + dd^c(-4 x (1 - x)))) = sqrt(1 * 3) at every interior node, and
  // psi <= 1 + eps, so the margin is sqrt(3) - 1 - eps at the maximum of psi.
  const auto g = GridGeometry::complex_model(2, 8);
  const auto pp = presets::degenerate(g, SymmetricFunction::monge_ampere(2), 0.0);
  EXPECT_NEAR(presets::subsolution_margin(pp.problem), std::sqrt(3.0) - 1.0, 1e-12);
}

TEST(DegenerateSweep, ShiftEqualsNondegenerateSolve) {
  // psi = 0 plus eps = 1 is the problem with psi = 1.
  const auto g = GridGeometry::complex_model(2, 6);
  const auto fun = SymmetricFunction::monge_ampere(2);
  auto base = presets::degenerate(g, fun, 0.0, 0.0);
  const auto rows = degenerate_sweep(base.problem, {1.0});
  ASSERT_EQ(rows.size(), 1u);
  ASSERT_TRUE(rows[0].converged);
  Problem shifted = base.problem;
  for (double& v : shifted.psi.values) v = 1.0;
  const auto direct = continuity_solve(shifted);
  EXPECT_DOUBLE_EQ(rows[0].sup_grad, direct.report.sup_grad());
  EXPECT_DOUBLE_EQ(rows[0].sup_laplacian, direct.report.sup_laplacian);
}

TEST(DegenerateSweep, RecordsFailuresAndContinues) {
  const auto g = GridGeometry::complex_model(2, 6);
  const auto base = presets::degenerate(g, SymmetricFunction::monge_ampere(2), 0.0);
  const auto rows = degenerate_sweep(base.problem, {-1.0, 10.0, 0.1});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_FALSE(rows[0].converged);
  EXPECT_FALSE(rows[0].error.empty());
  // eps = 10 exceeds the subsolution margin.
  EXPECT_FALSE(rows[1].converged);
  EXPECT_NE(rows[1].error.find("subsolution"), std::string::npos);
  EXPECT_TRUE(rows[2].converged);
  EXPECT_LE(rows[2].final_residual, 1e-8);
}

TEST(DegenerateSweep, SmallEpsKeepsSubsolution) {
  const auto g = GridGeometry::complex_model(2, 6);
  const auto base = presets::degenerate(g, SymmetricFunction::monge_ampere(2), 0.0);
  const double delta0 = presets::subsolution_margin(base.problem);
  for (double eps : {0.5 * delta0, 0.99 * delta0}) {
    Problem p = base.problem;
    for (double& v : p.psi.values) v += eps;
    EXPECT_NO_THROW((void)subsolution_values(p));
  }
}
