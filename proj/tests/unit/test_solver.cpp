#include <random>

#include <gtest/gtest.h>

#include "pmfair/exact.hpp"
#include "pmfair/fairness.hpp"
#include "pmfair/solver.hpp"

using namespace pmfair;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
  Matrix m(static_cast<int>(r.size()), static_cast<int>(r.begin()->size()));
  int i = 0;
  for (const auto& row : r) {
    int j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

Matrix random_interior(std::mt19937_64& rng, int n, int m) {
  std::uniform_real_distribution<double> d(0.05, 1.0);
  Matrix x(n, m);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) x(i, j) = d(rng);
    x.col(j) /= x.col(j).sum();
  }
  return x;
}

}  // namespace

TEST(SolveGoods, SymmetricBalances) {
  Instance inst(Kind::Goods, Matrix::Constant(2, 2, 0.5));
  SolveResult r = solve_goods(inst, -1.0);
  NormalizedInstance ni = normalize(inst);
  EXPECT_NEAR(bundle_value(ni, r.allocation, 0), 0.5, 1e-6);
  EXPECT_NEAR(bundle_value(ni, r.allocation, 1), 0.5, 1e-6);
}

TEST(SolveGoods, UniquelyValuedGoods) {
  Instance inst(Kind::Goods, rows({{1, 0}, {0, 1}}));
  for (double p : {0.0, -1.0, -3.0}) {
    SolveResult r = solve_goods(inst, p);
    EXPECT_NEAR(r.allocation.x(0, 0), 1.0, 1e-6);
    EXPECT_NEAR(r.allocation.x(1, 1), 1.0, 1e-6);
  }
}

TEST(SolveGoods, MatchesGridOracle) {
  std::mt19937_64 rng(21);
  Instance inst = random_instance(rng, Kind::Goods, 3, 5);
  SolveResult r = solve_goods(inst, -2.0);
  GridResult g = grid_oracle_divisible(inst, -2.0, 40);
  EXPECT_NEAR(normalized_p_mean(inst, r.allocation, -2.0), g.objective, 1e-4);
  EXPECT_GE(normalized_p_mean(inst, r.allocation, -2.0), g.objective - 1e-9);
}

TEST(SolveGoods, RejectsPositiveP) {
  Instance inst(Kind::Goods, Matrix::Constant(2, 2, 0.5));
  EXPECT_THROW(solve_goods(inst, 0.5), UnsupportedRegime);
  EXPECT_THROW(solve_chores(inst, 2.0), UnsupportedRegime);
}

TEST(SolveChores, IdenticalAgentsEqualCost) {
  Instance inst(Kind::Chores, rows({{0.1, 0.2, 0.7}, {0.1, 0.2, 0.7}, {0.1, 0.2, 0.7}}));
  SolveResult r = solve_chores(inst, 2.0);
  NormalizedInstance ni = normalize(inst);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(bundle_value(ni, r.allocation, i), 1.0 / 3, 1e-6);
}

TEST(SolveChores, LinearCaseAssignsCheapest) {
  Instance inst(Kind::Chores, rows({{0.2, 0.8}, {0.3, 0.7}}));
  SolveResult r = solve_chores(inst, 1.0);
  EXPECT_NEAR(r.allocation.x(0, 0), 1.0, 1e-6);
  EXPECT_NEAR(r.allocation.x(1, 1), 1.0, 1e-6);
  EXPECT_THROW(solve_chores(inst, 0.5), UnsupportedRegime);
}

TEST(SolveChores, TightnessClosedForm) {
  const int n = 4;
  const double p = 2.0, c12 = std::sqrt(1.0 / 3.0);
  Matrix v(n, 2);
  v << 1 - c12, c12, 0, 1, 0, 1, 0, 1;
  SolveResult r = solve_chores(Instance(Kind::Chores, v), p);
  EXPECT_NEAR(r.allocation.x(0, 1), 0.5, 1e-4);
  EXPECT_NEAR(r.allocation.x(0, 0), 0.0, 1e-6);
}

TEST(Solver, ConfigValidation) {
  Instance inst(Kind::Goods, Matrix::Constant(2, 2, 0.5));
  SolverConfig bad;
  bad.kkt_tolerance = -1.0;
  EXPECT_THROW(solve_goods(inst, -1.0, bad), ParamError);
}

TEST(Solver, ConvergenceErrorCarriesBestIterate) {
  std::mt19937_64 rng(2);
  Instance inst = random_instance(rng, Kind::Goods, 3, 5);
  SolverConfig cfg;
  cfg.max_iterations = 1;
  cfg.kkt_tolerance = 1e-14;
  try {
    solve_goods(inst, -2.0, cfg);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_LE(e.best().allocation.feasibility_violation(), 1e-9);
  }
}

TEST(Solver, PropertyGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(12);
  const std::pair<Kind, double> regimes[] = {{Kind::Goods, 0.0}, {Kind::Goods, -0.5}, {Kind::Goods, -3.0}, {Kind::Chores, 1.0}, {Kind::Chores, 2.5}};
  const double h = 1e-6;
  for (int s = 0; s < 200; ++s) {
    auto [kind, p] = regimes[s % 5];
    NormalizedInstance ni = normalize(random_instance(rng, kind, 3, 4));
    Matrix x = random_interior(rng, 3, 4);
    Matrix g = surrogate_gradient(ni, FractionalAllocation(x), p);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 4; ++j) {
        Matrix a = x, b = x;
        a(i, j) += h;
        b(i, j) -= h;
        double fd = (surrogate_objective(ni, FractionalAllocation(a), p) - surrogate_objective(ni, FractionalAllocation(b), p)) / (2 * h);
        EXPECT_NEAR(fd, g(i, j), 1e-5 * std::max(1.0, std::abs(g(i, j))));
      }
    }
  }
}

TEST(Solver, PropertyPostconditions) {
  std::mt19937_64 rng(13);
  for (int s = 0; s < 150; ++s) {
    const bool goods = s % 2 == 0;
    const double p = goods ? -0.5 * (s % 5) : 1.0 + s % 4;
    const int n = 2 + s % 3, m = 2 + s % 5;
    Instance inst = random_instance(rng, goods ? Kind::Goods : Kind::Chores, n, m);
    SolveResult r = goods ? solve_goods(inst, p) : solve_chores(inst, p);
    EXPECT_LE(r.allocation.feasibility_violation(), 1e-9);
    EXPECT_LE(r.certificate.residual(), 1e-8);
    EXPECT_LE(kkt_residual(inst, r.allocation, p), 1e-8);
    NormalizedInstance ni = normalize(inst);
    EXPECT_LE(surrogate_objective(ni, r.allocation, p), surrogate_objective(ni, FractionalAllocation::uniform(n, m), p) + 1e-9);
    EXPECT_GE(check_prop(inst, r.allocation, goods ? 1.0 : prop_bound(n, p)).margin, -1e-7);
    if (!goods && n == 2 && p >= 2.0) { EXPECT_TRUE(check_ef(inst, r.allocation, 1.0).holds); }
  }
}

TEST(Kkt, ResidualExamples) {
  Instance sym(Kind::Goods, Matrix::Constant(2, 2, 0.5));
  EXPECT_LE(kkt_residual(sym, FractionalAllocation(rows({{1, 0}, {0, 1}})), -1.0), 1e-12);
  Instance asym(Kind::Goods, rows({{0.9, 0.1}, {0.2, 0.8}}));
  EXPECT_GT(kkt_residual(asym, FractionalAllocation::uniform(2, 2), -1.0), 1e-3);
}

TEST(Extract, ChoresSingleAgentFormula) {
  Instance inst(Kind::Chores, rows({{4.0}}));
  ChoresEquilibrium eq = extract_chores_equilibrium(inst, FractionalAllocation(rows({{1.0}})), 2.0);
  EXPECT_NEAR(eq.rewards(0), 2.0, 1e-12);
  EXPECT_NEAR(eq.earnings(0), 2.0, 1e-12);
}

TEST(Extract, GoodsBudgetsFollowPowerLaw) {
  std::mt19937_64 rng(14);
  Instance inst = random_instance(rng, Kind::Goods, 3, 4);
  SolveResult r = solve_goods(inst, -2.0);
  GoodsEquilibrium eq = extract_goods_equilibrium(inst, r.allocation, -2.0);
  NormalizedInstance ni = normalize(inst);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(eq.budgets(i), 2.0 * std::pow(bundle_value(ni, r.allocation, i), -2.0), 1e-9 * eq.budgets(i));
}

TEST(Extract, SymmetricChoresEqualEarnings) {
  Instance inst(Kind::Chores, Matrix::Constant(2, 2, 0.5));
  SolveResult r = solve_chores(inst, 2.0);
  ChoresEquilibrium eq = extract_chores_equilibrium(inst, r.allocation, 2.0);
  EXPECT_NEAR(eq.earnings(0), eq.earnings(1), 1e-6);
}

TEST(Extract, ZeroUtilityIsDegenerate) {
  Instance inst(Kind::Goods, rows({{0.5, 0.5}, {0.5, 0.5}}));
  EXPECT_THROW(extract_goods_equilibrium(inst, FractionalAllocation(rows({{1, 1}, {0, 0}})), -1.0), DegenerateOptimum);
}
