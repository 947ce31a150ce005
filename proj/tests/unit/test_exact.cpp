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

// Direct brute force: every owner vector scored with pow().
std::vector<std::vector<int>> brute_optima(const Instance& inst, double p) {
  const int n = inst.n(), m = inst.m();
  NormalizedInstance ni = normalize(inst);
  std::vector<int> o(m, 0);
  std::vector<std::pair<double, std::vector<int>>> all;
  for (;;) {
    Vector u = Vector::Zero(n);
    for (int j = 0; j < m; ++j) u(o[j]) += ni(o[j], j);
    double w;
    if (p == 0.0) w = std::pow(u.prod(), 1.0 / n);
    else w = std::pow(u.array().pow(p).sum() / n, 1.0 / p);
    if (p < 0 && (u.array() == 0.0).any()) w = 0.0;
    all.emplace_back(inst.is_goods() ? w : -w, o);
    int j = 0;
    while (j < m && ++o[j] == n) o[j++] = 0;
    if (j == m) break;
  }
  double best = -std::numeric_limits<double>::infinity();
  for (auto& [w, v] : all) best = std::max(best, w);
  std::vector<std::vector<int>> out;
  for (auto& [w, v] : all)
    if (w >= best - 1e-12 * std::abs(best)) out.push_back(v);
  return out;
}

}  // namespace

TEST(Enumerate, LinearChoresUniqueOptimum) {
  const double e = 0.01;
  Instance inst(Kind::Chores, rows({{1.0 / 3, 1.0 / 3, 1.0 / 3}, {1.0 / 3 + e, 1.0 / 3 + e, 1.0 / 3 - 2 * e}}));
  OptimaSet os = enumerate_optima(inst, 1.0);
  ASSERT_EQ(os.optima.size(), 1u);
  EXPECT_EQ(os.optima[0].owner, (std::vector<int>{0, 0, 1}));
}

TEST(Enumerate, UniquelyValuedGoods) {
  Instance inst(Kind::Goods, rows({{1, 0}, {0, 1}}));
  for (double p : {-5.0, 0.0, 0.5, 2.0}) {
    OptimaSet os = enumerate_optima(inst, p);
    ASSERT_EQ(os.optima.size(), 1u);
    EXPECT_EQ(os.optima[0].owner, (std::vector<int>{0, 1}));
  }
}

TEST(Enumerate, PropertyMatchesBruteForce) {
  std::mt19937_64 rng(41);
  const double ps[] = {-3.0, -1.0, 0.0, 0.5, 1.0, 2.0, 4.0};
  for (int s = 0; s < 300; ++s) {
    const int n = 2 + s % 2, m = 1 + s % 6;
    Instance inst = random_instance(rng, s % 2 ? Kind::Goods : Kind::Chores, n, m);
    const double p = ps[s % 7];
    std::vector<std::vector<int>> ref = brute_optima(inst, p);
    OptimaSet os = enumerate_optima(inst, p);
    std::vector<std::vector<int>> got;
    for (const auto& a : os.optima) got.push_back(a.owner);
    std::sort(ref.begin(), ref.end());
    std::sort(got.begin(), got.end());
    EXPECT_EQ(got, ref);
  }
}

TEST(Enumerate, TiedOptimaAllReported) {
  Instance inst(Kind::Goods, Matrix::Constant(2, 2, 0.5));
  OptimaSet os = enumerate_optima(inst, -1.0);
  EXPECT_EQ(os.optima.size(), 2u);
}

TEST(Grid, SymmetricEqualUtilities) {
  Instance g(Kind::Goods, Matrix::Constant(2, 2, 0.5));
  Instance c(Kind::Chores, Matrix::Constant(2, 2, 0.5));
  for (double p : {-2.0, 0.0}) {
    GridResult r = grid_oracle_divisible(g, p, 100);
    NormalizedInstance ni = normalize(g);
    EXPECT_NEAR(bundle_value(ni, r.allocation, 0), bundle_value(ni, r.allocation, 1), 1e-9);
  }
  GridResult r = grid_oracle_divisible(c, 3.0, 100);
  NormalizedInstance ni = normalize(c);
  EXPECT_NEAR(bundle_value(ni, r.allocation, 0), bundle_value(ni, r.allocation, 1), 1e-9);
}

TEST(Grid, GoodsSplitClosedForm) {
  const double e = 0.1, d = 0.2, p = 0.5;
  Instance inst(Kind::Goods, rows({{0.5 + e, 0.5 - e}, {0.5 + d, 0.5 - d}}));
  GridResult r = grid_oracle_divisible(inst, p, 1000);
  const double q = p / (p - 1), k = 1 / (p - 1);
  const double A = std::pow(0.5 + d, q), B = std::pow(0.5 + e, q);
  const double beta = (A - (0.5 - e) * std::pow(0.5 + e, k)) / (A + B);
  EXPECT_NEAR(beta, 0.10256, 1e-5);
  EXPECT_NEAR(r.allocation.x(0, 0), beta, 1e-4);
  EXPECT_NEAR(r.allocation.x(0, 1), 1.0, 1e-9);
  EXPECT_FALSE(check_prop(inst, r.allocation, 1.0).holds);
}

TEST(Grid, ChoresSplitBelowThreshold) {
  const double e = 0.05, d = 0.1, p = 1.5;
  ASSERT_LT(d, e + (2 * e + 1) * (1 - p / 2));
  Instance inst(Kind::Chores, rows({{0.5 + d, 0.5 - d}, {0.5 + e, 0.5 - e}}));
  GridResult r = grid_oracle_divisible(inst, p, 1000);
  EXPECT_NEAR(r.allocation.x(0, 1), 1.0, 1e-9);
  EXPECT_LT(r.allocation.x(0, 0), e / (0.5 + e));
  NormalizedInstance ni = normalize(inst);
  EXPECT_GT(bundle_value(ni, r.allocation, 1), 0.5);
}

TEST(Grid, AgreesWithSolverOnSupportedRegimes) {
  std::mt19937_64 rng(42);
  const int R = 200;
  for (int s = 0; s < 20; ++s) {
    const bool goods = s % 2 == 0;
    const double p = goods ? -1.0 : 2.0;
    Instance inst = random_instance(rng, goods ? Kind::Goods : Kind::Chores, 2, 3);
    GridResult g = grid_oracle_divisible(inst, p, R);
    SolveResult sol = goods ? solve_goods(inst, p) : solve_chores(inst, p);
    EXPECT_NEAR(g.objective, normalized_p_mean(inst, sol.allocation, p), 2.0 / R);
  }
}

TEST(Grid, CoarsensOrRejectsLargeGrids) {
  std::mt19937_64 rng(43);
  Instance inst = random_instance(rng, Kind::Goods, 3, 4);
  GridResult r = grid_oracle_divisible(inst, -1.0, 1000);
  EXPECT_LT(r.resolution, 1000);
  EXPECT_LE(r.points, kMaxGridPoints);
  Instance huge = random_instance(rng, Kind::Goods, 4, 30);
  EXPECT_THROW(grid_oracle_divisible(huge, -1.0, 10), ScaleError);
  EXPECT_THROW(grid_oracle_divisible(inst, -1.0, 0), ParamError);
}

TEST(Squeeze, Examples) {
  EXPECT_THROW(lemma_squeeze_predicate(1.0, 0.2, 0.9, 0.5, 3.0), PreconditionError);
  EXPECT_TRUE(lemma_squeeze_predicate(1.0, 0.5, 0.9, 0.6, 3.0));
  EXPECT_THROW(lemma_squeeze_predicate(1.0, 0.5, 0.9, 0.6, 2.0), ParamError);
}

TEST(Squeeze, PropertyAgreesWithDirectPowers) {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> u(0.0, 1.0), dp(2.0, 12.0);
  int n = 0;
  while (n < 20000) {
    double a = u(rng), b = u(rng), al = u(rng), be = u(rng), p = dp(rng);
    if (!(a > 0 && b > 0 && al > 0 && be > 0 && p > 2)) continue;
    if (!(std::max(a, b) >= std::max(al, be)) || !(a * a + b * b > al * al + be * be)) continue;
    ++n;
    double lhs = std::pow(a, p) + std::pow(b, p), rhs = std::pow(al, p) + std::pow(be, p);
    EXPECT_TRUE(lemma_squeeze_predicate(a, b, al, be, p));
    if (std::abs(lhs - rhs) > 1e-12 * lhs) { EXPECT_GT(lhs, rhs); }
  }
}

TEST(ChoresAlgebra, Examples) {
  auto [i1, i2] = lemma_chores_algebra_predicate(0.1, 0.2, 0.3);
  EXPECT_TRUE(i1);
  EXPECT_TRUE(i2);
  EXPECT_THROW(lemma_chores_algebra_predicate(0.3, 0.2, 0.1), PreconditionError);
  EXPECT_THROW(lemma_chores_algebra_predicate(0.1, 0.2, 0.6), PreconditionError);
}

TEST(ChoresAlgebra, BoundarySweepStaysStrict) {
  const double a = 0.1, al = 0.2;
  for (double gap : {1e-2, 1e-4, 1e-6, 1e-8}) {
    auto [i1, i2] = lemma_chores_algebra_predicate(a, al, 1 - 2 * al - gap);
    EXPECT_TRUE(i1);
    EXPECT_TRUE(i2);
  }
}

TEST(ChoresAlgebra, PropertyAgreesWithDirectInequalities) {
  std::mt19937_64 rng(45);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int n = 0;
  while (n < 20000) {
    double a = u(rng), al = u(rng), be = u(rng);
    if (!(a < al && al < 1 && be > 0 && be < 1 - 2 * al)) continue;
    ++n;
    double g = (1 - a) / (1 - al);
    double lhs = std::pow(a + g * be, 2) + std::pow(1 - al - be, 2), rhs = a * a + std::pow(1 - al, 2);
    auto [i1, i2] = lemma_chores_algebra_predicate(a, al, be);
    EXPECT_TRUE(i1 && i2);
    if (rhs - lhs > 1e-12) { EXPECT_LT(lhs, rhs); }
    EXPECT_LT(a + g * be, 1 - al + 1e-12);
  }
}

TEST(GoodsAlgebra, Examples) {
  EXPECT_TRUE(lemma_goods_algebra_predicate(0.3, 0.9, 0.4, 0.8, 0.0));
  EXPECT_TRUE(lemma_goods_algebra_predicate(0.3, 0.9, 0.4, 0.8, -2.0));
  EXPECT_THROW(lemma_goods_algebra_predicate(0.5, 0.9, 0.4, 0.8, -2.0), PreconditionError);
  EXPECT_THROW(lemma_goods_algebra_predicate(0.3, 0.9, 0.4, 0.8, 0.5), ParamError);
}

TEST(GoodsAlgebra, PropertyAgreesWithPowerMean) {
  std::mt19937_64 rng(46);
  std::uniform_real_distribution<double> u(0.0, 1.0), dp(-10.0, 0.0);
  int n = 0;
  while (n < 20000) {
    double a = u(rng), b = u(rng), al = u(rng), be = u(rng), p = dp(rng);
    if (!(a > 1e-3 && b > 1e-3 && al > 1e-3 && be > 1e-3)) continue;
    if (!(std::min(a, b) <= std::min(al, be)) || !(a * b < al * be)) continue;
    ++n;
    double lhs = std::pow((std::pow(a, p) + std::pow(b, p)) / 2, 1 / p);
    double rhs = std::pow((std::pow(al, p) + std::pow(be, p)) / 2, 1 / p);
    EXPECT_TRUE(lemma_goods_algebra_predicate(a, b, al, be, p));
    if (std::abs(lhs - rhs) > 1e-12) { EXPECT_LT(lhs, rhs); }
  }
}

TEST(TransferStep, Guards) {
  Instance inst(Kind::Chores, rows({{0.5, 0.5}, {0.5, 0.5}}));
  EXPECT_THROW(ef1_transfer_step(inst, IntegralAllocation({0, 1})), PreconditionError);
  Instance three(Kind::Chores, rows({{0.2, 0.3, 0.5}, {0.2, 0.3, 0.5}}));
  // Second agent holds everything and the first would prefer its own empty bundle: swap applies.
  Instance skew(Kind::Chores, rows({{0.6, 0.2, 0.2}, {0.3, 0.35, 0.35}}));
  EXPECT_NO_THROW(ef1_transfer_step(three, IntegralAllocation({1, 1, 1})));
  EXPECT_THROW(ef1_transfer_step(skew, IntegralAllocation({0, 1, 1})), PreconditionError);
  Instance goods(Kind::Goods, rows({{0.5, 0.5}, {0.5, 0.5}}));
  EXPECT_THROW(ef1_transfer_step(goods, IntegralAllocation({0, 1})), PreconditionError);
}

TEST(TransferStep, PropertyStrictDescent) {
  std::mt19937_64 rng(47);
  int steps = 0;
  for (int s = 0; s < 3000 && steps < 500; ++s) {
    const int m = 2 + s % 8;
    Instance inst = random_instance(rng, Kind::Chores, 2, m);
    std::vector<int> o(m);
    for (int& v : o) v = static_cast<int>(rng() % 2);
    IntegralAllocation a(o);
    NormalizedInstance ni = normalize(inst);
    IntegralAllocation b;
    try {
      b = ef1_transfer_step(inst, a);
    } catch (const PreconditionError&) {
      continue;
    }
    ++steps;
    double a0 = bundle_value(ni, a, 0), a1 = bundle_value(ni, a, 1);
    double b0 = bundle_value(ni, b, 0), b1 = bundle_value(ni, b, 1);
    EXPECT_LT(b0 * b0 + b1 * b1, a0 * a0 + a1 * a1);
    EXPECT_LT(std::max(b0, b1), std::max(a0, a1));
  }
  EXPECT_GT(steps, 100);
}

TEST(Descent, PropertyTerminatesAtEf1) {
  std::mt19937_64 rng(48);
  for (int s = 0; s < 500; ++s) {
    const int m = 1 + s % 9;
    Instance inst = random_instance(rng, Kind::Chores, 2, m);
    std::vector<int> o(m);
    for (int& v : o) v = static_cast<int>(rng() % 2);
    DescentTrace tr = ef1_descent(inst, IntegralAllocation(o));
    EXPECT_TRUE(tr.strictly_decreasing);
    EXPECT_TRUE(check_efk(inst, tr.final, 1.0, 1).holds);
  }
}

TEST(Sampler, RowsNormalizedAndBounded) {
  std::mt19937_64 rng(49);
  Instance inst = random_instance(rng, Kind::Goods, 4, 6);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(inst.row_sum(i), 1.0, 1e-12);
  int zeros = 0;
  for (int s = 0; s < 50; ++s) {
    Instance sp = random_sparse_goods(rng, 3, 6);
    zeros += static_cast<int>((sp.values().array() == 0.0).count());
  }
  EXPECT_GT(zeros, 100);
}
