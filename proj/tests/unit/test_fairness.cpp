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

double value(const Instance& inst, int i, const std::vector<int>& owner, int holder, int skip = -1) {
  double s = 0.0;
  for (int j = 0; j < inst.m(); ++j)
    if (owner[j] == holder && j != skip) s += inst(i, j);
  return s;
}

// EF1 by trying every single removal from the relevant bundle.
bool ef1_direct(const Instance& inst, const std::vector<int>& owner) {
  const double tol = 1e-9;
  for (int i = 0; i < inst.n(); ++i) {
    for (int h = 0; h < inst.n(); ++h) {
      if (h == i) continue;
      const double scale = tol * inst.row_sum(i);
      bool ok;
      if (inst.is_goods()) {
        ok = value(inst, i, owner, i) >= value(inst, i, owner, h) - scale;
        for (int j = 0; j < inst.m() && !ok; ++j)
          if (owner[j] == h) ok = value(inst, i, owner, i) >= value(inst, i, owner, h, j) - scale;
      } else {
        ok = value(inst, i, owner, i) <= value(inst, i, owner, h) + scale;
        for (int j = 0; j < inst.m() && !ok; ++j)
          if (owner[j] == i) ok = value(inst, i, owner, i, j) <= value(inst, i, owner, h) + scale;
      }
      if (!ok) return false;
    }
  }
  return true;
}

bool prop1_direct(const Instance& inst, const std::vector<int>& owner) {
  for (int i = 0; i < inst.n(); ++i) {
    const double share = inst.row_sum(i) / inst.n(), scale = 1e-9 * inst.row_sum(i);
    double own = value(inst, i, owner, i);
    bool ok = inst.is_goods() ? own >= share - scale : own <= share + scale;
    for (int j = 0; j < inst.m() && !ok; ++j) {
      if (inst.is_goods() && owner[j] != i) ok = own + inst(i, j) >= share - scale;
      if (!inst.is_goods() && owner[j] == i) ok = own - inst(i, j) <= share + scale;
    }
    if (!ok) return false;
  }
  return true;
}

bool po_direct(const Instance& inst, const std::vector<int>& owner) {
  const int n = inst.n(), m = inst.m();
  const double sign = inst.is_goods() ? 1.0 : -1.0;
  std::vector<int> other(m, 0);
  for (;;) {
    bool weak = true, strict = false;
    for (int i = 0; i < n; ++i) {
      double d = sign * (value(inst, i, other, i) - value(inst, i, owner, i));
      if (d < -1e-12) weak = false;
      if (d > 1e-12) strict = true;
    }
    if (weak && strict) return false;
    int j = 0;
    while (j < m && ++other[j] == n) other[j++] = 0;
    if (j == m) return true;
  }
}

std::vector<int> random_owner(std::mt19937_64& rng, int n, int m) {
  std::vector<int> o(m);
  for (int& v : o) v = static_cast<int>(rng() % n);
  return o;
}

}  // namespace

TEST(Ef, EqualSplitHolds) {
  std::mt19937_64 rng(1);
  for (Kind k : {Kind::Goods, Kind::Chores}) {
    Instance inst = random_instance(rng, k, 3, 4);
    EXPECT_TRUE(check_ef(inst, FractionalAllocation::uniform(3, 4)).holds);
    EXPECT_TRUE(check_prop(inst, FractionalAllocation::uniform(3, 4)).holds);
  }
}

TEST(Ef, WelfaristInstanceEnvyWitness) {
  Instance inst(Kind::Chores, rows({{1, 1, 1, 1}, {1, 4, 4, 4}}));
  FairnessReport r = check_ef(inst, IntegralAllocation({1, 0, 0, 0}));
  ASSERT_FALSE(r.holds);
  ASSERT_TRUE(r.witness.has_value());
  EXPECT_EQ(r.witness->i, 0);
  EXPECT_EQ(r.witness->j, 1);
}

TEST(Ef, BetaPropImpliesRelaxedEfForTwoChoreAgents) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int s = 0; s < 3000; ++s) {
    Instance inst = random_instance(rng, Kind::Chores, 2, 3);
    Matrix x(2, 3);
    for (int j = 0; j < 3; ++j) {
      x(0, j) = u(rng);
      x(1, j) = 1 - x(0, j);
    }
    if (!check_prop(inst, FractionalAllocation(x), 1.5).holds) continue;
    ++checked;
    EXPECT_TRUE(check_ef(inst, FractionalAllocation(x), 3.0).holds);
  }
  EXPECT_GT(checked, 100);
}

TEST(Ef, RejectsBetaBelowOne) {
  Instance inst(Kind::Goods, Matrix::Constant(2, 2, 1.0));
  EXPECT_THROW(check_ef(inst, FractionalAllocation::uniform(2, 2), 0.9), ParamError);
  EXPECT_THROW(check_prop(inst, FractionalAllocation::uniform(2, 2), 0.5), ParamError);
  EXPECT_THROW(check_efk(inst, IntegralAllocation({0, 1}), 1.0, 0), ParamError);
}

TEST(Prop, TightnessOptimumRatio) {
  const double c12 = std::sqrt(1.0 / 3.0);
  Matrix v(4, 2);
  v << 1 - c12, c12, 0, 1, 0, 1, 0, 1;
  Instance inst(Kind::Chores, v);
  Matrix x(4, 2);
  x << 0, 0.5, 1.0 / 3, 0.5 / 3, 1.0 / 3, 0.5 / 3, 1.0 / 3, 0.5 / 3;
  EXPECT_FALSE(check_prop(inst, FractionalAllocation(x), 1.0).holds);
  // c_1 = c12 / 2 against share 1/4 gives ratio 2 c12.
  double ratio = 4.0 * (c12 / 2);
  EXPECT_NEAR(ratio, 2.0 * 0.57735, 1e-5);
  EXPECT_TRUE(check_prop(inst, FractionalAllocation(x), ratio + 1e-6).holds);
  EXPECT_FALSE(check_prop(inst, FractionalAllocation(x), ratio - 1e-6).holds);
}

TEST(Prop, AllChoresToOneAgentIsNProp) {
  Instance inst(Kind::Chores, rows({{0.3, 0.7}, {0.5, 0.5}}));
  EXPECT_TRUE(check_prop(inst, IntegralAllocation({0, 0}), 2.0).holds);
  EXPECT_FALSE(check_prop(inst, IntegralAllocation({0, 0}), 1.9).holds);
}

TEST(Efk, Examples) {
  Instance one(Kind::Goods, rows({{1.0}, {1.0}}));
  EXPECT_TRUE(check_efk(one, IntegralAllocation({0})).holds);
  Instance same(Kind::Goods, rows({{5, 4, 3, 2, 1}, {5, 4, 3, 2, 1}}));
  EXPECT_TRUE(check_efk(same, IntegralAllocation({0, 1, 0, 1, 0})).holds);
  Instance case2(Kind::Chores, rows({{1.0 / 3, 1.0 / 3, 1.0 / 3}, {1.0 / 3 + 0.01, 1.0 / 3 + 0.01, 1.0 / 3 - 0.02}}));
  std::vector<int> owner{0, 0, 1};
  EXPECT_EQ(check_efk(case2, IntegralAllocation(owner)).holds, ef1_direct(case2, owner));
}

TEST(Propk, SevenGoodsSingleHolding) {
  const double e = 0.06;
  Matrix v(3, 7);
  v.row(0).setConstant(1.0 / 7);
  v.row(1).setConstant(e / 6);
  v(1, 6) = 1 - e;
  v.row(2).setZero();
  v(2, 6) = 1;
  Instance inst(Kind::Goods, v);
  FairnessReport r = check_propk(inst, IntegralAllocation({0, 1, 1, 1, 1, 1, 2}));
  EXPECT_FALSE(r.holds);
  ASSERT_TRUE(r.witness.has_value());
  EXPECT_EQ(r.witness->i, 0);
}

TEST(Propk, EmptyGoodsBundleUsesBestOutsideItem) {
  Instance inst(Kind::Goods, rows({{0.6, 0.4}, {0.5, 0.5}}));
  EXPECT_TRUE(check_propk(inst, IntegralAllocation({1, 1})).holds);
  Instance three(Kind::Goods, rows({{0.2, 0.2, 0.2, 0.2, 0.2}, {1, 1, 1, 1, 1}}));
  EXPECT_FALSE(check_propk(three, IntegralAllocation({1, 1, 1, 1, 1})).holds);
}

TEST(Fairness, PropertyIntegralChecksMatchDefinitions) {
  std::mt19937_64 rng(3);
  for (int s = 0; s < 1500; ++s) {
    const int n = 2 + static_cast<int>(rng() % 2), m = 1 + static_cast<int>(rng() % 5);
    Instance inst = s % 3 == 0 ? random_sparse_goods(rng, n, m) : random_instance(rng, s % 2 ? Kind::Goods : Kind::Chores, n, m);
    std::vector<int> owner = random_owner(rng, n, m);
    IntegralAllocation a(owner);
    EXPECT_EQ(check_efk(inst, a).holds, ef1_direct(inst, owner));
    EXPECT_EQ(check_propk(inst, a).holds, prop1_direct(inst, owner));
    EXPECT_EQ(check_po_integral(inst, a).holds, po_direct(inst, owner));
    if (check_prop(inst, a).holds) { EXPECT_TRUE(check_propk(inst, a).holds); }
    if (check_ef(inst, a).holds) { EXPECT_TRUE(check_efk(inst, a).holds); }
  }
}

TEST(Po, Examples) {
  Instance unique(Kind::Goods, rows({{1, 0}, {0, 1}}));
  EXPECT_TRUE(check_po_integral(unique, IntegralAllocation({0, 1})).holds);
  Instance waste(Kind::Goods, rows({{1, 0}, {0.5, 0.5}}));
  FairnessReport r = check_po_integral(waste, IntegralAllocation({1, 0}));
  EXPECT_FALSE(r.holds);
  EXPECT_TRUE(r.dominating.has_value());
}

TEST(Po, ScaleGuard) {
  Instance big(Kind::Goods, Matrix::Constant(4, 14, 1.0));
  EXPECT_THROW(check_po_integral(big, IntegralAllocation(std::vector<int>(14, 0))), ScaleError);
}

TEST(Fpo, SwapOfFavoritesFails) {
  Instance inst(Kind::Goods, rows({{0.9, 0.1}, {0.1, 0.9}}));
  FairnessReport r = check_fpo(inst, IntegralAllocation({1, 0}));
  EXPECT_FALSE(r.holds);
  ASSERT_TRUE(r.dominating.has_value());
  EXPECT_NEAR((*r.dominating)(0, 0), 1.0, 1e-9);
  EXPECT_TRUE(check_fpo(inst, IntegralAllocation({0, 1})).holds);
}

TEST(Fpo, EqualSplitWithDistinctRatiosFails) {
  Instance inst(Kind::Chores, rows({{0.2, 0.8}, {0.6, 0.4}}));
  EXPECT_FALSE(check_fpo(inst, FractionalAllocation::uniform(2, 2)).holds);
}

TEST(Fpo, PropertyDominatorIsFeasibleAndImproves) {
  std::mt19937_64 rng(4);
  for (int s = 0; s < 300; ++s) {
    Instance inst = random_instance(rng, s % 2 ? Kind::Goods : Kind::Chores, 2 + s % 3, 2 + s % 4);
    IntegralAllocation a(random_owner(rng, inst.n(), inst.m()));
    FairnessReport f = check_fpo(inst, a);
    if (!check_po_integral(inst, a).holds) { EXPECT_FALSE(f.holds); }
    if (f.holds) continue;
    ASSERT_TRUE(f.dominating.has_value());
    FractionalAllocation y(*f.dominating);
    EXPECT_LE(y.feasibility_violation(), 1e-9);
    NormalizedInstance ni = normalize(inst);
    double gain = 0.0;
    for (int i = 0; i < inst.n(); ++i) {
      double d = bundle_value(ni, y, i) - bundle_value(ni, a, i);
      if (!inst.is_goods()) d = -d;
      EXPECT_GE(d, -1e-9);
      gain += d;
    }
    EXPECT_GT(gain, kFpoSlackTol);
  }
}

TEST(Fpo, SolverOptimaAreFractionallyEfficient) {
  std::mt19937_64 rng(5);
  for (int s = 0; s < 40; ++s) {
    Instance g = random_instance(rng, Kind::Goods, 3, 4);
    EXPECT_TRUE(check_fpo(g, solve_goods(g, -1.0).allocation).holds);
    Instance c = random_instance(rng, Kind::Chores, 3, 4);
    EXPECT_TRUE(check_fpo(c, solve_chores(c, 2.0).allocation).holds);
  }
}
