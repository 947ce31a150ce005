#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pmfair/core.hpp"

namespace pmfair {

/// Fisher market for goods: allocation, prices p_j, budgets b_i.
struct GoodsEquilibrium {
  FractionalAllocation allocation;
  Vector prices;
  Vector budgets;
};

/// Chores market: allocation, rewards r_j, earning goals e_i.
struct ChoresEquilibrium {
  FractionalAllocation allocation;
  Vector rewards;
  Vector earnings;
};

inline constexpr double kMarketTol = 1e-7;
inline constexpr double kSupportTol = 1e-9;

struct RatioSet {
  std::vector<int> items;
  double value = 0.0;
};

/// Items maximizing v_ij / p_j for one agent. A zero price on a valued item gives +inf.
inline RatioSet mbb_set(const NormalizedInstance& inst, const Vector& prices, int agent) {
  detail::check_agent(agent, inst.n());
  if (prices.size() != inst.m()) throw DimensionError("price vector has wrong length");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> ratio(inst.m(), 0.0);
  double best = 0.0;
  for (int j = 0; j < inst.m(); ++j) {
    double v = inst(agent, j), p = prices(j);
    ratio[j] = p > 0.0 ? v / p : (v > 0.0 ? inf : 0.0);
    best = std::max(best, ratio[j]);
  }
  RatioSet out{{}, best};
  for (int j = 0; j < inst.m(); ++j) {
    bool in = std::isinf(best) ? std::isinf(ratio[j]) : ratio[j] >= best * (1.0 - kMarketTol);
    if (in) out.items.push_back(j);
  }
  return out;
}

/// Items maximizing r_j / c_ij over positive-cost chores, plus every zero-cost chore.
inline RatioSet mrc_set(const NormalizedInstance& inst, const Vector& rewards, int agent) {
  detail::check_agent(agent, inst.n());
  if (rewards.size() != inst.m()) throw DimensionError("reward vector has wrong length");
  double best = 0.0;
  for (int j = 0; j < inst.m(); ++j)
    if (inst(agent, j) > 0.0) best = std::max(best, rewards(j) / inst(agent, j));
  RatioSet out{{}, best};
  for (int j = 0; j < inst.m(); ++j) {
    double c = inst(agent, j);
    if (c == 0.0 || rewards(j) / c >= best * (1.0 - kMarketTol)) out.items.push_back(j);
  }
  return out;
}

struct MarketWitness {
  int condition = 0;  // 1 clearing, 2 bang-per-buck / reward-per-cost, 3 budget / earning
  int agent = -1;
  int item = -1;
  double residual = 0.0;
};

struct MarketVerdict {
  bool holds = true;
  double clearing_residual = 0.0;
  double ratio_residual = 0.0;
  double budget_residual = 0.0;
  std::optional<MarketWitness> witness;
};

namespace detail {

inline void record(MarketVerdict& v, int cond, int agent, int item, double res, double tol) {
  double& slot = cond == 1 ? v.clearing_residual : cond == 2 ? v.ratio_residual : v.budget_residual;
  slot = std::max(slot, res);
  if (res > tol) {
    if (!v.witness || res > v.witness->residual) v.witness = MarketWitness{cond, agent, item, res};
    v.holds = false;
  }
}

inline void check_shapes(int n, int m, const FractionalAllocation& x, const Vector& per_item, const Vector& per_agent) {
  if (x.n() != n || x.m() != m || per_item.size() != m || per_agent.size() != n)
    throw DimensionError("equilibrium dimensions disagree with the instance");
}

/// Shared clearing and budget conditions; `pay` holds prices or rewards.
inline void check_clearing_and_budget(MarketVerdict& v, const Matrix& x, const Vector& pay, const Vector& budget) {
  const int n = static_cast<int>(x.rows()), m = static_cast<int>(x.cols());
  for (int j = 0; j < m; ++j) {
    double res = pay(j) == 0.0 ? 0.0 : std::abs(x.col(j).sum() - 1.0);
    record(v, 1, -1, j, res, kMarketTol);
  }
  for (int i = 0; i < n; ++i) {
    double spent = x.row(i).dot(pay);
    double res = std::abs(budget(i) - spent) / std::max(1.0, budget(i));
    record(v, 3, i, -1, res, kMarketTol);
  }
}

}  // namespace detail

/// Checks market clearing, maximum bang-per-buck and budget exhaustion.
/// Items nobody values carry price zero and are exempt from the bang-per-buck test.
inline MarketVerdict check_goods_equilibrium(const Instance& inst, const GoodsEquilibrium& eq) {
  detail::check_shapes(inst.n(), inst.m(), eq.allocation, eq.prices, eq.budgets);
  NormalizedInstance ni = normalize(inst);
  MarketVerdict v;
  const Matrix& x = eq.allocation.x;
  detail::check_clearing_and_budget(v, x, eq.prices, eq.budgets);
  for (int i = 0; i < inst.n(); ++i) {
    RatioSet s = mbb_set(ni, eq.prices, i);
    for (int j = 0; j < inst.m(); ++j) {
      if (x(i, j) <= kSupportTol) continue;
      if (ni(i, j) == 0.0 && eq.prices(j) == 0.0) continue;
      double pj = eq.prices(j);
      double ratio = pj > 0.0 ? ni(i, j) / pj : (ni(i, j) > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      double res;
      if (std::isinf(s.value))
        res = std::isinf(ratio) ? 0.0 : 1.0;
      else
        res = s.value > 0.0 ? std::max(0.0, 1.0 - ratio / s.value) : 0.0;
      detail::record(v, 2, i, j, res, kMarketTol);
    }
  }
  return v;
}

inline MarketVerdict check_chores_equilibrium(const Instance& inst, const ChoresEquilibrium& eq) {
  detail::check_shapes(inst.n(), inst.m(), eq.allocation, eq.rewards, eq.earnings);
  NormalizedInstance ni = normalize(inst);
  MarketVerdict v;
  const Matrix& x = eq.allocation.x;
  detail::check_clearing_and_budget(v, x, eq.rewards, eq.earnings);
  for (int i = 0; i < inst.n(); ++i) {
    RatioSet s = mrc_set(ni, eq.rewards, i);
    for (int j = 0; j < inst.m(); ++j) {
      if (x(i, j) <= kSupportTol || ni(i, j) == 0.0) continue;
      double ratio = eq.rewards(j) / ni(i, j);
      double res = s.value > 0.0 ? std::max(0.0, 1.0 - ratio / s.value) : 0.0;
      detail::record(v, 2, i, j, res, kMarketTol);
    }
  }
  return v;
}

}  // namespace pmfair
