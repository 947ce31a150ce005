#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <string>
#include <vector>

#include "pmfair/core.hpp"
#include "pmfair/market.hpp"

namespace pmfair {

/// Integral allocation rounded from a market equilibrium, with the per-agent contract witness.
struct RoundingOutcome {
  IntegralAllocation allocation;
  Vector prices;    // p_j or r_j, unchanged by rounding
  Vector original;  // b_i or e_i
  Vector adjusted;  // b'_i or e'_i
  /// 0: |original - adjusted| within tolerance; 2: under-spending; 3: over-spending.
  std::vector<int> clause;
  /// Item certifying the clause, -1 when clause is 0.
  std::vector<int> witness;
  double tolerance = 0.0;
};

namespace detail {

/// Cancels cycles of the bipartite spending graph by alternating +-theta, preserving every
/// agent's and item's total spending, until the edge set is a forest.
inline void cancel_cycles(Matrix& s) {
  const int n = static_cast<int>(s.rows()), m = static_cast<int>(s.cols());
  const int nodes = n + m;
  for (int guard = 0; guard < n * m + 1; ++guard) {
    // Grow a forest edge by edge; the first edge closing a loop yields a cycle.
    std::vector<std::vector<int>> adj(nodes);
    std::vector<int> comp(nodes);
    std::iota(comp.begin(), comp.end(), 0);
    auto find = [&](int a) {
      while (comp[a] != a) a = comp[a] = comp[comp[a]];
      return a;
    };
    std::vector<int> cycle;  // node sequence
    for (int i = 0; i < n && cycle.empty(); ++i) {
      for (int j = 0; j < m && cycle.empty(); ++j) {
        if (s(i, j) <= 0.0) continue;
        int a = i, b = n + j;
        if (find(a) != find(b)) {
          comp[find(a)] = find(b);
          adj[a].push_back(b);
          adj[b].push_back(a);
          continue;
        }
        std::vector<int> prev(nodes, -1);
        std::deque<int> q{a};
        prev[a] = a;
        while (!q.empty()) {
          int c = q.front();
          q.pop_front();
          if (c == b) break;
          for (int d : adj[c])
            if (prev[d] < 0) {
              prev[d] = c;
              q.push_back(d);
            }
        }
        for (int c = b; c != a; c = prev[c]) cycle.push_back(c);
        cycle.push_back(a);
      }
    }
    if (cycle.empty()) return;
    // cycle = b ... a; closing edge (a, b). Edge t joins cycle[t] and cycle[t+1 mod L].
    const int L = static_cast<int>(cycle.size());
    auto edge = [&](int t) -> double& {
      int u = cycle[t], w = cycle[(t + 1) % L];
      int agent = u < n ? u : w;
      int item = (u < n ? w : u) - n;
      return s(agent, item);
    };
    double theta = std::numeric_limits<double>::infinity();
    int arg = -1;
    for (int t = 1; t < L; t += 2)
      if (edge(t) < theta) {
        theta = edge(t);
        arg = t;
      }
    for (int t = 0; t < L; ++t) edge(t) += (t % 2 == 0 ? theta : -theta);
    edge(arg) = 0.0;
    for (int t = 1; t < L; t += 2)
      if (edge(t) < 0.0) edge(t) = 0.0;
  }
  throw NumericalError("cycle cancelling did not terminate");
}

/// Core rounding shared by goods and chores. `pay` holds prices or rewards and `target`
/// the budgets or earnings. `valued(i, j)` tells which zero-pay items an agent prefers.
template <class Valued>
RoundingOutcome round_market(const Matrix& x, const Vector& pay, const Vector& target, Valued valued) {
  const int n = static_cast<int>(x.rows()), m = static_cast<int>(x.cols());
  RoundingOutcome out;
  out.prices = pay;
  out.original = target;
  out.adjusted = Vector::Zero(n);
  out.clause.assign(n, 0);
  out.witness.assign(n, -1);
  std::vector<int> owner(m, -1);

  Matrix s = Matrix::Zero(n, m);
  for (int j = 0; j < m; ++j) {
    double held = 0.0;
    for (int i = 0; i < n; ++i)
      if (x(i, j) > kSupportTol) held += x(i, j);
    if (pay(j) == 0.0 || held == 0.0) {
      // Free items go to a holder, preferring one who values them.
      int best = 0;
      double score = -1.0;
      for (int i = 0; i < n; ++i) {
        double sc = x(i, j) + (x(i, j) > kSupportTol && valued(i, j) ? 2.0 : 0.0);
        if (sc > score) {
          score = sc;
          best = i;
        }
      }
      owner[j] = best;
      continue;
    }
    for (int i = 0; i < n; ++i)
      if (x(i, j) > kSupportTol) s(i, j) = pay(j) * x(i, j) / held;
  }
  cancel_cycles(s);
  Vector spend = s.rowwise().sum();

  std::vector<int> under(n, -1), over(n, -1);
  std::vector<char> seen(n, 0);
  std::vector<int> parent_item(n, -1);
  std::vector<char> got_parent(n, 0);
  for (int root = 0; root < n; ++root) {
    if (seen[root]) continue;
    seen[root] = 1;
    std::deque<int> order{root};
    while (!order.empty()) {
      int i = order.front();
      order.pop_front();
      double b = got_parent[i] ? pay(parent_item[i]) : 0.0;
      if (got_parent[i]) over[i] = parent_item[i];
      else if (parent_item[i] >= 0) under[i] = parent_item[i];
      std::vector<int> inner;
      for (int j = 0; j < m; ++j) {
        if (s(i, j) <= 0.0 || j == parent_item[i]) continue;
        bool leaf = true;
        for (int k = 0; k < n; ++k)
          if (k != i && s(k, j) > 0.0) leaf = false;
        if (leaf) {
          owner[j] = i;
          b += pay(j);
        } else {
          inner.push_back(j);
        }
      }
      std::stable_sort(inner.begin(), inner.end(), [&](int a, int c) { return s(i, a) > s(i, c); });
      for (int j : inner) {
        int heir = -1;
        for (int k = 0; k < n; ++k)
          if (k != i && s(k, j) > 0.0 && (heir < 0 || s(k, j) > s(heir, j))) heir = k;
        for (int k = 0; k < n; ++k) {
          if (k == i || s(k, j) <= 0.0) continue;
          seen[k] = 1;
          parent_item[k] = j;
          order.push_back(k);
        }
        if (b < spend(i)) {
          owner[j] = i;
          b += pay(j);
          over[i] = j;
        } else {
          owner[j] = heir;
          got_parent[heir] = 1;
        }
      }
    }
  }

  for (int j = 0; j < m; ++j) {
    if (owner[j] < 0) throw NumericalError("rounding left item " + std::to_string(j) + " unassigned");
    out.adjusted(owner[j]) += pay(j);
  }
  double drift = std::max((spend - target).cwiseAbs().maxCoeff(), std::abs(pay.sum() - target.sum()));
  out.tolerance = 1e-9 * std::max(1.0, target.sum()) + drift;
  for (int i = 0; i < n; ++i) {
    double d = out.adjusted(i) - target(i);
    if (d > out.tolerance) {
      out.clause[i] = 3;
      out.witness[i] = over[i];
    } else if (d < -out.tolerance) {
      out.clause[i] = 2;
      out.witness[i] = under[i];
    }
  }
  out.allocation = IntegralAllocation(owner);
  return out;
}

}  // namespace detail

/// Rounds a goods equilibrium so that (a, p, b') is again an equilibrium with
/// sum b' = sum b, |b_i - b'_i| <= max p, and clause witnesses for every deviating agent.
inline RoundingOutcome round_goods(const GoodsEquilibrium& eq, const Instance& inst) {
  if (!inst.is_goods()) throw UnsupportedRegime("round_goods requires a goods instance");
  MarketVerdict v = check_goods_equilibrium(inst, eq);
  if (!v.holds) throw PreconditionError("input is not a goods market equilibrium");
  return detail::round_market(eq.allocation.x, eq.prices, eq.budgets,
                              [&](int i, int j) { return inst(i, j) > 0.0; });
}

/// Chores counterpart; only the over-earning clause is part of the contract.
inline RoundingOutcome round_chores(const ChoresEquilibrium& eq, const Instance& inst, double p = 1.0) {
  if (inst.is_goods()) throw UnsupportedRegime("round_chores requires a chores instance");
  if (!(p >= 1.0)) throw ParamError("p must be at least 1");
  MarketVerdict v = check_chores_equilibrium(inst, eq);
  if (!v.holds) throw PreconditionError("input is not a chores market equilibrium");
  return detail::round_market(eq.allocation.x, eq.rewards, eq.earnings,
                              [&](int i, int j) { return inst(i, j) == 0.0; });
}

/// Independent audit of the rounding contract.
struct ContractReport {
  bool holds = true;
  bool equilibrium = true;
  bool conservation = true;
  bool deviation_bound = true;
  bool witnesses = true;
  std::string failure;
};

namespace detail {

inline ContractReport audit_contract(const Instance& inst, const RoundingOutcome& r, bool goods) {
  ContractReport rep;
  auto fail = [&](bool& flag, const std::string& why) {
    flag = false;
    rep.holds = false;
    if (rep.failure.empty()) rep.failure = why;
  };
  const int n = inst.n();
  const double tol = r.tolerance;
  const double pmax = r.prices.size() ? r.prices.maxCoeff() : 0.0;
  NormalizedInstance ni = normalize(inst);
  FractionalAllocation a = r.allocation.to_fractional(n);
  MarketVerdict mv = goods ? check_goods_equilibrium(inst, GoodsEquilibrium{a, r.prices, r.adjusted})
                           : check_chores_equilibrium(inst, ChoresEquilibrium{a, r.prices, r.adjusted});
  if (!mv.holds) fail(rep.equilibrium, "rounded allocation is not an equilibrium at the adjusted budgets");
  if (std::abs(r.adjusted.sum() - r.original.sum()) > tol) fail(rep.conservation, "budget total not conserved");
  for (int i = 0; i < n; ++i) {
    double d = r.adjusted(i) - r.original(i);
    if (std::abs(d) > pmax + tol) fail(rep.deviation_bound, "agent " + std::to_string(i) + " deviates by more than max price");
    int j = r.witness[i];
    if (d > tol) {
      bool ok = j >= 0 && r.allocation.owner[j] == i && r.adjusted(i) - r.prices(j) <= r.original(i) + tol;
      if (!ok) fail(rep.witnesses, "agent " + std::to_string(i) + " over-spends without a witness item");
    } else if (goods && d < -tol) {
      bool ok = false;
      if (j >= 0 && r.allocation.owner[j] != i) {
        RatioSet mbb = mbb_set(ni, r.prices, i);
        bool in = std::find(mbb.items.begin(), mbb.items.end(), j) != mbb.items.end();
        ok = in && r.original(i) <= r.adjusted(i) + r.prices(j) + tol;
      }
      if (!ok) fail(rep.witnesses, "agent " + std::to_string(i) + " under-spends without a witness item");
    }
  }
  return rep;
}

}  // namespace detail

inline ContractReport audit_goods_rounding(const Instance& inst, const RoundingOutcome& r) {
  return detail::audit_contract(inst, r, true);
}

inline ContractReport audit_chores_rounding(const Instance& inst, const RoundingOutcome& r) {
  return detail::audit_contract(inst, r, false);
}

}  // namespace pmfair
