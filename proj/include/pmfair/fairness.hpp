#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pmfair/core.hpp"
#include "pmfair/lp.hpp"

namespace pmfair {

enum class Notion { EF, PROP, EFk, PROPk, PO, fPO };

inline const char* to_string(Notion n) {
  switch (n) {
    case Notion::EF: return "EF";
    case Notion::PROP: return "PROP";
    case Notion::EFk: return "EFk";
    case Notion::PROPk: return "PROPk";
    case Notion::PO: return "PO";
    case Notion::fPO: return "fPO";
  }
  return "?";
}

/// Violating agent pair (j = -1 for single-agent notions), item set and violation size.
struct Witness {
  int i = -1;
  int j = -1;
  std::vector<int> items;
  double slack = 0.0;  // normalized amount by which the condition fails
};

struct FairnessReport {
  Notion notion = Notion::EF;
  double beta = 1.0;
  int k = 0;
  bool holds = true;
  /// Smallest normalized slack over all constraints; negative means violated.
  double margin = std::numeric_limits<double>::infinity();
  std::optional<Witness> witness;
  /// Dominating allocation found by the PO/fPO searches.
  std::optional<Matrix> dominating;
};

inline constexpr double kFairnessRelTol = 1e-9;
inline constexpr double kPoStrictMargin = 1e-12;
inline constexpr double kFpoSlackTol = 1e-7;

namespace detail {

inline FairnessReport make_report(Notion notion, double beta, int k) {
  FairnessReport r;
  r.notion = notion;
  r.beta = beta;
  r.k = k;
  return r;
}

inline void check_beta(double beta) {
  if (!(beta >= 1.0)) throw ParamError("beta must be at least 1");
}

inline void check_k(int k) {
  if (k < 1) throw ParamError("k must be at least 1");
}

/// Records a constraint whose slack is `surplus` (raw units, >= -tol means satisfied).
struct Tracker {
  FairnessReport& rep;
  void add(double surplus, double scale, double tol, int i, int j, std::vector<int> items = {}) {
    double norm = surplus / scale;
    if (norm < rep.margin) rep.margin = norm;
    if (surplus < -tol) {
      if (rep.holds || !rep.witness || -norm > rep.witness->slack)
        rep.witness = Witness{i, j, std::move(items), -norm};
      rep.holds = false;
    }
  }
};

inline FairnessReport check_ef_matrix(const Instance& inst, const Matrix& x, double beta) {
  check_beta(beta);
  FairnessReport rep = detail::make_report(Notion::EF, beta, 0);
  Tracker tr{rep};
  const Matrix& v = inst.values();
  for (int i = 0; i < inst.n(); ++i) {
    double rs = inst.row_sum(i);
    double own = v.row(i).dot(x.row(i));
    for (int j = 0; j < inst.n(); ++j) {
      if (j == i) continue;
      double other = v.row(i).dot(x.row(j));
      double surplus = inst.is_goods() ? own - other / beta : beta * other - own;
      tr.add(surplus, rs, kFairnessRelTol * rs, i, j);
    }
  }
  return rep;
}

inline FairnessReport check_prop_matrix(const Instance& inst, const Matrix& x, double beta) {
  check_beta(beta);
  FairnessReport rep = detail::make_report(Notion::PROP, beta, 0);
  Tracker tr{rep};
  for (int i = 0; i < inst.n(); ++i) {
    double rs = inst.row_sum(i);
    double own = inst.values().row(i).dot(x.row(i));
    double share = rs / inst.n();
    double surplus = inst.is_goods() ? own - share / beta : beta * share - own;
    tr.add(surplus, rs, kFairnessRelTol * rs, i, -1);
  }
  return rep;
}

/// Indices of the (up to) k largest entries of `vals` restricted to `items`.
inline std::vector<int> top_k(const Matrix& v, int agent, std::vector<int> items, int k) {
  std::stable_sort(items.begin(), items.end(), [&](int a, int b) { return v(agent, a) > v(agent, b); });
  if (static_cast<int>(items.size()) > k) items.resize(k);
  return items;
}

}  // namespace detail

inline FairnessReport check_ef(const Instance& inst, const FractionalAllocation& x, double beta = 1.0) {
  x.validate(inst.n(), inst.m());
  return detail::check_ef_matrix(inst, x.x, beta);
}

inline FairnessReport check_ef(const Instance& inst, const IntegralAllocation& a, double beta = 1.0) {
  a.validate(inst.n(), inst.m());
  return detail::check_ef_matrix(inst, a.to_matrix(inst.n()), beta);
}

inline FairnessReport check_prop(const Instance& inst, const FractionalAllocation& x, double beta = 1.0) {
  x.validate(inst.n(), inst.m());
  return detail::check_prop_matrix(inst, x.x, beta);
}

inline FairnessReport check_prop(const Instance& inst, const IntegralAllocation& a, double beta = 1.0) {
  a.validate(inst.n(), inst.m());
  return detail::check_prop_matrix(inst, a.to_matrix(inst.n()), beta);
}

/// beta-EFk. Goods remove up to k goods from the envied bundle, chores up to k chores from
/// the envious agent's own bundle. Removing the k most valuable items (to the judging
/// agent) is optimal because valuations are additive.
inline FairnessReport check_efk(const Instance& inst, const IntegralAllocation& a, double beta = 1.0, int k = 1) {
  detail::check_beta(beta);
  detail::check_k(k);
  a.validate(inst.n(), inst.m());
  FairnessReport rep = detail::make_report(Notion::EFk, beta, k);
  detail::Tracker tr{rep};
  const Matrix& v = inst.values();
  std::vector<std::vector<int>> bundles(inst.n());
  for (int i = 0; i < inst.n(); ++i) bundles[i] = a.bundle(i);
  auto sum = [&](int agent, const std::vector<int>& items) {
    double s = 0.0;
    for (int j : items) s += v(agent, j);
    return s;
  };
  for (int i = 0; i < inst.n(); ++i) {
    double rs = inst.row_sum(i);
    double own = sum(i, bundles[i]);
    for (int j = 0; j < inst.n(); ++j) {
      if (j == i) continue;
      double other = sum(i, bundles[j]);
      std::vector<int> removed;
      double surplus;
      if (inst.is_goods()) {
        removed = detail::top_k(v, i, bundles[j], k);
        surplus = own - (other - sum(i, removed)) / beta;
      } else {
        removed = detail::top_k(v, i, bundles[i], k);
        surplus = beta * other - (own - sum(i, removed));
      }
      tr.add(surplus, rs, kFairnessRelTol * rs, i, j, removed);
    }
  }
  return rep;
}

/// beta-PROPk. Goods add up to k outside goods, chores remove up to k own chores.
inline FairnessReport check_propk(const Instance& inst, const IntegralAllocation& a, double beta = 1.0, int k = 1) {
  detail::check_beta(beta);
  detail::check_k(k);
  a.validate(inst.n(), inst.m());
  FairnessReport rep = detail::make_report(Notion::PROPk, beta, k);
  detail::Tracker tr{rep};
  const Matrix& v = inst.values();
  for (int i = 0; i < inst.n(); ++i) {
    double rs = inst.row_sum(i);
    double share = rs / inst.n();
    std::vector<int> own_items, outside;
    for (int j = 0; j < inst.m(); ++j) (a.owner[j] == i ? own_items : outside).push_back(j);
    double own = 0.0;
    for (int j : own_items) own += v(i, j);
    double surplus;
    std::vector<int> moved;
    if (inst.is_goods()) {
      moved = detail::top_k(v, i, outside, k);
      double add = 0.0;
      for (int j : moved) add += v(i, j);
      surplus = own + add - share / beta;
    } else {
      moved = detail::top_k(v, i, own_items, k);
      double rem = 0.0;
      for (int j : moved) rem += v(i, j);
      surplus = beta * share - (own - rem);
    }
    tr.add(surplus, rs, kFairnessRelTol * rs, i, -1, moved);
  }
  return rep;
}

inline constexpr std::int64_t kMaxEnumeration = 10'000'000;

/// n^m, or -1 when it exceeds the enumeration cap.
inline std::int64_t allocation_count(int n, int m) {
  std::int64_t total = 1;
  for (int j = 0; j < m; ++j) {
    total *= n;
    if (total > kMaxEnumeration) return -1;
  }
  return total;
}

/// Visits every integral allocation in mixed-radix order, passing the owner vector and the
/// per-agent bundle values (raw units). Stops early when the visitor returns false.
inline void for_each_integral(const Instance& inst, const std::function<bool(const std::vector<int>&, const Vector&)>& visit) {
  const int n = inst.n(), m = inst.m();
  if (allocation_count(n, m) < 0) throw ScaleError("n^m exceeds 1e7 allocations");
  const Matrix& v = inst.values();
  std::vector<int> owner(m, 0);
  Vector vals = Vector::Zero(n);
  for (int j = 0; j < m; ++j) vals(0) += v(0, j);
  while (true) {
    if (!visit(owner, vals)) return;
    int j = 0;
    while (j < m) {
      int o = owner[j];
      vals(o) -= v(o, j);
      if (o + 1 < n) {
        owner[j] = o + 1;
        vals(o + 1) += v(o + 1, j);
        break;
      }
      owner[j] = 0;
      vals(0) += v(0, j);
      ++j;
    }
    if (j == m) return;
    // Recompute after every carry so rounding drift never accumulates.
    if (j >= 1) {
      vals.setZero();
      for (int t = 0; t < m; ++t) vals(owner[t]) += v(owner[t], t);
    }
  }
}

/// Exhaustive Pareto check over all integral allocations.
inline FairnessReport check_po_integral(const Instance& inst, const IntegralAllocation& a) {
  a.validate(inst.n(), inst.m());
  if (allocation_count(inst.n(), inst.m()) < 0) throw ScaleError("n^m exceeds 1e7 allocations");
  FairnessReport rep = detail::make_report(Notion::PO, 1.0, 0);
  const int n = inst.n();
  const double sign = inst.is_goods() ? 1.0 : -1.0;
  Vector base(n), rs(n);
  for (int i = 0; i < n; ++i) {
    base(i) = sign * bundle_value(inst, a, i);
    rs(i) = inst.row_sum(i);
  }
  for_each_integral(inst, [&](const std::vector<int>& owner, const Vector& vals) {
    bool weak = true;
    int strict = -1;
    double gain = 0.0;
    for (int i = 0; i < n; ++i) {
      double d = sign * vals(i) - base(i);
      if (d < -kPoStrictMargin * rs(i)) {
        weak = false;
        break;
      }
      if (d > kPoStrictMargin * rs(i) && d / rs(i) > gain) {
        strict = i;
        gain = d / rs(i);
      }
    }
    if (weak && strict >= 0) {
      rep.holds = false;
      rep.margin = -gain;
      std::vector<int> moved;
      for (int j = 0; j < inst.m(); ++j)
        if (owner[j] != a.owner[j]) moved.push_back(j);
      rep.witness = Witness{strict, -1, moved, gain};
      rep.dominating = IntegralAllocation(owner).to_matrix(n);
      return false;
    }
    return true;
  });
  if (rep.holds) rep.margin = 0.0;
  return rep;
}

namespace detail {

inline FairnessReport check_fpo_matrix(const Instance& inst, const Matrix& x) {
  const int n = inst.n(), m = inst.m();
  NormalizedInstance ni = normalize(inst);
  const Matrix& v = ni.values();
  const int nv = n * m + n;
  LinearProgram lp(m + n, nv);
  for (int i = 0; i < n; ++i) lp.c(n * m + i) = 1.0;
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) lp.A(j, i * m + j) = 1.0;
    lp.rel[j] = Relation::Equal;
    lp.b(j) = 1.0;
  }
  for (int i = 0; i < n; ++i) {
    int r = m + i;
    for (int j = 0; j < m; ++j) lp.A(r, i * m + j) = v(i, j);
    double cur = v.row(i).dot(x.row(i));
    if (inst.is_goods()) {
      lp.A(r, n * m + i) = -1.0;
      lp.rel[r] = Relation::GreaterEq;
    } else {
      lp.A(r, n * m + i) = 1.0;
      lp.rel[r] = Relation::LessEq;
    }
    lp.b(r) = cur;
  }
  LpResult res = solve_lp(lp);
  if (res.status == LpStatus::Unbounded) throw NumericalError("fPO program reported unbounded");
  if (res.status == LpStatus::Infeasible) throw NumericalError("fPO program reported infeasible");
  FairnessReport rep = detail::make_report(Notion::fPO, 1.0, 0);
  rep.margin = -res.objective;
  if (res.objective > kFpoSlackTol) {
    rep.holds = false;
    int best = 0;
    for (int i = 1; i < n; ++i)
      if (res.x(n * m + i) > res.x(n * m + best)) best = i;
    Matrix y(n, m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) y(i, j) = res.x(i * m + j);
    rep.witness = Witness{best, -1, {}, res.x(n * m + best)};
    rep.dominating = y;
  }
  return rep;
}

}  // namespace detail

/// Fractional Pareto check: LP maximizing total improvement slack over fractional allocations.
inline FairnessReport check_fpo(const Instance& inst, const FractionalAllocation& x) {
  x.validate(inst.n(), inst.m());
  return detail::check_fpo_matrix(inst, x.x);
}

inline FairnessReport check_fpo(const Instance& inst, const IntegralAllocation& a) {
  a.validate(inst.n(), inst.m());
  return detail::check_fpo_matrix(inst, a.to_matrix(inst.n()));
}

}  // namespace pmfair
