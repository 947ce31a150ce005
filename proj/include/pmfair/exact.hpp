#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "pmfair/core.hpp"
#include "pmfair/fairness.hpp"
#include "pmfair/welfare.hpp"

namespace pmfair {

inline constexpr double kTieTolerance = 1e-12;
inline constexpr std::int64_t kMaxGridPoints = 10'000'000;

/// Every integral allocation attaining the optimal normalized p-mean.
struct OptimaSet {
  std::vector<IntegralAllocation> optima;
  double objective = 0.0;
  double tie_tolerance = kTieTolerance;
};

namespace detail {

/// +1 where a larger p-mean is better (goods), -1 for chores.
inline double orientation(Kind k) { return k == Kind::Goods ? 1.0 : -1.0; }

inline bool within_tie(double a, double b, double tol) {
  double scale = std::max(std::abs(a), std::abs(b));
  return std::abs(a - b) <= tol * scale || a == b;
}

inline Vector normalized_values_of(const Instance& inst, const std::vector<int>& owner) {
  Vector u = Vector::Zero(inst.n());
  for (int j = 0; j < inst.m(); ++j) u(owner[j]) += inst(owner[j], j);
  for (int i = 0; i < inst.n(); ++i) u(i) /= inst.row_sum(i);
  return u;
}

}  // namespace detail

/// Exhaustive search over all n^m integral allocations.
inline OptimaSet enumerate_optima(const Instance& inst, PMeanParam p) {
  if (allocation_count(inst.n(), inst.m()) < 0) throw ScaleError("n^m exceeds 1e7 allocations");
  const int n = inst.n();
  const double sign = detail::orientation(inst.kind());
  Vector rs(n);
  for (int i = 0; i < n; ++i) rs(i) = inst.row_sum(i);
  double best = -std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, std::vector<int>>> cand;
  Vector u(n);
  for_each_integral(inst, [&](const std::vector<int>& owner, const Vector& vals) {
    for (int i = 0; i < n; ++i) u(i) = std::max(0.0, vals(i) / rs(i));
    double w = sign * p_mean(u, p);
    if (w < best && !detail::within_tie(w, best, 1e3 * kTieTolerance)) return true;
    // Candidates are rescored from scratch so incremental drift never decides a tie.
    double exact = sign * p_mean(detail::normalized_values_of(inst, owner), p);
    if (exact > best) best = exact;
    cand.emplace_back(exact, owner);
    if (cand.size() > 4096) {
      std::erase_if(cand, [&](const auto& c) { return !detail::within_tie(c.first, best, kTieTolerance); });
    }
    return true;
  });
  OptimaSet out;
  out.objective = sign * best;
  for (auto& [w, owner] : cand)
    if (detail::within_tie(w, best, kTieTolerance)) out.optima.emplace_back(owner);
  return out;
}

/// Best point of a regular grid over divisible allocations, polished by pairwise transfers.
struct GridResult {
  FractionalAllocation allocation;
  double objective = 0.0;
  int resolution = 0;  // grid resolution actually used
  std::int64_t points = 0;
};

namespace detail {

inline double composition_count(int R, int n) {
  double c = 1.0;
  for (int k = 1; k < n; ++k) c = c * (R + k) / k;
  return c;
}

inline void compositions(int R, int n, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == n - 1) {
    int used = 0;
    for (int c : cur) used += c;
    cur.push_back(R - used);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  int used = 0;
  for (int c : cur) used += c;
  for (int c = 0; c <= R - used; ++c) {
    cur.push_back(c);
    compositions(R, n, cur, out);
    cur.pop_back();
  }
}

class GridObjective {
 public:
  GridObjective(const Instance& inst, PMeanParam p)
      : V_(normalize(inst).values()), p_(p), sign_(orientation(inst.kind())) {}

  /// Oriented objective: larger is better.
  double operator()(const Matrix& x) const {
    Vector u = (V_.array() * x.array()).rowwise().sum();
    for (int i = 0; i < u.size(); ++i) u(i) = std::max(0.0, u(i));
    return sign_ * p_mean(u, p_);
  }
  double sign() const { return sign_; }
  const Matrix& V() const { return V_; }

 private:
  Matrix V_;
  PMeanParam p_;
  double sign_;
};

/// Golden-section search over the split of item j between agents a and b, keeping endpoints.
inline bool refine_pair(const GridObjective& f, Matrix& x, double& best, int j, int a, int b) {
  const double total = x(a, j) + x(b, j);
  if (total <= 0.0) return false;
  Matrix y = x;
  auto eval = [&](double t) {
    y(a, j) = t;
    y(b, j) = total - t;
    return f(y);
  };
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 0.0, hi = total;
  double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
  double fc = eval(c), fd = eval(d);
  for (int it = 0; it < 120 && hi - lo > 1e-15 * total; ++it) {
    if (fc >= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - g * (hi - lo);
      fc = eval(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + g * (hi - lo);
      fd = eval(d);
    }
  }
  double cand[] = {0.0, total, 0.5 * (lo + hi)};
  double bt = x(a, j), bf = best;
  for (double t : cand) {
    double v = eval(t);
    if (v > bf) {
      bf = v;
      bt = t;
    }
  }
  if (bf > best) {
    x(a, j) = bt;
    x(b, j) = total - bt;
    best = bf;
    return true;
  }
  return false;
}

}  // namespace detail

/// Exhaustive grid over per-item compositions of `resolution` units. When the full grid exceeds
/// 1e7 points the resolution is lowered until it fits; pairwise golden-section transfers then
/// polish the best grid point, accepting only improvements.
inline GridResult grid_oracle_divisible(const Instance& inst, PMeanParam p, int resolution) {
  if (resolution < 1) throw ParamError("resolution must be positive");
  const int n = inst.n(), m = inst.m();
  auto total = [&](int R) { return std::pow(detail::composition_count(R, n), m); };
  if (total(1) > static_cast<double>(kMaxGridPoints)) throw ScaleError("grid oracle needs more than 1e7 points even at resolution 1");
  int R = resolution;
  if (total(R) > static_cast<double>(kMaxGridPoints)) {
    int lo = 1, hi = R;
    while (lo < hi) {
      int mid = lo + (hi - lo + 1) / 2;
      if (total(mid) <= static_cast<double>(kMaxGridPoints)) lo = mid;
      else hi = mid - 1;
    }
    R = lo;
  }
  std::vector<std::vector<int>> comps;
  std::vector<int> cur;
  detail::compositions(R, n, cur, comps);
  const int K = static_cast<int>(comps.size());
  detail::GridObjective f(inst, p);
  const Matrix& V = f.V();

  std::vector<int> idx(m, 0);
  Matrix x(n, m);
  auto fill = [&]() {
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < n; ++i) x(i, j) = static_cast<double>(comps[idx[j]][i]) / R;
  };
  std::vector<int> best_idx(m, 0);
  double best = -std::numeric_limits<double>::infinity();
  std::int64_t points = 0;
  Vector u(n);
  while (true) {
    u.setZero();
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < n; ++i) u(i) += V(i, j) * comps[idx[j]][i];
    u /= R;
    double w = f.sign() * p_mean(u, p);
    ++points;
    if (w > best) {
      best = w;
      best_idx = idx;
    }
    int j = 0;
    while (j < m && ++idx[j] == K) idx[j++] = 0;
    if (j == m) break;
  }
  idx = best_idx;
  fill();
  best = f(x);
  for (int sweep = 0; sweep < 200; ++sweep) {
    double before = best;
    for (int j = 0; j < m; ++j)
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) detail::refine_pair(f, x, best, j, a, b);
    if (!(best - before > 1e-15 * std::max(1.0, std::abs(best)))) break;
  }
  return GridResult{FractionalAllocation(x), f.sign() * best, R, points};
}

/// For a, b, alpha, beta > 0 with max{a,b} >= max{alpha,beta} and a^2 + b^2 > alpha^2 + beta^2,
/// reports whether a^p + b^p > alpha^p + beta^p.
inline bool lemma_squeeze_predicate(double a, double b, double alpha, double beta, double p) {
  if (!(p > 2.0)) throw ParamError("p must exceed 2");
  if (!(a > 0.0 && b > 0.0 && alpha > 0.0 && beta > 0.0)) throw PreconditionError("arguments must be positive");
  if (!(std::max(a, b) >= std::max(alpha, beta))) throw PreconditionError("max{a,b} < max{alpha,beta}");
  if (!(a * a + b * b > alpha * alpha + beta * beta)) throw PreconditionError("a^2 + b^2 <= alpha^2 + beta^2");
  if (a < b) std::swap(a, b);
  if (alpha < beta) std::swap(alpha, beta);
  // Scaled by a; compare 1 - (alpha/a)^p with (beta/a)^p - (b/a)^p.
  double lhs = -std::expm1(p * std::log(alpha / a));
  double rhs = beta >= b ? std::pow(b / a, p) * std::expm1(p * std::log(beta / b))
                         : -std::pow(beta / a, p) * std::expm1(p * std::log(b / beta));
  return lhs > rhs;
}

/// For 0 <= a < alpha < 1 and 0 < beta < 1 - 2 alpha, evaluates
/// (1) (a + (1-a)/(1-alpha) beta)^2 + (1-alpha-beta)^2 < a^2 + (1-alpha)^2 and
/// (2) a + (1-a)/(1-alpha) beta < 1 - alpha.
inline std::pair<bool, bool> lemma_chores_algebra_predicate(double a, double alpha, double beta) {
  if (!(a >= 0.0 && a < alpha && alpha < 1.0)) throw PreconditionError("requires 0 <= a < alpha < 1");
  if (!(beta > 0.0 && beta < 1.0 - 2.0 * alpha)) throw PreconditionError("requires 0 < beta < 1 - 2 alpha");
  const double g = (1.0 - a) / (1.0 - alpha);
  // Right side minus left side of (1), with the common factor beta pulled out.
  double d1 = beta * (2.0 * (1.0 - alpha) - beta - 2.0 * a * g - g * g * beta);
  double d2 = (1.0 - alpha) - a - g * beta;
  return {d1 > 0.0, d2 > 0.0};
}

/// For positive a, b, alpha, beta with min{a,b} <= min{alpha,beta} and ab < alpha beta,
/// reports whether w_p(a,b) < w_p(alpha,beta).
inline bool lemma_goods_algebra_predicate(double a, double b, double alpha, double beta, double p) {
  if (!(p <= 0.0)) throw ParamError("p must be at most 0");
  if (!(a > 0.0 && b > 0.0 && alpha > 0.0 && beta > 0.0)) throw PreconditionError("arguments must be positive");
  if (!(std::min(a, b) <= std::min(alpha, beta))) throw PreconditionError("min{a,b} > min{alpha,beta}");
  if (!(a * b < alpha * beta)) throw PreconditionError("ab >= alpha beta");
  if (std::isinf(p)) return std::min(a, b) < std::min(alpha, beta);
  if (p == 0.0) return std::log(a) + std::log(b) < std::log(alpha) + std::log(beta);
  // For p < 0, w_p(a,b) < w_p(alpha,beta) iff a^p + b^p > alpha^p + beta^p; scale by min{a,b}.
  const double m0 = std::min(a, b);
  auto term = [&](double v) { return std::expm1(p * std::log(v / m0)); };
  return term(a) + term(b) > term(alpha) + term(beta);
}

namespace detail {

inline void require_two_agent_chores(const Instance& inst, const IntegralAllocation& a) {
  if (inst.is_goods() || inst.n() != 2) throw PreconditionError("requires a two-agent chores instance");
  a.validate(inst.n(), inst.m());
}

/// Agent e still envies the other agent after removing any single chore from its own bundle.
inline bool ef1_envious(const NormalizedInstance& ni, const IntegralAllocation& a, int e) {
  double own = 0.0, other = 0.0, top = 0.0;
  for (int j = 0; j < ni.m(); ++j) {
    if (a.owner[j] == e) {
      own += ni(e, j);
      top = std::max(top, ni(e, j));
    } else {
      other += ni(e, j);
    }
  }
  return own - top > other + kFairnessRelTol;
}

inline int transfer_target(const NormalizedInstance& ni, const IntegralAllocation& a, int e) {
  const int o = 1 - e;
  int best = -1;
  double ratio = std::numeric_limits<double>::infinity();
  for (int t = 0; t < ni.m(); ++t) {
    if (a.owner[t] != e || ni(e, t) <= 0.0) continue;
    double r = ni(o, t) / ni(e, t);
    if (best < 0 || r < ratio) {
      best = t;
      ratio = r;
    }
  }
  return best;
}

inline double own_cost(const NormalizedInstance& ni, const IntegralAllocation& a, int i) {
  double s = 0.0;
  for (int j = 0; j < ni.m(); ++j)
    if (a.owner[j] == i) s += ni(i, j);
  return s;
}

inline double cost_of(const NormalizedInstance& ni, const IntegralAllocation& a, int i, int holder) {
  double s = 0.0;
  for (int j = 0; j < ni.m(); ++j)
    if (a.owner[j] == holder) s += ni(i, j);
  return s;
}

}  // namespace detail

/// Moves t* = argmin over the second agent's chores of c~_1(t)/c~_2(t) to the first agent.
/// Requires the second agent to be EF1-envious and c~_1(a_1) <= c~_2(a_1).
inline IntegralAllocation ef1_transfer_step(const Instance& inst, const IntegralAllocation& a) {
  detail::require_two_agent_chores(inst, a);
  NormalizedInstance ni = normalize(inst);
  if (!detail::ef1_envious(ni, a, 1)) throw PreconditionError("second agent is not envious beyond one chore");
  if (detail::cost_of(ni, a, 0, 0) > detail::cost_of(ni, a, 1, 0))
    throw PreconditionError("c~_1(a_1) > c~_2(a_1); the swap rule applies");
  int t = detail::transfer_target(ni, a, 1);
  if (t < 0) throw PreconditionError("second agent holds no costly chore");
  IntegralAllocation out = a;
  out.owner[t] = 0;
  return out;
}

/// Trajectory of the two tracked quantities along the EF1 descent.
struct DescentTrace {
  IntegralAllocation final;
  std::vector<double> sum_squares;  // c~_1^2 + c~_2^2 per visited allocation
  std::vector<double> max_cost;     // max{c~_1, c~_2}
  int steps = 0;
  bool strictly_decreasing = true;
};

/// Repeats the swap rule or the transfer step until the allocation is EF1.
inline DescentTrace ef1_descent(const Instance& inst, IntegralAllocation a, int max_steps = 100000) {
  detail::require_two_agent_chores(inst, a);
  NormalizedInstance ni = normalize(inst);
  DescentTrace tr;
  auto record = [&]() {
    double c0 = detail::own_cost(ni, a, 0), c1 = detail::own_cost(ni, a, 1);
    tr.sum_squares.push_back(c0 * c0 + c1 * c1);
    tr.max_cost.push_back(std::max(c0, c1));
    std::size_t k = tr.sum_squares.size();
    if (k >= 2 && !(tr.sum_squares[k - 1] < tr.sum_squares[k - 2] && tr.max_cost[k - 1] < tr.max_cost[k - 2]))
      tr.strictly_decreasing = false;
  };
  record();
  for (; tr.steps < max_steps; ++tr.steps) {
    int e = detail::ef1_envious(ni, a, 1) ? 1 : detail::ef1_envious(ni, a, 0) ? 0 : -1;
    if (e < 0) break;
    const int o = 1 - e;
    if (detail::cost_of(ni, a, o, o) > detail::cost_of(ni, a, e, o)) {
      for (int& w : a.owner) w = 1 - w;
    } else {
      int t = detail::transfer_target(ni, a, e);
      if (t < 0) throw NumericalError("envious agent holds no costly chore");
      a.owner[t] = o;
    }
    record();
  }
  tr.final = a;
  return tr;
}

/// Entries i.i.d. uniform(0.05, 1), each row renormalized to sum one.
inline Instance random_instance(std::mt19937_64& rng, Kind kind, int n, int m) {
  std::uniform_real_distribution<double> d(0.05, 1.0);
  Matrix v(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) v(i, j) = d(rng);
    v.row(i) /= v.row(i).sum();
  }
  return Instance(kind, std::move(v));
}

/// Goods instance with roughly 30% zero entries; rows are kept nonzero, columns may be all-zero.
inline Instance random_sparse_goods(std::mt19937_64& rng, int n, int m) {
  std::uniform_real_distribution<double> d(0.05, 1.0);
  std::bernoulli_distribution zero(0.3);
  std::uniform_int_distribution<int> pick(0, m - 1);
  Matrix v(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) v(i, j) = zero(rng) ? 0.0 : d(rng);
    if (v.row(i).sum() == 0.0) v(i, pick(rng)) = d(rng);
    v.row(i) /= v.row(i).sum();
  }
  return Instance(Kind::Goods, std::move(v));
}

}  // namespace pmfair
