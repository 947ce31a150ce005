#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "pmfair/core.hpp"

namespace pmfair {

/// Exponent of the generalized mean. |p| > 700 is treated as +/-infinity.
struct PMeanParam {
  double p = 0.0;

  PMeanParam() = default;
  PMeanParam(double value) : p(clamp(value)) {}  // NOLINT(google-explicit-constructor)

  static PMeanParam neg_inf() { return PMeanParam(-std::numeric_limits<double>::infinity()); }
  static PMeanParam pos_inf() { return PMeanParam(std::numeric_limits<double>::infinity()); }

  bool is_neg_inf() const { return std::isinf(p) && p < 0; }
  bool is_pos_inf() const { return std::isinf(p) && p > 0; }
  bool is_finite() const { return std::isfinite(p); }

  static constexpr double kClamp = 700.0;

  static double clamp(double v) {
    if (std::isnan(v)) throw ParamError("p must not be NaN");
    if (v > kClamp) return std::numeric_limits<double>::infinity();
    if (v < -kClamp) return -std::numeric_limits<double>::infinity();
    return v;
  }
};

/// ((1/n) sum s_i^p)^(1/p), with the geometric mean at p = 0 and min/max at -inf/+inf.
template <class Vec>
double p_mean(const Vec& s, PMeanParam param) {
  const auto n = static_cast<int>(s.size());
  if (n == 0) throw DimensionError("p_mean of an empty vector");
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (int i = 0; i < n; ++i) {
    double v = s[i];
    if (!(v >= 0.0)) throw DomainError("p_mean requires nonnegative entries");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double p = param.p;
  if (param.is_neg_inf()) return lo;
  if (param.is_pos_inf()) return hi;
  if (p <= 0.0 && lo == 0.0) return 0.0;
  if (hi == 0.0) return 0.0;
  if (p == 0.0) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += std::log(s[i]);
    return std::exp(acc / n);
  }
  // Scale so every ratio^p lies in (0, 1]; expm1/log1p keep small |p| accurate.
  const double ref = p > 0.0 ? hi : lo;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    double v = s[i];
    acc += v == 0.0 ? -1.0 : std::expm1(p * std::log(v / ref));
  }
  acc /= n;
  if (acc <= -1.0) return 0.0;
  return ref * std::exp(std::log1p(acc) / p);
}

template <class Inst, class Alloc>
double normalized_p_mean(const Inst& inst, const Alloc& alloc, PMeanParam p) {
  NormalizedInstance ni = normalize(inst);
  return p_mean(bundle_values(ni, alloc), p);
}

namespace detail {

enum class Regime { GoodsPower, GoodsLog, ChoresPower };

inline Regime surrogate_regime(Kind kind, double p) {
  if (kind == Kind::Goods) {
    if (p < 0.0 && std::isfinite(p)) return Regime::GoodsPower;
    if (p == 0.0) return Regime::GoodsLog;
    throw UnsupportedRegime("goods surrogate requires finite p <= 0");
  }
  if (p >= 1.0 && std::isfinite(p)) return Regime::ChoresPower;
  throw UnsupportedRegime("chores surrogate requires finite p >= 1");
}

}  // namespace detail

/// Surrogate from agent utilities: sum u^-k, -sum log u, or sum c^p.
inline double surrogate_from_values(Kind kind, const Vector& u, double p) {
  switch (detail::surrogate_regime(kind, p)) {
    case detail::Regime::GoodsPower: {
      double k = -p, acc = 0.0;
      for (int i = 0; i < u.size(); ++i) {
        if (!(u(i) > 0.0)) return std::numeric_limits<double>::infinity();
        acc += std::pow(u(i), -k);
      }
      return acc;
    }
    case detail::Regime::GoodsLog: {
      double acc = 0.0;
      for (int i = 0; i < u.size(); ++i) {
        if (!(u(i) > 0.0)) return std::numeric_limits<double>::infinity();
        acc -= std::log(u(i));
      }
      return acc;
    }
    case detail::Regime::ChoresPower: {
      double acc = 0.0;
      for (int i = 0; i < u.size(); ++i) acc += std::pow(std::max(u(i), 0.0), p);
      return acc;
    }
  }
  return 0.0;
}

inline double surrogate_objective(const NormalizedInstance& inst, const FractionalAllocation& x, PMeanParam p) {
  return surrogate_from_values(inst.kind(), bundle_values(inst, x), p.p);
}

/// d surrogate / d x_ij.
inline Matrix surrogate_gradient(const NormalizedInstance& inst, const FractionalAllocation& x, PMeanParam param) {
  const double p = param.p;
  const auto regime = detail::surrogate_regime(inst.kind(), p);
  Vector u = bundle_values(inst, x);
  Matrix g(inst.n(), inst.m());
  for (int i = 0; i < inst.n(); ++i) {
    double w = 0.0;
    switch (regime) {
      case detail::Regime::GoodsPower:
        w = u(i) > 0.0 ? p * std::pow(u(i), p - 1.0) : -std::numeric_limits<double>::infinity();
        break;
      case detail::Regime::GoodsLog:
        w = u(i) > 0.0 ? -1.0 / u(i) : -std::numeric_limits<double>::infinity();
        break;
      case detail::Regime::ChoresPower:
        w = p == 1.0 ? 1.0 : p * std::pow(std::max(u(i), 0.0), p - 1.0);
        break;
    }
    g.row(i) = w * inst.values().row(i);
  }
  return g;
}

/// Approximate-proportionality factor n^(1/p).
inline double prop_bound(int n, double p) {
  if (n < 1) throw ParamError("n must be positive");
  if (!(p >= 1.0)) throw ParamError("p must be at least 1");
  return std::pow(static_cast<double>(n), 1.0 / p);
}

}  // namespace pmfair
