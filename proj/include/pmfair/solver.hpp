#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "pmfair/core.hpp"
#include "pmfair/market.hpp"
#include "pmfair/welfare.hpp"

namespace pmfair {

struct SolverConfig {
  double kkt_tolerance = 1e-8;
  int max_iterations = 200000;
  double step = 1.0;
  double backtrack = 0.5;
  double armijo = 1e-4;

  void validate() const {
    if (!(kkt_tolerance > 0.0)) throw ParamError("kkt_tolerance must be positive");
    if (max_iterations < 1) throw ParamError("max_iterations must be at least 1");
    if (!(step > 0.0)) throw ParamError("step must be positive");
    if (!(backtrack > 0.0 && backtrack < 1.0)) throw ParamError("backtrack factor must lie in (0,1)");
    if (!(armijo > 0.0 && armijo < 1.0)) throw ParamError("armijo constant must lie in (0,1)");
  }
};

/// Item duals (prices or rewards), nonnegativity duals and residuals of the convex program.
struct KktCertificate {
  Vector duals_items;
  Matrix duals_nonneg;
  double stationarity_residual = 0.0;
  double complementarity_residual = 0.0;
  int iterations = 0;
  double objective = 0.0;

  double residual() const { return std::max(stationarity_residual, complementarity_residual); }
};

struct SolveResult {
  FractionalAllocation allocation;
  KktCertificate certificate;
  std::vector<std::string> warnings;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, SolveResult best) : Error(what), best_(std::move(best)) {}
  const SolveResult& best() const noexcept { return best_; }

 private:
  SolveResult best_;
};

namespace detail {

/// Euclidean projection of y onto the probability simplex.
inline void project_simplex(double* y, int n, std::vector<double>& buf) {
  buf.assign(y, y + n);
  std::sort(buf.begin(), buf.end(), std::greater<double>());
  double cum = 0.0, theta = 0.0;
  for (int k = 0; k < n; ++k) {
    cum += buf[k];
    double t = (cum - 1.0) / (k + 1);
    if (k == n - 1 || buf[k + 1] <= t) {
      theta = t;
      break;
    }
  }
  for (int i = 0; i < n; ++i) y[i] = std::max(0.0, y[i] - theta);
}

/// phi(u + du) - phi(u) computed without cancellation.
inline double phi_delta(Regime r, double p, double u, double du) {
  switch (r) {
    case Regime::GoodsPower:
      return std::pow(u, p) * std::expm1(p * std::log1p(du / u));
    case Regime::GoodsLog:
      return -std::log1p(du / u);
    case Regime::ChoresPower:
      if (p == 1.0) return du;
      if (u <= 0.0) return std::pow(std::max(du, 0.0), p);
      return std::pow(u, p) * std::expm1(p * std::log1p(du / u));
  }
  return 0.0;
}

/// Derivative of the per-agent term phi at u.
inline double phi_prime(Regime r, double p, double u) {
  switch (r) {
    case Regime::GoodsPower: return p * std::pow(u, p - 1.0);
    case Regime::GoodsLog: return -1.0 / u;
    case Regime::ChoresPower: return p == 1.0 ? 1.0 : p * std::pow(std::max(u, 0.0), p - 1.0);
  }
  return 0.0;
}

struct KktParts {
  Vector lambda;  // min_i G_ij
  Matrix kappa;   // G_ij - lambda_j
  double feasibility = 0.0;
  double complementarity = 0.0;
};

/// Residuals given the objective gradient G. Complementarity is the relative dual gap
/// kappa_ij / |lambda_j| over entries held above the support threshold.
inline KktParts kkt_parts(const Matrix& x, const Matrix& G) {
  const int n = static_cast<int>(x.rows()), m = static_cast<int>(x.cols());
  KktParts k;
  k.lambda.resize(m);
  k.kappa.resize(n, m);
  double scale = 0.0;
  for (int j = 0; j < m; ++j) {
    k.lambda(j) = G.col(j).minCoeff();
    if (std::isfinite(k.lambda(j))) scale = std::max(scale, std::abs(k.lambda(j)));
  }
  for (int j = 0; j < m; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      k.feasibility = std::max(k.feasibility, -x(i, j));
      s += x(i, j);
    }
    k.feasibility = std::max(k.feasibility, std::abs(s - 1.0));
    double denom = std::max(std::abs(k.lambda(j)), 1e-12 * scale);
    for (int i = 0; i < n; ++i) {
      double kap = G(i, j) - k.lambda(j);
      k.kappa(i, j) = kap;
      if (!std::isfinite(kap) || !std::isfinite(k.lambda(j))) {
        if (x(i, j) > kSupportTol) k.complementarity = std::numeric_limits<double>::infinity();
        continue;
      }
      if (x(i, j) > kSupportTol) {
        double r = denom > 0.0 ? kap / denom : (kap > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        k.complementarity = std::max(k.complementarity, r);
      }
    }
  }
  return k;
}

/// Gradient of the surrogate over all columns given per-agent values u.
inline Matrix full_gradient(Regime r, double p, const Matrix& V, const Vector& u) {
  Matrix G(V.rows(), V.cols());
  for (int i = 0; i < V.rows(); ++i) {
    if (r != Regime::ChoresPower && !(u(i) > 0.0)) {
      for (int j = 0; j < V.cols(); ++j)
        G(i, j) = V(i, j) > 0.0 ? -std::numeric_limits<double>::infinity() : 0.0;
      continue;
    }
    G.row(i) = phi_prime(r, p, u(i)) * V.row(i);
  }
  return G;
}

/// Projected gradient descent with Armijo backtracking over the free columns.
class ProjectedGradient {
 public:
  ProjectedGradient(Regime regime, double p, Matrix V_free, Vector offset, const SolverConfig& cfg)
      : r_(regime), p_(p), V_(std::move(V_free)), u0_(std::move(offset)), cfg_(cfg) {}

  struct Outcome {
    Matrix x;
    int iterations = 0;
    double residual = std::numeric_limits<double>::infinity();
    bool converged = false;
  };

  Outcome run() {
    const int n = static_cast<int>(V_.rows()), m = static_cast<int>(V_.cols());
    Outcome best;
    Matrix X = Matrix::Constant(n, m, 1.0 / n);
    if (m == 0) {
      best.x = X;
      best.converged = true;
      best.residual = 0.0;
      return best;
    }
    Vector u = values(X);
    double t = cfg_.step;
    std::vector<double> buf;
    Matrix Y(n, m), D(n, m);
    std::vector<double> col(n);
    for (int it = 0; it <= cfg_.max_iterations; ++it) {
      Matrix G = full_gradient(r_, p_, V_, u);
      KktParts k = kkt_parts(X, G);
      double res = std::max(k.feasibility, k.complementarity);
      if (res < best.residual) {
        best.residual = res;
        best.x = X;
        best.iterations = it;
      }
      if (res <= cfg_.kkt_tolerance) {
        best.converged = true;
        return best;
      }
      if (it == cfg_.max_iterations) break;
      bool accepted = false;
      for (int bt = 0; bt < 200; ++bt) {
        for (int j = 0; j < m; ++j) {
          for (int i = 0; i < n; ++i) col[i] = X(i, j) - t * k.kappa(i, j);
          project_simplex(col.data(), n, buf);
          for (int i = 0; i < n; ++i) Y(i, j) = col[i];
        }
        D = Y - X;
        // Columns of D sum to zero, so the shifted gradient gives the same slope with less cancellation.
        double slope = (k.kappa.array() * D.array()).sum();
        if (D.cwiseAbs().maxCoeff() == 0.0) break;
        Vector du = V_.cwiseProduct(D).rowwise().sum();
        double df = 0.0;
        bool ok = true;
        for (int i = 0; i < n; ++i) {
          if (r_ != Regime::ChoresPower && !(u(i) + du(i) >= 1e-12)) {
            ok = false;
            break;
          }
          df += phi_delta(r_, p_, u(i), du(i));
        }
        // Subtract lambda_j times the column-sum drift: equal to f on the feasible set, but
        // free of the rounding noise that would otherwise swamp tiny decreases.
        if (ok) df -= D.colwise().sum().dot(k.lambda);
        if (ok && df <= cfg_.armijo * slope) {
          accepted = true;
          break;
        }
        t *= cfg_.backtrack;
      }
      if (!accepted) break;
      X = Y;
      u = values(X);
      t /= cfg_.backtrack;
    }
    return best;
  }

  Vector values(const Matrix& X) const { return u0_ + V_.cwiseProduct(X).rowwise().sum(); }

 private:
  Regime r_;
  double p_;
  Matrix V_;
  Vector u0_;
  SolverConfig cfg_;
};

inline Matrix select_columns(const Matrix& V, const std::vector<int>& cols) {
  Matrix out(V.rows(), static_cast<int>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<int>(c)) = V.col(cols[c]);
  return out;
}

inline KktCertificate certify(const Instance& inst, const Matrix& x, double p) {
  NormalizedInstance ni = normalize(inst);
  Regime r = surrogate_regime(inst.kind(), p);
  Vector u = bundle_values(ni, FractionalAllocation(x));
  Matrix G = full_gradient(r, p, ni.values(), u);
  KktParts k = kkt_parts(x, G);
  KktCertificate c;
  // Dual of the column constraint and of x_ij >= 0, sign-adjusted so prices and rewards are nonnegative.
  c.duals_items = inst.is_goods() ? Vector(-k.lambda) : k.lambda;
  c.duals_nonneg = k.kappa;
  c.stationarity_residual = k.feasibility;
  c.complementarity_residual = k.complementarity;
  c.objective = surrogate_from_values(inst.kind(), u, p);
  return c;
}

}  // namespace detail

/// KKT residual of an allocation with duals set by the extraction formulas.
inline double kkt_residual(const Instance& inst, const FractionalAllocation& x, PMeanParam p) {
  x.validate(inst.n(), inst.m(), 1e-6);
  return detail::certify(inst, x.x, p.p).residual();
}

/// Maximizes the normalized p-mean (p <= 0) of divisible goods.
inline SolveResult solve_goods(const Instance& inst, PMeanParam param, const SolverConfig& cfg = {}) {
  cfg.validate();
  if (!inst.is_goods()) throw UnsupportedRegime("solve_goods requires a goods instance");
  const double p = param.p;
  if (!(p <= 0.0) || !std::isfinite(p)) throw UnsupportedRegime("solve_goods requires finite p <= 0");
  Preprocessed pre = preprocess(inst);
  NormalizedInstance ni = normalize(inst);
  Matrix V = detail::select_columns(ni.values(), pre.kept_items);
  detail::Regime r = detail::surrogate_regime(Kind::Goods, p);
  detail::ProjectedGradient pg(r, p, V, Vector::Zero(inst.n()), cfg);
  auto out = pg.run();
  Matrix x = Matrix::Zero(inst.n(), inst.m());
  for (std::size_t c = 0; c < pre.kept_items.size(); ++c) x.col(pre.kept_items[c]) = out.x.col(static_cast<int>(c));
  for (int j : pre.dropped_items) x(0, j) = 1.0;
  SolveResult res{FractionalAllocation(x), detail::certify(inst, x, p), pre.warnings};
  res.certificate.iterations = out.iterations;
  if (!out.converged || !(res.certificate.residual() <= cfg.kkt_tolerance))
    throw ConvergenceError("goods solver did not reach the KKT tolerance", res);
  return res;
}

/// Minimizes the normalized p-mean (p >= 1) of divisible chores.
inline SolveResult solve_chores(const Instance& inst, PMeanParam param, const SolverConfig& cfg = {}) {
  cfg.validate();
  if (inst.is_goods()) throw UnsupportedRegime("solve_chores requires a chores instance");
  const double p = param.p;
  if (!(p >= 1.0) || !std::isfinite(p)) throw UnsupportedRegime("solve_chores requires finite p >= 1");
  NormalizedInstance ni = normalize(inst);
  const int n = inst.n(), m = inst.m();
  Matrix x = Matrix::Zero(n, m);
  std::vector<int> free_cols;
  for (int j = 0; j < m; ++j) {
    int zeros = 0;
    for (int i = 0; i < n; ++i) zeros += inst(i, j) == 0.0;
    if (zeros == 0) {
      free_cols.push_back(j);
      continue;
    }
    // Zero-cost chores are split equally among the agents who find them costless.
    for (int i = 0; i < n; ++i)
      if (inst(i, j) == 0.0) x(i, j) = 1.0 / zeros;
  }
  Matrix V = detail::select_columns(ni.values(), free_cols);
  detail::Regime r = detail::surrogate_regime(Kind::Chores, p);
  detail::ProjectedGradient pg(r, p, V, Vector::Zero(n), cfg);
  auto out = pg.run();
  for (std::size_t c = 0; c < free_cols.size(); ++c) x.col(free_cols[c]) = out.x.col(static_cast<int>(c));
  SolveResult res{FractionalAllocation(x), detail::certify(inst, x, p), {}};
  res.certificate.iterations = out.iterations;
  if (!out.converged || !(res.certificate.residual() <= cfg.kkt_tolerance))
    throw ConvergenceError("chores solver did not reach the KKT tolerance", res);
  return res;
}

/// Prices p_j = max_i w v_ij u_i^-(k+1) and budgets b_i = w u_i^-k, with w = k (or 1 at p = 0).
inline GoodsEquilibrium extract_goods_equilibrium(const Instance& inst, const FractionalAllocation& x, PMeanParam param) {
  if (!inst.is_goods()) throw UnsupportedRegime("goods equilibrium requires a goods instance");
  const double p = param.p;
  if (!(p <= 0.0) || !std::isfinite(p)) throw UnsupportedRegime("goods equilibrium requires finite p <= 0");
  x.validate(inst.n(), inst.m(), 1e-6);
  NormalizedInstance ni = normalize(inst);
  Vector u = bundle_values(ni, x);
  for (int i = 0; i < inst.n(); ++i)
    if (!(u(i) > 0.0)) throw DegenerateOptimum("agent " + std::to_string(i) + " has zero utility");
  const double k = -p;
  const double w = p == 0.0 ? 1.0 : k;
  GoodsEquilibrium eq{x, Vector::Zero(inst.m()), Vector(inst.n())};
  for (int j = 0; j < inst.m(); ++j)
    for (int i = 0; i < inst.n(); ++i)
      eq.prices(j) = std::max(eq.prices(j), w * ni(i, j) * std::pow(u(i), -(k + 1.0)));
  for (int i = 0; i < inst.n(); ++i) eq.budgets(i) = w * std::pow(u(i), -k);
  return eq;
}

/// Rewards r_j = min over positive-cost agents of p c_ij C_i^(p-1), earnings e_i = p C_i^p.
/// Chores with a zero-cost agent carry reward zero.
inline ChoresEquilibrium extract_chores_equilibrium(const Instance& inst, const FractionalAllocation& x, PMeanParam param) {
  if (inst.is_goods()) throw UnsupportedRegime("chores equilibrium requires a chores instance");
  const double p = param.p;
  if (!(p >= 1.0) || !std::isfinite(p)) throw UnsupportedRegime("chores equilibrium requires finite p >= 1");
  x.validate(inst.n(), inst.m(), 1e-6);
  NormalizedInstance ni = normalize(inst);
  Vector c = bundle_values(ni, x);
  if (p > 1.0)
    for (int i = 0; i < inst.n(); ++i)
      if (!(c(i) > 0.0)) throw DegenerateOptimum("agent " + std::to_string(i) + " has zero cost");
  ChoresEquilibrium eq{x, Vector(inst.m()), Vector(inst.n())};
  for (int j = 0; j < inst.m(); ++j) {
    double best = std::numeric_limits<double>::infinity();
    bool zero_cost = false;
    for (int i = 0; i < inst.n(); ++i) {
      if (ni(i, j) == 0.0) {
        zero_cost = true;
        continue;
      }
      double g = p == 1.0 ? ni(i, j) : p * ni(i, j) * std::pow(c(i), p - 1.0);
      best = std::min(best, g);
    }
    eq.rewards(j) = zero_cost ? 0.0 : best;
  }
  for (int i = 0; i < inst.n(); ++i) eq.earnings(i) = p * std::pow(c(i), p);
  return eq;
}

}  // namespace pmfair
