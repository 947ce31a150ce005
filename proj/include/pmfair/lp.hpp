#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "pmfair/core.hpp"

namespace pmfair {

enum class Relation { LessEq, Equal, GreaterEq };

/// maximize c^T x  subject to  A x (rel) b,  x >= 0.
struct LinearProgram {
  Vector c;
  Matrix A;
  std::vector<Relation> rel;
  Vector b;

  LinearProgram(int rows, int cols)
      : c(Vector::Zero(cols)), A(Matrix::Zero(rows, cols)), rel(rows, Relation::LessEq), b(Vector::Zero(rows)) {}
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Vector x;
  double objective = 0.0;
};

namespace detail {

/// Dense tableau with Bland's rule. Last column is the right-hand side, last row the objective.
class Tableau {
 public:
  Tableau(Matrix t, std::vector<int> basis) : t_(std::move(t)), basis_(std::move(basis)) {}

  /// Pivots until no column in [0, ncols) has positive reduced cost. Returns false when unbounded.
  bool optimize(int ncols, double eps) {
    const int rows = static_cast<int>(t_.rows()) - 1;
    const int rhs = static_cast<int>(t_.cols()) - 1;
    for (int iter = 0; iter < 100000; ++iter) {
      int enter = -1;
      for (int j = 0; j < ncols; ++j) {
        if (t_(rows, j) > eps) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      int leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int r = 0; r < rows; ++r) {
        double a = t_(r, enter);
        if (a > eps) {
          double ratio = t_(r, rhs) / a;
          if (ratio < best - eps || (std::abs(ratio - best) <= eps && leave >= 0 && basis_[r] < basis_[leave])) {
            best = ratio;
            leave = r;
          }
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
    throw NumericalError("simplex iteration limit reached");
  }

  void pivot(int r, int c) {
    t_.row(r) /= t_(r, c);
    for (int k = 0; k < t_.rows(); ++k) {
      if (k == r) continue;
      double f = t_(k, c);
      if (f != 0.0) t_.row(k) -= f * t_.row(r);
    }
    basis_[r] = c;
  }

  Matrix& table() { return t_; }
  std::vector<int>& basis() { return basis_; }

 private:
  Matrix t_;
  std::vector<int> basis_;
};

}  // namespace detail

/// Two-phase simplex method.
inline LpResult solve_lp(const LinearProgram& lp, double eps = 1e-11) {
  const int rows = static_cast<int>(lp.A.rows());
  const int nv = static_cast<int>(lp.A.cols());
  if (lp.c.size() != nv || lp.b.size() != rows || static_cast<int>(lp.rel.size()) != rows)
    throw DimensionError("linear program dimensions disagree");

  Matrix A = lp.A;
  Vector b = lp.b;
  std::vector<Relation> rel = lp.rel;
  for (int r = 0; r < rows; ++r) {
    if (b(r) < 0) {
      A.row(r) *= -1.0;
      b(r) = -b(r);
      if (rel[r] == Relation::LessEq)
        rel[r] = Relation::GreaterEq;
      else if (rel[r] == Relation::GreaterEq)
        rel[r] = Relation::LessEq;
    }
  }
  int n_slack = 0, n_art = 0;
  for (auto r : rel) {
    if (r != Relation::Equal) ++n_slack;
    if (r != Relation::LessEq) ++n_art;
  }
  const int total = nv + n_slack + n_art;
  const int art0 = nv + n_slack;
  Matrix t = Matrix::Zero(rows + 1, total + 1);
  std::vector<int> basis(rows);
  int s = nv, a = art0;
  for (int r = 0; r < rows; ++r) {
    t.row(r).head(nv) = A.row(r);
    t(r, total) = b(r);
    if (rel[r] == Relation::LessEq) {
      t(r, s) = 1.0;
      basis[r] = s++;
    } else if (rel[r] == Relation::GreaterEq) {
      t(r, s++) = -1.0;
      t(r, a) = 1.0;
      basis[r] = a++;
    } else {
      t(r, a) = 1.0;
      basis[r] = a++;
    }
  }

  detail::Tableau tab(std::move(t), std::move(basis));
  Matrix& T = tab.table();
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());

  if (n_art > 0) {
    // Phase one: maximize -sum(artificials).
    for (int r = 0; r < rows; ++r)
      if (tab.basis()[r] >= art0) T.row(rows) += T.row(r);
    for (int j = art0; j < total; ++j) T(rows, j) = 0.0;
    tab.optimize(total, eps);
    if (T(rows, total) > 1e-9 * scale) return {LpStatus::Infeasible, Vector(), 0.0};
    // Drive remaining artificials out of the basis.
    for (int r = 0; r < rows; ++r) {
      if (tab.basis()[r] < art0) continue;
      for (int j = 0; j < art0; ++j) {
        if (std::abs(T(r, j)) > 1e-9) {
          tab.pivot(r, j);
          break;
        }
      }
    }
    for (int r = 0; r <= rows; ++r)
      for (int j = art0; j < total; ++j) T(r, j) = 0.0;
  }

  // Phase two objective row holds reduced costs c_j - z_j.
  T.row(rows).setZero();
  T.row(rows).head(nv) = lp.c.transpose();
  for (int r = 0; r < rows; ++r) {
    int bv = tab.basis()[r];
    if (bv < nv && lp.c(bv) != 0.0) T.row(rows) -= lp.c(bv) * T.row(r);
  }
  if (!tab.optimize(art0, eps)) return {LpStatus::Unbounded, Vector(), std::numeric_limits<double>::infinity()};

  LpResult res;
  res.status = LpStatus::Optimal;
  res.x = Vector::Zero(nv);
  for (int r = 0; r < rows; ++r) {
    int bv = tab.basis()[r];
    if (bv < nv) res.x(bv) = std::max(0.0, T(r, total));
  }
  res.objective = lp.c.dot(res.x);
  return res;
}

}  // namespace pmfair
