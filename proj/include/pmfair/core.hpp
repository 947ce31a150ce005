#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "pmfair/errors.hpp"

namespace pmfair {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Kind { Goods, Chores };

inline const char* to_string(Kind k) { return k == Kind::Goods ? "goods" : "chores"; }

inline constexpr int kMaxAgents = 64;
inline constexpr int kMaxItems = 64;

/// Additive fair-division instance: v_ij for goods or c_ij for chores.
class Instance {
 public:
  Instance() = default;

  Instance(Kind kind, Matrix values) : kind_(kind), values_(std::move(values)) { validate(); }

  Kind kind() const noexcept { return kind_; }
  int n() const noexcept { return static_cast<int>(values_.rows()); }
  int m() const noexcept { return static_cast<int>(values_.cols()); }
  const Matrix& values() const noexcept { return values_; }
  double operator()(int i, int j) const { return values_(i, j); }
  double row_sum(int i) const { return values_.row(i).sum(); }
  bool is_goods() const noexcept { return kind_ == Kind::Goods; }

 private:
  void validate() const {
    if (values_.rows() < 1 || values_.cols() < 1)
      throw InvalidInstance("instance must have at least one agent and one item");
    for (int i = 0; i < n(); ++i) {
      for (int j = 0; j < m(); ++j) {
        double v = values_(i, j);
        if (!std::isfinite(v) || v < 0.0)
          throw InvalidInstance("entry (" + std::to_string(i) + "," + std::to_string(j) +
                                    ") is negative or not finite",
                                i, j);
      }
      if (!(row_sum(i) > 0.0))
        throw InvalidInstance("row " + std::to_string(i) + " sums to zero", i, -1);
    }
  }

  Kind kind_ = Kind::Goods;
  Matrix values_;
};

/// Instance with every row rescaled to sum to one.
class NormalizedInstance {
 public:
  NormalizedInstance() = default;
  NormalizedInstance(Kind kind, Matrix values, Vector scale)
      : kind_(kind), values_(std::move(values)), scale_(std::move(scale)) {}

  Kind kind() const noexcept { return kind_; }
  int n() const noexcept { return static_cast<int>(values_.rows()); }
  int m() const noexcept { return static_cast<int>(values_.cols()); }
  const Matrix& values() const noexcept { return values_; }
  double operator()(int i, int j) const { return values_(i, j); }
  /// Original row sums v_i(M) or c_i(M).
  const Vector& scale() const noexcept { return scale_; }
  Instance as_instance() const { return Instance(kind_, values_); }

 private:
  Kind kind_ = Kind::Goods;
  Matrix values_;
  Vector scale_;
};

inline NormalizedInstance normalize(const Instance& inst) {
  Matrix v = inst.values();
  Vector scale(inst.n());
  for (int i = 0; i < inst.n(); ++i) {
    double s = v.row(i).sum();
    if (!(s > 0.0)) throw InvalidInstance("row " + std::to_string(i) + " sums to zero", i, -1);
    scale(i) = s;
    v.row(i) /= s;
  }
  return NormalizedInstance(inst.kind(), std::move(v), std::move(scale));
}

inline NormalizedInstance normalize(const NormalizedInstance& inst) { return normalize(inst.as_instance()); }

/// x_ij in [0,1], unit column sums.
struct FractionalAllocation {
  Matrix x;

  FractionalAllocation() = default;
  explicit FractionalAllocation(Matrix xx) : x(std::move(xx)) {}

  int n() const noexcept { return static_cast<int>(x.rows()); }
  int m() const noexcept { return static_cast<int>(x.cols()); }

  static FractionalAllocation uniform(int n, int m) {
    return FractionalAllocation(Matrix::Constant(n, m, 1.0 / n));
  }

  /// Largest violation of the box and column-sum constraints.
  double feasibility_violation() const {
    double worst = 0.0;
    for (int j = 0; j < m(); ++j) {
      double s = 0.0;
      for (int i = 0; i < n(); ++i) {
        double v = x(i, j);
        worst = std::max(worst, std::max(-v, v - 1.0));
        s += v;
      }
      worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
  }

  void validate(int n_agents, int m_items, double tol = 1e-9) const {
    if (n() != n_agents || m() != m_items)
      throw DimensionError("allocation is " + std::to_string(n()) + "x" + std::to_string(m()) +
                           ", instance is " + std::to_string(n_agents) + "x" + std::to_string(m_items));
    if (!(feasibility_violation() <= tol)) throw DomainError("allocation columns must be distributions");
  }
};

/// owner[j] is the agent holding item j.
struct IntegralAllocation {
  std::vector<int> owner;

  IntegralAllocation() = default;
  explicit IntegralAllocation(std::vector<int> o) : owner(std::move(o)) {}

  int m() const noexcept { return static_cast<int>(owner.size()); }

  std::vector<int> bundle(int agent) const {
    std::vector<int> b;
    for (int j = 0; j < m(); ++j)
      if (owner[j] == agent) b.push_back(j);
    return b;
  }

  Matrix to_matrix(int n) const {
    Matrix x = Matrix::Zero(n, m());
    for (int j = 0; j < m(); ++j) x(owner[j], j) = 1.0;
    return x;
  }

  FractionalAllocation to_fractional(int n) const { return FractionalAllocation(to_matrix(n)); }

  void validate(int n_agents, int m_items) const {
    if (m() != m_items) throw DimensionError("owner map has wrong length");
    for (int j = 0; j < m(); ++j)
      if (owner[j] < 0 || owner[j] >= n_agents)
        throw DimensionError("owner of item " + std::to_string(j) + " out of range");
  }

  bool operator==(const IntegralAllocation& o) const { return owner == o.owner; }
};

namespace detail {

inline void check_agent(int agent, int n) {
  if (agent < 0 || agent >= n) throw DimensionError("agent index " + std::to_string(agent) + " out of range");
}

}  // namespace detail

/// Value of agent `agent` for the bundle held by `holder` (defaults to itself).
inline double bundle_value(const Matrix& values, const Matrix& x, int agent, int holder) {
  detail::check_agent(agent, static_cast<int>(values.rows()));
  detail::check_agent(holder, static_cast<int>(x.rows()));
  if (values.cols() != x.cols()) throw DimensionError("allocation and instance disagree on item count");
  return values.row(agent).dot(x.row(holder));
}

inline double bundle_value(const Matrix& values, const IntegralAllocation& a, int agent, int holder) {
  detail::check_agent(agent, static_cast<int>(values.rows()));
  detail::check_agent(holder, static_cast<int>(values.rows()));
  if (values.cols() != a.m()) throw DimensionError("allocation and instance disagree on item count");
  double s = 0.0;
  for (int j = 0; j < a.m(); ++j)
    if (a.owner[j] == holder) s += values(agent, j);
  return s;
}

template <class Inst>
double bundle_value(const Inst& inst, const FractionalAllocation& x, int agent) {
  return bundle_value(inst.values(), x.x, agent, agent);
}

template <class Inst>
double bundle_value(const Inst& inst, const IntegralAllocation& a, int agent) {
  return bundle_value(inst.values(), a, agent, agent);
}

template <class Inst>
double bundle_value(const Inst& inst, const FractionalAllocation& x, int agent, int holder) {
  return bundle_value(inst.values(), x.x, agent, holder);
}

template <class Inst>
double bundle_value(const Inst& inst, const IntegralAllocation& a, int agent, int holder) {
  return bundle_value(inst.values(), a, agent, holder);
}

/// Vector of every agent's value for their own bundle.
template <class Inst>
Vector bundle_values(const Inst& inst, const FractionalAllocation& x) {
  Vector u(inst.n());
  for (int i = 0; i < inst.n(); ++i) u(i) = bundle_value(inst, x, i);
  return u;
}

template <class Inst>
Vector bundle_values(const Inst& inst, const IntegralAllocation& a) {
  Vector u(inst.n());
  for (int i = 0; i < inst.n(); ++i) u(i) = bundle_value(inst, a, i);
  return u;
}

inline double prop_share(const Instance& inst, int agent) {
  detail::check_agent(agent, inst.n());
  return inst.row_sum(agent) / inst.n();
}

/// Instance after dropping all-zero goods columns and locating zero-cost chore entries.
struct Preprocessed {
  Instance reduced;
  std::vector<int> kept_items;     // reduced column -> original column
  std::vector<int> dropped_items;  // all-zero goods columns
  std::vector<std::pair<int, int>> zero_cost_entries;  // chores (i, j) with c_ij = 0
  std::vector<std::string> warnings;
};

inline Preprocessed preprocess(const Instance& inst) {
  Preprocessed out;
  const Matrix& v = inst.values();
  if (inst.is_goods()) {
    for (int j = 0; j < inst.m(); ++j) {
      if (v.col(j).maxCoeff() > 0.0)
        out.kept_items.push_back(j);
      else {
        out.dropped_items.push_back(j);
        out.warnings.push_back("item " + std::to_string(j) + " has zero value for every agent; dropped");
      }
    }
    if (out.kept_items.empty()) throw InvalidInstance("every item has zero value");
    Matrix r(inst.n(), static_cast<int>(out.kept_items.size()));
    for (std::size_t c = 0; c < out.kept_items.size(); ++c) r.col(static_cast<int>(c)) = v.col(out.kept_items[c]);
    out.reduced = Instance(inst.kind(), std::move(r));
  } else {
    for (int j = 0; j < inst.m(); ++j) {
      out.kept_items.push_back(j);
      for (int i = 0; i < inst.n(); ++i)
        if (v(i, j) == 0.0) out.zero_cost_entries.emplace_back(i, j);
    }
    out.reduced = inst;
  }
  return out;
}

}  // namespace pmfair
