#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmfair/core.hpp"
#include "pmfair/exact.hpp"
#include "pmfair/fairness.hpp"
#include "pmfair/market.hpp"
#include "pmfair/paperlab.hpp"
#include "pmfair/rounding.hpp"
#include "pmfair/solver.hpp"

namespace pmfair {

using Json = nlohmann::ordered_json;

/// File could not be read, written or parsed.
class IoError : public Error {
  using Error::Error;
};

namespace io {

using pmfair::Json;

// ---------------------------------------------------------------------------------------------
// Numbers, vectors, matrices

/// Non-finite reals are written as the strings "inf", "-inf" and "nan".
inline Json real(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline double read_real(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw IoError("expected a number, got " + j.dump());
}

inline Json vector(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(real(v(i)));
  return a;
}

inline Vector read_vector(const Json& j) {
  if (!j.is_array()) throw IoError("expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = read_real(j[i]);
  return v;
}

inline Json matrix(const Matrix& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vector(m.row(i).transpose()));
  return a;
}

inline Matrix read_matrix(const Json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw IoError("expected a non-empty array of rows");
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != j[0].size()) throw IoError("row " + std::to_string(i) + " has the wrong length");
    for (std::size_t c = 0; c < j[i].size(); ++c)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = read_real(j[i][c]);
  }
  return m;
}

// ---------------------------------------------------------------------------------------------
// Instances

inline Json to_json(const Instance& inst) {
  return Json{{"kind", to_string(inst.kind())}, {"values", matrix(inst.values())}};
}

/// Validates the document and reports the row and column of the first offending entry.
inline Instance instance_from_json(const Json& j) {
  if (!j.is_object()) throw InvalidInstance("instance must be a JSON object");
  if (!j.contains("kind") || !j["kind"].is_string()) throw InvalidInstance("instance requires a string field 'kind'");
  const auto kind_s = j["kind"].get<std::string>();
  if (kind_s != "goods" && kind_s != "chores") throw InvalidInstance("kind must be 'goods' or 'chores'");
  const Kind kind = kind_s == "goods" ? Kind::Goods : Kind::Chores;
  if (!j.contains("values") || !j["values"].is_array() || j["values"].empty())
    throw InvalidInstance("instance requires a non-empty array field 'values'");
  const Json& rows = j["values"];
  const int n = static_cast<int>(rows.size());
  if (n > kMaxAgents) throw InvalidInstance("instance has " + std::to_string(n) + " agents, limit is " + std::to_string(kMaxAgents), kMaxAgents, -1);
  if (!rows[0].is_array() || rows[0].empty()) throw InvalidInstance("row 0 must be a non-empty array", 0, -1);
  const int m = static_cast<int>(rows[0].size());
  if (m > kMaxItems) throw InvalidInstance("instance has " + std::to_string(m) + " items, limit is " + std::to_string(kMaxItems), 0, kMaxItems);
  Matrix v(n, m);
  for (int i = 0; i < n; ++i) {
    if (!rows[i].is_array() || static_cast<int>(rows[i].size()) != m)
      throw InvalidInstance("row " + std::to_string(i) + " does not have " + std::to_string(m) + " entries", i, -1);
    for (int c = 0; c < m; ++c) {
      if (!rows[i][c].is_number())
        throw InvalidInstance("entry (" + std::to_string(i) + "," + std::to_string(c) + ") is not a number", i, c);
      v(i, c) = rows[i][c].get<double>();
    }
  }
  return Instance(kind, v);
}

// ---------------------------------------------------------------------------------------------
// Allocations and equilibria

inline Json to_json(const FractionalAllocation& x) { return matrix(x.x); }

inline FractionalAllocation fractional_from_json(const Json& j) { return FractionalAllocation(read_matrix(j)); }

inline Json to_json(const IntegralAllocation& a) { return Json(a.owner); }

inline IntegralAllocation integral_from_json(const Json& j) { return IntegralAllocation(j.get<std::vector<int>>()); }

inline Json to_json(const GoodsEquilibrium& eq) {
  return Json{{"allocation", to_json(eq.allocation)}, {"prices", vector(eq.prices)}, {"budgets", vector(eq.budgets)}};
}

inline Json to_json(const ChoresEquilibrium& eq) {
  return Json{{"allocation", to_json(eq.allocation)}, {"rewards", vector(eq.rewards)}, {"earnings", vector(eq.earnings)}};
}

inline GoodsEquilibrium goods_equilibrium_from_json(const Json& j) {
  return GoodsEquilibrium{fractional_from_json(j.at("allocation")), read_vector(j.at("prices")), read_vector(j.at("budgets"))};
}

inline ChoresEquilibrium chores_equilibrium_from_json(const Json& j) {
  return ChoresEquilibrium{fractional_from_json(j.at("allocation")), read_vector(j.at("rewards")), read_vector(j.at("earnings"))};
}

inline Json to_json(const KktCertificate& c) {
  return Json{{"stationarity_residual", real(c.stationarity_residual)},
              {"complementarity_residual", real(c.complementarity_residual)},
              {"residual", real(c.residual())},
              {"iterations", c.iterations},
              {"objective", real(c.objective)},
              {"duals_items", vector(c.duals_items)}};
}

inline Json to_json(const MarketVerdict& v) {
  Json j{{"holds", v.holds},
         {"clearing_residual", real(v.clearing_residual)},
         {"ratio_residual", real(v.ratio_residual)},
         {"budget_residual", real(v.budget_residual)},
         {"witness", nullptr}};
  if (v.witness)
    j["witness"] = Json{{"condition", v.witness->condition}, {"agent", v.witness->agent}, {"item", v.witness->item}, {"residual", real(v.witness->residual)}};
  return j;
}

// ---------------------------------------------------------------------------------------------
// Reports

inline Json to_json(const FairnessReport& r) {
  Json j{{"notion", to_string(r.notion)},
         {"params", Json{{"beta", real(r.beta)}, {"k", r.k}}},
         {"holds", r.holds},
         {"margin", real(r.margin)},
         {"witness", nullptr}};
  if (r.witness) j["witness"] = Json{{"agent", r.witness->i}, {"other", r.witness->j}, {"items", r.witness->items}, {"slack", real(r.witness->slack)}};
  if (r.dominating) j["dominating"] = matrix(*r.dominating);
  return j;
}

inline Json to_json(const RoundingOutcome& r) {
  Json clauses = Json::array();
  for (std::size_t i = 0; i < r.clause.size(); ++i) {
    const double d = r.adjusted(static_cast<Eigen::Index>(i)) - r.original(static_cast<Eigen::Index>(i));
    clauses.push_back(Json{{"agent", i}, {"deviation", real(d)}, {"clause", r.clause[i]}, {"witness", r.witness[i]}});
  }
  return Json{{"allocation", to_json(r.allocation)},
              {"prices", vector(r.prices)},
              {"original", vector(r.original)},
              {"adjusted", vector(r.adjusted)},
              {"tolerance", real(r.tolerance)},
              {"clauses", clauses}};
}

inline Json to_json(const ContractReport& c) {
  return Json{{"holds", c.holds},
              {"equilibrium", c.equilibrium},
              {"conservation", c.conservation},
              {"deviation_bound", c.deviation_bound},
              {"witnesses", c.witnesses},
              {"failure", c.failure}};
}

inline Json to_json(const OptimaSet& o) {
  Json a = Json::array();
  for (const auto& x : o.optima) a.push_back(to_json(x));
  return Json{{"objective", real(o.objective)}, {"tie_tolerance", real(o.tie_tolerance)}, {"count", o.optima.size()}, {"optima", a}};
}

inline Json to_json(const GridResult& g) {
  return Json{{"allocation", to_json(g.allocation)}, {"objective", real(g.objective)}, {"resolution", g.resolution}, {"points", g.points}};
}

inline Json to_json(const ExperimentReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows)
    rows.push_back(Json{{"claim", row.claim},
                        {"measured", real(row.measured)},
                        {"bound", real(row.bound)},
                        {"tolerance", real(row.tolerance)},
                        {"verdict", row.verdict}});
  return Json{{"experiment", r.id}, {"passed", r.passed()}, {"seconds", r.seconds}, {"rows", rows}};
}

// ---------------------------------------------------------------------------------------------
// CSV and files

inline std::string csv_field(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string csv_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline const char* kCsvHeader = "experiment,claim,measured,bound,tolerance,verdict";

inline std::string csv_rows(const ExperimentReport& r) {
  std::string out;
  for (const auto& row : r.rows) {
    out += row.experiment + "," + csv_field(row.claim) + "," + csv_number(row.measured) + "," + csv_number(row.bound) + "," +
           csv_number(row.tolerance) + "," + (row.verdict ? "pass" : "fail") + "\n";
  }
  return out;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline void write_json_file(const std::string& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

inline Instance load_instance(const std::string& path) { return instance_from_json(read_json_file(path)); }

inline void save_instance(const std::string& path, const Instance& inst) { write_json_file(path, to_json(inst)); }

}  // namespace io
}  // namespace pmfair
