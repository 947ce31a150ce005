#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pmfair/pmfair.hpp"

using namespace pmfair;
using io::Json;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitError = 2;

double parse_p(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ParamError("p must be a real number or +-inf, got '" + s + "'");
  }
  if (used != s.size() || std::isnan(v)) throw ParamError("p must be a real number or +-inf, got '" + s + "'");
  return v;
}

void emit(const Json& j, const std::string& out) {
  if (out.empty()) std::cout << j.dump(2) << "\n";
  else io::write_json_file(out, j);
}

Json audit_fractional(const Instance& inst, const FractionalAllocation& x, double p) {
  const double beta = inst.is_goods() ? 1.0 : prop_bound(inst.n(), p);
  return Json{{"prop", io::to_json(check_prop(inst, x, beta))},
              {"ef", io::to_json(check_ef(inst, x, 1.0))},
              {"fpo", io::to_json(check_fpo(inst, x))}};
}

Json audit_integral(const Instance& inst, const IntegralAllocation& a, double beta) {
  return Json{{"prop1", io::to_json(check_propk(inst, a, beta, 1))},
              {"ef1", io::to_json(check_efk(inst, a, 1.0, 1))},
              {"fpo", io::to_json(check_fpo(inst, a))}};
}

int run_solve(const std::string& instance, const std::string& p_text, double tol, int max_iter, const std::string& out) {
  Instance inst = io::load_instance(instance);
  const double p = parse_p(p_text);
  SolverConfig cfg;
  cfg.kkt_tolerance = tol;
  cfg.max_iterations = max_iter;
  SolveResult res = inst.is_goods() ? solve_goods(inst, p, cfg) : solve_chores(inst, p, cfg);
  Json j{{"instance", io::to_json(inst)},
         {"p", io::real(PMeanParam(p).p)},
         {"objective", io::real(normalized_p_mean(inst, res.allocation, p))},
         {"allocation", io::to_json(res.allocation)},
         {"certificate", io::to_json(res.certificate)},
         {"warnings", res.warnings}};
  if (inst.is_goods()) {
    GoodsEquilibrium eq = extract_goods_equilibrium(inst, res.allocation, p);
    j["equilibrium"] = io::to_json(eq);
    j["market"] = io::to_json(check_goods_equilibrium(inst, eq));
  } else {
    ChoresEquilibrium eq = extract_chores_equilibrium(inst, res.allocation, p);
    j["equilibrium"] = io::to_json(eq);
    j["market"] = io::to_json(check_chores_equilibrium(inst, eq));
  }
  j["audit"] = audit_fractional(inst, res.allocation, p);
  emit(j, out);
  return 0;
}

int run_round(const std::string& path, const std::string& out) {
  Json in = io::read_json_file(path);
  if (!in.contains("instance") || !in.contains("equilibrium")) throw IoError("'" + path + "' lacks 'instance' or 'equilibrium'");
  Instance inst = io::instance_from_json(in["instance"]);
  const double p = in.contains("p") ? io::read_real(in["p"]) : (inst.is_goods() ? 0.0 : 1.0);
  RoundingOutcome r;
  ContractReport c;
  double beta = 1.0;
  if (inst.is_goods()) {
    r = round_goods(io::goods_equilibrium_from_json(in["equilibrium"]), inst);
    c = audit_goods_rounding(inst, r);
  } else {
    r = round_chores(io::chores_equilibrium_from_json(in["equilibrium"]), inst, p);
    c = audit_chores_rounding(inst, r);
    beta = prop_bound(inst.n(), p);
  }
  Json j{{"instance", io::to_json(inst)}, {"p", io::real(p)}, {"rounding", io::to_json(r)}, {"contract", io::to_json(c)}};
  j["audit"] = audit_integral(inst, r.allocation, beta);
  emit(j, out);
  return c.holds ? 0 : kExitFail;
}

int run_enumerate(const std::string& instance, const std::string& p_text, bool all, const std::string& out) {
  Instance inst = io::load_instance(instance);
  const double p = parse_p(p_text);
  OptimaSet os = enumerate_optima(inst, p);
  if (!all && os.optima.size() > 1) os.optima.resize(1);
  Json j = io::to_json(os);
  Json audits = Json::array();
  for (const auto& a : os.optima) audits.push_back(audit_integral(inst, a, 1.0));
  j["audit"] = audits;
  emit(j, out);
  return 0;
}

int run_oracle(const std::string& instance, const std::string& p_text, int resolution, const std::string& out) {
  Instance inst = io::load_instance(instance);
  const double p = parse_p(p_text);
  GridResult g = grid_oracle_divisible(inst, p, resolution);
  Json j = io::to_json(g);
  j["audit"] = Json{{"prop", io::to_json(check_prop(inst, g.allocation, 1.0))}, {"ef", io::to_json(check_ef(inst, g.allocation, 1.0))}};
  emit(j, out);
  return 0;
}

int run_reproduce(bool all, const std::string& id, std::uint64_t seed, double scale, const std::string& csv) {
  std::vector<std::string> ids;
  if (all) {
    for (const auto& e : experiment_catalog()) ids.emplace_back(e.id);
  } else {
    if (id.empty()) throw ParamError("pass --all or --experiment <id>");
    ids.push_back(id);
  }
  bool ok = true;
  std::string rows;
  for (const auto& e : ids) {
    ExperimentReport r = run_experiment(e, ExperimentOptions{seed, scale});
    ok = ok && r.passed();
    std::printf("%s %-26s %6.2fs\n", r.passed() ? "PASS" : "FAIL", r.id.c_str(), r.seconds);
    for (const auto& row : r.rows)
      std::printf("  %s  %-70s measured=%-12.6g bound=%-12.6g tol=%g\n", row.verdict ? "ok  " : "FAIL", row.claim.c_str(), row.measured,
                  row.bound, row.tolerance);
    rows += io::csv_rows(r);
  }
  if (!csv.empty()) io::write_text_file((std::filesystem::path(csv) / "results.csv").string(), std::string(io::kCsvHeader) + "\n" + rows);
  return ok ? 0 : kExitFail;
}

int run_generate(const std::string& name, const std::map<std::string, double>& params, const std::string& out) {
  NamedInstanceSpec spec{named_from_string(name), params};
  emit(io::to_json(generate(spec)), out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Normalized p-mean fair division toolkit"};
  app.require_subcommand(1);

  std::string instance, p_text, out, equilibrium, experiment, csv, name;
  double tol = 1e-8, scale = 1.0;
  int max_iter = 200000, resolution = manifest().oracle_resolution;
  bool all_optima = false, all = false;
  std::uint64_t seed = 42;
  const std::string p_help = "welfare exponent; accepts inf and -inf, |p| > 700 is treated as +-inf";

  auto* solve = app.add_subcommand("solve", "maximize (goods, p <= 0) or minimize (chores, p >= 1) the normalized p-mean");
  solve->add_option("--instance", instance, "instance JSON")->required()->check(CLI::ExistingFile);
  solve->add_option("--p", p_text, p_help)->required();
  solve->add_option("--tol", tol, "KKT residual tolerance");
  solve->add_option("--max-iter", max_iter, "iteration limit");
  solve->add_option("--out", out, "output JSON (stdout if omitted)");

  auto* round = app.add_subcommand("round", "round a solve result to an integral allocation");
  round->add_option("--equilibrium", equilibrium, "JSON written by solve")->required()->check(CLI::ExistingFile);
  round->add_option("--out", out, "output JSON (stdout if omitted)");

  auto* enumerate = app.add_subcommand("enumerate", "exhaustively list optimal integral allocations");
  enumerate->add_option("--instance", instance, "instance JSON")->required()->check(CLI::ExistingFile);
  enumerate->add_option("--p", p_text, p_help)->required();
  enumerate->add_flag("--all-optima", all_optima, "report the full tie set");
  enumerate->add_option("--out", out, "output JSON (stdout if omitted)");

  auto* oracle = app.add_subcommand("oracle", "grid search over divisible allocations for any p");
  oracle->add_option("--instance", instance, "instance JSON")->required()->check(CLI::ExistingFile);
  oracle->add_option("--p", p_text, p_help)->required();
  oracle->add_option("--resolution", resolution, "grid steps per item")->check(CLI::PositiveNumber);
  oracle->add_option("--out", out, "output JSON (stdout if omitted)");

  auto* reproduce = app.add_subcommand("reproduce", "run experiments and print pass/fail verdicts");
  auto* all_opt = reproduce->add_flag("--all", all, "run every experiment");
  reproduce->add_option("--experiment", experiment, "experiment id")->excludes(all_opt);
  reproduce->add_option("--seed", seed, "random seed");
  reproduce->add_option("--scale", scale, "multiplier on sample counts")->check(CLI::PositiveNumber);
  reproduce->add_option("--csv", csv, "directory receiving results.csv");

  auto* gen = app.add_subcommand("generate", "write a named construction as instance JSON");
  std::string names;
  for (const auto& e : named_catalog()) names += std::string(names.empty() ? "" : ", ") + e.id;
  gen->add_option("--name", name, "one of: " + names)->required();
  gen->add_option("--out", out, "output JSON (stdout if omitted)");
  const std::vector<std::string> keys = {"beta", "n", "p", "m", "v11", "v21", "eps", "delta", "c11", "c21"};
  std::map<std::string, double> values;
  std::map<std::string, CLI::Option*> given;
  for (const auto& k : keys) given[k] = gen->add_option("--" + k, values[k], "construction parameter");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) return run_solve(instance, p_text, tol, max_iter, out);
    if (*round) return run_round(equilibrium, out);
    if (*enumerate) return run_enumerate(instance, p_text, all_optima, out);
    if (*oracle) return run_oracle(instance, p_text, resolution, out);
    if (*reproduce) return run_reproduce(all, experiment, seed, scale, csv);
    if (*gen) {
      std::map<std::string, double> params;
      for (const auto& k : keys)
        if (given[k]->count()) params[k] = values[k];
      return run_generate(name, params, out);
    }
  } catch (const InvalidInstance& e) {
    std::cerr << "error: invalid instance: " << e.what();
    if (e.row() >= 0) std::cerr << " (row " << e.row() << (e.col() >= 0 ? ", col " + std::to_string(e.col()) : "") << ")";
    std::cerr << "\n";
    return kExitError;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << " (best residual " << e.best().certificate.residual() << ")\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
