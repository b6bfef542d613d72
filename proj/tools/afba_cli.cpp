// Command-line front end: validate parameter choices, run a solver
// configuration from a JSON problem file, or compare two configurations.
//
// Exit codes: 0 converged / valid, 1 iteration budget exhausted,
// 2 invalid parameters, 3 malformed input, 4 numeric failure.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "afba/diagnostics.hpp"
#include "afba/primal_dual.hpp"
#include "afba/variants.hpp"

using nlohmann::json;

namespace {

constexpr int kExitConverged = 0;
constexpr int kExitBudget = 1;
constexpr int kExitInvalidParams = 2;
constexpr int kExitBadInput = 3;
constexpr int kExitNumericFailure = 4;

struct BadInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_keys(const json& obj, const std::string& where,
                  std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw BadInput(where + ": expected an object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (item.key() == k) ok = true;
    if (!ok) throw BadInput(where + ": unknown key \"" + item.key() + "\"");
  }
}

afba::Vec read_vec(const json& j, const std::string& where) {
  if (!j.is_array()) throw BadInput(where + ": expected an array of numbers");
  afba::Vec v;
  for (const auto& e : j) {
    if (!e.is_number()) throw BadInput(where + ": expected numbers");
    v.push_back(e.get<double>());
  }
  return v;
}

afba::DenseMatrix read_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty())
    throw BadInput(where + ": expected a non-empty array of rows");
  const std::size_t rows = j.size();
  afba::Vec first = read_vec(j[0], where);
  afba::DenseMatrix m(rows, first.size());
  for (std::size_t i = 0; i < rows; ++i) {
    afba::Vec row = read_vec(j[i], where);
    if (row.size() != m.cols) throw BadInput(where + ": ragged rows");
    for (std::size_t k = 0; k < m.cols; ++k) m(i, k) = row[k];
  }
  return m;
}

afba::ProxAtom read_atom(const json& j, std::size_t dim,
                         const std::string& where) {
  require_keys(j, where,
               {"kind", "weight", "q", "lin", "lo", "hi", "point"});
  if (!j.contains("kind")) throw BadInput(where + ": missing \"kind\"");
  const afba::ProxKind kind =
      afba::prox_kind_from_tag(j.at("kind").get<std::string>());
  switch (kind) {
    case afba::ProxKind::kZero:
      return afba::make_zero_atom(dim);
    case afba::ProxKind::kL1:
      return afba::make_l1_atom(dim, j.value("weight", 1.0));
    case afba::ProxKind::kSqL2:
      return afba::make_sq_l2_atom(dim, j.value("weight", 1.0));
    case afba::ProxKind::kQuad: {
      afba::DenseMatrix q = read_matrix(j.at("q"), where + ".q");
      afba::Vec lin = j.contains("lin") ? read_vec(j.at("lin"), where + ".lin")
                                        : afba::Vec(dim, 0.0);
      if (q.rows != dim || lin.size() != dim)
        throw BadInput(where + ": quad atom dimension mismatch");
      return afba::make_quad_atom(std::move(q), std::move(lin));
    }
    case afba::ProxKind::kBox: {
      afba::Vec lo = read_vec(j.at("lo"), where + ".lo");
      afba::Vec hi = read_vec(j.at("hi"), where + ".hi");
      if (lo.size() != dim) throw BadInput(where + ": box bound size mismatch");
      return afba::make_box_atom(std::move(lo), std::move(hi));
    }
    case afba::ProxKind::kPoint: {
      afba::Vec b = read_vec(j.at("point"), where + ".point");
      if (b.size() != dim) throw BadInput(where + ": point size mismatch");
      return afba::make_point_atom(std::move(b));
    }
    case afba::ProxKind::kNonneg:
      return afba::make_nonneg_atom(dim);
    case afba::ProxKind::kL2:
      return afba::make_l2_atom(dim, j.value("weight", 1.0));
  }
  throw BadInput(where + ": unsupported atom kind");
}

afba::CocoMap read_coco(const json& j, std::size_t dim,
                        const std::string& where) {
  require_keys(j, where, {"kind", "a", "b", "mu"});
  if (!j.contains("kind")) throw BadInput(where + ": missing \"kind\"");
  const afba::CocoKind kind =
      afba::coco_kind_from_tag(j.at("kind").get<std::string>());
  switch (kind) {
    case afba::CocoKind::kZero:
      return afba::make_zero_coco(dim);
    case afba::CocoKind::kAffine: {
      afba::DenseMatrix a = read_matrix(j.at("a"), where + ".a");
      afba::Vec b = j.contains("b") ? read_vec(j.at("b"), where + ".b")
                                    : afba::Vec(a.rows, 0.0);
      if (a.cols != dim) throw BadInput(where + ": affine map dim mismatch");
      return afba::make_affine_coco(std::move(a), std::move(b));
    }
    case afba::CocoKind::kScale:
      return afba::make_scale_coco(dim, j.value("mu", 1.0));
  }
  throw BadInput(where + ": unsupported smooth map kind");
}

struct ProblemFile {
  afba::SaddleProblem prob;
  std::string variant_name;
  afba::PDParams params;
  double lambda = 1.0;
  afba::RunOptions opts;
  afba::Vec x0, y0;
  std::optional<afba::Vec> x_star, y_star;
};

ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw BadInput("cannot open " + path);
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw BadInput(std::string("json parse error: ") + e.what());
  }
  require_keys(root, "problem",
               {"space", "atoms", "operator", "variant", "run", "oracle"});
  for (const char* key : {"space", "atoms", "operator", "variant", "run"})
    if (!root.contains(key))
      throw BadInput(std::string("problem: missing \"") + key + "\"");

  ProblemFile pf;
  const json& space = root.at("space");
  require_keys(space, "space", {"nx", "ny"});
  const std::size_t nx = space.at("nx").get<std::size_t>();
  const std::size_t ny = space.at("ny").get<std::size_t>();
  if (nx == 0 || ny == 0) throw BadInput("space: dimensions must be positive");

  const json& atoms = root.at("atoms");
  require_keys(atoms, "atoms", {"f", "g", "smooth_primal", "smooth_dual"});
  pf.prob.f = read_atom(atoms.at("f"), nx, "atoms.f");
  pf.prob.g = read_atom(atoms.at("g"), ny, "atoms.g");
  pf.prob.smooth_primal =
      atoms.contains("smooth_primal")
          ? read_coco(atoms.at("smooth_primal"), nx, "atoms.smooth_primal")
          : afba::make_zero_coco(nx);
  pf.prob.smooth_dual =
      atoms.contains("smooth_dual")
          ? read_coco(atoms.at("smooth_dual"), ny, "atoms.smooth_dual")
          : afba::make_zero_coco(ny);

  const json& op = root.at("operator");
  require_keys(op, "operator", {"type", "rows", "alpha"});
  const std::string type = op.value("type", "dense");
  if (type == "dense") {
    afba::DenseMatrix m = read_matrix(op.at("rows"), "operator.rows");
    if (m.rows != ny || m.cols != nx)
      throw BadInput("operator: shape must be ny x nx");
    pf.prob.l = afba::dense_op(std::move(m));
  } else if (type == "identity") {
    if (nx != ny) throw BadInput("operator: identity requires nx == ny");
    pf.prob.l = afba::identity_op(nx);
  } else if (type == "scaling") {
    if (nx != ny) throw BadInput("operator: scaling requires nx == ny");
    pf.prob.l = afba::scaling_op(nx, op.value("alpha", 1.0));
  } else {
    throw BadInput("operator: unknown type \"" + type + "\"");
  }

  const json& var = root.at("variant");
  require_keys(var, "variant",
               {"name", "gamma1", "gamma2", "theta", "mu", "lambda"});
  pf.variant_name = var.value("name", "");
  pf.params.gamma1 = var.value("gamma1", 1.0);
  pf.params.gamma2 = var.value("gamma2", 1.0);
  pf.lambda = var.value("lambda", 1.0);
  if (pf.variant_name == "condat_vu") {
    pf.params.theta = 2.0;
    pf.params.mu = 1.0;
  } else if (pf.variant_name == "bac") {
    pf.params.theta = 0.0;
    pf.params.mu = 0.5;
  } else if (pf.variant_name == "dst") {
    pf.params.theta = 1.0;
    pf.params.mu = 1.0;
  } else if (pf.variant_name == "mu0") {
    pf.params.theta = var.value("theta", 1.0);
    pf.params.mu = 0.0;
  } else if (pf.variant_name == "custom") {
    pf.params.theta = var.value("theta", 2.0);
    pf.params.mu = var.value("mu", 1.0);
  } else {
    throw BadInput("variant: unknown name \"" + pf.variant_name + "\"");
  }

  const json& run = root.at("run");
  require_keys(run, "run",
               {"max_iters", "tol_rel", "tol_abs", "x0", "y0"});
  pf.opts.max_iters = run.value("max_iters", std::size_t{10000});
  pf.opts.tol_rel = run.value("tol_rel", 1e-8);
  pf.opts.tol_abs = run.value("tol_abs", 1e-10);
  pf.x0 = run.contains("x0") ? read_vec(run.at("x0"), "run.x0")
                             : afba::Vec(nx, 0.0);
  pf.y0 = run.contains("y0") ? read_vec(run.at("y0"), "run.y0")
                             : afba::Vec(ny, 0.0);
  if (pf.x0.size() != nx || pf.y0.size() != ny)
    throw BadInput("run: initial point size mismatch");

  if (root.contains("oracle")) {
    const json& oracle = root.at("oracle");
    require_keys(oracle, "oracle", {"x_star", "y_star"});
    if (oracle.contains("x_star")) {
      pf.x_star = read_vec(oracle.at("x_star"), "oracle.x_star");
      if (pf.x_star->size() != nx) throw BadInput("oracle: x_star size mismatch");
    }
    if (oracle.contains("y_star")) {
      pf.y_star = read_vec(oracle.at("y_star"), "oracle.y_star");
      if (pf.y_star->size() != ny) throw BadInput("oracle: y_star size mismatch");
    }
  }
  return pf;
}

json certificate_to_json(const afba::ValidityCertificate& cert) {
  json checks = json::array();
  for (const auto& c : cert.checks) {
    checks.push_back({{"name", c.name},
                      {"lhs", c.lhs},
                      {"rhs", c.rhs},
                      {"strict", c.strict},
                      {"satisfied", c.satisfied},
                      {"margin", c.margin}});
  }
  json j = {{"schema", 1},
            {"valid", cert.valid},
            {"case_id", cert.case_id},
            {"case_name", cert.case_name},
            {"operator_norm", cert.l_norm},
            {"tau", cert.tau},
            {"degenerate_metric", cert.degenerate_metric},
            {"checks", checks}};
  if (std::isfinite(cert.beta_p)) j["beta_p"] = cert.beta_p;
  if (cert.delta > 0) j["delta"] = cert.delta;
  if (!cert.first_violation.empty()) j["first_violation"] = cert.first_violation;
  return j;
}

afba::PdLambdaRule make_rule(const ProblemFile& pf) {
  const double g1 = pf.params.gamma1, g2 = pf.params.gamma2;
  if (pf.variant_name == "bac") {
    return [g1, g2](const afba::PdQuantities& q) {
      const double base = q.xt2 / g1 + q.yt2 / g2;
      if (!(base > 0)) return 1.0;
      return 1.0 + (g2 * q.lxt2 + g1 * q.ltyt2) / base;
    };
  }
  if (pf.variant_name == "dst") {
    return [g1, g2](const afba::PdQuantities& q) {
      const double base = q.xt2 / g1 + q.yt2 / g2;
      const double den = base - q.cross;
      if (!(den != 0.0)) return 1.0;
      return 2.0 - (base - g1 * q.ltyt2) / den;
    };
  }
  if (pf.variant_name == "mu0") {
    const double t = pf.params.theta;
    return [g1, g2, t](const afba::PdQuantities& q) {
      const double base = q.xt2 / g1 + q.yt2 / g2;
      const double num = base - t * q.cross;
      if (!(num != 0.0)) return 1.0;
      return (base + g2 * (1.0 - t) * (2.0 - t) * q.lxt2 +
              2.0 * (1.0 - t) * q.cross) /
             num;
    };
  }
  const double lambda = pf.lambda;
  return [lambda](const afba::PdQuantities&) { return lambda; };
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int cmd_validate(const std::string& path) {
  ProblemFile pf = load_problem(path);
  afba::ValidityCertificate cert = afba::validate(pf.prob, pf.params);
  std::cout << certificate_to_json(cert).dump(2) << "\n";
  return cert.valid ? kExitConverged : kExitInvalidParams;
}

int cmd_solve(const std::string& path, const std::string& trace_path,
              const std::string& report_path) {
  ProblemFile pf = load_problem(path);
  afba::ValidityCertificate cert = afba::validate(pf.prob, pf.params);
  if (!cert.valid) {
    std::cerr << "invalid parameters: " << cert.first_violation << "\n";
    return kExitInvalidParams;
  }
  if (pf.variant_name == "condat_vu" || pf.variant_name == "custom") {
    const double hi = cert.degenerate_metric ? 2.0 : cert.delta;
    if (!(pf.lambda >= 1e-6 && pf.lambda <= hi - 1e-6)) {
      std::cerr << "invalid parameters: lambda_range\n";
      return kExitInvalidParams;
    }
  }

  afba::RunOptions opts = pf.opts;
  const bool need_trace = !trace_path.empty();
  opts.record_history = true;
  opts.record_iterates = need_trace;

  afba::SolveReport rep =
      afba::pd_run(pf.prob, pf.params, make_rule(pf),
                   afba::PrimalDualPoint{pf.x0, pf.y0}, opts);

  if (need_trace) {
    afba::PdFamily fam = afba::build_S_family(pf.prob, pf.params);
    std::optional<afba::Vec> zstar;
    if (pf.x_star && pf.y_star)
      zstar = afba::pd_flatten({*pf.x_star, *pf.y_star});
    std::ofstream tf(trace_path);
    if (!tf) throw BadInput("cannot write " + trace_path);
    tf << "n,lambda,alpha,res_P,res_D,fejer,objective\n";
    afba::Vec z_prev = afba::pd_flatten({pf.x0, pf.y0});
    for (std::size_t n = 0; n < rep.iters; ++n) {
      const afba::Vec& z = rep.z_hist[n];
      const afba::Vec zt = afba::vsub(rep.zbar_hist[n], z_prev);
      const double res_d = std::sqrt(std::max(fam.d.quad(zt), 0.0));
      const double fejer =
          zstar ? fam.s.norm(afba::vsub(z, *zstar))
                : std::numeric_limits<double>::quiet_NaN();
      const afba::Vec x = afba::pd_split(z, pf.prob.nx()).x;
      tf << n << ',' << fmt(rep.lambda_hist[n]) << ','
         << fmt(rep.alpha_hist[n]) << ',' << fmt(rep.res_hist[n]) << ','
         << fmt(res_d) << ',' << fmt(fejer) << ','
         << fmt(afba::pd_objective(pf.prob, x)) << "\n";
      z_prev = z;
    }
  }

  const afba::Vec x = afba::pd_split(rep.z, pf.prob.nx()).x;
  json report = {
      {"schema", 1},
      {"variant", pf.variant_name},
      {"status", rep.status == afba::SolveStatus::kConverged   ? "converged"
                 : rep.status == afba::SolveStatus::kIterBudget ? "iter_budget"
                                                               : "numeric_failure"},
      {"iters", rep.iters},
      {"res_P", rep.res_hist.empty() ? 0.0 : rep.res_hist.back()},
      {"objective", afba::pd_objective(pf.prob, x)},
      {"certificate", certificate_to_json(cert)},
  };
  if (!rep.message.empty()) report["message"] = rep.message;
  if (pf.x_star) {
    report["x_error"] = afba::vnorm(afba::vsub(x, *pf.x_star));
  }
  if (!report_path.empty()) {
    std::ofstream rf(report_path);
    if (!rf) throw BadInput("cannot write " + report_path);
    rf << report.dump(2) << "\n";
  } else {
    std::cout << report.dump(2) << "\n";
  }
  switch (rep.status) {
    case afba::SolveStatus::kConverged:
      return kExitConverged;
    case afba::SolveStatus::kIterBudget:
      return kExitBudget;
    case afba::SolveStatus::kNumericFailure:
      return kExitNumericFailure;
  }
  return kExitNumericFailure;
}

int cmd_compare(const std::string& path_a, const std::string& path_b) {
  ProblemFile a = load_problem(path_a);
  ProblemFile b = load_problem(path_b);
  if (a.x0.size() != b.x0.size() || a.y0.size() != b.y0.size())
    throw BadInput("compare: problems live in different spaces");
  for (ProblemFile* pf : {&a, &b}) {
    afba::ValidityCertificate cert = afba::validate(pf->prob, pf->params);
    if (!cert.valid) {
      std::cerr << "invalid parameters in "
                << (pf == &a ? path_a : path_b) << ": "
                << cert.first_violation << "\n";
      return kExitInvalidParams;
    }
  }
  afba::SolveReport ra = afba::pd_run(a.prob, a.params, make_rule(a),
                                      {a.x0, a.y0}, a.opts);
  afba::SolveReport rb = afba::pd_run(b.prob, b.params, make_rule(b),
                                      {b.x0, b.y0}, b.opts);
  double max_diff = 0.0;
  for (std::size_t i = 0; i < ra.z.size(); ++i)
    max_diff = std::max(max_diff, std::abs(ra.z[i] - rb.z[i]));
  const afba::Vec xa = afba::pd_split(ra.z, a.prob.nx()).x;
  const afba::Vec xb = afba::pd_split(rb.z, b.prob.nx()).x;
  json out = {{"schema", 1},
              {"max_iterate_diff", max_diff},
              {"objective_a", afba::pd_objective(a.prob, xa)},
              {"objective_b", afba::pd_objective(b.prob, xb)},
              {"iters_a", ra.iters},
              {"iters_b", rb.iters}};
  std::cout << out.dump(2) << "\n";
  if (ra.status == afba::SolveStatus::kNumericFailure ||
      rb.status == afba::SolveStatus::kNumericFailure)
    return kExitNumericFailure;
  return kExitConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"splitting solver front end"};
  app.require_subcommand(1);

  std::string problem_path, trace_path, report_path, compare_path;

  CLI::App* validate =
      app.add_subcommand("validate", "check parameter admissibility");
  validate->add_option("problem", problem_path, "problem JSON file")
      ->required();

  CLI::App* solve = app.add_subcommand("solve", "run the configured solver");
  solve->add_option("problem", problem_path, "problem JSON file")->required();
  solve->add_option("--trace", trace_path, "write a per-iteration CSV trace");
  solve->add_option("--report", report_path, "write the report JSON here");

  CLI::App* compare =
      app.add_subcommand("compare", "run two configurations and diff them");
  compare->add_option("problem_a", problem_path, "first problem JSON file")
      ->required();
  compare->add_option("problem_b", compare_path, "second problem JSON file")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(problem_path);
    if (solve->parsed()) return cmd_solve(problem_path, trace_path, report_path);
    if (compare->parsed()) return cmd_compare(problem_path, compare_path);
  } catch (const BadInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidParams;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumericFailure;
  }
  return kExitBadInput;
}
