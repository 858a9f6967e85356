#include "cmk/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "cmk/errors.hpp"
#include "cmk/geometry.hpp"
#include "cmk/symfun.hpp"

namespace cmk {

namespace {

[[noreturn]] void config_fail(const std::string& pointer, const std::string& msg) {
  throw Error(ErrorCode::ConfigError, "config " + (pointer.empty() ? std::string("/") : pointer) + ": " + msg +
                                          " (see the schema in README.md)");
}

void only_keys(const Json& obj, const std::string& ptr, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_fail(ptr, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) config_fail(ptr + "/" + key, "unknown key");
  }
}

template <typename T>
void read(const Json& obj, const std::string& ptr, const char* key, T& dst) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  const std::string where = ptr + "/" + key;
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) config_fail(where, "expected a boolean");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) config_fail(where, "expected an integer");
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) config_fail(where, "expected a number");
  } else {
    if (!v.is_string()) config_fail(where, "expected a string");
  }
  dst = v.get<T>();
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, "resolution list entry '" + tok + "' is not an integer");
    }
  }
  if (out.empty()) throw Error(ErrorCode::ConfigError, "empty resolution list");
  return out;
}

void check_writable(const std::string& path) {
  if (path.empty()) return;
  const auto parent = std::filesystem::absolute(path).parent_path();
  if (!std::filesystem::is_directory(parent)) {
    throw Error(ErrorCode::ConfigError, "output directory does not exist for " + path);
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << std::scientific << v;
  return os.str();
}

void merge_into(Json& dst, const Json& src) {
  for (const auto& [k, v] : src.items()) dst[k] = v;
}

int exit_code_for(const Error& e) {
  return (e.code() == ErrorCode::ConfigError || e.code() == ErrorCode::InvalidProblem ||
          e.code() == ErrorCode::UnsupportedGrid || e.code() == ErrorCode::InvalidResolution ||
          e.code() == ErrorCode::PositivityLost || e.code() == ErrorCode::InvalidHomotopyParameter)
             ? 2
             : 1;
}

// ---- subcommands ---------------------------------------------------------------

int cmd_solve(const std::string& config_path, std::ostream& out) {
  const auto cfg = RunConfig::load(config_path);
  if (cfg.solution_csv.empty() && cfg.report_json.empty()) {
    throw Error(ErrorCode::ConfigError, "config /outputs: need solution_csv or report_json");
  }
  for (const auto* p : {&cfg.solution_csv, &cfg.report_json, &cfg.mesh_obj, &cfg.profile_csv}) check_writable(*p);
  const auto grid = cfg.build_grid();
  const auto spec = cfg.build_spec(grid);
  spec.validate();

  Json report;
  report["config"] = cfg.to_json();
  std::optional<ScalarField> solution;
  ProblemSpec final_spec = spec;
  int code = 0;

  if (cfg.eps_continuation) {
    const auto steps = epsilon_continuation(spec, cfg.solver);
    report["eps_continuation"] = Json::array();
    for (const auto& s : steps) report["eps_continuation"].push_back(to_json(s));
    const EpsStep* last = nullptr;
    for (const auto& s : steps)
      if (s.u) last = &s;
    if (last) {
      solution = *last->u;
      final_spec.eps = last->eps;
      merge_into(report, to_json(last->report));
    }
    if (!steps.back().u) code = 1;
  } else {
    try {
      auto res = continuation_solve(spec, cfg.solver);
      solution = res.u;
      merge_into(report, to_json(res.report));
    } catch (const ContinuationStuck& e) {
      solution = e.last().u;
      merge_into(report, to_json(e.last().report));
      report["error"] = e.what();
      code = 1;
    }
  }
  if (!solution) {
    report["converged"] = false;
    code = 1;
  } else {
    try {
      report["diagnostics"] = to_json(full_diagnostics(*solution, final_spec));
    } catch (const Error& e) {
      report["diagnostics"] = {{"error", e.what()}};
    }
    if (!cfg.solution_csv.empty()) write_csv(*solution, cfg.solution_csv);
    if (!cfg.mesh_obj.empty()) {
      const auto mesh = grid->kind() == GridKind::Full2D ? embed_body(*solution) : revolve_profile(*solution);
      write_obj(mesh, cfg.mesh_obj);
    }
    if (!cfg.profile_csv.empty() && grid->kind() == GridKind::Axisymmetric) write_profile_csv(*solution, cfg.profile_csv);
  }
  if (!cfg.report_json.empty()) write_json(report, cfg.report_json);
  out << "converged: " << (report.value("converged", false) ? "true" : "false") << '\n';
  if (solution) out << "min_u: " << fmt(solution->min()) << "  max_u: " << fmt(solution->max()) << '\n';
  return code;
}

int cmd_verify_example(int n, int k, double p0, const std::string& resolutions, std::ostream& out) {
  const auto js = parse_int_list(resolutions);
  const double alpha = prop53_alpha(k, p0);
  out << "alpha " << std::setprecision(17) << alpha << "  f(0) " << prop53_f_value(n, k, alpha, 0.0) << '\n';
  out << std::setw(8) << "J" << std::setw(16) << "residual_sup" << std::setw(12) << "ratio" << '\n';
  double prev = 0.0;
  for (std::size_t i = 0; i < js.size(); ++i) {
    const auto grid = SphereGrid::build(n, GridKind::Axisymmetric, js[i]);
    const auto pair = prop53_example(grid, k, p0);
    ProblemSpec spec{n, k, p0, 0.0, 1.0, pair.f};
    const double res = residual(pair.u, spec).values.cwiseAbs().maxCoeff();
    out << std::setw(8) << js[i] << std::setw(16) << fmt(res);
    if (i > 0) out << std::setw(12) << std::setprecision(4) << std::fixed << prev / res << std::defaultfloat;
    out << '\n';
    prev = res;
  }
  return 0;
}

int cmd_check_convexity(const std::string& config_path, std::ostream& out) {
  const auto cfg = RunConfig::load(config_path);
  const auto grid = cfg.build_grid();
  const auto f = make_f(grid, cfg.f, cfg.k, cfg.p0, cfg.eps);
  std::optional<double> alpha;
  if (cfg.f.kind == "prop53") alpha = prop53_alpha(cfg.k, cfg.p0);
  const auto cert = check_f_convexity(f, cfg.k, cfg.p0, alpha);
  out << to_json(cert).dump(2) << '\n';
  return 0;
}

int cmd_diagnose(const std::string& config_path, const std::string& solution_path, const std::string& out_path,
                 std::ostream& out) {
  const auto cfg = RunConfig::load(config_path);
  check_writable(out_path);
  ScalarField u;
  try {
    u = read_csv_infer(cfg.n, solution_path);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  const auto spec = cfg.build_spec(u.grid);
  Json doc;
  doc["config"] = cfg.to_json();
  doc["solution"] = solution_path;
  doc["diagnostics"] = to_json(full_diagnostics(u, spec));
  if (out_path.empty()) {
    out << doc.dump(2) << '\n';
  } else {
    write_json(doc, out_path);
  }
  return 0;
}

int cmd_export_mesh(int n, const std::string& solution_path, const std::string& obj, const std::string& profile,
                    int longitudes, std::ostream& out) {
  if (obj.empty() && profile.empty()) throw Error(ErrorCode::ConfigError, "need --obj or --profile");
  check_writable(obj);
  check_writable(profile);
  ScalarField u;
  try {
    u = read_csv_infer(n, solution_path);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  const bool axis = u.grid->kind() == GridKind::Axisymmetric;
  if (!profile.empty() && !axis) throw Error(ErrorCode::ConfigError, "--profile needs an axisymmetric solution");
  BodyMesh mesh = axis ? revolve_profile(u, longitudes) : embed_body(u);
  if (!obj.empty()) write_obj(mesh, obj);
  if (!profile.empty()) write_profile_csv(u, profile);
  out << "vertices " << mesh.vertices.size() << "  faces " << mesh.faces.size()
      << (mesh.non_convex ? "  (non-convex)" : "") << '\n';
  return mesh.non_convex ? 1 : 0;
}

int cmd_convergence_study(const std::string& config_path, const std::string& resolutions, std::ostream& out) {
  const auto cfg = RunConfig::load(config_path);
  if (cfg.f.kind != "manufactured") throw Error(ErrorCode::ConfigError, "config /problem/f/kind: needs 'manufactured'");
  const auto js = parse_int_list(resolutions);
  const double amp = cfg.f.params.count("amplitude") ? cfg.f.params.at("amplitude") : 0.1;
  std::vector<ScalarField> sols;
  std::vector<double> errs;
  for (int j : js) {
    const auto grid = cfg.build_grid(j);
    const auto spec = cfg.build_spec(grid);
    const auto res = continuation_solve(spec, cfg.solver);
    errs.push_back((res.u.values - manufactured_target(grid, amp).values).cwiseAbs().maxCoeff());
    sols.push_back(res.u);
  }
  out << std::setw(8) << "J" << std::setw(16) << "error" << std::setw(16) << "richardson" << std::setw(12)
      << "err/est" << std::setw(12) << "order" << '\n';
  for (std::size_t i = 0; i < js.size(); ++i) {
    out << std::setw(8) << js[i] << std::setw(16) << fmt(errs[i]);
    if (i + 1 < js.size() && js[i + 1] == 2 * js[i]) {
      const auto fine = restrict_from_fine(sols[i + 1], sols[i].grid);
      const double est = (4.0 / 3.0) * (sols[i].values - fine.values).cwiseAbs().maxCoeff();
      out << std::setw(16) << fmt(est) << std::setw(12) << std::setprecision(4) << std::fixed << errs[i] / est
          << std::defaultfloat;
    } else {
      out << std::setw(16) << "-" << std::setw(12) << "-";
    }
    if (i > 0) out << std::setw(12) << std::setprecision(4) << std::fixed << std::log2(errs[i - 1] / errs[i]) << std::defaultfloat;
    out << '\n';
  }
  return 0;
}

int cmd_uniqueness(const std::string& config_path, int count, std::optional<std::uint64_t> seed, std::ostream& out) {
  auto cfg = RunConfig::load(config_path);
  if (seed) cfg.seed = *seed;
  check_writable(cfg.report_json);
  const auto grid = cfg.build_grid();
  const auto spec = cfg.build_spec(grid);
  spec.validate();
  const auto starts = random_admissible_starts(grid, cfg.k, cfg.eps, count, cfg.seed);
  const auto rep = uniqueness_experiment(spec, starts, cfg.solver);
  Json doc;
  doc["config"] = cfg.to_json();
  doc["seed"] = cfg.seed;
  doc["uniqueness"] = to_json(rep);
  if (!cfg.report_json.empty()) write_json(doc, cfg.report_json);
  out << doc.dump(2) << '\n';
  return rep.converged_count == count ? 0 : 1;
}

}  // namespace

// ---- config ----------------------------------------------------------------------

RunConfig RunConfig::from_json(const Json& doc) {
  RunConfig c;
  only_keys(doc, "", {"problem", "grid", "solver", "outputs", "seed"});
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) config_fail("/seed", "expected a non-negative integer");
    c.seed = doc["seed"].get<std::uint64_t>();
  }
  if (!doc.contains("problem")) config_fail("/problem", "missing");
  const auto& p = doc["problem"];
  only_keys(p, "/problem", {"n", "k", "p0", "eps", "f"});
  read(p, "/problem", "n", c.n);
  read(p, "/problem", "k", c.k);
  read(p, "/problem", "p0", c.p0);
  read(p, "/problem", "eps", c.eps);
  if (p.contains("f")) {
    const auto& f = p["f"];
    only_keys(f, "/problem/f", {"kind", "params", "path"});
    read(f, "/problem/f", "kind", c.f.kind);
    read(f, "/problem/f", "path", c.f.csv_path);
    if (f.contains("params")) {
      only_keys(f["params"], "/problem/f/params", {"value", "amplitude"});
      for (const auto& [key, v] : f["params"].items()) {
        if (!v.is_number()) config_fail("/problem/f/params/" + key, "expected a number");
        c.f.params[key] = v.get<double>();
      }
    }
    static const char* kinds[] = {"constant", "prop53", "manufactured", "legendre2_bump", "csv"};
    if (std::find(std::begin(kinds), std::end(kinds), c.f.kind) == std::end(kinds)) {
      config_fail("/problem/f/kind", "unknown kind '" + c.f.kind + "'");
    }
    if (c.f.kind == "csv" && c.f.csv_path.empty()) config_fail("/problem/f/path", "required for kind 'csv'");
  }
  if (c.n != 2 && c.n != 3) config_fail("/problem/n", "must be 2 or 3");
  if (c.k < 1 || c.k > c.n) config_fail("/problem/k", "need 1 <= k <= n");
  if (!(c.p0 > 0.0 && c.p0 < c.k)) config_fail("/problem/p0", "need 0 < p0 < k");
  if (!(c.eps >= 0.0)) config_fail("/problem/eps", "need eps >= 0");

  if (doc.contains("grid")) {
    const auto& g = doc["grid"];
    only_keys(g, "/grid", {"kind", "resolution"});
    if (g.contains("kind")) {
      if (!g["kind"].is_string()) config_fail("/grid/kind", "expected a string");
      try {
        c.grid_kind = grid_kind_from_string(g["kind"].get<std::string>());
      } catch (const Error& e) {
        config_fail("/grid/kind", e.what());
      }
    }
    if (g.contains("resolution")) {
      const auto& r = g["resolution"];
      if (r.is_number_integer()) {
        c.n_theta = r.get<int>();
      } else if (r.is_array() && !r.empty() && r.size() <= 2 &&
                 std::all_of(r.begin(), r.end(), [](const Json& x) { return x.is_number_integer(); })) {
        c.n_theta = r[0].get<int>();
        if (r.size() == 2) c.n_phi = r[1].get<int>();
      } else {
        config_fail("/grid/resolution", "expected an integer or [n_theta] or [n_theta, n_phi]");
      }
    }
  }
  if (c.grid_kind == GridKind::Full2D && c.n_phi == 0) c.n_phi = 2 * c.n_theta;

  if (doc.contains("solver")) {
    const auto& s = doc["solver"];
    only_keys(s, "/solver", {"newton_tol", "max_newton_iters", "line_search_shrink", "max_backtracks", "t_step_init",
                             "t_step_min", "t_step_grow", "enforce_even", "eps_schedule"});
    if (s.contains("newton_tol") && !s["newton_tol"].is_null()) {
      double tol = 0.0;
      read(s, "/solver", "newton_tol", tol);
      c.solver.newton_tol = tol;
    }
    read(s, "/solver", "max_newton_iters", c.solver.max_newton_iters);
    read(s, "/solver", "line_search_shrink", c.solver.line_search_shrink);
    read(s, "/solver", "max_backtracks", c.solver.max_backtracks);
    read(s, "/solver", "t_step_init", c.solver.t_step_init);
    read(s, "/solver", "t_step_min", c.solver.t_step_min);
    read(s, "/solver", "t_step_grow", c.solver.t_step_grow);
    read(s, "/solver", "enforce_even", c.solver.enforce_even);
    if (s.contains("eps_schedule") && !s["eps_schedule"].is_null()) {
      const auto& e = s["eps_schedule"];
      only_keys(e, "/solver/eps_schedule", {"start", "ratio", "count", "append_zero"});
      read(e, "/solver/eps_schedule", "start", c.solver.eps_start);
      read(e, "/solver/eps_schedule", "ratio", c.solver.eps_ratio);
      read(e, "/solver/eps_schedule", "count", c.solver.eps_count);
      read(e, "/solver/eps_schedule", "append_zero", c.solver.eps_append_zero);
      c.eps_continuation = true;
    }
  }
  try {
    c.solver.validate();
  } catch (const Error& e) {
    config_fail("/solver", e.what());
  }

  if (doc.contains("outputs")) {
    const auto& o = doc["outputs"];
    only_keys(o, "/outputs", {"solution_csv", "report_json", "mesh_obj", "profile_csv"});
    read(o, "/outputs", "solution_csv", c.solution_csv);
    read(o, "/outputs", "report_json", c.report_json);
    read(o, "/outputs", "mesh_obj", c.mesh_obj);
    read(o, "/outputs", "profile_csv", c.profile_csv);
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read config " + path);
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ConfigError, "config " + path + " is not valid JSON: " + e.what());
  }
  return from_json(doc);
}

Json RunConfig::to_json() const {
  Json j;
  Json params = Json::object();
  for (const auto& [k, v] : f.params) params[k] = v;
  Json fj = {{"kind", f.kind}, {"params", params}};
  if (!f.csv_path.empty()) fj["path"] = f.csv_path;
  j["problem"] = {{"n", n}, {"k", k}, {"p0", p0}, {"eps", eps}, {"f", fj}};
  Json res = Json::array({n_theta});
  if (grid_kind == GridKind::Full2D) res.push_back(n_phi);
  j["grid"] = {{"kind", to_string(grid_kind)}, {"resolution", res}};
  j["solver"] = cmk::to_json(solver);
  j["solver"]["newton_tol_effective"] =
      solver.newton_tol ? *solver.newton_tol : (grid_kind == GridKind::Axisymmetric ? 1e-10 : 1e-8);
  j["solver"]["eps_continuation"] = eps_continuation;
  j["outputs"] = {{"solution_csv", solution_csv},
                  {"report_json", report_json},
                  {"mesh_obj", mesh_obj},
                  {"profile_csv", profile_csv}};
  j["seed"] = seed;
  return j;
}

GridPtr RunConfig::build_grid() const { return build_grid(n_theta); }

GridPtr RunConfig::build_grid(int nt) const {
  try {
    const int np = grid_kind == GridKind::Full2D ? (nt == n_theta ? n_phi : 2 * nt) : 0;
    return SphereGrid::build(n, grid_kind, nt, np);
  } catch (const Error& e) {
    config_fail("/grid", e.what());
  }
}

ProblemSpec RunConfig::build_spec(GridPtr grid) const {
  ScalarField fv;
  try {
    fv = make_f(grid, f, k, p0, eps);
  } catch (const Error& e) {
    config_fail("/problem/f", e.what());
  }
  ProblemSpec spec{n, k, p0, eps, 1.0, std::move(fv)};
  try {
    spec.validate();
  } catch (const Error& e) {
    config_fail("/problem", e.what());
  }
  return spec;
}

// ---- entry point -------------------------------------------------------------------

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Newton-continuation solver for sigma_k equations of support functions on spheres", "cmk_cli"};
  app.require_subcommand(1);

  std::string config;
  std::string solution;
  std::string out_path;
  std::string resolutions = "128,256";
  std::string obj;
  std::string profile;
  int n = 3;
  int k = 2;
  double p0 = 0.2;
  int longitudes = 64;
  int starts = 5;
  std::uint64_t seed = 0;

  auto* solve = app.add_subcommand("solve", "continuation solve from a JSON config");
  solve->add_option("--config", config, "JSON run configuration")->required();

  auto* verify = app.add_subcommand("verify-example", "residual convergence of the closed-form degenerate pair");
  verify->add_option("--n", n, "sphere dimension");
  verify->add_option("--k", k, "order of sigma_k");
  verify->add_option("--p0", p0, "exponent p0, 0 < p0 < k/2");
  verify->add_option("--resolutions", resolutions, "comma-separated n_theta list");

  auto* convex = app.add_subcommand("check-f-convexity", "convexity certificate for the data f");
  convex->add_option("--config", config, "JSON run configuration")->required();

  auto* diagnose = app.add_subcommand("diagnose", "monitor report for a solution CSV");
  diagnose->add_option("--config", config, "JSON run configuration (problem section)")->required();
  diagnose->add_option("--solution", solution, "solution CSV")->required();
  diagnose->add_option("--out", out_path, "write the report here instead of stdout");

  auto* mesh = app.add_subcommand("export-mesh", "OBJ mesh and profile of the body of a solution");
  mesh->add_option("--solution", solution, "solution CSV")->required();
  mesh->add_option("--n", n, "sphere dimension")->required();
  mesh->add_option("--obj", obj, "OBJ output path");
  mesh->add_option("--profile", profile, "profile CSV output path (axisymmetric only)");
  mesh->add_option("--longitudes", longitudes, "longitudes of the revolved mesh");

  auto* study = app.add_subcommand("convergence-study", "Richardson table for a manufactured problem");
  study->add_option("--config", config, "JSON run configuration")->required();
  study->add_option("--resolutions", resolutions, "comma-separated n_theta list");

  auto* uniq = app.add_subcommand("uniqueness", "multi-start solves from seeded random admissible starts");
  uniq->add_option("--config", config, "JSON run configuration")->required();
  uniq->add_option("--starts", starts, "number of starts");
  auto* seed_opt = uniq->add_option("--seed", seed, "random seed (overrides the config)");

  std::vector<char*> argv;
  std::vector<std::string> storage = args;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*solve) return cmd_solve(config, out);
    if (*verify) return cmd_verify_example(n, k, p0, resolutions, out);
    if (*convex) return cmd_check_convexity(config, out);
    if (*diagnose) return cmd_diagnose(config, solution, out_path, out);
    if (*mesh) return cmd_export_mesh(n, solution, obj, profile, longitudes, out);
    if (*study) return cmd_convergence_study(config, resolutions, out);
    if (*uniq) {
      return cmd_uniqueness(config, starts, seed_opt->count() ? std::optional<std::uint64_t>(seed) : std::nullopt, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  err << app.help();
  return 2;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace cmk
