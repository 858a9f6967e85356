#include "cmk/report_io.hpp"

#include <cmath>
#include <fstream>

#include "cmk/errors.hpp"

namespace cmk {

namespace {

// NaN and infinities have no JSON literal; they become null.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

Json to_json(const SolveReport& r) {
  Json j;
  j["converged"] = r.converged;
  j["t_final"] = r.t_final;
  j["eps"] = r.eps;
  j["iterations"] = r.iterations;
  j["residual_history"] = Json::array();
  for (double v : r.residual_history) j["residual_history"].push_back(number(v));
  j["min_u"] = number(r.min_u);
  j["max_u"] = number(r.max_u);
  j["admissible"] = r.admissible;
  j["convex"] = r.convex;
  j["near_degenerate"] = r.near_degenerate;
  j["t_path"] = r.t_path;
  j["last_good_t"] = r.last_good_t;
  if (!r.failure.empty()) j["failure"] = r.failure;
  return j;
}

Json to_json(const MonitorReport& r) {
  Json j;
  j["values"] = Json::object();
  for (const auto& [k, v] : r.values) j["values"][k] = number(v);
  j["passes"] = Json::object();
  for (const auto& [k, v] : r.passes) j["passes"][k] = v;
  j["notes"] = Json::object();
  for (const auto& [k, v] : r.notes) j["notes"][k] = v;
  return j;
}

Json to_json(const ConvexityCertificate& c) {
  Json j;
  j["min_eigenvalue"] = number(c.min_eigenvalue);
  j["tolerance"] = c.tolerance;
  j["passes"] = c.passes;
  if (c.q_coefficients) j["q_coefficients"] = *c.q_coefficients;
  if (c.q_min_on_interval) j["q_min_on_interval"] = *c.q_min_on_interval;
  return j;
}

Json to_json(const SolveOptions& o) {
  Json j;
  if (o.newton_tol) {
    j["newton_tol"] = *o.newton_tol;
  } else {
    j["newton_tol"] = nullptr;
  }
  j["max_newton_iters"] = o.max_newton_iters;
  j["line_search_shrink"] = o.line_search_shrink;
  j["max_backtracks"] = o.max_backtracks;
  j["t_step_init"] = o.t_step_init;
  j["t_step_min"] = o.t_step_min;
  j["t_step_grow"] = o.t_step_grow;
  j["enforce_even"] = o.enforce_even;
  j["eps_schedule"] = {{"start", o.eps_start},
                       {"ratio", o.eps_ratio},
                       {"count", o.eps_count},
                       {"append_zero", o.eps_append_zero}};
  return j;
}

Json to_json(const UniquenessReport& r) {
  Json j;
  j["status"] = r.status;
  j["converged_count"] = r.converged_count;
  j["max_pairwise"] = number(r.max_pairwise);
  j["pairwise"] = Json::array();
  for (Eigen::Index a = 0; a < r.pairwise.rows(); ++a) {
    Json row = Json::array();
    for (Eigen::Index b = 0; b < r.pairwise.cols(); ++b) row.push_back(number(r.pairwise(a, b)));
    j["pairwise"].push_back(row);
  }
  j["evenness_defect"] = Json::array();
  for (double v : r.evenness_defect) j["evenness_defect"].push_back(number(v));
  return j;
}

Json to_json(const EpsStep& s) {
  Json j;
  j["eps"] = s.eps;
  j["solved"] = s.u.has_value();
  j["warm_started"] = s.warm_started;
  j["lower_bound"] = number(s.lower_bound);
  j["lower_bound_holds"] = s.lower_bound_holds;
  j["report"] = to_json(s.report);
  return j;
}

void write_json(const Json& doc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace cmk
