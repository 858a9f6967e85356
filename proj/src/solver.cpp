#include "cmk/solver.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SparseLU>

#include "cmk/parallel.hpp"
#include "cmk/symfun.hpp"

namespace cmk {

namespace {

double sup_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

Eigen::VectorXd solve_linear(const LinearOperator& op, const Eigen::VectorXd& rhs) {
  const Eigen::SparseMatrix<double> a = op.matrix;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success) throw Error(ErrorCode::StepCollapse, "singular Jacobian");
  Eigen::VectorXd x = lu.solve(rhs);
  // Two rounds of refinement keep the relative residual near 1e-12 even when
  // the pivots are mildly unbalanced.
  for (int pass = 0; pass < 2; ++pass) {
    const Eigen::VectorXd r = rhs - a * x;
    if (sup_norm(r) <= 1e-13 * std::max(1.0, sup_norm(rhs))) break;
    x += lu.solve(r);
  }
  return x;
}

bool admissible_values(const ScalarField& u, int k, double eps) {
  if (!(u.min() > 0.0) || !u.values.allFinite()) return false;
  std::vector<char> ok(u.size(), 1);
  parallel_for(u.size(), [&](std::size_t node) {
    ok[node] = symfun::in_gamma_k(covariant_w_at(u, eps, node), k) ? 1 : 0;
  });
  return std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
}

}  // namespace

double SolveOptions::tolerance_for(const SphereGrid& grid) const {
  if (newton_tol) return *newton_tol;
  return grid.kind() == GridKind::Axisymmetric ? 1e-10 : 1e-8;
}

std::vector<double> SolveOptions::eps_schedule() const {
  std::vector<double> out;
  double e = eps_start;
  for (int m = 0; m < eps_count; ++m, e *= eps_ratio) out.push_back(e);
  if (eps_append_zero) out.push_back(0.0);
  return out;
}

void SolveOptions::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::ConfigError, "solver." + msg); };
  if (newton_tol && !(*newton_tol > 0.0)) fail("newton_tol must be positive");
  if (max_newton_iters < 1) fail("max_newton_iters must be >= 1");
  if (!(line_search_shrink > 0.0 && line_search_shrink < 1.0)) fail("line_search_shrink must lie in (0, 1)");
  if (max_backtracks < 1) fail("max_backtracks must be >= 1");
  if (!(t_step_min > 0.0 && t_step_min <= t_step_init && t_step_init <= 1.0)) {
    fail("need 0 < t_step_min <= t_step_init <= 1");
  }
  if (!(t_step_grow >= 1.0)) fail("t_step_grow must be >= 1");
  if (!(eps_start > 0.0) || !(eps_ratio > 0.0 && eps_ratio < 1.0) || eps_count < 1) {
    fail("eps schedule needs eps_start > 0, 0 < eps_ratio < 1, eps_count >= 1");
  }
}

void finalize_report(SolveReport& report, const ScalarField& u, const ProblemSpec& spec) {
  report.min_u = u.min();
  report.max_u = u.max();
  report.eps = spec.eps;
  report.admissible = admissible_values(u, spec.k, spec.eps);
  if (report.admissible) {
    const auto wf = covariant_w(u, spec.eps);
    report.convex = std::all_of(wf.eig_min.begin(), wf.eig_min.end(), [](double e) { return e > 0.0; });
  } else {
    report.convex = false;
  }
  report.near_degenerate = spec.eps == 0.0 && report.t_final == 1.0 && report.min_u < 1e-2 * report.max_u;
}

SolveResult newton_solve(const ProblemSpec& spec, const ScalarField& u0, const SolveOptions& opts) {
  spec.validate();
  opts.validate();
  if (u0.grid != spec.grid() && (u0.grid->size() != spec.grid()->size())) {
    throw Error(ErrorCode::InvalidProblem, "start field lives on a different grid");
  }
  ScalarField u(spec.grid(), u0.values);
  if (opts.enforce_even) u = symmetrize_even(u);
  if (!admissible_values(u, spec.k, spec.eps)) {
    throw Error(ErrorCode::AdmissibleStartRequired, "start must be positive with W in Gamma_k at every node");
  }

  const double tol = opts.tolerance_for(*spec.grid());
  const Eigen::VectorXd ft = effective_f(spec).values;
  SolveResult out;
  out.report.t_final = spec.t;
  out.report.last_good_t = spec.t;

  Eigen::VectorXd r = residual_values(u, spec, ft);
  double rnorm = sup_norm(r);
  out.report.residual_history.push_back(rnorm);
  int iters = 0;
  while (rnorm > tol) {
    if (iters >= opts.max_newton_iters) {
      throw Error(ErrorCode::NoConvergence,
                  "residual " + std::to_string(rnorm) + " after " + std::to_string(iters) + " iterations");
    }
    const auto jac = linearize_with(u, spec, ft);
    const Eigen::VectorXd step = solve_linear(jac, -r);

    double lambda = 1.0;
    bool accepted = false;
    for (int b = 0; b <= opts.max_backtracks; ++b, lambda *= opts.line_search_shrink) {
      ScalarField trial(u.grid, u.values + lambda * step);
      if (opts.enforce_even) trial = symmetrize_even(trial);
      if (!admissible_values(trial, spec.k, spec.eps)) continue;
      Eigen::VectorXd rt = residual_values(trial, spec, ft);
      const double tn = sup_norm(rt);
      if (!(tn < rnorm)) continue;
      u = std::move(trial);
      r = std::move(rt);
      rnorm = tn;
      accepted = true;
      break;
    }
    if (!accepted) {
      throw Error(ErrorCode::StepCollapse, "line search found no admissible decrease at residual " +
                                               std::to_string(rnorm));
    }
    ++iters;
    out.report.residual_history.push_back(rnorm);
  }
  out.report.iterations.push_back(iters);
  out.report.t_path.push_back(spec.t);
  out.report.converged = true;
  finalize_report(out.report, u, spec);
  out.u = std::move(u);
  return out;
}

SolveResult continuation_solve(const ProblemSpec& target, const SolveOptions& opts) {
  target.validate();
  opts.validate();
  const double t_end = target.t;
  ProblemSpec spec = target;

  SolveResult state;
  state.u = ScalarField(target.grid(), 1.0);
  // u = 1 is exact at t = 0 only when eps = 0; otherwise solve that problem first.
  spec.t = 0.0;
  {
    auto first = newton_solve(spec, state.u, opts);
    state.u = std::move(first.u);
    state.report = std::move(first.report);
  }
  state.report.last_good_t = 0.0;

  double t = 0.0;
  double dt = opts.t_step_init;
  while (t < t_end) {
    const double t_next = std::min(t_end, t + dt);
    spec.t = t_next;
    try {
      auto step = newton_solve(spec, state.u, opts);
      state.u = std::move(step.u);
      state.report.iterations.push_back(step.report.iterations.front());
      state.report.t_path.push_back(t_next);
      state.report.residual_history.insert(state.report.residual_history.end(),
                                           step.report.residual_history.begin(),
                                           step.report.residual_history.end());
      t = t_next;
      state.report.last_good_t = t;
      dt = std::min(1.0, dt * opts.t_step_grow);
    } catch (const Error& e) {
      dt *= 0.5;
      if (dt < opts.t_step_min) {
        state.report.converged = false;
        state.report.t_final = t;
        state.report.failure = e.what();
        finalize_report(state.report, state.u, spec);
        throw ContinuationStuck("t step fell below " + std::to_string(opts.t_step_min) + " at t = " +
                                    std::to_string(t) + " (" + e.what() + ")",
                                state);
      }
    }
  }
  state.report.converged = true;
  state.report.t_final = t_end;
  state.report.failure.clear();
  finalize_report(state.report, state.u, target);
  return state;
}

std::vector<EpsStep> epsilon_continuation(const ProblemSpec& target, const SolveOptions& opts) {
  target.validate();
  opts.validate();
  const auto schedule = opts.eps_schedule();
  for (std::size_t i = 1; i < schedule.size(); ++i) {
    if (!(schedule[i] < schedule[i - 1])) throw Error(ErrorCode::ConfigError, "eps schedule must decrease strictly");
  }
  const double cnk = symfun::binomial(target.n, target.k);
  const double fmax = effective_f(target).max();

  std::vector<EpsStep> out;
  std::optional<ScalarField> previous;
  for (const double eps : schedule) {
    ProblemSpec spec = target;
    spec.eps = eps;
    EpsStep step;
    step.eps = eps;
    step.lower_bound = eps > 0.0 ? std::pow(cnk * std::pow(eps, target.k) / fmax, 1.0 / target.p0) : 0.0;

    std::optional<SolveResult> result;
    if (previous && admissible_values(*previous, spec.k, eps)) {
      try {
        result = newton_solve(spec, *previous, opts);
        step.warm_started = true;
      } catch (const Error&) {
      }
    }
    if (!result) {
      try {
        result = continuation_solve(spec, opts);
      } catch (const ContinuationStuck& e) {
        step.report = e.last().report;
      } catch (const Error& e) {
        step.report.failure = e.what();
      }
    }
    if (result) {
      step.report = std::move(result->report);
      step.lower_bound_holds = step.report.min_u >= step.lower_bound;
      step.u = std::move(result->u);
      previous = step.u;
    }
    step.report.eps = eps;
    out.push_back(std::move(step));
  }
  return out;
}

ScalarField manufacture_f(const ScalarField& u_target, const ProblemSpec& spec) {
  if (!(u_target.min() > 0.0)) throw Error(ErrorCode::NonpositiveSupport, "target must be positive at every node");
  Eigen::VectorXd f(u_target.values.size());
  std::vector<char> bad(u_target.size(), 0);
  parallel_for(u_target.size(), [&](std::size_t node) {
    const auto w = covariant_w_at(u_target, spec.eps, node);
    const auto i = static_cast<Eigen::Index>(node);
    if (!symfun::in_gamma_k(w, spec.k)) {
      bad[node] = 1;
      f[i] = 0.0;
      return;
    }
    f[i] = symfun::sigma_k(w, spec.k) / std::pow(u_target.values[i], spec.p0);
  });
  if (std::any_of(bad.begin(), bad.end(), [](char b) { return b != 0; })) {
    throw Error(ErrorCode::NotInConeGammaK, "target leaves Gamma_k at some node");
  }
  return {u_target.grid, std::move(f)};
}

}  // namespace cmk
