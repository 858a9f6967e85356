#pragma once

// Damped Newton for the discrete equation, homotopy continuation in t and
// continuation in the regularization eps.

#include <optional>
#include <string>
#include <vector>

#include "cmk/errors.hpp"
#include "cmk/problem.hpp"

namespace cmk {

struct SolveOptions {
  std::optional<double> newton_tol;  // unset: 1e-10 on axisymmetric grids, 1e-8 on full 2-D grids
  int max_newton_iters = 50;
  double line_search_shrink = 0.5;
  int max_backtracks = 40;
  double t_step_init = 0.1;
  double t_step_min = 1e-4;
  double t_step_grow = 2.0;
  double eps_start = 0.1;
  double eps_ratio = 0.25;
  int eps_count = 8;
  bool eps_append_zero = false;
  bool enforce_even = false;

  double tolerance_for(const SphereGrid& grid) const;
  /// eps_start * eps_ratio^m for m < eps_count, then 0 when eps_append_zero.
  std::vector<double> eps_schedule() const;
  /// Throws ConfigError.
  void validate() const;
};

struct SolveReport {
  bool converged = false;
  std::vector<int> iterations;            // Newton iterations per continuation step
  std::vector<double> t_path;             // accepted t values
  std::vector<double> residual_history;   // sup-norm residual after every Newton iterate
  double t_final = 0.0;
  double last_good_t = 0.0;
  double eps = 0.0;
  double min_u = 0.0;
  double max_u = 0.0;
  bool admissible = false;
  bool convex = false;
  bool near_degenerate = false;
  std::string failure;  // empty on success
};

struct SolveResult {
  ScalarField u;
  SolveReport report;
};

/// Raised when the t step underflows; carries the last accepted state.
class ContinuationStuck : public Error {
public:
  ContinuationStuck(const std::string& what, SolveResult last)
      : Error(ErrorCode::ContinuationStuck, what), last_(std::move(last)) {}
  const SolveResult& last() const { return last_; }

private:
  SolveResult last_;
};

/// Fills the summary fields (extrema, admissibility, convexity) of a report.
void finalize_report(SolveReport& report, const ScalarField& u, const ProblemSpec& spec);

/// Newton on the problem at spec.t starting from u0.
SolveResult newton_solve(const ProblemSpec& spec, const ScalarField& u0, const SolveOptions& opts);

/// Marches t from 0 (u = 1 solves the t = 0 problem exactly) to spec.t.
SolveResult continuation_solve(const ProblemSpec& spec, const SolveOptions& opts);

struct EpsStep {
  double eps = 0.0;
  std::optional<ScalarField> u;  // empty when the solve failed
  SolveReport report;
  double lower_bound = 0.0;      // (C(n,k) eps^k / max f)^{1/p0}
  bool lower_bound_holds = false;
  bool warm_started = false;
};

/// Solves along opts.eps_schedule(), warm-starting from the previous eps and
/// falling back to a fresh continuation when the warm start fails.
std::vector<EpsStep> epsilon_continuation(const ProblemSpec& spec, const SolveOptions& opts);

/// sigma_k(W^eps_u) / u^p0 with the discrete operator, so that u solves the
/// resulting problem to round-off.
ScalarField manufacture_f(const ScalarField& u_target, const ProblemSpec& spec);

}  // namespace cmk
