#pragma once

// Post-hoc monitors on support functions and solutions: a priori bounds,
// integral identities, p-area measures, the concavity inequality along the
// solution, the meridian ODE representation and multi-start uniqueness.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cmk/problem.hpp"
#include "cmk/solver.hpp"

namespace cmk {

struct MonitorReport {
  std::map<std::string, double> values;
  std::map<std::string, bool> passes;
  std::map<std::string, std::string> notes;

  void set(const std::string& name, double v) { values[name] = v; }
  void flag(const std::string& name, bool ok) { passes[name] = ok; }
  double at(const std::string& name) const;
  bool passed(const std::string& name) const;
  bool all_passed() const;
  void merge(const MonitorReport& other);
};

/// Gradient and maximum-principle monitors: gamma, Phi = |grad u|^2 / (u - min u)^gamma,
/// A_eff = sup Phi / max u^(2 - gamma), the lower bound on max u and the
/// half-maximum ball of radius 1 / (2 sqrt(A_eff)) around the argmax.
MonitorReport apriori_monitors(const ScalarField& u, const ProblemSpec& spec);

/// gamma = 2 / (N^2 + 2), N = n (1 + 2 delta), delta = 1e-10.
double gradient_exponent(int n);

/// Values of the three constraints on alpha (each feasible when >= 0).
std::array<double, 3> alpha_constraints(int k, double p0, double alpha);

/// Largest alpha >= 0 satisfying all constraints, by bisection to 1e-6.
/// Needs k >= 2 (NotApplicable) and (k-1)/2 <= p0 < k (OutOfRange).
double compute_alpha(int k, double p0);

/// sup over nodes of sigma_1(W^eps_u) / u^alpha.
double sigma1_over_u_alpha_sup(const ScalarField& u, double eps, double alpha);

enum class ConvexityClass { Convex, AdmissibleOnly, Neither };
std::string to_string(ConvexityClass c);

struct ConvexityRankReport {
  ScalarField min_eigenvalue;
  ConvexityClass classification = ConvexityClass::Neither;
};

/// Per-node smallest eigenvalue of W^eps_u. Convex when every value exceeds
/// tol; admissible-only when W stays in Gamma_k but some eigenvalue does not.
ConvexityRankReport convexity_rank_report(const ScalarField& u, double eps, int k, double tol = 0.0);

/// Minkowski identity error and the ratio in the integrated
/// Alexandrov-Fenchel inequality between int sigma_k and int sigma_{k+1}.
/// Uses W_u without the eps shift. k = n throws MinkowskiNotApplicable.
MonitorReport integral_identities(const ScalarField& u, const ProblemSpec& spec);

/// (C(n,k+1) |S^n|)^{1/(k+1)} / (C(n,k) |S^n|)^{1/k}
double af_constant(int n, int k);

struct PAreaResult {
  ScalarField measure;  // uK^{1-p} sigma_{n-k}(W_uK)
  double total_mass = 0.0;
  double w_pk = 0.0;    // (1/(n+1)) int uL^p uK^{1-p} sigma_{n-k}(W_uK)
};

PAreaResult p_area_and_quermass(const ScalarField& uK, const ScalarField& uL, double p, int k);

/// Slack of the concavity inequality with xi = nabla_s W^eps_u for every node
/// and frame direction s. Pass when slack >= -1e-3 sigma_k(W) at every node.
MonitorReport gll_check(const ScalarField& u, const ProblemSpec& spec);

/// Covariant derivative of W along frame direction s at a node, from
/// central differences of the assembled W field.
Eigen::MatrixXd covariant_w_derivative(const WField& wf, std::size_t node, int s);

/// Meridian ODE check between the maximum and minimum of an even
/// axisymmetric u: reconstructs u(d) from g = u'' + u and tests
/// G(d) = (u(d) + M) sin d.
MonitorReport ode_repr_check(const ScalarField& u, const ProblemSpec& spec);

struct UniquenessReport {
  std::vector<std::string> status;               // "converged" or the error text
  std::vector<std::optional<ScalarField>> solutions;
  Eigen::MatrixXd pairwise;                      // NaN where either run failed
  double max_pairwise = 0.0;
  std::vector<double> evenness_defect;           // NaN for failed runs
  int converged_count = 0;
};

UniquenessReport uniqueness_experiment(const ProblemSpec& spec, const std::vector<ScalarField>& starts,
                                       const SolveOptions& opts);

/// Every monitor that applies to u: a priori bounds, convexity class,
/// integral identities, concavity slack and the meridian ODE check. Monitors
/// whose hypotheses fail are listed under notes instead.
MonitorReport full_diagnostics(const ScalarField& u, const ProblemSpec& spec);

/// Random admissible starts c (1 + a P2 + linear terms), deterministic in seed.
std::vector<ScalarField> random_admissible_starts(GridPtr grid, int k, double eps, int count, std::uint64_t seed);

}  // namespace cmk
