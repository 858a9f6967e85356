// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "cmk/diagnostics.hpp"
#include "cmk/errors.hpp"
#include "cmk/problem.hpp"
#include "cmk/solver.hpp"
#include "cmk/symfun.hpp"

using namespace cmk;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double sup(const Eigen::VectorXd& v) { return v.cwiseAbs().maxCoeff(); }

ProblemSpec make_spec(GridPtr g, int k, double p0, double eps, ScalarField f) {
  return ProblemSpec{g->n(), k, p0, eps, 1.0, std::move(f)};
}

struct Solved {
  std::string name;
  ScalarField u;
  ProblemSpec spec;
};

// Every converged solution produced along the way; criteria 4, 5 and 7 sweep it.
std::vector<Solved> g_solutions;

// Pairs of the same problem at two resolutions, for the stability check of A_eff.
struct ResolutionPair {
  std::string name;
  Solved coarse;
  Solved fine;
};
std::vector<ResolutionPair> g_pairs;

int g_failures = 0;

void verdict(int id, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

void run_criterion(int id, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    verdict(id, false, std::string("exception: ") + e.what());
  }
}

// ---- 1 ---------------------------------------------------------------------------

void closed_form_reproduction() {
  const auto t0 = Clock::now();
  const int k = 2;
  const double p0 = 0.2;
  const double alpha = prop53_alpha(k, p0);
  const double f0 = prop53_f_value(3, k, alpha, 0.0);
  double res[2];
  const int js[2] = {128, 256};
  for (int i = 0; i < 2; ++i) {
    auto g = SphereGrid::build(3, GridKind::Axisymmetric, js[i]);
    const auto pair = prop53_example(g, k, p0);
    res[i] = sup(residual(pair.u, make_spec(g, k, p0, 0.0, pair.f)).values);
  }
  const double ratio = res[0] / res[1];
  const double elapsed = seconds_since(t0);
  const bool ok = std::abs(alpha - 10.0 / 9.0) < 1e-15 && std::abs(f0 - 263.0 / 81.0) < 1e-12 && ratio >= 3.5 &&
                  elapsed < 5.0;
  verdict(1, ok,
          fmt("alpha=%.15g f(0)=%.15g (263/81=%.15g) residual J=128 %.4e J=256 %.4e ratio=%.4f (need >= 3.5) "
              "time=%.2fs",
              alpha, f0, 263.0 / 81.0, res[0], res[1], ratio, elapsed));
}

// ---- 2 ---------------------------------------------------------------------------

void constant_recovery() {
  struct Case {
    int n, k;
    double p0;
  };
  const Case cases[] = {{2, 1, 0.5}, {3, 1, 0.5}, {3, 2, 0.5}, {3, 2, 1.0}, {3, 2, 1.4}};
  bool ok = true;
  double worst_err = 0;
  int worst_iters = 0;
  for (const auto& c : cases) {
    for (int j : {64, 128}) {
      auto g = SphereGrid::build(c.n, GridKind::Axisymmetric, j);
      const auto spec = make_spec(g, c.k, c.p0, 0.0, ScalarField(g, symfun::binomial(c.n, c.k)));
      const auto res = continuation_solve(spec, {});
      const double err = sup(res.u.values.array() - 1.0);
      int iters = 0;
      for (int it : res.report.iterations) iters = std::max(iters, it);
      ok = ok && res.report.converged && err <= 1e-10 && iters <= 8;
      worst_err = std::max(worst_err, err);
      worst_iters = std::max(worst_iters, iters);
      const std::string name = fmt("constant n=%d k=%d p0=%g", c.n, c.k, c.p0);
      Solved s{name, res.u, spec};
      g_solutions.push_back(s);
      if (j == 64) {
        g_pairs.push_back({name, s, s});
      } else {
        g_pairs.back().fine = s;
      }
    }
  }
  verdict(2, ok,
          fmt("5 cases x J in {64,128}: max |u-1| = %.3e (need <= 1e-10), max Newton iterations per step = %d "
              "(need <= 8)",
              worst_err, worst_iters));
}

// ---- 3 ---------------------------------------------------------------------------

void manufactured_round_trip() {
  struct Case {
    int n, k;
    GridKind kind;
    int j;
  };
  const Case cases[] = {{2, 1, GridKind::Full2D, 32}, {3, 2, GridKind::Axisymmetric, 128}};
  const double p0 = 0.5, amp = 0.1;
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    GridPtr grids[2] = {SphereGrid::build(c.n, c.kind, c.j, c.kind == GridKind::Full2D ? 2 * c.j : 0),
                        SphereGrid::build(c.n, c.kind, 2 * c.j, c.kind == GridKind::Full2D ? 4 * c.j : 0)};
    ScalarField sol[2];
    ProblemSpec specs[2];
    for (int i = 0; i < 2; ++i) {
      const ScalarField f = make_f(grids[i], {"manufactured", {{"amplitude", amp}}, ""}, c.k, p0, 0.0);
      specs[i] = make_spec(grids[i], c.k, p0, 0.0, f);
      const auto res = continuation_solve(specs[i], {});
      ok = ok && res.report.converged;
      sol[i] = res.u;
    }
    const double err = sup(sol[0].values - manufactured_target(grids[0], amp).values);
    const double est = (4.0 / 3.0) * sup(sol[0].values - restrict_from_fine(sol[1], grids[0]).values);
    ok = ok && err <= 5.0 * est;

    const auto starts = random_admissible_starts(grids[0], c.k, 0.0, 5, 20240101);
    const auto uniq = uniqueness_experiment(specs[0], starts, {});
    ok = ok && uniq.converged_count == 5 && uniq.max_pairwise <= 1e-8;

    const std::string name = fmt("manufactured n=%d k=%d %s", c.n, c.k, to_string(c.kind).c_str());
    g_solutions.push_back({name + " coarse", sol[0], specs[0]});
    g_solutions.push_back({name + " fine", sol[1], specs[1]});
    g_pairs.push_back({name, {name, sol[0], specs[0]}, {name, sol[1], specs[1]}});
    detail += fmt("[%s J=%d: err=%.3e richardson=%.3e err/est=%.3f (need <= 5), 5 starts converged=%d "
                  "max pairwise=%.2e (need <= 1e-8)] ",
                  name.c_str(), c.j, err, est, err / est, uniq.converged_count, uniq.max_pairwise);
  }
  verdict(3, ok, detail);
}

// ---- 6 (runs before 4, 5, 7 so its solutions join the sweep) -----------------------

void degeneracy_study() {
  const int n = 3, k = 2;
  const double p0 = 0.1;
  std::string detail;
  bool ok = true;

  auto g0 = SphereGrid::build(n, GridKind::Axisymmetric, 128);
  const auto pair0 = prop53_example(g0, k, p0);
  const auto cert = check_f_convexity(pair0.f, k, p0, pair0.alpha);
  const bool cert_ok = cert.passes && cert.q_min_on_interval && *cert.q_min_on_interval > 0.0;
  ok = ok && cert_ok;
  detail += fmt("certificate min_eig=%.4f Qmin=%.4f %s; ", cert.min_eigenvalue,
                cert.q_min_on_interval.value_or(std::nan("")), cert_ok ? "ok" : "FAILS");

  SolveOptions opts;  // eps_m = 0.1 * 4^-m, m = 0..7
  std::vector<double> tail_lambda;
  const int js[2] = {128, 256};
  for (int j : js) {
    auto g = SphereGrid::build(n, GridKind::Axisymmetric, j);
    const auto pair = prop53_example(g, k, p0);
    const auto spec = make_spec(g, k, p0, 0.0, pair.f);
    const auto steps = epsilon_continuation(spec, opts);
    bool all_solved = true, mono_u = true, bound = true, mono_lambda = true;
    double prev_u = INFINITY, prev_lambda = INFINITY, lambda = NAN;
    std::string lambdas;
    for (const auto& s : steps) {
      if (!s.u) {
        all_solved = false;
        continue;
      }
      const double mu = s.u->min();
      mono_u = mono_u && mu < prev_u;
      prev_u = mu;
      bound = bound && s.lower_bound_holds;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariant_w_at(*s.u, s.eps, 0), Eigen::EigenvaluesOnly);
      lambda = es.eigenvalues().minCoeff();
      mono_lambda = mono_lambda && lambda < prev_lambda;
      prev_lambda = lambda;
      lambdas += fmt("%.5f ", lambda);
      ProblemSpec at = spec;
      at.eps = s.eps;
      g_solutions.push_back({fmt("degenerate J=%d eps=%.3g", j, s.eps), *s.u, at});
    }
    const bool below = prev_u < 1e-2;
    ok = ok && all_solved && mono_u && below && bound && mono_lambda;
    tail_lambda.push_back(lambda);
    detail += fmt("J=%d: solved=%s min_u monotone=%s final min_u=%.3e (<1e-2 %s) lower bound=%s "
                  "pole lambda_min over eps {%s} monotone=%s; ",
                  j, all_solved ? "all" : "NOT all", mono_u ? "yes" : "no", prev_u, below ? "yes" : "no",
                  bound ? "holds" : "VIOLATED", lambdas.c_str(), mono_lambda ? "yes" : "no");
    if (j == 128) g_pairs.push_back({"degenerate eps tail", g_solutions.back(), g_solutions.back()});
    if (j == 256) g_pairs.back().fine = g_solutions.back();
  }
  const bool h_down = tail_lambda[1] < tail_lambda[0];
  ok = ok && h_down;
  detail += fmt("pole lambda_min at the last eps: J=128 %.6f -> J=256 %.6f (need decrease: %s)", tail_lambda[0],
                tail_lambda[1], h_down ? "yes" : "no");
  verdict(6, ok, detail);
}

// ---- 4 ---------------------------------------------------------------------------

void minkowski_identity() {
  bool ok = true;
  int checked = 0;
  std::string detail;
  for (const auto& s : g_solutions) {
    const auto& g = *s.u.grid;
    const bool axis_target = g.kind() == GridKind::Axisymmetric && g.n() == 3 && s.spec.k == 2 && g.n_theta() == 256;
    const bool full_target = g.kind() == GridKind::Full2D && s.spec.k == 1 && g.n_theta() == 64 && g.n_phi() == 128;
    if (!axis_target && !full_target) continue;
    if (!admissible(s.u, s.spec.k, 0.0)) continue;
    const double tol = axis_target ? 1e-4 : 1e-3;
    const double err = integral_identities(s.u, s.spec).at("minkowski_rel_err");
    ok = ok && err <= tol;
    ++checked;
    detail += fmt("[%s: %.3e <= %.0e] ", s.name.c_str(), err, tol);
  }
  ok = ok && checked >= 2;
  verdict(4, ok, fmt("%d solutions; ", checked) + detail);
}

// ---- 5 ---------------------------------------------------------------------------

void alexandrov_fenchel() {
  bool ok = true;
  int checked = 0;
  double worst = 0;
  for (const auto& s : g_solutions) {
    if (s.spec.k >= s.u.grid->n()) continue;
    const auto r = integral_identities(s.u, s.spec);
    if (!r.values.count("af_ratio")) continue;
    ok = ok && r.passed("af_inequality");
    worst = std::max(worst, r.at("af_ratio"));
    ++checked;
  }
  double eq_dev = 0;
  for (int n : {2, 3})
    for (int k = 1; k < n; ++k) {
      auto g = SphereGrid::build(n, GridKind::Axisymmetric, 64);
      for (double c : {1.0, 2.0}) {
        const auto r = integral_identities(ScalarField(g, c), make_spec(g, k, 0.5, 0.0, ScalarField(g, 1.0)));
        eq_dev = std::max(eq_dev, std::abs(r.at("af_ratio") - 1.0));
      }
    }
  ok = ok && eq_dev <= 1e-10 && checked > 0;
  verdict(5, ok,
          fmt("%d solutions in Gamma_{k+1}: max af_ratio=%.12f (need <= 1+1e-8); |ratio-1| for u=1,2 = %.2e "
              "(need <= 1e-10)",
              checked, worst, eq_dev));
}

// ---- 7 ---------------------------------------------------------------------------

void monitor_suite() {
  bool ok = true;
  int maxlb_fail = 0, phi_fail = 0, gll_fail = 0, gll_checked = 0;
  double worst_gll = INFINITY;
  for (const auto& s : g_solutions) {
    const auto r = apriori_monitors(s.u, s.spec);
    if (!r.passed("maxlb")) ++maxlb_fail;
    if (!r.passed("Phi_finite")) ++phi_fail;
    if (s.spec.k >= 2) {
      const auto gl = gll_check(s.u, s.spec);
      ++gll_checked;
      if (!gl.passed("gll")) ++gll_fail;
      if (gl.values.count("gll_min_relative_slack")) worst_gll = std::min(worst_gll, gl.at("gll_min_relative_slack"));
    }
  }
  ok = ok && maxlb_fail == 0 && phi_fail == 0 && gll_fail == 0;
  std::string detail = fmt("%zu solutions: maxlb failures=%d, Phi non-finite=%d, gll failures=%d of %d "
                           "(min relative slack %.3e, need >= -1e-3); ",
                           g_solutions.size(), maxlb_fail, phi_fail, gll_fail, gll_checked, worst_gll);

  double worst_change = 0;
  for (const auto& p : g_pairs) {
    const double a = apriori_monitors(p.coarse.u, p.coarse.spec).at("A_eff");
    const double b = apriori_monitors(p.fine.u, p.fine.spec).at("A_eff");
    const double scale = std::max(std::abs(a), std::abs(b));
    const double change = scale > 0 ? std::abs(a - b) / scale : 0.0;
    worst_change = std::max(worst_change, change);
    if (scale > 0) detail += fmt("A_eff[%s] %.5g -> %.5g; ", p.name.c_str(), a, b);
  }
  ok = ok && worst_change <= 0.1;
  detail += fmt("max relative A_eff change=%.3f (need <= 0.1); ", worst_change);

  // sigma_1 / u^alpha along the eps schedule, tail = last three entries.
  struct Case {
    const char* name;
    FSource f;
    double p0;
  };
  const Case cases[] = {{"closed-form p0=0.5", {"prop53", {}, ""}, 0.5},
                        {"legendre2 bump p0=1.0", {"legendre2_bump", {{"amplitude", 0.3}}, ""}, 1.0}};
  for (const auto& c : cases) {
    auto g = SphereGrid::build(3, GridKind::Axisymmetric, 128);
    const auto spec = make_spec(g, 2, c.p0, 0.0, make_f(g, c.f, 2, c.p0, 0.0));
    const double alpha = compute_alpha(2, c.p0);
    const auto steps = epsilon_continuation(spec, {});
    std::vector<double> tail;
    for (std::size_t i = steps.size() - 3; i < steps.size(); ++i) {
      if (steps[i].u) tail.push_back(sigma1_over_u_alpha_sup(*steps[i].u, steps[i].eps, alpha));
    }
    const bool solved = tail.size() == 3;
    const double lo = solved ? *std::min_element(tail.begin(), tail.end()) : NAN;
    const double hi = solved ? *std::max_element(tail.begin(), tail.end()) : NAN;
    const bool stable = solved && (hi - lo) <= 0.1 * lo;
    ok = ok && stable;
    detail += fmt("sigma1/u^alpha[%s, alpha=%.4f] tail %.5g..%.5g %s; ", c.name, alpha, lo, hi,
                  stable ? "stable" : "NOT stable");
  }
  verdict(7, ok, detail);
}

// ---- 8 ---------------------------------------------------------------------------

void quermass_consistency() {
  bool ok = true;
  double worst_p = 0, worst_mass = 0;
  for (const auto& s : g_solutions) {
    if (s.u.grid->kind() != GridKind::Axisymmetric || s.u.grid->n_theta() > 128) continue;
    for (int k = 1; k <= s.u.grid->n(); ++k) {
      const double w1 = p_area_and_quermass(s.u, s.u, 1.0, k).w_pk;
      for (double p : {2.0, 3.0}) {
        const double wp = p_area_and_quermass(s.u, s.u, p, k).w_pk;
        worst_p = std::max(worst_p, std::abs(wp - w1) / std::abs(w1));
      }
    }
  }
  for (int n : {2, 3})
    for (int k = 1; k <= n; ++k) {
      auto g = SphereGrid::build(n, GridKind::Axisymmetric, 128);
      const double mass = p_area_and_quermass(ScalarField(g, 1.0), ScalarField(g, 1.0), 1.0, k).total_mass;
      const double want = symfun::binomial(n, n - k) * sphere_measure(n);
      worst_mass = std::max(worst_mass, std::abs(mass - want) / want);
    }
  auto g2 = SphereGrid::build(2, GridKind::Full2D, 32, 64);
  for (int k = 1; k <= 2; ++k) {
    const double mass = p_area_and_quermass(ScalarField(g2, 1.0), ScalarField(g2, 1.0), 1.0, k).total_mass;
    const double want = symfun::binomial(2, 2 - k) * sphere_measure(2);
    worst_mass = std::max(worst_mass, std::abs(mass - want) / want);
  }
  ok = worst_p <= 1e-12 && worst_mass <= 1e-4;
  verdict(8, ok,
          fmt("max relative spread of W_{p,k}(K,K) over p in {1,2,3} = %.2e (need <= 1e-12); "
              "unit-ball mass relative error = %.2e (need <= 1e-4)",
              worst_p, worst_mass));
}

// ---- 9 ---------------------------------------------------------------------------

void ode_representation() {
  const int n = 3, k = 2;
  const double p0 = 0.5, amp = 0.1;
  double rec[2], gid[2];
  bool ok = true;
  const int js[2] = {128, 256};
  for (int i = 0; i < 2; ++i) {
    auto g = SphereGrid::build(n, GridKind::Axisymmetric, js[i]);
    const auto spec = make_spec(g, k, p0, 0.0, make_f(g, {"manufactured", {{"amplitude", amp}}, ""}, k, p0, 0.0));
    const auto res = continuation_solve(spec, {});
    ok = ok && res.report.converged;
    const auto r = ode_repr_check(res.u, spec);
    ok = ok && 2 * r.at("half_distance_d") <= std::numbers::pi / 2 + 1e-15;
    rec[i] = r.at("reconstruction_err");
    gid[i] = r.at("g_identity_err");
  }
  const double r1 = rec[0] / rec[1], r2 = gid[0] / gid[1];
  ok = ok && r1 >= 3.5 && r2 >= 3.5;
  verdict(9, ok,
          fmt("reconstruction err J=128 %.3e J=256 %.3e ratio %.3f; G identity err %.3e -> %.3e ratio %.3f "
              "(need >= 3.5)",
              rec[0], rec[1], r1, gid[0], gid[1], r2));
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  run_criterion(1, closed_form_reproduction);
  run_criterion(2, constant_recovery);
  run_criterion(3, manufactured_round_trip);
  // Criterion 6 runs before 4, 5 and 7 so its solutions join their sweeps.
  run_criterion(6, degeneracy_study);
  run_criterion(4, minkowski_identity);
  run_criterion(5, alexandrov_fenchel);
  run_criterion(7, monitor_suite);
  run_criterion(8, quermass_consistency);
  run_criterion(9, ode_representation);
  std::printf("total %.1fs, %d failing\n", seconds_since(t0), g_failures);
  return g_failures == 0 ? 0 : 1;
}
