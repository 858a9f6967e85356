#include "cmk/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "cmk/errors.hpp"
#include "cmk/parallel.hpp"
#include "cmk/symfun.hpp"

namespace cmk {

using symfun::binomial;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ScalarField map_nodes(const GridPtr& grid, const std::function<double(std::size_t)>& fn) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(grid->size()));
  parallel_for(grid->size(), [&](std::size_t i) { v[static_cast<Eigen::Index>(i)] = fn(i); });
  return {grid, std::move(v)};
}

}  // namespace

double MonitorReport::at(const std::string& name) const {
  const auto it = values.find(name);
  if (it == values.end()) throw Error(ErrorCode::OutOfRange, "no monitor named " + name);
  return it->second;
}

bool MonitorReport::passed(const std::string& name) const {
  const auto it = passes.find(name);
  if (it == passes.end()) throw Error(ErrorCode::OutOfRange, "no pass flag named " + name);
  return it->second;
}

bool MonitorReport::all_passed() const {
  return std::all_of(passes.begin(), passes.end(), [](const auto& kv) { return kv.second; });
}

void MonitorReport::merge(const MonitorReport& other) {
  for (const auto& [k, v] : other.values) values[k] = v;
  for (const auto& [k, v] : other.passes) passes[k] = v;
  for (const auto& [k, v] : other.notes) notes[k] = v;
}

double gradient_exponent(int n) {
  const double delta = 1e-10;
  const double big_n = n * (1.0 + 2.0 * delta);
  return 2.0 / (big_n * big_n + 2.0);
}

MonitorReport apriori_monitors(const ScalarField& u, const ProblemSpec& spec) {
  if (!(u.min() > 0.0)) throw Error(ErrorCode::NonpositiveSupport, "u <= 0 at some node");
  const auto& g = *u.grid;
  const int n = g.n();
  const double gamma = gradient_exponent(n);
  const double big_m = u.max();
  const double small_m = u.min();
  const auto wf = covariant_w(u, spec.eps);

  const auto phi = map_nodes(u.grid, [&](std::size_t i) {
    const double gap = u[i] - small_m;
    if (gap < 1e-12) return 0.0;
    return wf.grad[i].squaredNorm() / std::pow(gap, gamma);
  });
  const double phi_sup = phi.max();
  const double a_eff = phi_sup / std::pow(big_m, 2.0 - gamma);

  MonitorReport r;
  r.set("max_u", big_m);
  r.set("min_u", small_m);
  r.set("gamma", gamma);
  r.set("Phi_sup", phi_sup);
  r.set("A_eff", a_eff);
  r.flag("Phi_finite", std::isfinite(phi_sup));

  // At the maximum W^eps <= (M + eps) I, so C(n,k) (M + eps)^k >= M^p0 min f.
  const double cnk = binomial(n, spec.k);
  const double fmin = effective_f(spec).min();
  const double maxlb_rhs = std::pow(fmin / cnk, 1.0 / (spec.k - spec.p0));
  r.set("maxlb_rhs", maxlb_rhs);
  if (spec.eps == 0.0) {
    r.flag("maxlb", big_m >= maxlb_rhs);
  } else {
    r.flag("maxlb", cnk * std::pow(big_m + spec.eps, spec.k) >= std::pow(big_m, spec.p0) * fmin);
    r.notes["maxlb"] = "eps > 0: checked as C(n,k) (M + eps)^k >= M^p0 min f";
  }

  std::size_t argmax = 0;
  for (std::size_t i = 1; i < u.size(); ++i)
    if (u[i] > u[argmax]) argmax = i;
  const double radius = a_eff > 0.0 ? 1.0 / (2.0 * std::sqrt(a_eff)) : std::numbers::pi;
  double ball_min = big_m;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (g.distance(argmax, i) <= radius) ball_min = std::min(ball_min, u[i]);
  r.set("harnack_radius", radius);
  r.set("harnack_ball_min_ratio", ball_min / big_m);
  r.flag("harnack_ball", ball_min >= 0.5 * big_m);

  if (spec.k >= 2 && spec.p0 >= 0.5 * (spec.k - 1) && spec.p0 < spec.k) {
    const double alpha = compute_alpha(spec.k, spec.p0);
    r.set("alpha_used", alpha);
    r.set("sigma1_over_u_alpha_sup", sigma1_over_u_alpha_sup(u, spec.eps, alpha));
  }
  return r;
}

std::array<double, 3> alpha_constraints(int k, double p0, double a) {
  const double km1 = k - 1.0;
  const double c1 = p0 - k * a;
  const double c2 = (2.0 / km1) * p0 * p0 - p0 + ((k - 5.0) / km1) * a * p0 - k * a * (1.0 + a) +
                    (2.0 * k / km1) * a * a;
  const double c3 = (p0 - 0.5 - (1.0 / km1 + 0.5) * a) - p0 * (k - 2.0) / km1;
  return {c1, c2, c3};
}

double compute_alpha(int k, double p0) {
  if (k < 2) throw Error(ErrorCode::NotApplicable, "k = 1 needs no alpha (linear theory)");
  if (!(p0 >= 0.5 * (k - 1)) || !(p0 < k)) {
    throw Error(ErrorCode::OutOfRange, "alpha selection needs (k-1)/2 <= p0 < k");
  }
  auto feasible = [&](double a) {
    const auto c = alpha_constraints(k, p0, a);
    return c[0] >= 0.0 && c[1] >= 0.0 && c[2] >= 0.0;
  };
  if (!feasible(0.0)) return 0.0;  // boundary case p0 = (k-1)/2 up to round-off
  // c1 and c3 cap alpha linearly; the feasible set below that cap may still
  // split where the quadratic constraint dips, so scan before bisecting.
  const double km1 = k - 1.0;
  const double cap3 = (p0 - 0.5 - p0 * (k - 2.0) / km1) / (1.0 / km1 + 0.5);
  const double cap = std::max(0.0, std::min(p0 / k, cap3));
  constexpr int kScan = 4096;
  double lo = 0.0;
  double hi = cap;
  bool found_gap = false;
  for (int i = kScan; i >= 0; --i) {
    const double a = cap * i / kScan;
    if (feasible(a)) {
      lo = a;
      hi = (i == kScan) ? a : cap * (i + 1) / kScan;
      found_gap = i != kScan;
      break;
    }
  }
  if (!found_gap) return lo;
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? lo : hi) = mid;
  }
  return lo;
}

double sigma1_over_u_alpha_sup(const ScalarField& u, double eps, double alpha) {
  const auto q = map_nodes(u.grid, [&](std::size_t i) {
    return covariant_w_at(u, eps, i).trace() / std::pow(u[i], alpha);
  });
  return q.max();
}

std::string to_string(ConvexityClass c) {
  switch (c) {
    case ConvexityClass::Convex: return "convex";
    case ConvexityClass::AdmissibleOnly: return "admissible-only";
    case ConvexityClass::Neither: return "neither";
  }
  return "neither";
}

ConvexityRankReport convexity_rank_report(const ScalarField& u, double eps, int k, double tol) {
  const auto wf = covariant_w(u, eps);
  ConvexityRankReport r;
  r.min_eigenvalue = ScalarField(u.grid, Eigen::Map<const Eigen::VectorXd>(wf.eig_min.data(),
                                                                           static_cast<Eigen::Index>(wf.size())));
  const bool convex = std::all_of(wf.eig_min.begin(), wf.eig_min.end(), [&](double e) { return e > tol; });
  bool cone = true;
  for (const auto& w : wf.w) cone = cone && symfun::in_gamma_k(w, k);
  r.classification = convex ? ConvexityClass::Convex : (cone ? ConvexityClass::AdmissibleOnly : ConvexityClass::Neither);
  return r;
}

double af_constant(int n, int k) {
  const double s = sphere_measure(n);
  return std::pow(binomial(n, k + 1) * s, 1.0 / (k + 1)) / std::pow(binomial(n, k) * s, 1.0 / k);
}

MonitorReport integral_identities(const ScalarField& u, const ProblemSpec& spec) {
  const int n = u.grid->n();
  const int k = spec.k;
  if (k >= n) throw Error(ErrorCode::MinkowskiNotApplicable, "Minkowski identity needs k <= n-1");
  const auto wf = covariant_w(u, 0.0);
  Eigen::VectorXd usk(static_cast<Eigen::Index>(u.size()));
  Eigen::VectorXd sk(usk.size());
  Eigen::VectorXd sk1(usk.size());
  bool cone_k1 = true;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto sig = symfun::sigma_all(wf.w[i], k + 1);
    const auto ii = static_cast<Eigen::Index>(i);
    sk[ii] = sig[k];
    sk1[ii] = sig[k + 1];
    usk[ii] = u[i] * sig[k];
    for (int j = 1; j <= k + 1; ++j) cone_k1 = cone_k1 && sig[j] > 0.0;
  }
  const double i_usk = integrate({u.grid, usk});
  const double i_sk = integrate({u.grid, sk});
  const double i_sk1 = integrate({u.grid, sk1});

  MonitorReport r;
  r.set("minkowski_lhs", i_usk);
  r.set("minkowski_rhs", (k + 1.0) / (n - k) * i_sk1);
  r.set("minkowski_rel_err", std::abs(i_usk - (k + 1.0) / (n - k) * i_sk1) / std::abs(i_usk));
  if (cone_k1 && i_sk > 0.0 && i_sk1 > 0.0) {
    const double ratio = std::pow(i_sk1, 1.0 / (k + 1)) / (af_constant(n, k) * std::pow(i_sk, 1.0 / k));
    r.set("af_ratio", ratio);
    r.flag("af_inequality", ratio <= 1.0 + 1e-8);
  } else {
    r.notes["af_ratio"] = "W leaves Gamma_{k+1}; inequality not applicable";
  }
  return r;
}

PAreaResult p_area_and_quermass(const ScalarField& uK, const ScalarField& uL, double p, int k) {
  if (!(uK.min() > 0.0)) throw Error(ErrorCode::NonpositiveSupport, "uK <= 0 at some node");
  const int n = uK.grid->n();
  if (k < 1 || k > n) throw Error(ErrorCode::InvalidOrder, "need 1 <= k <= n");
  if (uL.size() != uK.size()) throw Error(ErrorCode::DimensionMismatch, "uK and uL live on different grids");
  PAreaResult r;
  r.measure = map_nodes(uK.grid, [&](std::size_t i) {
    return std::pow(uK[i], 1.0 - p) * symfun::sigma_k(covariant_w_at(uK, 0.0, i), n - k);
  });
  r.total_mass = integrate(r.measure);
  ScalarField weighted(uK.grid, (uL.values.array().pow(p) * r.measure.values.array()).matrix());
  r.w_pk = integrate(weighted) / (n + 1);
  return r;
}

Eigen::MatrixXd covariant_w_derivative(const WField& wf, std::size_t node, int s) {
  const auto& g = *wf.grid;
  const int n = g.n();
  const int j = g.row(node);
  const int m = g.col(node);
  const double th = g.theta(node);
  const double cot = std::cos(th) / std::sin(th);
  const auto& w = wf.w[node];

  if (s == 0) {
    const auto& up = wf.w[g.neighbor(j + 1, m)];
    const auto& dn = wf.w[g.neighbor(j - 1, m)];
    return (up - dn) / (2.0 * g.h_theta());
  }
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  if (g.kind() == GridKind::Axisymmetric) {
    // Only the meridian direction turns: d_i e_theta = cot e_i.
    const double c = cot * (w(0, 0) - w(s, s));
    d(0, s) = c;
    d(s, 0) = c;
    return d;
  }
  const auto& east = wf.w[g.neighbor(j, m + 1)];
  const auto& west = wf.w[g.neighbor(j, m - 1)];
  const Eigen::MatrixXd dphi = (east - west) / (2.0 * g.h_phi() * std::sin(th));
  d(0, 0) = dphi(0, 0) - 2.0 * cot * w(0, 1);
  d(0, 1) = dphi(0, 1) - cot * (w(1, 1) - w(0, 0));
  d(1, 0) = d(0, 1);
  d(1, 1) = dphi(1, 1) + 2.0 * cot * w(0, 1);
  return d;
}

MonitorReport gll_check(const ScalarField& u, const ProblemSpec& spec) {
  if (spec.k < 2) throw Error(ErrorCode::NotApplicable, "concavity inequality needs k >= 2");
  const auto wf = covariant_w(u, spec.eps);
  const auto& g = *u.grid;
  // Tangential directions of an axisymmetric grid are equivalent.
  const int dirs = g.kind() == GridKind::Axisymmetric ? std::min(2, g.n()) : g.n();
  std::vector<double> worst(u.size(), std::numeric_limits<double>::infinity());
  std::vector<double> worst_rel(u.size(), std::numeric_limits<double>::infinity());
  std::vector<char> cone(u.size(), 1);
  parallel_for(u.size(), [&](std::size_t i) {
    if (!symfun::in_gamma_k(wf.w[i], spec.k)) {
      cone[i] = 0;
      return;
    }
    const double scale = symfun::sigma_k(wf.w[i], spec.k);
    for (int s = 0; s < dirs; ++s) {
      const double slack = symfun::concavity_slack(wf.w[i], covariant_w_derivative(wf, i, s), spec.k);
      worst[i] = std::min(worst[i], slack);
      worst_rel[i] = std::min(worst_rel[i], slack / scale);
    }
  });
  MonitorReport r;
  const bool admissible = std::all_of(cone.begin(), cone.end(), [](char c) { return c != 0; });
  if (!admissible) {
    r.notes["gll"] = "W leaves Gamma_k; inequality not applicable";
    r.flag("gll", false);
    return r;
  }
  r.set("gll_min_slack", *std::min_element(worst.begin(), worst.end()));
  const double rel = *std::min_element(worst_rel.begin(), worst_rel.end());
  r.set("gll_min_relative_slack", rel);
  r.flag("gll", rel >= -1e-3);
  return r;
}

MonitorReport ode_repr_check(const ScalarField& u, const ProblemSpec& spec) {
  (void)spec;
  const auto& g = *u.grid;
  if (g.kind() != GridKind::Axisymmetric) throw Error(ErrorCode::NotApplicable, "needs an axisymmetric grid");
  const int jn = g.n_theta();
  const double scale = std::max(1.0, u.values.cwiseAbs().maxCoeff());
  if (evenness_defect(u) > 1e-8 * scale) throw Error(ErrorCode::NotApplicable, "u is not even");

  MonitorReport r;
  if (u.max() - u.min() <= 1e-12 * scale) {
    r.set("ode_repr_err", 0.0);
    r.set("g_identity_err", 0.0);
    r.notes["ode_repr"] = "degenerate: argmax and argmin coincide";
    r.flag("ode_repr", true);
    return r;
  }

  // Even axisymmetric data: the extrema of the upper half meridian sit at the
  // pole or the equator. Endpoint values by even quadratic extrapolation.
  const int half = jn / 2;
  const double u_pole = (9.0 * u[0] - u[1]) / 8.0;
  const double u_equator = (9.0 * u[static_cast<std::size_t>(half - 1)] - u[static_cast<std::size_t>(half - 2)]) / 8.0;
  const double hi = std::max(u_pole, u_equator);
  const double lo = std::min(u_pole, u_equator);
  const double slack = 1e-6 * scale;
  for (int j = 0; j < half; ++j) {
    const double v = u[static_cast<std::size_t>(j)];
    if (v > hi + slack || v < lo - slack) {
      throw Error(ErrorCode::NotApplicable, "extrema are not at the pole and the equator");
    }
  }
  const double d = std::numbers::pi / 4.0;
  r.set("half_distance_d", d);
  const bool from_pole = u_pole >= u_equator;
  const double big_m = hi;
  const double u_d = lo;

  const auto wf = covariant_w(u, 0.0);
  const double h = g.h_theta();
  // Cells tile [-d, d]; t measured from the argmax.
  std::vector<double> gval(static_cast<std::size_t>(half));
  std::vector<double> tc(static_cast<std::size_t>(half));
  for (int c = 0; c < half; ++c) {
    const int j = from_pole ? c : half - 1 - c;
    gval[static_cast<std::size_t>(c)] = wf.w[static_cast<std::size_t>(j)](0, 0);
    tc[static_cast<std::size_t>(c)] = -d + (c + 0.5) * h;
  }
  std::vector<double> gface(static_cast<std::size_t>(half) + 1, 0.0);
  for (int c = 0; c < half; ++c) {
    gface[static_cast<std::size_t>(c) + 1] =
        gface[static_cast<std::size_t>(c)] + gval[static_cast<std::size_t>(c)] * std::cos(tc[static_cast<std::size_t>(c)]) * h;
  }
  double integral = 0.0;
  for (int c = 0; c < half; ++c) {
    const double ta = -d + c * h;
    const double tb = ta + h;
    integral += 0.5 * h *
                (gface[static_cast<std::size_t>(c)] / std::pow(std::cos(ta), 2) +
                 gface[static_cast<std::size_t>(c) + 1] / std::pow(std::cos(tb), 2));
  }
  const double u_repr = std::cos(d) * integral + big_m * std::cos(2.0 * d);
  const double g_d = gface.back();
  const double ode_err = std::abs(u_repr - u_d);
  const double g_err = std::abs(g_d - (u_d + big_m) * std::sin(d));
  r.set("max_u", big_m);
  r.set("u_d", u_d);
  r.set("u_d_reconstructed", u_repr);
  r.set("G_d", g_d);
  r.set("ode_repr_err", std::max(ode_err, g_err));
  r.set("reconstruction_err", ode_err);
  r.set("g_identity_err", g_err);
  r.flag("ode_repr", std::isfinite(ode_err) && std::isfinite(g_err));
  return r;
}

MonitorReport full_diagnostics(const ScalarField& u, const ProblemSpec& spec) {
  MonitorReport r = apriori_monitors(u, spec);
  const auto rank = convexity_rank_report(u, spec.eps, spec.k);
  r.set("min_eigenvalue", rank.min_eigenvalue.min());
  r.notes["convexity_class"] = to_string(rank.classification);
  auto attempt = [&](const char* name, auto&& fn) {
    try {
      r.merge(fn());
    } catch (const Error& e) {
      r.notes[name] = e.what();
    }
  };
  attempt("integral_identities", [&] { return integral_identities(u, spec); });
  attempt("gll", [&] { return gll_check(u, spec); });
  attempt("ode_repr", [&] { return ode_repr_check(u, spec); });
  return r;
}

UniquenessReport uniqueness_experiment(const ProblemSpec& spec, const std::vector<ScalarField>& starts,
                                       const SolveOptions& opts) {
  UniquenessReport r;
  const auto count = starts.size();
  r.status.assign(count, "");
  r.solutions.assign(count, std::nullopt);
  r.evenness_defect.assign(count, kNaN);
  // Runs are independent; the node loops inside each run already use the
  // worker pool, so the starts are solved one after another.
  for (std::size_t i = 0; i < count; ++i) {
    try {
      auto res = newton_solve(spec, starts[i], opts);
      r.evenness_defect[i] = evenness_defect(res.u);
      r.solutions[i] = std::move(res.u);
      r.status[i] = "converged";
      ++r.converged_count;
    } catch (const Error& e) {
      r.status[i] = e.what();
    }
  }
  r.pairwise = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(count), kNaN);
  for (std::size_t a = 0; a < count; ++a)
    for (std::size_t b = 0; b < count; ++b) {
      if (!r.solutions[a] || !r.solutions[b]) continue;
      const double diff = (r.solutions[a]->values - r.solutions[b]->values).cwiseAbs().maxCoeff();
      r.pairwise(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = diff;
      r.max_pairwise = std::max(r.max_pairwise, diff);
    }
  return r;
}

std::vector<ScalarField> random_admissible_starts(GridPtr grid, int k, double eps, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> scale(0.5, 2.0);
  std::uniform_real_distribution<double> bump(-0.15, 0.15);
  std::uniform_real_distribution<double> shift(-0.2, 0.2);
  const bool full = grid->kind() == GridKind::Full2D;
  std::vector<ScalarField> out;
  while (static_cast<int>(out.size()) < count) {
    const double c = scale(rng);
    const double a = bump(rng);
    const double b = bump(rng);
    const double lz = shift(rng);
    const double lx = full ? shift(rng) : 0.0;
    const double ly = full ? shift(rng) : 0.0;
    auto u = ScalarField::sample(grid, [&](double th, double ph) {
      const double ct = std::cos(th);
      const double st = std::sin(th);
      const double p2 = 0.5 * (3.0 * ct * ct - 1.0);
      // Linear terms translate the body and leave W unchanged.
      const double lin = lz * ct + lx * st * std::cos(ph) + ly * st * std::sin(ph);
      const double tilt = full ? b * st * st * std::cos(2.0 * ph) : 0.0;
      return c * (1.0 + a * p2 + tilt + lin);
    });
    if (admissible(u, k, eps)) out.push_back(std::move(u));
  }
  return out;
}

}  // namespace cmk
