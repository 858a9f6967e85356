#include "cmk/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cmk/errors.hpp"
#include "cmk/parallel.hpp"
#include "cmk/symfun.hpp"

namespace cmk {

using symfun::binomial;

void ProblemSpec::validate() const {
  if (!f.grid) throw Error(ErrorCode::InvalidProblem, "f has no grid");
  if (f.grid->n() != n) throw Error(ErrorCode::InvalidProblem, "grid dimension differs from n");
  if (k < 1 || k > n) throw Error(ErrorCode::InvalidProblem, "need 1 <= k <= n");
  if (!(p0 > 0.0 && p0 < k)) throw Error(ErrorCode::InvalidProblem, "need 0 < p0 < k");
  if (!(eps >= 0.0)) throw Error(ErrorCode::InvalidProblem, "eps must be >= 0");
  if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::InvalidHomotopyParameter, "t outside [0, 1]");
  if (!(f.min() > 0.0) || !f.values.allFinite()) {
    throw Error(ErrorCode::InvalidProblem, "f must be finite and positive at every node");
  }
}

double sigma_k_axisym(int n, int k, double radial, double tangential) {
  if (k == 0) return 1.0;
  return binomial(n - 1, k) * std::pow(tangential, k) +
         binomial(n - 1, k - 1) * radial * std::pow(tangential, k - 1);
}

double legendre2(double theta) {
  const double c = std::cos(theta);
  return 0.5 * (3.0 * c * c - 1.0);
}

ScalarField manufactured_target(GridPtr grid, double amplitude) {
  return ScalarField::sample(std::move(grid), [amplitude](double th, double) {
    const double c = std::cos(th);
    return 1.0 + amplitude * c * c;
  });
}

ScalarField make_f(GridPtr grid, const FSource& src, int k, double p0, double eps) {
  const int n = grid->n();
  auto param = [&](const std::string& key, double fallback) {
    const auto it = src.params.find(key);
    return it == src.params.end() ? fallback : it->second;
  };
  if (src.kind == "constant") {
    return ScalarField(grid, param("value", binomial(n, k)));
  }
  if (src.kind == "prop53") {
    return prop53_example(grid, k, p0).f;
  }
  if (src.kind == "manufactured") {
    const double a = param("amplitude", 0.1);
    return ScalarField::sample(grid, [=](double th, double) {
      const double c = std::cos(th);
      const double u = 1.0 + a * c * c;
      const double du = -a * std::sin(2.0 * th);
      const double ddu = -2.0 * a * std::cos(2.0 * th);
      const double radial = ddu + u + eps;
      const double tangential = (c / std::sin(th)) * du + u + eps;
      return sigma_k_axisym(n, k, radial, tangential) / std::pow(u, p0);
    });
  }
  if (src.kind == "legendre2_bump") {
    const double c = param("amplitude", 0.3);
    return ScalarField::sample(grid, [=](double th, double) {
      return std::pow(1.0 + c * legendre2(th), -(k + p0));
    });
  }
  if (src.kind == "csv") {
    return read_csv(grid, src.csv_path);
  }
  throw Error(ErrorCode::ConfigError, "unknown f kind '" + src.kind + "'");
}

ScalarField homotopy_f(double t, const ScalarField& f, int n, int k, double p0) {
  if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::InvalidHomotopyParameter, "t outside [0, 1]");
  if (!(f.min() > 0.0)) throw Error(ErrorCode::InvalidProblem, "f must be positive");
  if (t == 1.0) return f;
  const double q = p0 + k;
  const double c0 = std::pow(binomial(n, k), -1.0 / q);
  Eigen::VectorXd v(f.values.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = std::pow(t * std::pow(f.values[i], -1.0 / q) + (1.0 - t) * c0, -q);
  }
  return {f.grid, std::move(v)};
}

ScalarField effective_f(const ProblemSpec& spec) { return homotopy_f(spec.t, spec.f, spec.n, spec.k, spec.p0); }

Eigen::VectorXd residual_values(const ScalarField& u, const ProblemSpec& spec, const Eigen::VectorXd& ft) {
  if (!(u.min() > 0.0)) throw Error(ErrorCode::NonpositiveSupport, "u <= 0 at some node");
  Eigen::VectorXd r(u.values.size());
  parallel_for(u.size(), [&](std::size_t node) {
    const auto w = covariant_w_at(u, spec.eps, node);
    const auto i = static_cast<Eigen::Index>(node);
    r[i] = symfun::sigma_k(w, spec.k) - std::pow(u.values[i], spec.p0) * ft[i];
  });
  return r;
}

ScalarField residual(const ScalarField& u, const ProblemSpec& spec) {
  spec.validate();
  const auto ft = effective_f(spec);
  return {u.grid, residual_values(u, spec, ft.values)};
}

bool admissible(const ScalarField& u, int k, double eps) {
  if (!(u.min() > 0.0)) return false;
  for (std::size_t node = 0; node < u.size(); ++node) {
    if (!symfun::in_gamma_k(covariant_w_at(u, eps, node), k)) return false;
  }
  return true;
}

LinearOperator linearize_with(const ScalarField& u, const ProblemSpec& spec, const Eigen::VectorXd& ft) {
  const auto& g = *u.grid;
  const int n = g.n();
  if (!(u.min() > 0.0)) throw Error(ErrorCode::NonpositiveSupport, "u <= 0 at some node");

  std::vector<std::vector<Eigen::Triplet<double>>> rows(g.size());
  std::vector<char> bad(g.size(), 0);
  parallel_for(g.size(), [&](std::size_t node) {
    const auto w = covariant_w_at(u, spec.eps, node);
    if (!symfun::in_gamma_k(w, spec.k)) {
      bad[node] = 1;
      return;
    }
    const auto grad = symfun::sigma_k_grad(w, spec.k);
    auto& out = rows[node];
    const auto r = static_cast<int>(node);
    double diag = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const double fij = grad(i, j) * (i == j ? 1.0 : 2.0);
        if (fij == 0.0) continue;
        for (const auto& term : g.w_stencil(node, SphereGrid::component(i, j, n))) {
          out.emplace_back(r, static_cast<int>(term.col), fij * term.coeff);
          diag -= fij * term.coeff;
        }
        if (i == j) diag += fij;
      }
    const auto ii = static_cast<Eigen::Index>(node);
    diag -= spec.p0 * std::pow(u.values[ii], spec.p0 - 1.0) * ft[ii];
    out.emplace_back(r, r, diag);
  });
  if (std::any_of(bad.begin(), bad.end(), [](char b) { return b != 0; })) {
    throw Error(ErrorCode::NotInConeGammaK, "W^eps_u leaves Gamma_k at some node");
  }
  std::vector<Eigen::Triplet<double>> all;
  for (auto& r : rows) all.insert(all.end(), r.begin(), r.end());
  LinearOperator op;
  op.grid = u.grid;
  op.matrix.resize(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(g.size()));
  op.matrix.setFromTriplets(all.begin(), all.end());
  op.matrix.makeCompressed();
  return op;
}

LinearOperator linearize(const ScalarField& u, const ProblemSpec& spec) {
  spec.validate();
  const auto ft = effective_f(spec);
  return linearize_with(u, spec, ft.values);
}

double prop53_alpha(int k, double p0) { return k / (k - p0); }

double prop53_f_value(int n, int k, double alpha, double y) {
  // (n-1)! / (k! (n-k)!) = C(n,k) / n
  const double lead = binomial(n, k) / n;
  return lead * std::pow(1.0 + (alpha - 1.0) * y, k - 1) *
         (n + k * alpha * (alpha - 1.0) + (n + k * alpha) * (alpha - 1.0) * y);
}

Prop53Pair prop53_example(GridPtr grid, int k, double p0) {
  const int n = grid->n();
  if (k < 1 || k > n) throw Error(ErrorCode::InvalidProblem, "need 1 <= k <= n");
  if (!(p0 > 0.0)) throw Error(ErrorCode::InvalidProblem, "need p0 > 0");
  if (!(p0 < 0.5 * k)) throw Error(ErrorCode::PositivityLost, "f > 0 requires p0 < k/2");
  const double alpha = prop53_alpha(k, p0);
  Prop53Pair pair;
  pair.alpha = alpha;
  pair.u = ScalarField::sample(grid, [alpha](double th, double) { return std::pow(1.0 - std::cos(th), alpha); });
  pair.f = ScalarField::sample(grid, [=](double th, double) { return prop53_f_value(n, k, alpha, std::cos(th)); });
  return pair;
}

std::array<double, 3> prop53_q_coefficients(int n, int k, double alpha) {
  const double a = alpha;
  const double c2 = k * (3.0 * a - 1.0) * (a - 1.0) * (a - 1.0) * (n + k * a);
  const double c1 = k * (a - 1.0) * (a * (n + (k - 1) * a * (a - 1.0) + a) + (2.0 * a - 1.0) * (2.0 * n + k * a * a));
  const double c0 = k * (2.0 * a - 1.0) * (n + k * a * (a - 1.0));
  return {c2, c1, c0};
}

double quadratic_min_on_interval(const std::array<double, 3>& q, double lo, double hi) {
  auto eval = [&](double y) { return (q[0] * y + q[1]) * y + q[2]; };
  double best = std::min(eval(lo), eval(hi));
  if (q[0] > 0.0) {
    const double v = -q[1] / (2.0 * q[0]);
    if (v > lo && v < hi) best = std::min(best, eval(v));
  }
  return best;
}

ConvexityCertificate check_f_convexity(const ScalarField& f, int k, double p0,
                                       std::optional<double> prop53_alpha_value) {
  if (!(f.min() > 0.0)) throw Error(ErrorCode::InvalidProblem, "f must be positive");
  const double q = k + p0;
  ScalarField gt(f.grid, f.values.array().pow(-1.0 / q).matrix());
  const auto wf = covariant_w(gt, 0.0);
  ConvexityCertificate cert;
  cert.min_eigenvalue = *std::min_element(wf.eig_min.begin(), wf.eig_min.end());
  cert.tolerance = 1e-9 * (1.0 + gt.values.cwiseAbs().maxCoeff());
  cert.passes = cert.min_eigenvalue >= -cert.tolerance;
  if (prop53_alpha_value) {
    const auto coeffs = prop53_q_coefficients(f.grid->n(), k, *prop53_alpha_value);
    cert.q_coefficients = coeffs;
    cert.q_min_on_interval = quadratic_min_on_interval(coeffs, -1.0, 1.0);
  }
  return cert;
}

}  // namespace cmk
