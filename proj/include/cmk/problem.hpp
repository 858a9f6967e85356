#pragma once

// The discrete equation sigma_k(Hess u + (u + eps) g) = u^p0 f_t on a sphere
// grid: residual, its exact Jacobian, the homotopy family of data, the
// closed-form degenerate example and the convexity test for the data f.

#include <array>
#include <map>
#include <optional>
#include <string>

#include <Eigen/Sparse>

#include "cmk/spheregrid.hpp"

namespace cmk {

struct ProblemSpec {
  int n = 2;
  int k = 1;
  double p0 = 0.5;
  double eps = 0.0;
  double t = 1.0;  // homotopy parameter; f_t interpolates from C(n,k) to f
  ScalarField f;

  GridPtr grid() const { return f.grid; }
  /// Throws InvalidProblem when an invariant is broken.
  void validate() const;
};

/// Registered closed forms for f, evaluated analytically at nodes.
struct FSource {
  std::string kind = "constant";  // constant | prop53 | manufactured | legendre2_bump | csv
  std::map<std::string, double> params;
  std::string csv_path;
};

ScalarField make_f(GridPtr grid, const FSource& src, int k, double p0, double eps);

/// v -> sigma_k^{ij}(W^eps_u) (W_v)_ij - p0 u^{p0-1} f_t v, assembled over
/// the finite-difference stencil of W.
struct LinearOperator {
  GridPtr grid;
  Eigen::SparseMatrix<double, Eigen::RowMajor> matrix;

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const { return matrix * v; }
};

/// (t f^{-1/(p0+k)} + (1-t) C(n,k)^{-1/(p0+k)})^{-(p0+k)}
ScalarField homotopy_f(double t, const ScalarField& f, int n, int k, double p0);

/// f_t for spec.t.
ScalarField effective_f(const ProblemSpec& spec);

/// sigma_k(W^eps_u) - u^p0 f_t at every node.
ScalarField residual(const ScalarField& u, const ProblemSpec& spec);
/// Residual with f_t already evaluated (solver inner loop).
Eigen::VectorXd residual_values(const ScalarField& u, const ProblemSpec& spec, const Eigen::VectorXd& ft);

LinearOperator linearize(const ScalarField& u, const ProblemSpec& spec);
LinearOperator linearize_with(const ScalarField& u, const ProblemSpec& spec, const Eigen::VectorXd& ft);

/// true iff u > 0 and W^eps_u in Gamma_k at every node.
bool admissible(const ScalarField& u, int k, double eps);

// ---- closed-form degenerate example -----------------------------------------

/// alpha = k / (k - p0)
double prop53_alpha(int k, double p0);
/// f(y), y = x_{n+1} = cos(theta)
double prop53_f_value(int n, int k, double alpha, double y);

struct Prop53Pair {
  ScalarField u;  // (1 - x_{n+1})^alpha
  ScalarField f;
  double alpha = 1.0;
};

/// Requires 0 < p0 < k/2 (PositivityLost otherwise).
Prop53Pair prop53_example(GridPtr grid, int k, double p0);

/// Coefficients {c2, c1, c0} of the quadratic Q(y) whose positivity on
/// [-1, 1] is equivalent to the convexity of f^{-1/(k+p0)} for the example.
std::array<double, 3> prop53_q_coefficients(int n, int k, double alpha);
double quadratic_min_on_interval(const std::array<double, 3>& q, double lo, double hi);

struct ConvexityCertificate {
  double min_eigenvalue = 0.0;  // grid minimum of the smallest eigenvalue of W of f^{-1/(k+p0)}
  double tolerance = 0.0;
  std::optional<std::array<double, 3>> q_coefficients;
  std::optional<double> q_min_on_interval;
  bool passes = false;
};

/// Pass iff min eigenvalue >= -1e-9 (1 + max g~). Q(y) is reported when
/// prop53_alpha is given (f is the closed-form example).
ConvexityCertificate check_f_convexity(const ScalarField& f, int k, double p0,
                                       std::optional<double> prop53_alpha_value = std::nullopt);

// ---- axisymmetric closed forms -------------------------------------------------

/// Second Legendre polynomial of cos(theta).
double legendre2(double theta);

/// Target support function 1 + a x_{n+1}^2 of the manufactured problem.
ScalarField manufactured_target(GridPtr grid, double amplitude);

/// sigma_k of diag(a, b, ..., b) with b of multiplicity n-1.
double sigma_k_axisym(int n, int k, double radial, double tangential);

}  // namespace cmk
