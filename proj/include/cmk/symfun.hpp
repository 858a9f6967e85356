#pragma once

// Elementary symmetric functions of symmetric matrices and their calculus.
//
// sigma_k is evaluated from the power sums tr(A^m) through Newton's
// identities, so values and derivatives are exact polynomial expressions in
// the matrix entries and never go through an eigen-decomposition.

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace cmk::symfun {

using Matrix = Eigen::MatrixXd;

double binomial(int n, int k);

/// sigma_0(A), ..., sigma_kmax(A).
std::vector<double> sigma_all(const Matrix& a, int kmax);

/// k-th elementary symmetric function of the eigenvalues of A; sigma_0 = 1.
double sigma_k(const Matrix& a, int k);

/// Dense rank-4 array indexed [i][j][l][m], dimension n in every slot.
class Tensor4 {
public:
  Tensor4() = default;
  explicit Tensor4(int n) : n_(n), data_(static_cast<std::size_t>(n) * n * n * n, 0.0) {}

  int dim() const { return n_; }
  double& operator()(int i, int j, int l, int m) { return data_[index(i, j, l, m)]; }
  double operator()(int i, int j, int l, int m) const { return data_[index(i, j, l, m)]; }

  /// sum_{ijlm} T[i][j][l][m] x_ij y_lm
  double contract(const Matrix& x, const Matrix& y) const;

private:
  std::size_t index(int i, int j, int l, int m) const {
    return ((static_cast<std::size_t>(i) * n_ + j) * n_ + l) * n_ + m;
  }
  int n_ = 0;
  std::vector<double> data_;
};

/// d sigma_k / d A_ij, entries treated as independent variables.
Matrix sigma_k_grad(const Matrix& a, int k);

struct Derivatives {
  Matrix grad;
  Tensor4 hess;  // d^2 sigma_k / dA_ij dA_lm
};

Derivatives sigma_k_derivatives(const Matrix& a, int k);

/// Complete polarization sigma_k(A_1, ..., A_k) via the subset expansion
/// (1/k!) sum_S (-1)^{k-|S|} sigma_k(sum_{i in S} A_i).
double sigma_polarized(std::span<const Matrix> mats, int k);

/// Same quantity through the generalized Kronecker delta sum. O(n^k k!);
/// kept as an independent route for cross-checking small cases.
double sigma_polarized_delta(std::span<const Matrix> mats, int k);

struct ConeReport {
  int k = 0;
  std::vector<double> sigmas;  // sigma_1 .. sigma_k
  bool in_cone = false;
};

/// Garding cone membership: sigma_i(A) > 0 for 1 <= i <= k, strict, no slack.
ConeReport gamma_k_membership(const Matrix& a, int k);
bool in_gamma_k(const Matrix& a, int k);

/// Constant C in sigma_{k-1} >= C sigma_1^{1/(k-1)} sigma_k^{(k-2)/(k-1)} on
/// Gamma_k, k >= 2. Normalized-means form: with E_j = sigma_j / C(n,j) the
/// inequality reads E_{k-1} >= E_1^{1/(k-1)} E_k^{(k-2)/(k-1)}.
double newton_maclaurin_constant(int n, int k);

/// LHS - RHS of the concavity inequality
///   -sigma_k^{ij,lm} xi_ij xi_lm >=
///     sigma_k [d_k - d_1][(1/(k-1) - 1) d_k - (1/(k-1) + 1) d_1],
/// d_k = sigma_k^{ij} xi_ij / sigma_k, d_1 = tr(xi) / sigma_1, for W in Gamma_k,
/// k >= 2 and symmetric xi (a derivative of W along one frame direction).
double concavity_slack(const Matrix& w, const Matrix& xi, int k);

}  // namespace cmk::symfun
