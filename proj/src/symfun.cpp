#include "cmk/symfun.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cmk/errors.hpp"

namespace cmk::symfun {

namespace {

void check_square(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() < 1) {
    throw Error(ErrorCode::DimensionMismatch, "matrix must be square with dim >= 1");
  }
}

void check_order(const Matrix& a, int k, int lo) {
  check_square(a);
  if (k < lo || k > a.rows()) {
    throw Error(ErrorCode::InvalidOrder,
                "k=" + std::to_string(k) + " outside [" + std::to_string(lo) + ", " +
                    std::to_string(a.rows()) + "]");
  }
}

// A^0 .. A^p
std::vector<Matrix> powers(const Matrix& a, int p) {
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(p) + 1);
  out.push_back(Matrix::Identity(a.rows(), a.cols()));
  for (int m = 1; m <= p; ++m) out.push_back(out.back() * a);
  return out;
}

std::vector<double> sigma_from_powers(const std::vector<Matrix>& pw, int kmax) {
  std::vector<double> sig(static_cast<std::size_t>(kmax) + 1, 0.0);
  sig[0] = 1.0;
  std::vector<double> ps(static_cast<std::size_t>(kmax) + 1, 0.0);
  for (int m = 1; m <= kmax; ++m) ps[m] = pw[m].trace();
  for (int m = 1; m <= kmax; ++m) {
    double acc = 0.0;
    for (int i = 1; i <= m; ++i) {
      const double sign = (i % 2 == 1) ? 1.0 : -1.0;
      acc += sign * sig[m - i] * ps[i];
    }
    sig[m] = acc / m;
  }
  return sig;
}

// grad of sigma_s for s = 0..kmax, given powers and sigma values.
Matrix grad_from(const std::vector<Matrix>& pw, const std::vector<double>& sig, int s) {
  const auto n = pw[0].rows();
  Matrix g = Matrix::Zero(n, n);
  for (int m = 0; m <= s - 1; ++m) {
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    g.noalias() += sign * sig[s - 1 - m] * pw[m].transpose();
  }
  return g;
}

}  // namespace

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

std::vector<double> sigma_all(const Matrix& a, int kmax) {
  check_order(a, kmax, 0);
  return sigma_from_powers(powers(a, kmax), kmax);
}

double sigma_k(const Matrix& a, int k) { return sigma_all(a, k)[k]; }

double Tensor4::contract(const Matrix& x, const Matrix& y) const {
  double acc = 0.0;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) {
      const double xij = x(i, j);
      if (xij == 0.0) continue;
      for (int l = 0; l < n_; ++l)
        for (int m = 0; m < n_; ++m) acc += (*this)(i, j, l, m) * xij * y(l, m);
    }
  return acc;
}

Matrix sigma_k_grad(const Matrix& a, int k) {
  check_order(a, k, 1);
  const auto pw = powers(a, k);
  const auto sig = sigma_from_powers(pw, k);
  return grad_from(pw, sig, k);
}

Derivatives sigma_k_derivatives(const Matrix& a, int k) {
  check_order(a, k, 1);
  const int n = static_cast<int>(a.rows());
  const auto pw = powers(a, k);
  const auto sig = sigma_from_powers(pw, k);

  Derivatives d;
  d.grad = grad_from(pw, sig, k);
  d.hess = Tensor4(n);

  // grad_k = sum_r (-1)^r sigma_{k-1-r} (A^r)^T, differentiate term by term:
  //   d sigma_s / dA_lm = grad_s(l,m)
  //   d (A^r)_{ji} / dA_lm = sum_{q<r} (A^q)_{jl} (A^{r-1-q})_{mi}
  std::vector<Matrix> lower_grads(static_cast<std::size_t>(k));
  for (int s = 1; s < k; ++s) lower_grads[s] = grad_from(pw, sig, s);

  for (int r = 0; r <= k - 1; ++r) {
    const double sign = (r % 2 == 0) ? 1.0 : -1.0;
    const int s = k - 1 - r;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l)
          for (int m = 0; m < n; ++m) {
            double v = 0.0;
            if (s >= 1) v += lower_grads[s](l, m) * pw[r](j, i);
            double dp = 0.0;
            for (int q = 0; q < r; ++q) dp += pw[q](j, l) * pw[r - 1 - q](m, i);
            v += sig[s] * dp;
            d.hess(i, j, l, m) += sign * v;
          }
  }
  return d;
}

double sigma_polarized(std::span<const Matrix> mats, int k) {
  if (static_cast<int>(mats.size()) != k) {
    throw Error(ErrorCode::InvalidOrder, "polarization needs exactly k matrices");
  }
  if (k == 0) return 1.0;
  const auto n = mats[0].rows();
  for (const auto& m : mats) {
    if (m.rows() != n || m.cols() != n) {
      throw Error(ErrorCode::DimensionMismatch, "polarization arguments differ in size");
    }
  }
  if (k > n) throw Error(ErrorCode::InvalidOrder, "k exceeds matrix dimension");

  double acc = 0.0;
  const unsigned full = 1u << k;
  for (unsigned mask = 1; mask < full; ++mask) {
    Matrix s = Matrix::Zero(n, n);
    int count = 0;
    for (int i = 0; i < k; ++i)
      if (mask & (1u << i)) {
        s += mats[i];
        ++count;
      }
    const double sign = ((k - count) % 2 == 0) ? 1.0 : -1.0;
    acc += sign * sigma_k(s, k);
  }
  double kfact = 1.0;
  for (int i = 2; i <= k; ++i) kfact *= i;
  return acc / kfact;
}

double sigma_polarized_delta(std::span<const Matrix> mats, int k) {
  if (static_cast<int>(mats.size()) != k) {
    throw Error(ErrorCode::InvalidOrder, "polarization needs exactly k matrices");
  }
  if (k == 0) return 1.0;
  const int n = static_cast<int>(mats[0].rows());
  for (const auto& m : mats) {
    if (m.rows() != n || m.cols() != n) {
      throw Error(ErrorCode::DimensionMismatch, "polarization arguments differ in size");
    }
  }
  if (k > n) throw Error(ErrorCode::InvalidOrder, "k exceeds matrix dimension");

  // delta^{i_1..i_k}_{j_1..j_k} is nonzero only for distinct i and j a
  // permutation of i, where it equals the sign of that permutation.
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::pair<std::vector<int>, double>> perms;
  do {
    int inversions = 0;
    for (int a = 0; a < k; ++a)
      for (int b = a + 1; b < k; ++b)
        if (perm[a] > perm[b]) ++inversions;
    perms.emplace_back(perm, inversions % 2 == 0 ? 1.0 : -1.0);
  } while (std::next_permutation(perm.begin(), perm.end()));

  std::vector<int> idx(k, 0);
  double acc = 0.0;
  while (true) {
    bool distinct = true;
    for (int a = 0; a < k && distinct; ++a)
      for (int b = a + 1; b < k; ++b)
        if (idx[a] == idx[b]) {
          distinct = false;
          break;
        }
    if (distinct) {
      for (const auto& [p, sign] : perms) {
        double prod = sign;
        for (int m = 0; m < k; ++m) prod *= mats[m](idx[m], idx[p[m]]);
        acc += prod;
      }
    }
    int pos = k - 1;
    while (pos >= 0 && ++idx[pos] == n) idx[pos--] = 0;
    if (pos < 0) break;
  }
  double kfact = 1.0;
  for (int i = 2; i <= k; ++i) kfact *= i;
  return acc / kfact;
}

ConeReport gamma_k_membership(const Matrix& a, int k) {
  check_order(a, k, 1);
  const auto sig = sigma_all(a, k);
  ConeReport r;
  r.k = k;
  r.sigmas.assign(sig.begin() + 1, sig.end());
  r.in_cone = std::all_of(r.sigmas.begin(), r.sigmas.end(), [](double s) { return s > 0.0; });
  return r;
}

bool in_gamma_k(const Matrix& a, int k) { return gamma_k_membership(a, k).in_cone; }

double newton_maclaurin_constant(int n, int k) {
  if (k < 2 || k > n) throw Error(ErrorCode::InvalidOrder, "Newton-Maclaurin needs 2 <= k <= n");
  const double e1 = 1.0 / (k - 1);
  const double ek = static_cast<double>(k - 2) / (k - 1);
  return binomial(n, k - 1) / (std::pow(binomial(n, 1), e1) * std::pow(binomial(n, k), ek));
}

double concavity_slack(const Matrix& w, const Matrix& xi, int k) {
  if (k < 2) throw Error(ErrorCode::NotApplicable, "concavity inequality requires k >= 2");
  const auto d = sigma_k_derivatives(w, k);
  const double sk = sigma_k(w, k);
  const double s1 = w.trace();
  const double lhs = -d.hess.contract(xi, xi);
  const double dk = (d.grad.array() * xi.array()).sum() / sk;
  const double d1 = xi.trace() / s1;
  const double c = 1.0 / (k - 1);
  const double rhs = sk * (dk - d1) * ((c - 1.0) * dk - (c + 1.0) * d1);
  return lhs - rhs;
}

}  // namespace cmk::symfun
