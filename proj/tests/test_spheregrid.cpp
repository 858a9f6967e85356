#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>

#include "cmk/errors.hpp"
#include "cmk/spheregrid.hpp"

using namespace cmk;
using std::numbers::pi;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::IoError;
}

// Restriction of x^T A x to the sphere; its frame Hessian is
// 2 E^T A E - 2u I with E the frame vectors as columns, so W = 2 E^T A E - u I.
struct Quadratic {
  Eigen::MatrixXd a;
  double operator()(const Eigen::VectorXd& x) const { return x.dot(a * x); }
};

ScalarField sample_ambient(GridPtr g, const auto& fn) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(g->size()));
  for (std::size_t i = 0; i < g->size(); ++i) v[static_cast<Eigen::Index>(i)] = fn(g->point(i));
  return {g, v};
}

Eigen::MatrixXd frame(const SphereGrid& g, std::size_t node) {
  Eigen::MatrixXd e(g.n() + 1, g.n());
  for (int s = 0; s < g.n(); ++s) e.col(s) = g.frame_vector(node, s);
  return e;
}

// Max entrywise error of W; with band set, only nodes with |cos theta| <= band.
double quadratic_w_error(GridPtr g, const Quadratic& q, double eps, double band = 1.0) {
  const ScalarField u = sample_ambient(g, q);
  const WField wf = covariant_w(u, eps);
  double err = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i) {
    if (std::abs(std::cos(g->theta(i))) > band) continue;
    const Eigen::MatrixXd e = frame(*g, i);
    const Eigen::MatrixXd want =
        2.0 * e.transpose() * q.a * e + (eps - u[i]) * Eigen::MatrixXd::Identity(g->n(), g->n());
    err = std::max(err, (wf.w[i] - want).cwiseAbs().maxCoeff());
  }
  return err;
}

Eigen::MatrixXd random_sym(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) a(i, j) = a(j, i) = nd(rng);
  return a;
}

}  // namespace

TEST_CASE("grid construction validates its arguments") {
  CHECK(code_of([] { SphereGrid::build(4, GridKind::Axisymmetric, 16); }) == ErrorCode::UnsupportedGrid);
  CHECK(code_of([] { SphereGrid::build(3, GridKind::Full2D, 16, 32); }) == ErrorCode::UnsupportedGrid);
  CHECK(code_of([] { SphereGrid::build(2, GridKind::Axisymmetric, 15); }) == ErrorCode::InvalidResolution);
  CHECK(code_of([] { SphereGrid::build(2, GridKind::Axisymmetric, 6); }) == ErrorCode::InvalidResolution);
  CHECK(code_of([] { SphereGrid::build(2, GridKind::Full2D, 16, 9); }) == ErrorCode::InvalidResolution);
  CHECK(code_of([] { grid_kind_from_string("icosahedral"); }) == ErrorCode::UnsupportedGrid);
  CHECK(grid_kind_from_string(to_string(GridKind::Full2D)) == GridKind::Full2D);
  CHECK(grid_kind_from_string(to_string(GridKind::Axisymmetric)) == GridKind::Axisymmetric);
}

TEST_CASE("nodes are cell centred and avoid the poles") {
  auto g = SphereGrid::build(2, GridKind::Full2D, 8, 16);
  CHECK(g->size() == 128);
  CHECK(g->theta(0) == doctest::Approx(pi / 16));
  CHECK(g->phi(g->index(0, 1)) == doctest::Approx(3 * pi / 16));
  for (std::size_t i = 0; i < g->size(); ++i) {
    CHECK(std::sin(g->theta(i)) > 0.0);
    CHECK(g->point(i).norm() == doctest::Approx(1.0));
  }
}

TEST_CASE("quadrature weights sum to the sphere measure") {
  CHECK(sphere_measure(2) == doctest::Approx(4 * pi));
  CHECK(sphere_measure(3) == doctest::Approx(2 * pi * pi));
  for (int n : {2, 3})
    for (int j : {8, 32, 128}) {
      auto g = SphereGrid::build(n, GridKind::Axisymmetric, j);
      double s = 0;
      for (double w : g->weights()) s += w;
      CHECK(s == doctest::Approx(sphere_measure(n)).epsilon(1e-13));
    }
  auto g = SphereGrid::build(2, GridKind::Full2D, 16, 32);
  double s = 0;
  for (double w : g->weights()) s += w;
  CHECK(s == doctest::Approx(4 * pi).epsilon(1e-13));
}

TEST_CASE("integration is second order") {
  // int cos^2 = 4 pi / 3 on S^2 and pi^2 / 2 on S^3
  const double want[2] = {4 * pi / 3, pi * pi / 2};
  for (int n : {2, 3}) {
    double prev = 0;
    for (int j : {16, 32, 64}) {
      auto g = SphereGrid::build(n, GridKind::Axisymmetric, j);
      auto f = ScalarField::sample(g, [](double th, double) { return std::cos(th) * std::cos(th); });
      const double err = std::abs(integrate(f) - want[n - 2]);
      if (prev > 0) CHECK(prev / err > 3.8);
      prev = err;
    }
  }
}

TEST_CASE("antipodal map and even symmetrization") {
  for (auto g : {SphereGrid::build(2, GridKind::Full2D, 8, 16), SphereGrid::build(3, GridKind::Axisymmetric, 10)}) {
    for (std::size_t i = 0; i < g->size(); ++i) {
      const std::size_t a = g->antipode(i);
      CHECK(g->antipode(a) == i);
      if (g->kind() == GridKind::Full2D) {
        CHECK((g->point(a) + g->point(i)).norm() < 1e-14);
      } else {
        // Axisymmetric nodes stand for whole parallels; only x_{n+1} flips.
        CHECK(std::cos(g->theta(a)) == doctest::Approx(-std::cos(g->theta(i))));
      }
      CHECK(g->distance(i, a) == doctest::Approx(g->kind() == GridKind::Full2D ? pi : std::abs(pi - 2 * g->theta(i))));
    }
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    Eigen::VectorXd v(static_cast<Eigen::Index>(g->size()));
    for (auto& x : v) x = nd(rng);
    ScalarField f(g, v);
    CHECK(evenness_defect(f) > 0.0);
    CHECK(evenness_defect(symmetrize_even(f)) == 0.0);
  }
}

TEST_CASE("pole continuation shifts longitude by half a turn") {
  auto g = SphereGrid::build(2, GridKind::Full2D, 8, 16);
  CHECK(g->neighbor(-1, 3) == g->index(0, 11));
  CHECK(g->neighbor(8, 3) == g->index(7, 11));
  CHECK(g->neighbor(2, -1) == g->index(2, 15));
  CHECK(g->neighbor(2, 16) == g->index(2, 0));
  auto a = SphereGrid::build(2, GridKind::Axisymmetric, 8);
  CHECK(a->neighbor(-1, 0) == a->index(0));
  CHECK(a->neighbor(8, 0) == a->index(7));
}

TEST_CASE("property: constants give W = (c + eps) I exactly") {
  for (auto g : {SphereGrid::build(2, GridKind::Full2D, 12, 24), SphereGrid::build(3, GridKind::Axisymmetric, 20),
                 SphereGrid::build(2, GridKind::Axisymmetric, 20)}) {
    for (double c : {0.3, 1.0, 7.25}) {
      const WField wf = covariant_w(ScalarField(g, c), 0.125);
      for (std::size_t i = 0; i < g->size(); ++i) {
        CHECK(wf.w[i] == (c + 0.125) * Eigen::MatrixXd::Identity(g->n(), g->n()));
        CHECK(wf.grad[i].isZero(0.0));
      }
    }
  }
}

TEST_CASE("linear functions have vanishing W and tangential gradients") {
  const Eigen::Vector3d a(0.3, -0.7, 1.1);
  double prev_w = 0, prev_g = 0;
  for (int j : {16, 32, 64}) {
    auto g = SphereGrid::build(2, GridKind::Full2D, j, 2 * j);
    const ScalarField u = sample_ambient(g, [&](const Eigen::VectorXd& x) { return a.dot(x); });
    const WField wf = covariant_w(u, 0.0);
    double ew = 0, eg = 0;
    for (std::size_t i = 0; i < g->size(); ++i) {
      if (std::abs(std::cos(g->theta(i))) <= std::cos(pi / 4)) ew = std::max(ew, wf.w[i].cwiseAbs().maxCoeff());
      const Eigen::MatrixXd e = frame(*g, i);
      eg = std::max(eg, (wf.grad[i] - e.transpose() * a).cwiseAbs().maxCoeff());
    }
    if (prev_w > 0) {
      CHECK(prev_w / ew > 3.5);
      CHECK(prev_g / eg > 3.5);
    }
    prev_w = ew;
    prev_g = eg;
  }
  CHECK(prev_w < 1e-3);
}

TEST_CASE("W of ambient quadratics converges at second order") {
  std::mt19937_64 rng(42);
  const Quadratic q2{random_sym(rng, 3)};
  // Longitudinal differences carry an O(h^2 / sin theta) truncation, so the
  // rows next to each pole converge at first order and the rest at second.
  double prev_band = 0, prev_all = 0;
  for (int j : {16, 32, 64}) {
    auto g = SphereGrid::build(2, GridKind::Full2D, j, 2 * j);
    const double band = quadratic_w_error(g, q2, 0.2, std::cos(pi / 4));
    const double all = quadratic_w_error(g, q2, 0.2);
    if (prev_band > 0) {
      CHECK(prev_band / band > 3.5);
      CHECK(prev_all / all > 1.8);
    }
    prev_band = band;
    prev_all = all;
  }
  CHECK(prev_band < 2e-2);
  double prev = 0;

  // Axisymmetric quadratics depend on x_{n+1} (and |x|^2 = 1).
  for (int n : {2, 3}) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n + 1, n + 1) * 0.4;
    a(n, n) = 1.7;
    prev = 0;
    for (int j : {32, 64, 128}) {
      const double err = quadratic_w_error(SphereGrid::build(n, GridKind::Axisymmetric, j), Quadratic{a}, 0.0);
      if (prev > 0) CHECK(prev / err > 3.5);
      prev = err;
    }
  }
}

TEST_CASE("W of the degenerate closed-form profile matches its factored eigenvalues") {
  // u = (1 - cos theta)^a, a = 10/9, on S^3. Away from the pole theta = 0:
  // tangential = (1-y)^(a-1) (1+(a-1)y), radial = tangential + a(a-1)(1-y)^(a-1)(1+y).
  const double a = 10.0 / 9.0;
  double prev = 0;
  for (int j : {64, 128, 256}) {
    auto g = SphereGrid::build(3, GridKind::Axisymmetric, j);
    auto u = ScalarField::sample(g, [&](double th, double) { return std::pow(1 - std::cos(th), a); });
    const WField wf = covariant_w(u, 0.0);
    double err = 0;
    for (std::size_t i = 0; i < g->size(); ++i) {
      if (g->theta(i) < pi / 4) continue;
      const double y = std::cos(g->theta(i));
      const double tan = std::pow(1 - y, a - 1) * (1 + (a - 1) * y);
      const double rad = tan + a * (a - 1) * std::pow(1 - y, a - 1) * (1 + y);
      err = std::max({err, std::abs(wf.w[i](0, 0) - rad), std::abs(wf.w[i](1, 1) - tan),
                      std::abs(wf.w[i](2, 2) - tan), std::abs(wf.w[i](0, 1))});
      CHECK(wf.eig_min[i] == doctest::Approx(std::min(wf.w[i](0, 0), wf.w[i](1, 1))));
    }
    if (prev > 0) CHECK(prev / err > 3.5);
    prev = err;
  }
  CHECK(prev < 1e-4);
}

TEST_CASE("covariant_w_at agrees with the batch evaluation") {
  auto g = SphereGrid::build(2, GridKind::Full2D, 10, 20);
  std::mt19937_64 rng(3);
  const Quadratic q{random_sym(rng, 3)};
  const ScalarField u = sample_ambient(g, q);
  const WField wf = covariant_w(u, 0.1);
  for (std::size_t i = 0; i < g->size(); i += 7) CHECK((covariant_w_at(u, 0.1, i) - wf.w[i]).norm() == 0.0);
}

TEST_CASE("field CSV round-trips bit for bit") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  for (auto g : {SphereGrid::build(2, GridKind::Full2D, 8, 16), SphereGrid::build(3, GridKind::Axisymmetric, 12)}) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(g->size()));
    for (auto& x : v) x = nd(rng);
    ScalarField f(g, v);
    std::stringstream ss;
    write_csv(f, ss);
    const ScalarField back = read_csv(g, ss);
    CHECK(back.values == f.values);

    const auto path = std::filesystem::temp_directory_path() / "cmk_grid_roundtrip.csv";
    write_csv(f, path.string());
    const ScalarField inferred = read_csv_infer(g->n(), path.string());
    CHECK(inferred.grid->kind() == g->kind());
    CHECK(inferred.grid->n_theta() == g->n_theta());
    CHECK(inferred.values == f.values);
    std::filesystem::remove(path);
  }
  auto g8 = SphereGrid::build(2, GridKind::Axisymmetric, 8);
  auto g10 = SphereGrid::build(2, GridKind::Axisymmetric, 10);
  std::stringstream ss;
  write_csv(ScalarField(g8, 1.0), ss);
  CHECK(code_of([&] { read_csv(g10, ss); }) == ErrorCode::DimensionMismatch);
  std::stringstream bad("nonsense\n1,2\n");
  CHECK(code_of([&] { read_csv(g8, bad); }) == ErrorCode::IoError);
  CHECK(code_of([] { read_csv_infer(2, "/nonexistent/dir/u.csv"); }) == ErrorCode::IoError);
  CHECK(code_of([&] { ScalarField(g8, Eigen::VectorXd::Zero(3)); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("restriction from a doubled grid is fourth order") {
  auto fn = [](double th, double ph) { return std::exp(std::cos(th)) + 0.3 * std::sin(th) * std::cos(ph); };
  double prev = 0;
  for (int j : {16, 32, 64}) {
    auto coarse = SphereGrid::build(2, GridKind::Full2D, j, 2 * j);
    auto fine = SphereGrid::build(2, GridKind::Full2D, 2 * j, 4 * j);
    const ScalarField r = restrict_from_fine(ScalarField::sample(fine, fn), coarse);
    const ScalarField exact = ScalarField::sample(coarse, fn);
    const double err = (r.values - exact.values).cwiseAbs().maxCoeff();
    if (prev > 0) CHECK(prev / err > 12.0);
    prev = err;
  }
  auto a = SphereGrid::build(3, GridKind::Axisymmetric, 16);
  auto b = SphereGrid::build(3, GridKind::Axisymmetric, 24);
  CHECK(code_of([&] { restrict_from_fine(ScalarField(b, 1.0), a); }) == ErrorCode::DimensionMismatch);
}
