#pragma once

// Structured latitude/longitude discretizations of the unit sphere S^n.
//
// Nodes are cell-centred in colatitude, theta_j = (j + 1/2) pi / J, so no node
// sits on a pole. Two kinds are supported:
//   * Axisymmetric: functions of theta only, any n in {2, 3}. The n-1
//     tangential frame directions share one eigenvalue of W.
//   * Full2D: n = 2, theta x phi grid with phi_m = (m + 1/2) 2 pi / K.
// Quadrature weights are exact cell measures, so they sum to |S^n| up to
// round-off and integrate smooth fields at O(h^2).
//
// Derivatives are second-order central differences expressed as stencils
// (lists of node/coefficient pairs). Values across a pole come from the
// great circle continuation: the ghost of row j = -1 at longitude phi is row
// 0 at phi + pi (axisymmetric fields simply reflect).

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cmk {

enum class GridKind { Axisymmetric, Full2D };

std::string to_string(GridKind kind);
GridKind grid_kind_from_string(const std::string& s);

/// |S^n| for n = 2, 3.
double sphere_measure(int n);

class SphereGrid {
public:
  struct Term {
    std::uint32_t col;
    double coeff;
  };

  /// n_phi is ignored for axisymmetric grids.
  static std::shared_ptr<const SphereGrid> build(int n, GridKind kind, int n_theta, int n_phi = 0);

  int n() const { return n_; }
  GridKind kind() const { return kind_; }
  int n_theta() const { return n_theta_; }
  int n_phi() const { return n_phi_; }
  std::size_t size() const { return theta_.size(); }
  double h_theta() const { return h_theta_; }
  double h_phi() const { return h_phi_; }

  std::size_t index(int j, int m = 0) const {
    return static_cast<std::size_t>(j) * n_phi_ + static_cast<std::size_t>(m);
  }
  int row(std::size_t node) const { return static_cast<int>(node / n_phi_); }
  int col(std::size_t node) const { return static_cast<int>(node % n_phi_); }

  double theta(std::size_t node) const { return theta_[node]; }
  double phi(std::size_t node) const { return phi_[node]; }
  std::span<const double> weights() const { return weights_; }
  std::size_t antipode(std::size_t node) const { return antipode_[node]; }

  /// Geodesic distance between two nodes (axisymmetric grids measure along
  /// one meridian).
  double distance(std::size_t a, std::size_t b) const;

  /// Number of packed upper-triangular frame components, n(n+1)/2.
  int component_count() const { return n_ * (n_ + 1) / 2; }
  static int component(int i, int j, int n);

  /// Stencil of the Hessian frame component c (packed, i <= j). Derivative
  /// stencils have zero coefficient sum and are applied to u - u(node), so
  /// constants differentiate to exactly zero. W_u adds u on the diagonal.
  std::span<const Term> w_stencil(std::size_t node, int c) const;
  /// Stencil of the frame component s of grad u.
  std::span<const Term> grad_stencil(std::size_t node, int s) const;

  /// Node position in R^{n+1}. Axisymmetric grids use the meridian
  /// x = (sin theta, 0, ..., 0, cos theta).
  Eigen::VectorXd point(std::size_t node) const;
  /// Frame vector e_s at the node, in R^{n+1} (same convention as point()).
  Eigen::VectorXd frame_vector(std::size_t node, int s) const;

  /// Node index of (j, m) with pole continuation for j = -1 or j = n_theta.
  std::size_t neighbor(int j, int m) const;

private:
  SphereGrid() = default;
  void build_stencils();

  int n_ = 2;
  GridKind kind_ = GridKind::Axisymmetric;
  int n_theta_ = 0;
  int n_phi_ = 1;
  double h_theta_ = 0.0;
  double h_phi_ = 0.0;
  std::vector<double> theta_;
  std::vector<double> phi_;
  std::vector<double> weights_;
  std::vector<std::size_t> antipode_;

  std::vector<Term> w_terms_;
  std::vector<std::size_t> w_offsets_;
  std::vector<Term> g_terms_;
  std::vector<std::size_t> g_offsets_;
};

using GridPtr = std::shared_ptr<const SphereGrid>;

struct ScalarField {
  GridPtr grid;
  Eigen::VectorXd values;

  ScalarField() = default;
  ScalarField(GridPtr g, Eigen::VectorXd v);
  ScalarField(GridPtr g, double constant);

  /// Samples fn(theta, phi) at every node.
  template <typename Fn>
  static ScalarField sample(GridPtr g, Fn&& fn) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(g->size()));
    for (std::size_t i = 0; i < g->size(); ++i) v[static_cast<Eigen::Index>(i)] = fn(g->theta(i), g->phi(i));
    return ScalarField(std::move(g), std::move(v));
  }

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  double operator[](std::size_t i) const { return values[static_cast<Eigen::Index>(i)]; }
  double min() const { return values.minCoeff(); }
  double max() const { return values.maxCoeff(); }
};

/// Per-node frame components of W^eps_u = Hess u + (u + eps) g, plus grad u.
struct WField {
  GridPtr grid;
  double eps = 0.0;
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> grad;
  std::vector<double> eig_min;
  std::vector<double> eig_max;

  std::size_t size() const { return w.size(); }
};

WField covariant_w(const ScalarField& u, double eps);

/// W at a single node (no eigenvalue cache).
Eigen::MatrixXd covariant_w_at(const ScalarField& u, double eps, std::size_t node);

double integrate(const ScalarField& field);

/// (field(x) + field(-x)) / 2, exactly even under the antipodal map.
ScalarField symmetrize_even(const ScalarField& field);

/// max |field(x) - field(-x)|
double evenness_defect(const ScalarField& field);

/// Header `theta[,phi],value`, one node per row, theta outer and phi inner.
void write_csv(const ScalarField& field, std::ostream& out);
void write_csv(const ScalarField& field, const std::string& path);
/// Reads a field written by write_csv; node coordinates must match the grid.
ScalarField read_csv(GridPtr grid, std::istream& in);
ScalarField read_csv(GridPtr grid, const std::string& path);
/// Infers the grid from the file (resolution and kind), for sphere dimension n.
ScalarField read_csv_infer(int n, const std::string& path);

/// Restricts a field on a grid with twice the resolution per axis to this
/// coarser grid with fourth-order (cubic) interpolation. Coarse nodes sit on
/// fine cell faces, so every coarse value is a 4-point (or 4x4) combination.
ScalarField restrict_from_fine(const ScalarField& fine, GridPtr coarse);

}  // namespace cmk
