#pragma once

// Convex hypersurface of a support function: X = u x + grad u, principal
// radii as eigenvalues of W_u, and OBJ / profile export.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cmk/spheregrid.hpp"

namespace cmk {

struct BodyMesh {
  int ambient_dim = 3;                             // n + 1
  std::vector<Eigen::VectorXd> vertices;           // one per grid node
  std::vector<std::array<std::uint32_t, 3>> faces; // 0-based; empty for axisymmetric grids
  std::vector<Eigen::VectorXd> radii;              // sorted eigenvalues of W_u per vertex
  bool non_convex = false;                         // some radius < 0
};

/// Vertices X = u x + grad u on the grid's own embedding (axisymmetric grids
/// give the meridian profile in R^{n+1}).
BodyMesh embed_body(const ScalarField& u);

/// radii[i] holds the i-th smallest eigenvalue of W_u (eps = 0) at every node.
std::vector<ScalarField> principal_radii(const ScalarField& u);

/// Surface of revolution of an axisymmetric body's meridian profile in R^3,
/// sampled at the given number of longitudes.
BodyMesh revolve_profile(const ScalarField& u, int longitudes = 64);

struct ObjMesh {
  std::vector<std::array<double, 3>> vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;  // 0-based
};

/// Wavefront OBJ of a 3-D mesh; 17 significant digits so reparsing is exact.
void write_obj(const BodyMesh& mesh, std::ostream& out);
void write_obj(const BodyMesh& mesh, const std::string& path);
ObjMesh parse_obj(std::istream& in);
ObjMesh parse_obj(const std::string& path);

/// CSV `theta,radius_radial,radius_tangential,X1,X2` for axisymmetric grids.
void write_profile_csv(const ScalarField& u, std::ostream& out);
void write_profile_csv(const ScalarField& u, const std::string& path);

}  // namespace cmk
