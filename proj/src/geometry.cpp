#include "cmk/geometry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string_view>

#include "cmk/errors.hpp"
#include "cmk/parallel.hpp"

namespace cmk {

namespace {

// Quads between consecutive rows split in two, rings closed by fans; every
// triangle is ordered so its normal points outward.
std::vector<std::array<std::uint32_t, 3>> lat_lon_faces(int rows, int cols) {
  std::vector<std::array<std::uint32_t, 3>> faces;
  auto id = [cols](int j, int m) { return static_cast<std::uint32_t>(j * cols + ((m % cols) + cols) % cols); };
  for (int j = 0; j + 1 < rows; ++j)
    for (int m = 0; m < cols; ++m) {
      faces.push_back({id(j, m), id(j + 1, m), id(j + 1, m + 1)});
      faces.push_back({id(j, m), id(j + 1, m + 1), id(j, m + 1)});
    }
  for (int m = 1; m + 1 < cols; ++m) {
    faces.push_back({id(0, 0), id(0, m), id(0, m + 1)});
    faces.push_back({id(rows - 1, 0), id(rows - 1, m + 1), id(rows - 1, m)});
  }
  return faces;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  return out;
}

}  // namespace

BodyMesh embed_body(const ScalarField& u) {
  const auto& g = *u.grid;
  const int n = g.n();
  const auto wf = covariant_w(u, 0.0);
  BodyMesh mesh;
  mesh.ambient_dim = n + 1;
  mesh.vertices.resize(u.size());
  mesh.radii.resize(u.size());
  parallel_for(u.size(), [&](std::size_t i) {
    Eigen::VectorXd x = u[i] * g.point(i);
    for (int s = 0; s < n; ++s) x += wf.grad[i][s] * g.frame_vector(i, s);
    mesh.vertices[i] = std::move(x);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(wf.w[i], Eigen::EigenvaluesOnly);
    mesh.radii[i] = es.eigenvalues();
  });
  mesh.non_convex = std::any_of(wf.eig_min.begin(), wf.eig_min.end(), [](double e) { return e < 0.0; });
  if (g.kind() == GridKind::Full2D) mesh.faces = lat_lon_faces(g.n_theta(), g.n_phi());
  return mesh;
}

std::vector<ScalarField> principal_radii(const ScalarField& u) {
  const int n = u.grid->n();
  const auto wf = covariant_w(u, 0.0);
  std::vector<Eigen::VectorXd> cols(static_cast<std::size_t>(n), Eigen::VectorXd(static_cast<Eigen::Index>(u.size())));
  parallel_for(u.size(), [&](std::size_t i) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(wf.w[i], Eigen::EigenvaluesOnly);
    for (int s = 0; s < n; ++s) cols[static_cast<std::size_t>(s)][static_cast<Eigen::Index>(i)] = es.eigenvalues()[s];
  });
  std::vector<ScalarField> out;
  for (auto& c : cols) out.emplace_back(u.grid, std::move(c));
  return out;
}

BodyMesh revolve_profile(const ScalarField& u, int longitudes) {
  const auto& g = *u.grid;
  if (g.kind() != GridKind::Axisymmetric) throw Error(ErrorCode::UnsupportedGrid, "revolution needs an axisymmetric grid");
  if (longitudes < 3) throw Error(ErrorCode::InvalidResolution, "need at least 3 longitudes");
  const auto profile = embed_body(u);
  const int n = g.n();
  BodyMesh mesh;
  mesh.ambient_dim = 3;
  mesh.non_convex = profile.non_convex;
  for (int j = 0; j < g.n_theta(); ++j) {
    const auto& p = profile.vertices[static_cast<std::size_t>(j)];
    for (int m = 0; m < longitudes; ++m) {
      const double ph = (m + 0.5) * 2.0 * std::numbers::pi / longitudes;
      Eigen::Vector3d v(p[0] * std::cos(ph), p[0] * std::sin(ph), p[n]);
      mesh.vertices.emplace_back(v);
      mesh.radii.push_back(profile.radii[static_cast<std::size_t>(j)]);
    }
  }
  mesh.faces = lat_lon_faces(g.n_theta(), longitudes);
  return mesh;
}

void write_obj(const BodyMesh& mesh, std::ostream& out) {
  if (mesh.ambient_dim != 3) throw Error(ErrorCode::UnsupportedGrid, "OBJ export needs a surface in R^3");
  char buf[128];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v[0], v[1], v[2]);
    out << buf;
  }
  for (const auto& f : mesh.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

void write_obj(const BodyMesh& mesh, const std::string& path) {
  auto out = open_out(path);
  write_obj(mesh, out);
}

namespace {

// Whole-token numeric parse; anything left over is an error.
template <typename T>
T parse_token(std::string_view tok, const std::string& line) {
  T v{};
  const auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || end != tok.data() + tok.size()) throw Error(ErrorCode::IoError, "bad OBJ line: " + line);
  return v;
}

}  // namespace

ObjMesh parse_obj(std::istream& in) {
  ObjMesh mesh;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      std::array<std::string, 3> tok;
      ls >> tok[0] >> tok[1] >> tok[2];
      if (!ls) throw Error(ErrorCode::IoError, "bad vertex line: " + line);
      mesh.vertices.push_back({parse_token<double>(tok[0], line), parse_token<double>(tok[1], line),
                               parse_token<double>(tok[2], line)});
    } else if (tag == "f") {
      std::array<long, 3> idx{};
      for (auto& i : idx) {
        std::string tok;
        if (!(ls >> tok)) throw Error(ErrorCode::IoError, "bad face line: " + line);
        i = parse_token<long>(std::string_view(tok).substr(0, tok.find('/')), line);
      }
      std::array<std::uint32_t, 3> f{};
      for (int c = 0; c < 3; ++c) {
        if (idx[c] < 1) throw Error(ErrorCode::IoError, "face index must be >= 1");
        f[c] = static_cast<std::uint32_t>(idx[c] - 1);
      }
      mesh.faces.push_back(f);
    }
  }
  for (const auto& f : mesh.faces)
    for (auto i : f)
      if (i >= mesh.vertices.size()) throw Error(ErrorCode::IoError, "face references a missing vertex");
  return mesh;
}

ObjMesh parse_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  return parse_obj(in);
}

void write_profile_csv(const ScalarField& u, std::ostream& out) {
  const auto& g = *u.grid;
  if (g.kind() != GridKind::Axisymmetric) throw Error(ErrorCode::UnsupportedGrid, "profile needs an axisymmetric grid");
  const auto mesh = embed_body(u);
  const auto wf = covariant_w(u, 0.0);
  const int n = g.n();
  char buf[256];
  out << "theta,radius_radial,radius_tangential,X1,X2\n";
  for (std::size_t i = 0; i < u.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", g.theta(i), wf.w[i](0, 0), wf.w[i](1, 1),
                  mesh.vertices[i][0], mesh.vertices[i][n]);
    out << buf;
  }
}

void write_profile_csv(const ScalarField& u, const std::string& path) {
  auto out = open_out(path);
  write_profile_csv(u, out);
}

}  // namespace cmk
