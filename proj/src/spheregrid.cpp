#include "cmk/spheregrid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>

#include "cmk/errors.hpp"
#include "cmk/parallel.hpp"

namespace cmk {

namespace {

constexpr double kPi = std::numbers::pi;

// integral of sin^{n-1} over [a, b]
double sin_power_integral(int n, double a, double b) {
  if (n == 2) return std::cos(a) - std::cos(b);
  // n == 3
  auto prim = [](double t) { return 0.5 * t - 0.25 * std::sin(2.0 * t); };
  return prim(b) - prim(a);
}

void merge_terms(std::vector<SphereGrid::Term>& terms) {
  std::map<std::uint32_t, double> acc;
  for (const auto& t : terms) acc[t.col] += t.coeff;
  terms.clear();
  for (const auto& [col, c] : acc)
    if (c != 0.0) terms.push_back({col, c});
}

}  // namespace

std::string to_string(GridKind kind) {
  return kind == GridKind::Axisymmetric ? "axisymmetric" : "full2d";
}

GridKind grid_kind_from_string(const std::string& s) {
  if (s == "axisymmetric" || s == "axisym" || s == "axisymmetric-1D") return GridKind::Axisymmetric;
  if (s == "full2d" || s == "full-2D" || s == "full") return GridKind::Full2D;
  throw Error(ErrorCode::UnsupportedGrid, "unknown grid kind '" + s + "'");
}

double sphere_measure(int n) {
  if (n == 2) return 4.0 * kPi;
  if (n == 3) return 2.0 * kPi * kPi;
  throw Error(ErrorCode::UnsupportedGrid, "only S^2 and S^3 are supported");
}

std::shared_ptr<const SphereGrid> SphereGrid::build(int n, GridKind kind, int n_theta, int n_phi) {
  if (n != 2 && n != 3) throw Error(ErrorCode::UnsupportedGrid, "n must be 2 or 3");
  if (kind == GridKind::Full2D && n != 2) {
    throw Error(ErrorCode::UnsupportedGrid, "full 2-D grids exist only for n = 2");
  }
  if (kind == GridKind::Axisymmetric) n_phi = 1;
  auto check = [](int r, const char* axis) {
    if (r < 8 || r % 2 != 0) {
      throw Error(ErrorCode::InvalidResolution,
                  std::string(axis) + " resolution must be even and >= 8, got " + std::to_string(r));
    }
  };
  check(n_theta, "theta");
  if (kind == GridKind::Full2D) check(n_phi, "phi");

  std::shared_ptr<SphereGrid> g(new SphereGrid());
  g->n_ = n;
  g->kind_ = kind;
  g->n_theta_ = n_theta;
  g->n_phi_ = n_phi;
  g->h_theta_ = kPi / n_theta;
  g->h_phi_ = kind == GridKind::Full2D ? 2.0 * kPi / n_phi : 2.0 * kPi;

  const std::size_t count = static_cast<std::size_t>(n_theta) * n_phi;
  g->theta_.resize(count);
  g->phi_.resize(count);
  g->weights_.resize(count);
  g->antipode_.resize(count);
  for (int j = 0; j < n_theta; ++j) {
    const double a = j * g->h_theta_;
    const double b = (j + 1) * g->h_theta_;
    const double band = sin_power_integral(n, a, b);
    for (int m = 0; m < n_phi; ++m) {
      const std::size_t i = g->index(j, m);
      g->theta_[i] = (j + 0.5) * g->h_theta_;
      g->phi_[i] = kind == GridKind::Full2D ? (m + 0.5) * g->h_phi_ : 0.0;
      // axisymmetric cells are full bands: |S^{n-1}| = 2 pi (n=2), 4 pi (n=3)
      g->weights_[i] = kind == GridKind::Full2D ? band * g->h_phi_
                                                : band * (n == 2 ? 2.0 * kPi : 4.0 * kPi);
      const int mj = n_theta - 1 - j;
      const int mm = kind == GridKind::Full2D ? (m + n_phi / 2) % n_phi : 0;
      g->antipode_[i] = g->index(mj, mm);
    }
  }
  g->build_stencils();
  return g;
}

int SphereGrid::component(int i, int j, int n) {
  if (i > j) std::swap(i, j);
  // row-major packing of the upper triangle
  return i * n - i * (i - 1) / 2 + (j - i);
}

std::size_t SphereGrid::neighbor(int j, int m) const {
  if (kind_ == GridKind::Axisymmetric) {
    if (j < 0) j = -1 - j;
    if (j >= n_theta_) j = 2 * n_theta_ - 1 - j;
    return index(j, 0);
  }
  if (j < 0) {
    j = -1 - j;
    m += n_phi_ / 2;
  } else if (j >= n_theta_) {
    j = 2 * n_theta_ - 1 - j;
    m += n_phi_ / 2;
  }
  m = ((m % n_phi_) + n_phi_) % n_phi_;
  return index(j, m);
}

void SphereGrid::build_stencils() {
  const int comps = component_count();
  const std::size_t count = size();
  w_offsets_.assign(count * comps + 1, 0);
  g_offsets_.assign(count * n_ + 1, 0);
  w_terms_.clear();
  g_terms_.clear();

  const double h = h_theta_;
  using Terms = std::vector<Term>;
  auto t = [](std::size_t col, double c) { return Term{static_cast<std::uint32_t>(col), c}; };

  for (std::size_t node = 0; node < count; ++node) {
    const int j = row(node);
    const int m = col(node);
    const double th = theta_[node];
    const double s = std::sin(th);
    const double cot = std::cos(th) / s;

    std::vector<Terms> wc(comps);
    std::vector<Terms> gc(n_);

    const std::size_t up = neighbor(j + 1, m);
    const std::size_t dn = neighbor(j - 1, m);
    Terms d_theta = {t(up, 0.5 / h), t(dn, -0.5 / h)};
    Terms dd_theta = {t(up, 1.0 / (h * h)), t(node, -2.0 / (h * h)), t(dn, 1.0 / (h * h))};

    if (kind_ == GridKind::Axisymmetric) {
      // Hess u = diag(u'', cot u', ..., cot u')
      Terms radial = dd_theta;
      Terms tangential;
      for (const auto& term : d_theta) tangential.push_back(t(term.col, cot * term.coeff));
      wc[component(0, 0, n_)] = radial;
      for (int i = 1; i < n_; ++i) wc[component(i, i, n_)] = tangential;
      gc[0] = d_theta;
    } else {
      const double q = h_phi_;
      const std::size_t e = neighbor(j, m + 1);
      const std::size_t w = neighbor(j, m - 1);
      Terms d_phi = {t(e, 0.5 / q), t(w, -0.5 / q)};
      Terms dd_phi = {t(e, 1.0 / (q * q)), t(node, -2.0 / (q * q)), t(w, 1.0 / (q * q))};
      const double c4 = 1.0 / (4.0 * h * q);
      Terms d_theta_phi = {t(neighbor(j + 1, m + 1), c4), t(neighbor(j + 1, m - 1), -c4),
                           t(neighbor(j - 1, m + 1), -c4), t(neighbor(j - 1, m - 1), c4)};

      Terms tt = dd_theta;
      Terms tp;
      for (const auto& x : d_theta_phi) tp.push_back(t(x.col, x.coeff / s));
      for (const auto& x : d_phi) tp.push_back(t(x.col, -cot * x.coeff / s));
      Terms pp;
      for (const auto& x : dd_phi) pp.push_back(t(x.col, x.coeff / (s * s)));
      for (const auto& x : d_theta) pp.push_back(t(x.col, cot * x.coeff));
      wc[component(0, 0, 2)] = tt;
      wc[component(0, 1, 2)] = tp;
      wc[component(1, 1, 2)] = pp;
      gc[0] = d_theta;
      for (const auto& x : d_phi) gc[1].push_back(t(x.col, x.coeff / s));
    }

    for (int c = 0; c < comps; ++c) {
      merge_terms(wc[c]);
      w_terms_.insert(w_terms_.end(), wc[c].begin(), wc[c].end());
      w_offsets_[node * comps + c + 1] = w_terms_.size();
    }
    for (int sdir = 0; sdir < n_; ++sdir) {
      merge_terms(gc[sdir]);
      g_terms_.insert(g_terms_.end(), gc[sdir].begin(), gc[sdir].end());
      g_offsets_[node * n_ + sdir + 1] = g_terms_.size();
    }
  }
}

std::span<const SphereGrid::Term> SphereGrid::w_stencil(std::size_t node, int c) const {
  const std::size_t k = node * component_count() + c;
  return {w_terms_.data() + w_offsets_[k], w_offsets_[k + 1] - w_offsets_[k]};
}

std::span<const SphereGrid::Term> SphereGrid::grad_stencil(std::size_t node, int s) const {
  const std::size_t k = node * n_ + s;
  return {g_terms_.data() + g_offsets_[k], g_offsets_[k + 1] - g_offsets_[k]};
}

double SphereGrid::distance(std::size_t a, std::size_t b) const {
  if (kind_ == GridKind::Axisymmetric) return std::abs(theta_[a] - theta_[b]);
  const double d = point(a).dot(point(b));
  return std::acos(std::clamp(d, -1.0, 1.0));
}

Eigen::VectorXd SphereGrid::point(std::size_t node) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n_ + 1);
  const double th = theta_[node];
  if (kind_ == GridKind::Full2D) {
    x << std::sin(th) * std::cos(phi_[node]), std::sin(th) * std::sin(phi_[node]), std::cos(th);
  } else {
    x[0] = std::sin(th);
    x[n_] = std::cos(th);
  }
  return x;
}

Eigen::VectorXd SphereGrid::frame_vector(std::size_t node, int s) const {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n_ + 1);
  const double th = theta_[node];
  if (kind_ == GridKind::Full2D) {
    const double ph = phi_[node];
    if (s == 0) {
      e << std::cos(th) * std::cos(ph), std::cos(th) * std::sin(ph), -std::sin(th);
    } else {
      e << -std::sin(ph), std::cos(ph), 0.0;
    }
  } else if (s == 0) {
    e[0] = std::cos(th);
    e[n_] = -std::sin(th);
  } else {
    e[s] = 1.0;
  }
  return e;
}

ScalarField::ScalarField(GridPtr g, Eigen::VectorXd v) : grid(std::move(g)), values(std::move(v)) {
  if (static_cast<std::size_t>(values.size()) != grid->size()) {
    throw Error(ErrorCode::DimensionMismatch, "field length does not match grid node count");
  }
}

ScalarField::ScalarField(GridPtr g, double constant)
    : grid(std::move(g)), values(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(grid->size()), constant)) {}

Eigen::MatrixXd covariant_w_at(const ScalarField& u, double eps, std::size_t node) {
  const auto& g = *u.grid;
  const int n = g.n();
  Eigen::MatrixXd w(n, n);
  const double un = u.values[static_cast<Eigen::Index>(node)];
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double v = 0.0;
      for (const auto& term : g.w_stencil(node, SphereGrid::component(i, j, n)))
        v += term.coeff * (u.values[term.col] - un);
      if (i == j) v += un + eps;
      w(i, j) = v;
      w(j, i) = v;
    }
  return w;
}

WField covariant_w(const ScalarField& u, double eps) {
  const auto& g = *u.grid;
  const int n = g.n();
  WField out;
  out.grid = u.grid;
  out.eps = eps;
  out.w.resize(g.size());
  out.grad.resize(g.size());
  out.eig_min.resize(g.size());
  out.eig_max.resize(g.size());
  parallel_for(g.size(), [&](std::size_t node) {
    Eigen::MatrixXd w = covariant_w_at(u, eps, node);
    Eigen::VectorXd gr(n);
    const double un = u.values[static_cast<Eigen::Index>(node)];
    for (int s = 0; s < n; ++s) {
      double v = 0.0;
      for (const auto& term : g.grad_stencil(node, s)) v += term.coeff * (u.values[term.col] - un);
      gr[s] = v;
    }
    if (g.kind() == GridKind::Axisymmetric) {
      const double a = w(0, 0);
      const double b = n > 1 ? w(1, 1) : a;
      out.eig_min[node] = std::min(a, b);
      out.eig_max[node] = std::max(a, b);
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w, Eigen::EigenvaluesOnly);
      out.eig_min[node] = es.eigenvalues().minCoeff();
      out.eig_max[node] = es.eigenvalues().maxCoeff();
    }
    out.w[node] = std::move(w);
    out.grad[node] = std::move(gr);
  });
  return out;
}

double integrate(const ScalarField& field) {
  const auto w = field.grid->weights();
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * field[i];
  return acc;
}

ScalarField symmetrize_even(const ScalarField& field) {
  const auto& g = *field.grid;
  Eigen::VectorXd v(field.values.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = 0.5 * (field[i] + field[g.antipode(i)]);
  }
  return {field.grid, std::move(v)};
}

double evenness_defect(const ScalarField& field) {
  double d = 0.0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    d = std::max(d, std::abs(field[i] - field[field.grid->antipode(i)]));
  }
  return d;
}

void write_csv(const ScalarField& field, std::ostream& out) {
  const auto& g = *field.grid;
  const bool full = g.kind() == GridKind::Full2D;
  out << (full ? "theta,phi,value\n" : "theta,value\n");
  out << std::setprecision(17);
  for (std::size_t i = 0; i < g.size(); ++i) {
    out << g.theta(i) << ',';
    if (full) out << g.phi(i) << ',';
    out << field[i] << '\n';
  }
}

void write_csv(const ScalarField& field, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  write_csv(field, out);
}

namespace {

struct CsvRows {
  bool full = false;
  std::vector<double> theta, phi, value;
};

CsvRows parse_csv(std::istream& in) {
  CsvRows rows;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::IoError, "empty field CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line == "theta,phi,value") {
    rows.full = true;
  } else if (line != "theta,value") {
    throw Error(ErrorCode::IoError, "unexpected CSV header '" + line + "'");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    std::vector<double> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(std::stod(cell));
    const std::size_t want = rows.full ? 3 : 2;
    if (cells.size() != want) throw Error(ErrorCode::IoError, "malformed CSV row '" + line + "'");
    rows.theta.push_back(cells[0]);
    if (rows.full) rows.phi.push_back(cells[1]);
    rows.value.push_back(cells.back());
  }
  return rows;
}

ScalarField fill_from_rows(GridPtr grid, const CsvRows& rows) {
  const bool full = grid->kind() == GridKind::Full2D;
  if (full != rows.full || rows.value.size() != grid->size()) {
    throw Error(ErrorCode::DimensionMismatch, "CSV does not match the grid layout");
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(grid->size()));
  for (std::size_t i = 0; i < grid->size(); ++i) {
    if (std::abs(rows.theta[i] - grid->theta(i)) > 1e-9 ||
        (full && std::abs(rows.phi[i] - grid->phi(i)) > 1e-9)) {
      throw Error(ErrorCode::DimensionMismatch, "CSV node coordinates do not match the grid");
    }
    v[static_cast<Eigen::Index>(i)] = rows.value[i];
  }
  return {std::move(grid), std::move(v)};
}

}  // namespace

ScalarField read_csv(GridPtr grid, std::istream& in) { return fill_from_rows(std::move(grid), parse_csv(in)); }

ScalarField read_csv(GridPtr grid, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read '" + path + "'");
  return read_csv(std::move(grid), in);
}

ScalarField read_csv_infer(int n, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read '" + path + "'");
  const auto rows = parse_csv(in);
  GridPtr grid;
  if (rows.full) {
    std::size_t n_phi = 0;
    while (n_phi < rows.theta.size() && rows.theta[n_phi] == rows.theta[0]) ++n_phi;
    if (n_phi == 0 || rows.theta.size() % n_phi != 0) throw Error(ErrorCode::IoError, "ragged CSV grid");
    grid = SphereGrid::build(2, GridKind::Full2D, static_cast<int>(rows.theta.size() / n_phi),
                             static_cast<int>(n_phi));
  } else {
    grid = SphereGrid::build(n, GridKind::Axisymmetric, static_cast<int>(rows.theta.size()));
  }
  return fill_from_rows(std::move(grid), rows);
}

ScalarField restrict_from_fine(const ScalarField& fine, GridPtr coarse) {
  const auto& f = *fine.grid;
  const auto& c = *coarse;
  const bool full = c.kind() == GridKind::Full2D;
  if (f.kind() != c.kind() || f.n() != c.n() || f.n_theta() != 2 * c.n_theta() ||
      (full && f.n_phi() != 2 * c.n_phi())) {
    throw Error(ErrorCode::DimensionMismatch, "fine grid must double the coarse resolution");
  }
  static constexpr double wts[4] = {-1.0 / 16.0, 9.0 / 16.0, 9.0 / 16.0, -1.0 / 16.0};
  Eigen::VectorXd v(static_cast<Eigen::Index>(c.size()));
  for (std::size_t node = 0; node < c.size(); ++node) {
    const int j = c.row(node);
    const int m = c.col(node);
    double acc = 0.0;
    for (int a = 0; a < 4; ++a) {
      const int fj = 2 * j - 1 + a;
      if (!full) {
        acc += wts[a] * fine[f.neighbor(fj, 0)];
        continue;
      }
      for (int b = 0; b < 4; ++b) {
        const int fm = 2 * m - 1 + b;
        acc += wts[a] * wts[b] * fine[f.neighbor(fj, fm)];
      }
    }
    v[static_cast<Eigen::Index>(node)] = acc;
  }
  return {std::move(coarse), std::move(v)};
}

}  // namespace cmk
