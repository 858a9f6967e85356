#pragma once

// Command-line driver. Subcommands: solve, verify-example, check-f-convexity,
// diagnose, export-mesh, convergence-study, uniqueness.
//
// Exit codes: 0 success, 1 numerical failure (diagnostics still written),
// 2 usage or configuration error (nothing written).

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cmk/report_io.hpp"

namespace cmk {

struct RunConfig {
  int n = 2;
  int k = 1;
  double p0 = 0.5;
  double eps = 0.0;
  FSource f;
  GridKind grid_kind = GridKind::Axisymmetric;
  int n_theta = 64;
  int n_phi = 0;  // full 2-D grids default to 2 n_theta
  SolveOptions solver;
  bool eps_continuation = false;  // set when solver.eps_schedule is present
  std::string solution_csv;
  std::string report_json;
  std::string mesh_obj;
  std::string profile_csv;
  std::uint64_t seed = 20240101;

  /// Strict schema: unknown keys and wrong types raise ConfigError naming the
  /// JSON pointer of the offending entry.
  static RunConfig from_json(const Json& doc);
  static RunConfig load(const std::string& path);
  /// Every field with its effective value.
  Json to_json() const;

  GridPtr build_grid() const;
  GridPtr build_grid(int n_theta_override) const;
  ProblemSpec build_spec(GridPtr grid) const;
};

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace cmk
