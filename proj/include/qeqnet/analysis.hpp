//
// Project QEqNet - Copyright 2026 QEqNet Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef QEQNET_ANALYSIS_HPP_
#define QEQNET_ANALYSIS_HPP_

/// \file
/// Charge-quality metrics (charge RMSE, electrostatic potential deviation
/// on molecular surface shells) and the linear-scaling benchmark.

#include <string>
#include <vector>

#include "qeqnet/gnn.hpp"
#include "qeqnet/molio.hpp"

namespace qeqnet {

/// Coulomb constant in kcal*Angstrom/(mol*e^2).
inline constexpr double kCoulomb = 332.0637128;

/// Shell radius (van der Waals, Angstrom) for grid construction.
double shell_radius(Element e);

/// Surface points outside the molecule, in Angstrom.
struct EspGrid {
  std::vector<Vec3> points;
  std::vector<double> shell_multipliers; // provenance
  double points_per_area = 0.0;          // provenance, 1/Angstrom^2
};

/// sqrt(mean((a_i - b_i)^2)); lengths must match.
double charge_rmse(const ChargeResult &a, const ChargeResult &b);

/// Four shells per atom at {1.4, 1.6, 1.8, 2.0} times the element shell
/// radius, points placed by a deterministic equal-area spiral at about
/// 1 point per square Angstrom, pruned of points falling inside any
/// atom's innermost (1.4x) shell.  Requires coordinates.
EspGrid build_grid(const Molecule &mol);

/// V(r) = kCoulomb * sum_i q_i / |r - r_i| at each grid point.
/// A point within 1e-6 Angstrom of an atom throws SingularPoint.
std::vector<double> esp_at_points(const std::vector<double> &charges,
                                  const std::vector<Vec3> &atom_coords,
                                  const EspGrid &grid);

/// RMSE between the potentials of two charge sets on build_grid(mol).
double esp_rmse(const std::vector<double> &charges_a,
                const std::vector<double> &charges_b, const Molecule &mol);

/// XYZ-style dump of grid points for debugging.
std::string write_grid_xyz(const EspGrid &grid);

struct BenchmarkRow {
  int atom_count;
  double median_seconds;
};

struct BenchmarkResult {
  std::vector<BenchmarkRow> rows;
  double slope = 0.0; // log-log least squares
};

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double> &x, const std::vector<double> &y);

/// Time the full pipeline (featurize, forward, equilibrate) on alkane
/// chains of the given unit counts.  Median wall time over `repeats`
/// runs per size; serial kernels by default so the slope is not
/// confounded by thread scheduling.
BenchmarkResult scaling_benchmark(const ModelParams &params,
                                  const std::vector<int> &sizes, int repeats,
                                  bool parallel = false);

/// "atom_count,median_seconds" rows plus a "slope X.XX PASS|FAIL" line;
/// PASS when the slope lies in [0.8, 1.3].
std::string format_benchmark_csv(const BenchmarkResult &result);

} // namespace qeqnet

#endif // QEQNET_ANALYSIS_HPP_
