//
// Project QEqNet - Copyright 2026 QEqNet Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "qeqnet/analysis.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "qeqnet/errors.hpp"
#include "qeqnet/pipeline.hpp"

namespace qeqnet {

namespace {

// Van der Waals radii in Angstrom, indexed by Element.
constexpr std::array<double, kNumElements> kShellRadius = {
    1.20, 1.82, 1.70, 1.55, 1.52, 1.47, 2.27, 1.73,
    1.80, 1.80, 1.75, 2.75, 2.31, 1.85, 1.98};

constexpr std::array<double, 4> kShellMultipliers = {1.4, 1.6, 1.8, 2.0};
constexpr double kPointsPerArea = 1.0; // 1 / Angstrom^2
constexpr double kPruneEps = 1e-9;

double distance(const Vec3 &a, const Vec3 &b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

} // namespace

double shell_radius(Element e) { return kShellRadius[static_cast<int>(e)]; }

double charge_rmse(const ChargeResult &a, const ChargeResult &b) {
  if (a.charges.size() != b.charges.size())
    throw InvalidArgument("charge vectors differ in length");
  if (a.charges.empty())
    throw InvalidArgument("cannot compare empty charge vectors");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.charges.size(); ++i) {
    const double d = a.charges[i] - b.charges[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(a.charges.size()));
}

EspGrid build_grid(const Molecule &mol) {
  if (!mol.coordinates)
    throw InvalidArgument("surface grid needs atomic coordinates");
  const auto &coords = *mol.coordinates;

  EspGrid grid;
  grid.shell_multipliers.assign(kShellMultipliers.begin(),
                                kShellMultipliers.end());
  grid.points_per_area = kPointsPerArea;

  // Golden-angle spiral: deterministic, near-equal-area points.
  // The angle is pi * (3 - sqrt(5)), written via phi = (1 + sqrt(5)) / 2.
  constexpr double golden_angle =
      std::numbers::pi * (3.0 - (2.0 * std::numbers::phi - 1.0));

  for (int i = 0; i < mol.atom_count(); ++i) {
    const double r0 = shell_radius(mol.atoms[i].element);
    for (double mult : kShellMultipliers) {
      const double radius = mult * r0;
      const double area = 4.0 * std::numbers::pi * radius * radius;
      const int n_points =
          std::max(1, static_cast<int>(std::lround(area * kPointsPerArea)));
      for (int k = 0; k < n_points; ++k) {
        const double z = 1.0 - 2.0 * (k + 0.5) / n_points;
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden_angle * k;
        Vec3 p{coords[i].x + radius * rho * std::cos(phi),
               coords[i].y + radius * rho * std::sin(phi),
               coords[i].z + radius * z};
        bool buried = false;
        for (int j = 0; j < mol.atom_count(); ++j) {
          const double inner =
              kShellMultipliers[0] * shell_radius(mol.atoms[j].element);
          if (distance(p, coords[j]) < inner - kPruneEps) {
            buried = true;
            break;
          }
        }
        if (!buried)
          grid.points.push_back(p);
      }
    }
  }
  return grid;
}

std::vector<double> esp_at_points(const std::vector<double> &charges,
                                  const std::vector<Vec3> &atom_coords,
                                  const EspGrid &grid) {
  if (charges.size() != atom_coords.size())
    throw InvalidArgument("charge and coordinate counts differ");
  std::vector<double> potentials;
  potentials.reserve(grid.points.size());
  for (const Vec3 &p : grid.points) {
    double v = 0.0;
    for (std::size_t i = 0; i < charges.size(); ++i) {
      const double d = distance(p, atom_coords[i]);
      if (d < 1e-6)
        throw SingularPoint("grid point coincides with atom " +
                            std::to_string(i));
      v += charges[i] / d;
    }
    potentials.push_back(kCoulomb * v);
  }
  return potentials;
}

double esp_rmse(const std::vector<double> &charges_a,
                const std::vector<double> &charges_b, const Molecule &mol) {
  const EspGrid grid = build_grid(mol);
  const auto va = esp_at_points(charges_a, *mol.coordinates, grid);
  const auto vb = esp_at_points(charges_b, *mol.coordinates, grid);
  double sum = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    const double d = va[i] - vb[i];
    sum += d * d;
  }
  return va.empty() ? 0.0 : std::sqrt(sum / static_cast<double>(va.size()));
}

std::string write_grid_xyz(const EspGrid &grid) {
  std::ostringstream out;
  out << grid.points.size() << "\nsurface grid points\n";
  char buf[96];
  for (const Vec3 &p : grid.points) {
    int n = std::snprintf(buf, sizeof buf, "X %12.6f %12.6f %12.6f\n", p.x,
                          p.y, p.z);
    out.write(buf, n);
  }
  return out.str();
}

double loglog_slope(const std::vector<double> &x,
                    const std::vector<double> &y) {
  if (x.size() != y.size() || x.size() < 2)
    throw InvalidArgument("slope fit needs at least two matched points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0.0 || y[i] <= 0.0)
      throw InvalidArgument("slope fit needs positive values");
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

BenchmarkResult scaling_benchmark(const ModelParams &params,
                                  const std::vector<int> &sizes, int repeats,
                                  bool parallel) {
  if (sizes.empty() || repeats < 1)
    throw InvalidArgument("benchmark needs sizes and at least one repeat");
  for (std::size_t i = 1; i < sizes.size(); ++i)
    if (sizes[i] <= sizes[i - 1])
      throw InvalidArgument("benchmark sizes must be strictly increasing");
  const kernels::Exec exec =
      parallel ? kernels::Exec::Parallel : kernels::Exec::Serial;

  BenchmarkResult result;
  for (int n : sizes) {
    const Molecule mol = generate_chain(n, ChainKind::Alkane);
    // Warm-up run keeps allocation effects out of the first sample.
    assign_charges(params, mol, exec);
    std::vector<double> samples;
    samples.reserve(repeats);
    for (int r = 0; r < repeats; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      assign_charges(params, mol, exec);
      const auto t1 = std::chrono::steady_clock::now();
      samples.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    std::sort(samples.begin(), samples.end());
    const std::size_t mid = samples.size() / 2;
    const double median = samples.size() % 2 == 1
                              ? samples[mid]
                              : 0.5 * (samples[mid - 1] + samples[mid]);
    result.rows.push_back({mol.atom_count(), median});
  }

  std::vector<double> xs, ys;
  for (const auto &row : result.rows) {
    xs.push_back(row.atom_count);
    ys.push_back(std::max(row.median_seconds, 1e-9));
  }
  result.slope = loglog_slope(xs, ys);
  return result;
}

std::string format_benchmark_csv(const BenchmarkResult &result) {
  std::ostringstream out;
  out << "atom_count,median_seconds\n";
  char buf[64];
  for (const auto &row : result.rows) {
    int n = std::snprintf(buf, sizeof buf, "%d,%.9f\n", row.atom_count,
                          row.median_seconds);
    out.write(buf, n);
  }
  const bool pass = result.slope >= 0.8 && result.slope <= 1.3;
  int n = std::snprintf(buf, sizeof buf, "slope %.2f %s\n", result.slope,
                        pass ? "PASS" : "FAIL");
  out.write(buf, n);
  return out.str();
}

} // namespace qeqnet
