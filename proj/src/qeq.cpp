//
// Project QEqNet - Copyright 2026 QEqNet Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "qeqnet/qeq.hpp"

#include <cmath>
#include <cstddef>
#include <string>

#include "qeqnet/errors.hpp"

namespace qeqnet {

namespace {

// Kahan-compensated accumulator.  Conservation within 1e-6 e on
// 10^4-atom systems depends on it.
class CompensatedSum {
public:
  void add(double x) {
    double y = x - c_;
    double t = sum_ + y;
    c_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

void check_problem(const QeqProblem &p) {
  if (p.e.size() != p.s.size())
    throw InvalidArgument("electronegativity and hardness lengths differ");
  if (p.e.empty())
    throw InvalidArgument("equilibration needs at least one atom");
  for (std::size_t i = 0; i < p.e.size(); ++i)
    if (!std::isfinite(p.e[i]) || !std::isfinite(p.s[i]))
      throw InvalidArgument("non-finite equilibration input at atom " +
                            std::to_string(i));
}

} // namespace

ChargeResult solve(const QeqProblem &p) {
  check_problem(p);
  const std::size_t n = p.e.size();
  const double Q = p.total_charge;

  CompensatedSum inv_sum;  // sum 1/s
  CompensatedSum ratio_sum; // sum e/s
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(p.s[i]) < kSingularEps)
      throw SingularHardness("hardness too close to zero",
                             static_cast<int>(i));
    inv_sum.add(1.0 / p.s[i]);
    ratio_sum.add(p.e[i] / p.s[i]);
  }
  const double S = inv_sum.value();
  if (std::abs(S) < kSingularEps)
    throw SingularHardness("sum of inverse hardness too close to zero", -1);
  const double lambda = (Q + ratio_sum.value()) / S;

  ChargeResult result;
  result.net_charge = p.total_charge;
  result.charges.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    result.charges[i] = (lambda - p.e[i]) / p.s[i];
  return result;
}

double charging_energy(const QeqProblem &p, const std::vector<double> &q) {
  check_problem(p);
  if (q.size() != p.e.size())
    throw InvalidArgument("charge count does not match problem size");
  CompensatedSum energy;
  for (std::size_t i = 0; i < q.size(); ++i)
    energy.add(p.e[i] * q[i] + 0.5 * p.s[i] * q[i] * q[i]);
  return energy.value();
}

std::vector<double> oracle_solve(const QeqProblem &p, double tol,
                                 int max_iters) {
  check_problem(p);
  const std::size_t n = p.e.size();
  for (std::size_t i = 0; i < n; ++i)
    if (p.s[i] <= 0.0)
      throw OracleDomainError("oracle requires strictly positive hardness");

  std::vector<double> q(n, static_cast<double>(p.total_charge) / n);
  std::vector<double> d(n);
  for (int iter = 0; iter < max_iters; ++iter) {
    double mean_g = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      mean_g += p.e[i] + p.s[i] * q[i];
    mean_g /= static_cast<double>(n);

    double norm2 = 0.0;
    double curvature = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = -(p.e[i] + p.s[i] * q[i] - mean_g);
      norm2 += d[i] * d[i];
      curvature += p.s[i] * d[i] * d[i];
    }
    if (std::sqrt(norm2) < tol)
      break;
    // Exact line search for the quadratic along d: g.d = -|d|^2.
    const double alpha = norm2 / curvature;
    for (std::size_t i = 0; i < n; ++i)
      q[i] += alpha * d[i];
  }
  return q;
}

QeqAdjoint solve_adjoint(const QeqProblem &p, const std::vector<double> &q,
                         const std::vector<double> &dq) {
  check_problem(p);
  const std::size_t n = p.e.size();
  if (q.size() != n || dq.size() != n)
    throw InvalidArgument("adjoint length mismatch");

  CompensatedSum inv_sum;
  CompensatedSum weighted; // sum dq_i / s_i
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(p.s[i]) < kSingularEps)
      throw SingularHardness("hardness too close to zero",
                             static_cast<int>(i));
    inv_sum.add(1.0 / p.s[i]);
    weighted.add(dq[i] / p.s[i]);
  }
  const double S = inv_sum.value();
  if (std::abs(S) < kSingularEps)
    throw SingularHardness("sum of inverse hardness too close to zero", -1);
  const double ratio = weighted.value() / S;

  // From q_i = (lambda - e_i)/s_i with lambda = (Q + sum e/s)/(sum 1/s):
  //   dL/de_j = (ratio - dq_j) / s_j,  dL/ds_j = q_j * dL/de_j.
  QeqAdjoint adj;
  adj.de.resize(n);
  adj.ds.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    adj.de[i] = (ratio - dq[i]) / p.s[i];
    adj.ds[i] = q[i] * adj.de[i];
  }
  return adj;
}

} // namespace qeqnet
