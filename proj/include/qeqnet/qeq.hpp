//
// Project QEqNet - Copyright 2026 QEqNet Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef QEQNET_QEQ_HPP_
#define QEQNET_QEQ_HPP_

/// \file
/// Charge equilibration: distribute a fixed net charge Q over atoms by
/// minimizing sum_i (e_i q_i + s_i q_i^2 / 2) subject to sum_i q_i = Q.
/// The constrained quadratic has the closed form
///
///   q_i = -e_i / s_i + (1 / s_i) * (Q + sum_j e_j / s_j) / (sum_j 1 / s_j)
///
/// which this module evaluates in 64-bit with compensated summation, plus
/// a projected-gradient oracle used only by tests, and the analytic
/// adjoint needed to backpropagate through the solution.

#include <vector>

#include "qeqnet/molio.hpp"

namespace qeqnet {

struct QeqProblem {
  std::vector<double> e;
  std::vector<double> s;
  int total_charge = 0;
};

/// Hardness magnitudes (and the 1/s sum) below this are treated as
/// singular.
inline constexpr double kSingularEps = 1e-10;

/// Closed-form constrained minimizer.  Accepts hardness of either sign;
/// throws SingularHardness when any |s_i| or |sum 1/s_i| falls below
/// kSingularEps, InvalidArgument on non-finite input.  The returned
/// charges sum to Q up to rounding.
ChargeResult solve(const QeqProblem &p);

/// sum_i (e_i q_i + s_i q_i^2 / 2).
double charging_energy(const QeqProblem &p, const std::vector<double> &q);

/// Projected-gradient minimization on the hyperplane sum q = Q, starting
/// from the uniform point.  Restricted to the convex case: any s_i <= 0
/// throws OracleDomainError.  Intended for verification, not production.
std::vector<double> oracle_solve(const QeqProblem &p, double tol = 1e-10,
                                 int max_iters = 200000);

/// Reverse-mode derivative of solve(): given dL/dq, accumulate dL/de and
/// dL/ds.  Uses the same intermediate sums as solve().
struct QeqAdjoint {
  std::vector<double> de;
  std::vector<double> ds;
};
QeqAdjoint solve_adjoint(const QeqProblem &p, const std::vector<double> &q,
                         const std::vector<double> &dq);

} // namespace qeqnet

#endif // QEQNET_QEQ_HPP_
