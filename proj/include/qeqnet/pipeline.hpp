//
// Project QEqNet - Copyright 2026 QEqNet Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef QEQNET_PIPELINE_HPP_
#define QEQNET_PIPELINE_HPP_

/// \file
/// End-to-end charge assignment: validate -> featurize -> network ->
/// charge equilibration, for one molecule or a batch.

#include <vector>

#include "qeqnet/gnn.hpp"
#include "qeqnet/molio.hpp"

namespace qeqnet {

/// Assign charges to a single molecule.  Net charge comes from the
/// molecule's formal charges.
ChargeResult assign_charges(const ModelParams &params, const Molecule &mol,
                            kernels::Exec exec = kernels::Exec::Parallel);

/// Assign charges to many molecules through one block-diagonal forward
/// pass.  Equivalent to mapping assign_charges over the input.
std::vector<ChargeResult>
assign_charges_batched(const ModelParams &params,
                       const std::vector<Molecule> &mols,
                       kernels::Exec exec = kernels::Exec::Parallel);

} // namespace qeqnet

#endif // QEQNET_PIPELINE_HPP_
