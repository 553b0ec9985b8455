//
// Project QEqNet - Copyright 2026 QEqNet Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "qeqnet/pipeline.hpp"

#include "qeqnet/perceive.hpp"
#include "qeqnet/qeq.hpp"

namespace qeqnet {

ChargeResult assign_charges(const ModelParams &params, const Molecule &mol,
                            kernels::Exec exec) {
  validate_molecule(mol);
  const FeatureMatrix features = featurize(mol);
  const ENSParams ens = forward(params, mol, features, exec);
  return solve({ens.e, ens.s, mol.net_charge()});
}

std::vector<ChargeResult>
assign_charges_batched(const ModelParams &params,
                       const std::vector<Molecule> &mols,
                       kernels::Exec exec) {
  std::vector<FeatureMatrix> features;
  features.reserve(mols.size());
  for (const Molecule &mol : mols) {
    validate_molecule(mol);
    features.push_back(featurize(mol));
  }
  const BatchedGraph bg = batch(mols, features);
  const ENSParams ens = forward(params, bg, exec);
  const auto es = unbatch(bg, ens.e);
  const auto ss = unbatch(bg, ens.s);

  std::vector<ChargeResult> results;
  results.reserve(mols.size());
  for (std::size_t m = 0; m < mols.size(); ++m)
    results.push_back(solve({es[m], ss[m], mols[m].net_charge()}));
  return results;
}

} // namespace qeqnet
