//
// Project QEqNet - Copyright 2026 QEqNet Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef QEQNET_PERCEIVE_HPP_
#define QEQNET_PERCEIVE_HPP_

/// \file
/// Graph perception and featurization: ring membership, hybridization,
/// aromaticity, and the fixed-width per-atom feature vectors consumed by
/// the network.  Everything here is derived from connectivity alone;
/// coordinates are never consulted.

#include <set>
#include <vector>

#include "qeqnet/molio.hpp"

namespace qeqnet {

/// Bumped whenever the meaning or order of feature columns changes.
/// Stored in model files so a stale model cannot silently consume
/// differently laid-out features.
inline constexpr int kFeatureLayoutVersion = 1;

/// Columns per atom: element one-hot (15) + hybridization one-hot (4)
/// + aromatic flag (1) + ring-size flags for sizes 3 through 8 (6).
inline constexpr int kFeatureWidth = kNumElements + 4 + 1 + 6;

enum class Hybridization : uint8_t { Sp, Sp2, Sp3, Other };

/// Row-major dense matrix, one row per atom.
struct FeatureMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<float> data;

  float *row(int i) { return data.data() + static_cast<std::size_t>(i) * cols; }
  const float *row(int i) const {
    return data.data() + static_cast<std::size_t>(i) * cols;
  }
};

/// Cycles of a minimum cycle basis, each as an atom-index loop in traversal
/// order.  Empty when the graph is acyclic.
std::vector<std::vector<int>> minimum_cycle_basis(const Molecule &mol);

/// Ring sizes touching each atom, restricted to sizes 3 through 8.
/// Sizes come from the minimum cycle basis, so a fused bicyclic like
/// bicyclobutane reports {3} for every atom rather than a 4-cycle.
std::vector<std::set<int>> detect_rings(const Molecule &mol);

/// Per-atom hybridization from connectivity: metals and hydrogen map to
/// Other, aromatic atoms to Sp2, triple-bonded atoms to Sp, and the rest
/// by steric number (sigma neighbors plus estimated lone pairs).
/// Throws PerceptionError when an atom's summed bond order exceeds the
/// element's maximum valence.
std::vector<Hybridization> perceive_hybridization(const Molecule &mol);

/// Effective aromaticity: the input flag, OR membership in a basis cycle
/// whose bonds are all aromatic-typed, OR membership in an even basis
/// cycle with strictly alternating single/double bond orders.
std::vector<bool> perceive_aromaticity(const Molecule &mol);

/// Full featurization pipeline.  Rows follow file atom order.
FeatureMatrix featurize(const Molecule &mol);

} // namespace qeqnet

#endif // QEQNET_PERCEIVE_HPP_
