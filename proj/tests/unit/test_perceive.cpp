//
// Project QEqNet - Copyright 2026 QEqNet Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include "qeqnet/errors.hpp"
#include "qeqnet/molio.hpp"
#include "qeqnet/perceive.hpp"

#include "test_util.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <vector>

using namespace qeqnet;
using testutil::read_fixture;

namespace {

// Independent ring oracle: enumerate every simple cycle as an edge subset
// forming a connected 2-regular subgraph, then build a shortest-first
// GF(2)-independent basis with plain bool-vector elimination.  Feasible for
// fixtures only (2^bonds subsets), which is the point: no shared code with
// the library's basis search.
struct OracleCycle {
  std::vector<std::size_t> atoms;
  std::vector<bool> edges; // indicator over bond indices
};

std::vector<OracleCycle> enumerate_simple_cycles(const Molecule &mol) {
  const std::size_t m = mol.bond_count();
  const std::size_t n = mol.atom_count();
  REQUIRE(m <= 20);
  std::vector<OracleCycle> cycles;
  for (std::size_t mask = 1; mask < (std::size_t{1} << m); ++mask) {
    std::vector<int> degree(n, 0);
    std::vector<std::size_t> picked;
    for (std::size_t e = 0; e < m; ++e)
      if (mask & (std::size_t{1} << e)) {
        picked.push_back(e);
        ++degree[mol.bonds[e].a];
        ++degree[mol.bonds[e].b];
      }
    bool two_regular = true;
    std::vector<std::size_t> members;
    for (std::size_t v = 0; v < n; ++v) {
      if (degree[v] != 0 && degree[v] != 2)
        two_regular = false;
      if (degree[v] == 2)
        members.push_back(v);
    }
    if (!two_regular || members.size() != picked.size())
      continue;
    // Connectivity of the picked subgraph: walk from one member.
    std::set<std::size_t> seen{members.front()};
    std::vector<std::size_t> stack{members.front()};
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      for (const std::size_t e : picked) {
        std::size_t other;
        if (mol.bonds[e].a == v)
          other = mol.bonds[e].b;
        else if (mol.bonds[e].b == v)
          other = mol.bonds[e].a;
        else
          continue;
        if (seen.insert(other).second)
          stack.push_back(other);
      }
    }
    if (seen.size() != members.size())
      continue;
    OracleCycle c;
    c.atoms = members;
    c.edges.assign(m, false);
    for (const std::size_t e : picked)
      c.edges[e] = true;
    cycles.push_back(std::move(c));
  }
  return cycles;
}

std::vector<std::set<int>> oracle_ring_sizes(const Molecule &mol) {
  auto cycles = enumerate_simple_cycles(mol);
  std::stable_sort(cycles.begin(), cycles.end(),
                   [](const OracleCycle &a, const OracleCycle &b) {
                     return a.atoms.size() < b.atoms.size();
                   });
  // Echelon rows keyed by leading edge index; reducing in ascending-lead
  // order is what makes a single pass a complete independence test.
  std::map<std::size_t, std::vector<bool>> echelon;
  std::vector<std::set<int>> result(mol.atoms.size());
  for (const auto &cycle : cycles) {
    std::vector<bool> reduced = cycle.edges;
    for (const auto &[lead, row] : echelon)
      if (reduced[lead])
        for (std::size_t e = 0; e < reduced.size(); ++e)
          reduced[e] = reduced[e] != row[e];
    std::size_t lead = 0;
    while (lead < reduced.size() && !reduced[lead])
      ++lead;
    if (lead == reduced.size())
      continue; // dependent on shorter cycles
    echelon.emplace(lead, reduced);
    if (cycle.atoms.size() >= 3 && cycle.atoms.size() <= 8)
      for (const std::size_t v : cycle.atoms)
        result[v].insert(static_cast<int>(cycle.atoms.size()));
  }
  const std::size_t expected_dim = mol.bond_count() - mol.atom_count() + 1;
  CHECK(echelon.size() == expected_dim); // fixtures are connected
  return result;
}

Molecule carbocycle(std::size_t ring_size) {
  Molecule mol;
  mol.name = "ring";
  for (std::size_t i = 0; i < ring_size; ++i) {
    mol.atoms.push_back({Element::C, 0, false});
    mol.bonds.push_back({static_cast<int>(i),
                         static_cast<int>((i + 1) % ring_size),
                         BondKind::Single});
  }
  for (std::size_t i = 0; i < ring_size; ++i)
    for (int h = 0; h < 2; ++h) {
      mol.atoms.push_back({Element::H, 0, false});
      mol.bonds.push_back({static_cast<int>(i),
                           static_cast<int>(mol.atoms.size() - 1),
                           BondKind::Single});
    }
  validate_molecule(mol);
  return mol;
}

} // namespace

TEST_CASE("feature layout constants") {
  CHECK(kFeatureLayoutVersion == 1);
  CHECK(kFeatureWidth == 26);
  CHECK(kFeatureWidth == kNumElements + 4 + 1 + 6);
}

TEST_CASE("benzene carbons sit in one six-ring") {
  const Molecule mol = parse_mol2(read_fixture("benzene.mol2"));
  const auto rings = detect_rings(mol);
  for (std::size_t i = 0; i < mol.atoms.size(); ++i) {
    if (mol.atoms[i].element == Element::C)
      CHECK(rings[i] == std::set<int>{6});
    else
      CHECK(rings[i].empty());
  }
}

TEST_CASE("acyclic chains report no rings") {
  const Molecule hexane = generate_chain(6, ChainKind::Alkane);
  for (const auto &s : detect_rings(hexane))
    CHECK(s.empty());
  const Molecule peptide = generate_chain(3, ChainKind::PseudoPeptide);
  for (const auto &s : detect_rings(peptide))
    CHECK(s.empty());
}

TEST_CASE("fused three-rings cover every skeleton atom") {
  const Molecule mol = parse_sdf(read_fixture("bicyclobutane.sdf"));
  const auto rings = detect_rings(mol);
  const auto expected = oracle_ring_sizes(mol);
  for (std::size_t i = 0; i < mol.atoms.size(); ++i) {
    CAPTURE(i);
    CHECK(rings[i] == expected[i]);
    if (mol.atoms[i].element == Element::C)
      CHECK(rings[i] == std::set<int>{3});
    else
      CHECK(rings[i].empty());
  }
  const auto basis = minimum_cycle_basis(mol);
  REQUIRE(basis.size() == 2);
  CHECK(basis[0].size() == 3);
  CHECK(basis[1].size() == 3);
}

TEST_CASE("ring detection matches the exhaustive oracle on all cyclic fixtures") {
  for (const char *name :
       {"benzene_kekulized.sdf", "pyridine.sdf", "cyclopropane.sdf",
        "cyclohexane.sdf", "bicyclobutane.sdf", "naphthalene.sdf"}) {
    CAPTURE(name);
    const Molecule mol = parse_sdf(read_fixture(name));
    const auto rings = detect_rings(mol);
    const auto expected = oracle_ring_sizes(mol);
    REQUIRE(rings.size() == expected.size());
    for (std::size_t i = 0; i < rings.size(); ++i) {
      CAPTURE(i);
      CHECK(rings[i] == expected[i]);
    }
  }
}

TEST_CASE("every supported ring size is flagged and larger rings are not") {
  for (std::size_t size = 3; size <= 8; ++size) {
    CAPTURE(size);
    const Molecule mol = carbocycle(size);
    const auto rings = detect_rings(mol);
    for (std::size_t i = 0; i < size; ++i)
      CHECK(rings[i] == std::set<int>{static_cast<int>(size)});
  }
  const auto big = detect_rings(carbocycle(10));
  for (const auto &s : big)
    CHECK(s.empty());
}

TEST_CASE("hybridization follows the documented rule table") {
  const Molecule methane = parse_sdf(read_fixture("methane.sdf"));
  auto hyb = perceive_hybridization(methane);
  CHECK(hyb[0] == Hybridization::Sp3);
  for (std::size_t i = 1; i < 5; ++i)
    CHECK(hyb[i] == Hybridization::Other);

  const Molecule hcn = parse_sdf(read_fixture("hcn.sdf"));
  hyb = perceive_hybridization(hcn);
  CHECK(hyb[0] == Hybridization::Other); // H
  CHECK(hyb[1] == Hybridization::Sp);    // triple-bond carbon
  CHECK(hyb[2] == Hybridization::Sp);    // nitrile nitrogen

  const Molecule water = parse_sdf(read_fixture("water.sdf"));
  CHECK(perceive_hybridization(water)[0] == Hybridization::Sp3);

  const Molecule formaldehyde = parse_sdf(read_fixture("formaldehyde.sdf"));
  hyb = perceive_hybridization(formaldehyde);
  CHECK(hyb[0] == Hybridization::Sp2);
  CHECK(hyb[1] == Hybridization::Sp2);

  // Two sigma partners, no lone pairs: cumulated carbon.
  Molecule co2;
  co2.name = "carbon dioxide";
  co2.atoms = {{Element::O, 0, false},
               {Element::C, 0, false},
               {Element::O, 0, false}};
  co2.bonds = {{0, 1, BondKind::Double}, {1, 2, BondKind::Double}};
  hyb = perceive_hybridization(co2);
  CHECK(hyb[1] == Hybridization::Sp);
  CHECK(hyb[0] == Hybridization::Sp2);

  const Molecule thiol = parse_sdf(read_fixture("methanethiol.sdf"));
  const auto thyb = perceive_hybridization(thiol);
  bool saw_s = false;
  for (std::size_t i = 0; i < thiol.atom_count(); ++i)
    if (thiol.atoms[i].element == Element::S) {
      CHECK(thyb[i] == Hybridization::Sp3);
      saw_s = true;
    }
  CHECK(saw_s);
}

TEST_CASE("aromatic atoms are sp2 regardless of bond orders") {
  const Molecule flagged = parse_mol2(read_fixture("benzene.mol2"));
  auto hyb = perceive_hybridization(flagged);
  for (std::size_t i = 0; i < flagged.atom_count(); ++i)
    if (flagged.atoms[i].element == Element::C)
      CHECK(hyb[i] == Hybridization::Sp2);

  // Kekulized input has no flags; the alternation rule recovers sp2.
  const Molecule kek = parse_sdf(read_fixture("benzene_kekulized.sdf"));
  hyb = perceive_hybridization(kek);
  for (std::size_t i = 0; i < kek.atom_count(); ++i)
    if (kek.atoms[i].element == Element::C)
      CHECK(hyb[i] == Hybridization::Sp2);
}

TEST_CASE("metals and hydrogen have no hybridization label") {
  for (const char *name :
       {"lioh.sdf", "naoh.sdf", "koh.sdf", "mgoh2.sdf", "caoh2.sdf"}) {
    CAPTURE(name);
    const Molecule mol = parse_sdf(read_fixture(name));
    const auto hyb = perceive_hybridization(mol);
    for (std::size_t i = 0; i < mol.atom_count(); ++i) {
      const Element e = mol.atoms[i].element;
      if (e == Element::O)
        continue;
      CHECK(hyb[i] == Hybridization::Other);
    }
  }
}

TEST_CASE("fused aromatic systems perceive cleanly") {
  // Three aromatic bonds meet at each fusion carbon; the summed order must
  // count them as in a Kekule structure, not as 1.5 each.
  const Molecule naph = parse_sdf(read_fixture("naphthalene.sdf"));
  const auto hyb = perceive_hybridization(naph);
  for (std::size_t i = 0; i < naph.atom_count(); ++i)
    if (naph.atoms[i].element == Element::C)
      CHECK(hyb[i] == Hybridization::Sp2);
  CHECK_NOTHROW(featurize(naph));
}

TEST_CASE("valence over the table maximum names the atom") {
  const Molecule mol = parse_sdf(read_fixture("five_bond_carbon.sdf"));
  try {
    perceive_hybridization(mol);
    FAIL("expected PerceptionError");
  } catch (const PerceptionError &err) {
    CHECK(err.atom_index() == 0);
  }
  CHECK_THROWS_AS(featurize(mol), PerceptionError);
}

TEST_CASE("effective aromaticity rules") {
  const Molecule kek = parse_sdf(read_fixture("benzene_kekulized.sdf"));
  const auto arom = perceive_aromaticity(kek);
  for (std::size_t i = 0; i < kek.atom_count(); ++i)
    CHECK(arom[i] == (kek.atoms[i].element == Element::C));

  for (const auto &s : perceive_aromaticity(carbocycle(6)))
    CHECK_FALSE(s);
  for (const auto &s : perceive_aromaticity(carbocycle(3)))
    CHECK_FALSE(s);

  const Molecule pyr = parse_sdf(read_fixture("pyridine.sdf"));
  const auto parom = perceive_aromaticity(pyr);
  for (std::size_t i = 0; i < pyr.atom_count(); ++i)
    CHECK(parom[i] == pyr.atoms[i].aromatic_flag);

  const Molecule naph = parse_sdf(read_fixture("naphthalene.sdf"));
  const auto narom = perceive_aromaticity(naph);
  for (std::size_t i = 0; i < naph.atom_count(); ++i)
    CHECK(narom[i] == (naph.atoms[i].element == Element::C));

  // The alternation rule is purely syntactic: any even ring of strictly
  // alternating single/double orders counts.
  Molecule cbd;
  cbd.name = "cyclobutadiene";
  for (std::size_t i = 0; i < 4; ++i)
    cbd.atoms.push_back({Element::C, 0, false});
  cbd.bonds = {{0, 1, BondKind::Double},
               {1, 2, BondKind::Single},
               {2, 3, BondKind::Double},
               {3, 0, BondKind::Single}};
  for (int i = 0; i < 4; ++i) {
    cbd.atoms.push_back({Element::H, 0, false});
    cbd.bonds.push_back({i, 4 + i, BondKind::Single});
  }
  const auto carom = perceive_aromaticity(cbd);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(carom[i]);
}

TEST_CASE("benzene carbon feature row") {
  const Molecule mol = parse_mol2(read_fixture("benzene.mol2"));
  const FeatureMatrix f = featurize(mol);
  REQUIRE(f.cols == kFeatureWidth);
  REQUIRE(f.rows == mol.atom_count());
  std::size_t carbon = mol.atom_count();
  for (std::size_t i = 0; i < mol.atom_count(); ++i)
    if (mol.atoms[i].element == Element::C) {
      carbon = i;
      break;
    }
  REQUIRE(carbon < mol.atom_count());
  std::vector<float> expected(kFeatureWidth, 0.0f);
  expected[2] = 1.0f;                   // element C
  expected[kNumElements + 1] = 1.0f;    // sp2
  expected[kNumElements + 4] = 1.0f;    // aromatic
  expected[kNumElements + 5 + 3] = 1.0f; // six-ring flag
  const float *row = f.row(carbon);
  for (std::size_t j = 0; j < kFeatureWidth; ++j) {
    CAPTURE(j);
    CHECK(row[j] == expected[j]);
  }
}

TEST_CASE("methane hydrogen feature row") {
  const Molecule mol = parse_sdf(read_fixture("methane.sdf"));
  const FeatureMatrix f = featurize(mol);
  std::vector<float> expected(kFeatureWidth, 0.0f);
  expected[0] = 1.0f;                // element H
  expected[kNumElements + 3] = 1.0f; // hybridization "other"
  const float *row = f.row(1);
  for (std::size_t j = 0; j < kFeatureWidth; ++j) {
    CAPTURE(j);
    CHECK(row[j] == expected[j]);
  }
}

TEST_CASE("feature rows are one-hot in element and hybridization") {
  for (const char *name : {"ethanol.sdf", "acetate.sdf", "pyridine.sdf",
                           "naphthalene.sdf", "mgoh2.sdf", "hcn.sdf"}) {
    CAPTURE(name);
    const Molecule mol = parse_sdf(read_fixture(name));
    const FeatureMatrix f = featurize(mol);
    for (std::size_t i = 0; i < f.rows; ++i) {
      const float *row = f.row(i);
      int element_ones = 0;
      int hyb_ones = 0;
      for (std::size_t j = 0; j < f.cols; ++j) {
        CHECK((row[j] == 0.0f || row[j] == 1.0f));
        if (j < kNumElements && row[j] == 1.0f)
          ++element_ones;
        if (j >= kNumElements && j < kNumElements + 4 && row[j] == 1.0f)
          ++hyb_ones;
      }
      CHECK(element_ones == 1);
      CHECK(hyb_ones == 1);
    }
  }
}

TEST_CASE("features ignore formal charge and coordinates") {
  Molecule mol = parse_sdf(read_fixture("acetate.sdf"));
  const FeatureMatrix base = featurize(mol);

  Molecule neutralized = mol;
  for (auto &a : neutralized.atoms)
    a.formal_charge = 0;
  const FeatureMatrix without_charge = featurize(neutralized);

  Molecule shifted = mol;
  for (auto &c : *shifted.coordinates) {
    c.x += 17.0;
    c.y -= 3.5;
    c.z += 0.25;
  }
  const FeatureMatrix moved = featurize(shifted);

  Molecule bare = mol;
  bare.coordinates.reset();
  const FeatureMatrix no_coords = featurize(bare);

  CHECK(base.data == without_charge.data);
  CHECK(base.data == moved.data);
  CHECK(base.data == no_coords.data);
}

TEST_CASE("feature rows follow atom relabeling") {
  const Molecule mol = parse_sdf(read_fixture("ethanol.sdf"));
  const std::size_t n = mol.atom_count();
  // Fixed permutation: reverse order.
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i)
    perm[i] = n - 1 - i;

  Molecule relabeled;
  relabeled.name = mol.name;
  relabeled.atoms.resize(n);
  relabeled.coordinates.emplace(n);
  for (std::size_t i = 0; i < n; ++i) {
    relabeled.atoms[perm[i]] = mol.atoms[i];
    (*relabeled.coordinates)[perm[i]] = (*mol.coordinates)[i];
  }
  for (const auto &b : mol.bonds)
    relabeled.bonds.push_back(
        {static_cast<int>(perm[static_cast<std::size_t>(b.a)]),
         static_cast<int>(perm[static_cast<std::size_t>(b.b)]), b.kind});

  const FeatureMatrix f = featurize(mol);
  const FeatureMatrix g = featurize(relabeled);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < kFeatureWidth; ++j) {
      CAPTURE(i);
      CHECK(f.row(i)[j] == g.row(perm[i])[j]);
    }
}
