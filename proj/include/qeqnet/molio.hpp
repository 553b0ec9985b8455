//
// Project QEqNet - Copyright 2026 QEqNet Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef QEQNET_MOLIO_HPP_
#define QEQNET_MOLIO_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qeqnet/errors.hpp"

namespace qeqnet {

/// Supported element set, in the fixed one-hot encoding order.
enum class Element : std::uint8_t {
  H, Li, C, N, O, F, Na, Mg, P, S, Cl, K, Ca, Br, I
};

inline constexpr int kNumElements = 15;

const char *element_symbol(Element e);
/// Case-sensitive symbol lookup ("H", "Cl", ...); nullopt for anything else.
std::optional<Element> element_from_symbol(std::string_view symbol);

enum class BondKind : std::uint8_t { Single, Double, Triple, Aromatic };

struct AtomRecord {
  Element element = Element::C;
  int formal_charge = 0;     // elementary charges
  bool aromatic_flag = false;

  bool operator==(const AtomRecord &) const = default;
};

struct Bond {
  int a = 0;
  int b = 0;
  BondKind kind = BondKind::Single;

  bool operator==(const Bond &) const = default;
};

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  bool operator==(const Vec3 &) const = default;
};

struct Molecule {
  std::string name;
  std::vector<AtomRecord> atoms;
  std::vector<Bond> bonds;
  std::optional<std::vector<Vec3>> coordinates; // Angstrom, one per atom

  int atom_count() const { return static_cast<int>(atoms.size()); }
  int bond_count() const { return static_cast<int>(bonds.size()); }
  /// Net charge Q: the sum of atomic formal charges.
  int net_charge() const;

  bool operator==(const Molecule &) const = default;
};

/// Checks the structural invariants: valid, distinct bond endpoints, no
/// duplicate bonds (unordered), coordinates count matching atoms, and a
/// connected bond graph. Throws InvalidArgument or MultiFragmentError.
void validate_molecule(const Molecule &mol);

struct ChargeResult {
  std::vector<double> charges; // elementary charges, one per atom
  int net_charge = 0;          // Q
};

/// TRIPOS MOL2 subset: MOLECULE/ATOM/BOND records. Elements come from the
/// SYBYL atom type (token before the dot); a ".ar" suffix or an "ar" bond
/// marks aromaticity. MOL2 has no standard formal-charge field, so an
/// optional trailing "# fc=<int>" comment on an ATOM line supplies one
/// (defaults to 0). write_mol2 emits the same extension.
Molecule parse_mol2(std::string_view text);
std::string write_mol2(const Molecule &mol);

/// SDF V2000: counts line, atom/bond blocks, "M  CHG" and "M  END".
/// Bond order 4 is read as aromatic and sets aromatic_flag on both atoms.
Molecule parse_sdf(std::string_view text);
/// V2000 caps the atom block at 999 entries; larger molecules are refused.
std::string write_sdf(const Molecule &mol);

/// Free-format charge file: fixed-point values, 6 fractional digits in a
/// 10-character field, 8 per line, trailing newline on every line.
std::string write_charge_file(const ChargeResult &result);
std::vector<double> parse_charge_file(std::string_view text);

/// Reads a .mol2 or .sdf file, dispatching on the extension.
Molecule read_molecule_file(const std::string &path);

enum class ChainKind { Alkane, PseudoPeptide };

/// Deterministic synthetic chain molecules for scaling runs:
/// Alkane n -> C_n H_{2n+2}; PseudoPeptide n -> capped chain of n 10-atom
/// backbone+sidechain units (10n+12 atoms). No coordinates.
Molecule generate_chain(int n_units, ChainKind kind);

} // namespace qeqnet

#endif // QEQNET_MOLIO_HPP_
