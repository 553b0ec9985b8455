//
// Project QEqNet - Copyright 2026 QEqNet Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "qeqnet/molio.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

namespace qeqnet {

namespace {

constexpr std::array<const char *, kNumElements> kSymbols = {
    "H", "Li", "C", "N", "O", "F", "Na", "Mg",
    "P", "S", "Cl", "K", "Ca", "Br", "I"};

struct Line {
  std::string_view text;
  int number; // 1-based
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  int number = 1;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos)
      end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r')
      line.remove_suffix(1);
    lines.push_back({line, number});
    ++number;
    if (end == text.size())
      break;
    start = end + 1;
  }
  // Drop a trailing empty line produced by a final newline.
  if (!lines.empty() && lines.back().text.empty())
    lines.pop_back();
  return lines;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> tokenize(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t'))
      ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t')
      ++j;
    if (j > i)
      out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

int parse_int(std::string_view tok, int line) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError("expected integer, got '" + std::string(tok) + "'", line);
  return value;
}

double parse_double(std::string_view tok, int line) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError("expected number, got '" + std::string(tok) + "'", line);
  return value;
}

Element element_or_throw(std::string_view symbol) {
  auto e = element_from_symbol(symbol);
  if (!e)
    throw UnsupportedElement(std::string(symbol));
  return *e;
}

void check_bond_indices(int a, int b, int n_atoms, int line) {
  if (a < 1 || a > n_atoms || b < 1 || b > n_atoms)
    throw ParseError("bond atom index out of range", line);
}

} // namespace

const char *element_symbol(Element e) { return kSymbols[static_cast<int>(e)]; }

std::optional<Element> element_from_symbol(std::string_view symbol) {
  for (int i = 0; i < kNumElements; ++i)
    if (symbol == kSymbols[i])
      return static_cast<Element>(i);
  return std::nullopt;
}

int Molecule::net_charge() const {
  int q = 0;
  for (const auto &a : atoms)
    q += a.formal_charge;
  return q;
}

void validate_molecule(const Molecule &mol) {
  const int n = mol.atom_count();
  if (n == 0)
    throw InvalidArgument("molecule has no atoms");
  std::set<std::pair<int, int>> seen;
  for (const auto &b : mol.bonds) {
    if (b.a < 0 || b.a >= n || b.b < 0 || b.b >= n)
      throw InvalidArgument("bond endpoint out of range");
    if (b.a == b.b)
      throw InvalidArgument("bond endpoints must be distinct");
    auto key = std::minmax(b.a, b.b);
    if (!seen.insert(key).second)
      throw InvalidArgument("duplicate bond between atoms " +
                            std::to_string(key.first) + " and " +
                            std::to_string(key.second));
  }
  if (mol.coordinates && static_cast<int>(mol.coordinates->size()) != n)
    throw InvalidArgument("coordinate count does not match atom count");

  // Connectivity via BFS from atom 0.
  std::vector<std::vector<int>> adj(n);
  for (const auto &b : mol.bonds) {
    adj[b.a].push_back(b.b);
    adj[b.b].push_back(b.a);
  }
  std::vector<char> visited(n, 0);
  std::vector<int> stack = {0};
  visited[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int u : adj[v])
      if (!visited[u]) {
        visited[u] = 1;
        ++count;
        stack.push_back(u);
      }
  }
  if (count != n)
    throw MultiFragmentError("molecule has multiple disconnected fragments");
}

// ---------------------------------------------------------------------------
// MOL2

Molecule parse_mol2(std::string_view text) {
  auto lines = split_lines(text);
  Molecule mol;

  std::size_t i = 0;
  while (i < lines.size() && trim(lines[i].text) != "@<TRIPOS>MOLECULE")
    ++i;
  if (i == lines.size())
    throw ParseError("missing @<TRIPOS>MOLECULE section");
  ++i;
  if (i >= lines.size())
    throw ParseError("missing molecule name line", lines.back().number);
  mol.name = std::string(trim(lines[i].text));
  ++i;
  if (i >= lines.size())
    throw ParseError("missing molecule counts line");
  auto counts = tokenize(lines[i].text);
  if (counts.size() < 2)
    throw ParseError("molecule counts line needs atom and bond counts",
                     lines[i].number);
  const int n_atoms = parse_int(counts[0], lines[i].number);
  const int n_bonds = parse_int(counts[1], lines[i].number);
  if (n_atoms < 0 || n_bonds < 0)
    throw ParseError("negative counts", lines[i].number);
  ++i;

  while (i < lines.size() && trim(lines[i].text) != "@<TRIPOS>ATOM") {
    if (trim(lines[i].text) == "@<TRIPOS>MOLECULE")
      throw ParseError("missing @<TRIPOS>ATOM section", lines[i].number);
    ++i;
  }
  if (i == lines.size())
    throw ParseError("missing @<TRIPOS>ATOM section");
  ++i;

  mol.atoms.reserve(n_atoms);
  std::vector<Vec3> coords;
  coords.reserve(n_atoms);
  for (int a = 0; a < n_atoms; ++a, ++i) {
    if (i >= lines.size() || trim(lines[i].text).starts_with("@<TRIPOS>"))
      throw ParseError("atom block shorter than declared count",
                       i < lines.size() ? lines[i].number : 0);
    std::string_view line = lines[i].text;
    std::string_view comment;
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      comment = line.substr(hash + 1);
      line = line.substr(0, hash);
    }
    auto tok = tokenize(line);
    if (tok.size() < 6)
      throw ParseError("atom line needs id, name, x, y, z, type",
                       lines[i].number);
    coords.push_back({parse_double(tok[2], lines[i].number),
                      parse_double(tok[3], lines[i].number),
                      parse_double(tok[4], lines[i].number)});
    std::string_view sybyl = tok[5];
    std::string_view symbol = sybyl;
    std::string_view suffix;
    if (auto dot = sybyl.find('.'); dot != std::string_view::npos) {
      symbol = sybyl.substr(0, dot);
      suffix = sybyl.substr(dot + 1);
    }
    AtomRecord atom;
    atom.element = element_or_throw(symbol);
    atom.aromatic_flag = (suffix == "ar");
    for (auto ctok : tokenize(comment)) {
      if (ctok.starts_with("fc=")) {
        atom.formal_charge = parse_int(ctok.substr(3), lines[i].number);
      }
    }
    mol.atoms.push_back(atom);
  }
  mol.coordinates = std::move(coords);

  while (i < lines.size() && trim(lines[i].text) != "@<TRIPOS>BOND") {
    if (trim(lines[i].text) == "@<TRIPOS>MOLECULE")
      break;
    ++i;
  }
  if (n_bonds > 0 &&
      (i == lines.size() || trim(lines[i].text) != "@<TRIPOS>BOND"))
    throw ParseError("missing @<TRIPOS>BOND section");
  if (i < lines.size())
    ++i;

  mol.bonds.reserve(n_bonds);
  for (int b = 0; b < n_bonds; ++b, ++i) {
    if (i >= lines.size() || trim(lines[i].text).starts_with("@<TRIPOS>"))
      throw ParseError("bond block shorter than declared count",
                       i < lines.size() ? lines[i].number : 0);
    auto tok = tokenize(lines[i].text);
    if (tok.size() < 4)
      throw ParseError("bond line needs id, atom1, atom2, type",
                       lines[i].number);
    const int a = parse_int(tok[1], lines[i].number);
    const int bb = parse_int(tok[2], lines[i].number);
    check_bond_indices(a, bb, n_atoms, lines[i].number);
    BondKind kind;
    std::string_view t = tok[3];
    if (t == "1" || t == "am")
      kind = BondKind::Single;
    else if (t == "2")
      kind = BondKind::Double;
    else if (t == "3")
      kind = BondKind::Triple;
    else if (t == "ar")
      kind = BondKind::Aromatic;
    else
      throw ParseError("unknown bond type '" + std::string(t) + "'",
                       lines[i].number);
    mol.bonds.push_back({a - 1, bb - 1, kind});
  }

  validate_molecule(mol);
  return mol;
}

std::string write_mol2(const Molecule &mol) {
  std::ostringstream out;
  out << "@<TRIPOS>MOLECULE\n" << mol.name << "\n";
  out << ' ' << mol.atom_count() << ' ' << mol.bond_count() << " 0 0 0\n";
  out << "SMALL\nNO_CHARGES\n\n@<TRIPOS>ATOM\n";
  char buf[160];
  for (int i = 0; i < mol.atom_count(); ++i) {
    const AtomRecord &a = mol.atoms[i];
    Vec3 c = mol.coordinates ? (*mol.coordinates)[i] : Vec3{};
    std::string type = element_symbol(a.element);
    if (a.aromatic_flag)
      type += ".ar";
    std::string name = std::string(element_symbol(a.element)) +
                       std::to_string(i + 1);
    int n = std::snprintf(buf, sizeof buf, "%7d %-6s %9.4f %9.4f %9.4f %-6s",
                          i + 1, name.c_str(), c.x, c.y, c.z, type.c_str());
    out.write(buf, n);
    if (a.formal_charge != 0)
      out << " # fc=" << a.formal_charge;
    out << '\n';
  }
  out << "@<TRIPOS>BOND\n";
  for (int i = 0; i < mol.bond_count(); ++i) {
    const Bond &b = mol.bonds[i];
    const char *t = "1";
    switch (b.kind) {
    case BondKind::Single: t = "1"; break;
    case BondKind::Double: t = "2"; break;
    case BondKind::Triple: t = "3"; break;
    case BondKind::Aromatic: t = "ar"; break;
    }
    int n = std::snprintf(buf, sizeof buf, "%6d %5d %5d %s\n", i + 1,
                          b.a + 1, b.b + 1, t);
    out.write(buf, n);
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// SDF (V2000)

Molecule parse_sdf(std::string_view text) {
  auto lines = split_lines(text);
  if (lines.size() < 4)
    throw ParseError("SDF needs a header and a counts line");
  Molecule mol;
  mol.name = std::string(trim(lines[0].text));

  const Line &counts_line = lines[3];
  if (counts_line.text.find("V2000") == std::string_view::npos) {
    if (counts_line.text.find("V3000") != std::string_view::npos)
      throw ParseError("V3000 connection tables are not supported",
                       counts_line.number);
    throw ParseError("counts line lacks a V2000 version tag",
                     counts_line.number);
  }
  if (counts_line.text.size() < 6)
    throw ParseError("counts line too short", counts_line.number);
  const int n_atoms =
      parse_int(trim(counts_line.text.substr(0, 3)), counts_line.number);
  const int n_bonds =
      parse_int(trim(counts_line.text.substr(3, 3)), counts_line.number);
  if (n_atoms < 0 || n_bonds < 0)
    throw ParseError("negative counts", counts_line.number);

  std::size_t i = 4;
  std::vector<Vec3> coords;
  coords.reserve(n_atoms);
  for (int a = 0; a < n_atoms; ++a, ++i) {
    if (i >= lines.size())
      throw ParseError("atom block shorter than declared count");
    std::string_view line = lines[i].text;
    if (line.size() < 34)
      throw ParseError("atom line too short", lines[i].number);
    coords.push_back({parse_double(trim(line.substr(0, 10)), lines[i].number),
                      parse_double(trim(line.substr(10, 10)), lines[i].number),
                      parse_double(trim(line.substr(20, 10)), lines[i].number)});
    std::string_view symbol = trim(line.substr(31, 3));
    AtomRecord atom;
    atom.element = element_or_throw(symbol);
    mol.atoms.push_back(atom);
  }
  mol.coordinates = std::move(coords);

  for (int b = 0; b < n_bonds; ++b, ++i) {
    if (i >= lines.size())
      throw ParseError("bond block shorter than declared count");
    std::string_view line = lines[i].text;
    if (line.size() < 9)
      throw ParseError("bond line too short", lines[i].number);
    const int a1 = parse_int(trim(line.substr(0, 3)), lines[i].number);
    const int a2 = parse_int(trim(line.substr(3, 3)), lines[i].number);
    const int order = parse_int(trim(line.substr(6, 3)), lines[i].number);
    check_bond_indices(a1, a2, n_atoms, lines[i].number);
    BondKind kind;
    switch (order) {
    case 1: kind = BondKind::Single; break;
    case 2: kind = BondKind::Double; break;
    case 3: kind = BondKind::Triple; break;
    case 4:
      kind = BondKind::Aromatic;
      mol.atoms[a1 - 1].aromatic_flag = true;
      mol.atoms[a2 - 1].aromatic_flag = true;
      break;
    default:
      throw ParseError("unsupported bond order " + std::to_string(order),
                       lines[i].number);
    }
    mol.bonds.push_back({a1 - 1, a2 - 1, kind});
  }

  bool saw_end = false;
  for (; i < lines.size(); ++i) {
    std::string_view line = trim(lines[i].text);
    if (line == "M  END" || line == "M END") {
      saw_end = true;
      break;
    }
    auto tok = tokenize(lines[i].text);
    if (tok.size() >= 3 && tok[0] == "M" && tok[1] == "CHG") {
      const int n_entries = parse_int(tok[2], lines[i].number);
      if (static_cast<int>(tok.size()) < 3 + 2 * n_entries)
        throw ParseError("M  CHG entry count mismatch", lines[i].number);
      for (int k = 0; k < n_entries; ++k) {
        const int idx = parse_int(tok[3 + 2 * k], lines[i].number);
        const int chg = parse_int(tok[4 + 2 * k], lines[i].number);
        if (idx < 1 || idx > n_atoms)
          throw ParseError("M  CHG atom index out of range", lines[i].number);
        mol.atoms[idx - 1].formal_charge = chg;
      }
    }
  }
  if (!saw_end)
    throw ParseError("missing M  END");

  validate_molecule(mol);
  return mol;
}

std::string write_sdf(const Molecule &mol) {
  if (mol.atom_count() > 999 || mol.bond_count() > 999)
    throw InvalidArgument("V2000 supports at most 999 atoms and bonds");
  std::ostringstream out;
  out << mol.name << "\n  QEqNet\n\n";
  char buf[160];
  int n = std::snprintf(buf, sizeof buf,
                        "%3d%3d  0  0  0  0  0  0  0  0999 V2000\n",
                        mol.atom_count(), mol.bond_count());
  out.write(buf, n);
  for (int i = 0; i < mol.atom_count(); ++i) {
    Vec3 c = mol.coordinates ? (*mol.coordinates)[i] : Vec3{};
    n = std::snprintf(buf, sizeof buf,
                      "%10.4f%10.4f%10.4f %-3s 0  0  0  0  0  0  0  0  0  0  0  0\n",
                      c.x, c.y, c.z, element_symbol(mol.atoms[i].element));
    out.write(buf, n);
  }
  for (const Bond &b : mol.bonds) {
    int order = 1;
    switch (b.kind) {
    case BondKind::Single: order = 1; break;
    case BondKind::Double: order = 2; break;
    case BondKind::Triple: order = 3; break;
    case BondKind::Aromatic: order = 4; break;
    }
    n = std::snprintf(buf, sizeof buf, "%3d%3d%3d  0\n", b.a + 1, b.b + 1,
                      order);
    out.write(buf, n);
  }
  std::vector<std::pair<int, int>> charged;
  for (int i = 0; i < mol.atom_count(); ++i)
    if (mol.atoms[i].formal_charge != 0)
      charged.push_back({i + 1, mol.atoms[i].formal_charge});
  for (std::size_t k = 0; k < charged.size(); k += 8) {
    const int count = static_cast<int>(std::min<std::size_t>(8, charged.size() - k));
    n = std::snprintf(buf, sizeof buf, "M  CHG%3d", count);
    out.write(buf, n);
    for (int j = 0; j < count; ++j) {
      n = std::snprintf(buf, sizeof buf, "%4d%4d", charged[k + j].first,
                        charged[k + j].second);
      out.write(buf, n);
    }
    out << '\n';
  }
  out << "M  END\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Charge files

std::string write_charge_file(const ChargeResult &result) {
  std::string out;
  char buf[32];
  const std::size_t n = result.charges.size();
  for (std::size_t i = 0; i < n; ++i) {
    int len = std::snprintf(buf, sizeof buf, "%10.6f", result.charges[i]);
    out.append(buf, len);
    if (i % 8 == 7 || i + 1 == n)
      out.push_back('\n');
  }
  return out;
}

std::vector<double> parse_charge_file(std::string_view text) {
  std::vector<double> charges;
  for (const Line &line : split_lines(text))
    for (auto tok : tokenize(line.text))
      charges.push_back(parse_double(tok, line.number));
  return charges;
}

Molecule read_molecule_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InvalidArgument("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  auto dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  if (ext == "mol2")
    return parse_mol2(text);
  if (ext == "sdf" || ext == "mol")
    return parse_sdf(text);
  throw InvalidArgument("unrecognized molecule file extension '" + ext +
                        "' (expected .mol2 or .sdf): " + path);
}

// ---------------------------------------------------------------------------
// Synthetic chains

namespace {

int add_atom(Molecule &m, Element e) {
  m.atoms.push_back({e, 0, false});
  return m.atom_count() - 1;
}

void add_bond(Molecule &m, int a, int b, BondKind k = BondKind::Single) {
  m.bonds.push_back({a, b, k});
}

void add_hydrogens(Molecule &m, int heavy, int count) {
  for (int i = 0; i < count; ++i)
    add_bond(m, heavy, add_atom(m, Element::H));
}

Molecule make_alkane(int n) {
  Molecule m;
  m.name = "alkane-" + std::to_string(n);
  std::vector<int> carbons(n);
  for (int i = 0; i < n; ++i) {
    carbons[i] = add_atom(m, Element::C);
    if (i > 0)
      add_bond(m, carbons[i - 1], carbons[i]);
  }
  for (int i = 0; i < n; ++i) {
    int h = 2;
    if (i == 0)
      ++h;
    if (i == n - 1)
      ++h;
    if (n == 1)
      h = 4;
    add_hydrogens(m, carbons[i], h);
  }
  return m;
}

// Capped chain of repeated 10-atom units:
//   unit: N(H) - CA(H) (CB H3 sidechain) - C(=O)
// with an acetyl-like front cap and an N-methyl back cap.
Molecule make_pseudo_peptide(int n) {
  Molecule m;
  m.name = "pseudo-peptide-" + std::to_string(n);
  const int cap_c = add_atom(m, Element::C);
  add_hydrogens(m, cap_c, 3);
  const int cap_co = add_atom(m, Element::C);
  add_bond(m, cap_c, cap_co);
  add_bond(m, cap_co, add_atom(m, Element::O), BondKind::Double);

  int prev_carbonyl = cap_co;
  for (int u = 0; u < n; ++u) {
    const int nitrogen = add_atom(m, Element::N);
    add_bond(m, prev_carbonyl, nitrogen);
    add_hydrogens(m, nitrogen, 1);
    const int alpha = add_atom(m, Element::C);
    add_bond(m, nitrogen, alpha);
    add_hydrogens(m, alpha, 1);
    const int beta = add_atom(m, Element::C);
    add_bond(m, alpha, beta);
    add_hydrogens(m, beta, 3);
    const int carbonyl = add_atom(m, Element::C);
    add_bond(m, alpha, carbonyl);
    add_bond(m, carbonyl, add_atom(m, Element::O), BondKind::Double);
    prev_carbonyl = carbonyl;
  }

  const int tail_n = add_atom(m, Element::N);
  add_bond(m, prev_carbonyl, tail_n);
  add_hydrogens(m, tail_n, 1);
  const int tail_c = add_atom(m, Element::C);
  add_bond(m, tail_n, tail_c);
  add_hydrogens(m, tail_c, 3);
  return m;
}

} // namespace

Molecule generate_chain(int n_units, ChainKind kind) {
  if (n_units < 1)
    throw InvalidArgument("n_units must be at least 1");
  Molecule m = kind == ChainKind::Alkane ? make_alkane(n_units)
                                         : make_pseudo_peptide(n_units);
  validate_molecule(m);
  return m;
}

} // namespace qeqnet
