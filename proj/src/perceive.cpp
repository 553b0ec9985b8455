//
// Project QEqNet - Copyright 2026 QEqNet Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "qeqnet/perceive.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <queue>
#include <string>

#include "qeqnet/errors.hpp"

namespace qeqnet {

namespace {

// Valence electrons per element, indexed by Element.
constexpr std::array<int, kNumElements> kValenceElectrons = {
    1, 1, 4, 5, 6, 7, 1, 2, 5, 6, 7, 1, 2, 7, 7};

// Largest summed bond order an atom may carry before perception refuses
// the molecule as chemically nonsensical.
constexpr std::array<double, kNumElements> kMaxValence = {
    1, 1, 4, 4, 3, 1, 1, 2, 5, 6, 1, 1, 2, 1, 1};

double bond_order(BondKind k) {
  switch (k) {
  case BondKind::Single: return 1.0;
  case BondKind::Double: return 2.0;
  case BondKind::Triple: return 3.0;
  case BondKind::Aromatic: return 1.5;
  }
  return 1.0;
}

bool is_fixed_other(Element e) {
  switch (e) {
  case Element::H:
  case Element::Li:
  case Element::Na:
  case Element::K:
  case Element::Mg:
  case Element::Ca:
    return true;
  default:
    return false;
  }
}

std::vector<std::vector<int>> adjacency(const Molecule &mol) {
  std::vector<std::vector<int>> adj(mol.atom_count());
  for (const Bond &b : mol.bonds) {
    adj[b.a].push_back(b.b);
    adj[b.b].push_back(b.a);
  }
  return adj;
}

using EdgeKey = std::pair<int, int>;

EdgeKey edge_key(int a, int b) { return std::minmax(a, b); }

// GF(2) edge-space vector as packed 64-bit words.
struct EdgeVec {
  std::vector<std::uint64_t> words;

  explicit EdgeVec(int n_edges) : words((n_edges + 63) / 64, 0) {}
  void flip(int e) { words[e / 64] ^= std::uint64_t{1} << (e % 64); }
  bool any() const {
    for (auto w : words)
      if (w)
        return true;
    return false;
  }
  int leading_bit() const {
    for (std::size_t i = 0; i < words.size(); ++i)
      if (words[i])
        return static_cast<int>(i) * 64 + std::countr_zero(words[i]);
    return -1;
  }
  void add(const EdgeVec &o) {
    for (std::size_t i = 0; i < words.size(); ++i)
      words[i] ^= o.words[i];
  }
};

} // namespace

std::vector<std::vector<int>> minimum_cycle_basis(const Molecule &mol) {
  const int n = mol.atom_count();
  const int m = mol.bond_count();

  std::map<EdgeKey, int> edge_index;
  for (int e = 0; e < m; ++e)
    edge_index[edge_key(mol.bonds[e].a, mol.bonds[e].b)] = e;
  auto adj = adjacency(mol);

  // Component count gives the cycle space dimension m - n + c.
  int components = 0;
  {
    std::vector<char> seen(n, 0);
    for (int s = 0; s < n; ++s) {
      if (seen[s])
        continue;
      ++components;
      std::vector<int> stack = {s};
      seen[s] = 1;
      while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int u : adj[v])
          if (!seen[u]) {
            seen[u] = 1;
            stack.push_back(u);
          }
      }
    }
  }
  const int dim = m - n + components;
  std::vector<std::vector<int>> basis;
  if (dim <= 0)
    return basis;

  // Candidate cycles: for every root r and every edge (x, y), the two
  // shortest tree paths r..x and r..y plus the edge, kept when the paths
  // meet only at r.
  struct Candidate {
    int length;
    std::vector<int> loop; // vertex sequence, closing edge implied
  };
  std::vector<Candidate> candidates;
  std::map<std::vector<int>, bool> seen_cycles; // key: sorted edge ids

  std::vector<int> parent(n), depth(n);
  for (int r = 0; r < n; ++r) {
    std::fill(parent.begin(), parent.end(), -1);
    std::queue<int> q;
    q.push(r);
    parent[r] = r;
    depth[r] = 0;
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      for (int u : adj[v])
        if (parent[u] < 0) {
          parent[u] = v;
          depth[u] = depth[v] + 1;
          q.push(u);
        }
    }
    auto path_to_root = [&](int v) {
      std::vector<int> p;
      while (v != r) {
        p.push_back(v);
        v = parent[v];
      }
      p.push_back(r);
      std::reverse(p.begin(), p.end());
      return p; // r first
    };
    for (const Bond &b : mol.bonds) {
      if (parent[b.a] < 0 || parent[b.b] < 0)
        continue;
      if (parent[b.a] == b.b || parent[b.b] == b.a)
        continue; // tree edge
      auto px = path_to_root(b.a);
      auto py = path_to_root(b.b);
      // Disjoint except at the root.
      std::vector<char> on_px(n, 0);
      for (int v : px)
        on_px[v] = 1;
      bool disjoint = true;
      for (std::size_t k = 1; k < py.size(); ++k)
        if (on_px[py[k]]) {
          disjoint = false;
          break;
        }
      if (!disjoint)
        continue;
      std::vector<int> loop = px;
      for (std::size_t k = py.size(); k-- > 1;)
        loop.push_back(py[k]);
      std::vector<int> edges;
      bool ok = true;
      for (std::size_t k = 0; k < loop.size(); ++k) {
        auto it = edge_index.find(
            edge_key(loop[k], loop[(k + 1) % loop.size()]));
        if (it == edge_index.end()) {
          ok = false;
          break;
        }
        edges.push_back(it->second);
      }
      if (!ok)
        continue;
      std::sort(edges.begin(), edges.end());
      if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
        continue;
      if (!seen_cycles.emplace(std::move(edges), true).second)
        continue;
      candidates.push_back({static_cast<int>(loop.size()), std::move(loop)});
    }
  }

  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate &a, const Candidate &b) {
                     return a.length < b.length;
                   });

  // Greedy GF(2) independence over the edge space.
  std::vector<EdgeVec> reduced; // echelon rows
  std::vector<int> pivots;
  for (const Candidate &c : candidates) {
    EdgeVec v(m);
    for (std::size_t k = 0; k < c.loop.size(); ++k)
      v.flip(edge_index.at(
          edge_key(c.loop[k], c.loop[(k + 1) % c.loop.size()])));
    for (std::size_t i = 0; i < reduced.size(); ++i) {
      if ((v.words[pivots[i] / 64] >> (pivots[i] % 64)) & 1)
        v.add(reduced[i]);
    }
    if (!v.any())
      continue;
    pivots.push_back(v.leading_bit());
    reduced.push_back(std::move(v));
    basis.push_back(c.loop);
    if (static_cast<int>(basis.size()) == dim)
      break;
  }
  return basis;
}

std::vector<std::set<int>> detect_rings(const Molecule &mol) {
  std::vector<std::set<int>> rings(mol.atom_count());
  for (const auto &loop : minimum_cycle_basis(mol)) {
    const int size = static_cast<int>(loop.size());
    if (size < 3 || size > 8)
      continue;
    for (int v : loop)
      rings[v].insert(size);
  }
  return rings;
}

std::vector<bool> perceive_aromaticity(const Molecule &mol) {
  const int n = mol.atom_count();
  std::vector<bool> aromatic(n, false);
  for (int i = 0; i < n; ++i)
    aromatic[i] = mol.atoms[i].aromatic_flag;

  std::map<EdgeKey, BondKind> kind_of;
  for (const Bond &b : mol.bonds)
    kind_of[edge_key(b.a, b.b)] = b.kind;

  for (const auto &loop : minimum_cycle_basis(mol)) {
    const int size = static_cast<int>(loop.size());
    std::vector<BondKind> kinds(size);
    for (int k = 0; k < size; ++k)
      kinds[k] = kind_of.at(edge_key(loop[k], loop[(k + 1) % size]));

    bool all_ar = std::all_of(kinds.begin(), kinds.end(), [](BondKind k) {
      return k == BondKind::Aromatic;
    });

    bool alternating = size % 2 == 0;
    if (alternating) {
      for (int k = 0; k < size && alternating; ++k) {
        BondKind a = kinds[k];
        BondKind b = kinds[(k + 1) % size];
        bool pair_ok = (a == BondKind::Single && b == BondKind::Double) ||
                       (a == BondKind::Double && b == BondKind::Single);
        alternating = pair_ok;
      }
    }

    if (all_ar || alternating)
      for (int v : loop)
        aromatic[v] = true;
  }
  return aromatic;
}

std::vector<Hybridization> perceive_hybridization(const Molecule &mol) {
  const int n = mol.atom_count();
  std::vector<double> plain_sum(n, 0.0);
  std::vector<int> aromatic_count(n, 0);
  std::vector<int> sigma(n, 0);
  std::vector<char> has_triple(n, 0);
  for (const Bond &b : mol.bonds) {
    if (b.kind == BondKind::Aromatic) {
      ++aromatic_count[b.a];
      ++aromatic_count[b.b];
    } else {
      plain_sum[b.a] += bond_order(b.kind);
      plain_sum[b.b] += bond_order(b.kind);
    }
    ++sigma[b.a];
    ++sigma[b.b];
    if (b.kind == BondKind::Triple)
      has_triple[b.a] = has_triple[b.b] = 1;
  }

  // Aromatic bonds contribute n+1 to an atom's summed order, matching the
  // kekulized count: 2 ring bonds act as single+double, a fusion atom's 3
  // bonds as single+single+double.
  std::vector<double> order_sum(n);
  for (int i = 0; i < n; ++i)
    order_sum[i] = plain_sum[i] +
                   (aromatic_count[i] > 0 ? aromatic_count[i] + 1 : 0);

  for (int i = 0; i < n; ++i) {
    const int e = static_cast<int>(mol.atoms[i].element);
    if (order_sum[i] > kMaxValence[e] + 1e-9)
      throw PerceptionError(
          std::string("summed bond order exceeds maximum valence of ") +
              element_symbol(mol.atoms[i].element),
          i);
  }

  auto aromatic = perceive_aromaticity(mol);
  std::vector<Hybridization> hyb(n);
  for (int i = 0; i < n; ++i) {
    if (is_fixed_other(mol.atoms[i].element)) {
      hyb[i] = Hybridization::Other;
      continue;
    }
    if (aromatic[i]) {
      hyb[i] = Hybridization::Sp2;
      continue;
    }
    if (has_triple[i]) {
      hyb[i] = Hybridization::Sp;
      continue;
    }
    const int valence_e =
        kValenceElectrons[static_cast<int>(mol.atoms[i].element)];
    const int lone_pairs = std::max(
        0, static_cast<int>(std::floor((valence_e - order_sum[i]) / 2.0)));
    const int steric = sigma[i] + lone_pairs;
    if (steric <= 2)
      hyb[i] = Hybridization::Sp;
    else if (steric == 3)
      hyb[i] = Hybridization::Sp2;
    else
      hyb[i] = Hybridization::Sp3;
  }
  return hyb;
}

FeatureMatrix featurize(const Molecule &mol) {
  const int n = mol.atom_count();
  FeatureMatrix fm;
  fm.rows = n;
  fm.cols = kFeatureWidth;
  fm.data.assign(static_cast<std::size_t>(n) * kFeatureWidth, 0.0f);

  auto hyb = perceive_hybridization(mol);
  auto aromatic = perceive_aromaticity(mol);
  auto rings = detect_rings(mol);

  for (int i = 0; i < n; ++i) {
    float *row = fm.row(i);
    row[static_cast<int>(mol.atoms[i].element)] = 1.0f;
    row[kNumElements + static_cast<int>(hyb[i])] = 1.0f;
    if (aromatic[i])
      row[kNumElements + 4] = 1.0f;
    for (int size : rings[i])
      row[kNumElements + 5 + (size - 3)] = 1.0f;
  }
  return fm;
}

} // namespace qeqnet
