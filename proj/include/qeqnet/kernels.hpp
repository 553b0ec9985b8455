//
// Project QEqNet - Copyright 2026 QEqNet Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef QEQNET_KERNELS_HPP_
#define QEQNET_KERNELS_HPP_

/// \file
/// Dense per-atom compute kernels shared by inference and training.
///
/// Every kernel comes in a single templated body dispatched over Exec:
/// Serial runs the loop on the calling thread, Parallel hands the same
/// loop to OpenMP.  Iteration bodies are independent per output row and
/// accumulate in a fixed order, so the two modes produce bitwise
/// identical results; tests in test_kernels.cpp assert exactly that
/// against the plain-loop references in kernels::ref.

#include <algorithm>
#include <cstddef>
#include <vector>

#include "qeqnet/molio.hpp"

namespace qeqnet::kernels {

enum class Exec { Serial, Parallel };

enum class Aggregate { Mean, Sum };

/// Compressed neighbor lists; neighbors of node i occupy
/// neighbors[offsets[i] .. offsets[i+1]) in ascending index order.
struct NeighborList {
  std::vector<int> offsets;
  std::vector<int> neighbors;

  int size() const { return static_cast<int>(offsets.size()) - 1; }
  int degree(int i) const { return offsets[i + 1] - offsets[i]; }

  static NeighborList from_molecule(const Molecule &mol) {
    const int n = mol.atom_count();
    NeighborList nl;
    std::vector<std::vector<int>> adj(n);
    for (const Bond &b : mol.bonds) {
      adj[b.a].push_back(b.b);
      adj[b.b].push_back(b.a);
    }
    nl.offsets.resize(n + 1);
    nl.offsets[0] = 0;
    for (int i = 0; i < n; ++i) {
      std::sort(adj[i].begin(), adj[i].end());
      nl.offsets[i + 1] = nl.offsets[i] + static_cast<int>(adj[i].size());
      nl.neighbors.insert(nl.neighbors.end(), adj[i].begin(), adj[i].end());
    }
    return nl;
  }
};

/// out[i,:] = mean (or sum) over neighbors u of x[u,:].
/// Accumulation always runs in double regardless of T, and neighbors are
/// visited in ascending index order, so the result is independent of the
/// order atoms were listed in the input file beyond the row permutation
/// itself.  Degree-0 nodes aggregate to zero.
template <typename T>
void aggregate_neighbors(Exec exec, const NeighborList &nl, const T *x,
                         int cols, Aggregate agg, T *out) {
  const int n = nl.size();
  const bool par = exec == Exec::Parallel;
#pragma omp parallel for schedule(static) if (par)
  for (int i = 0; i < n; ++i) {
    const int begin = nl.offsets[i];
    const int end = nl.offsets[i + 1];
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int k = begin; k < end; ++k)
        acc += static_cast<double>(
            x[static_cast<std::size_t>(nl.neighbors[k]) * cols + c]);
      if (agg == Aggregate::Mean && end > begin)
        acc /= static_cast<double>(end - begin);
      out[static_cast<std::size_t>(i) * cols + c] = static_cast<T>(acc);
    }
  }
}

/// y[i,:] = w * x[i,:] + b, optionally clamped at zero.
/// w is out_cols x in_cols row-major.  The dot product accumulates in T
/// in ascending input-column order.
template <typename T>
void linear_forward(Exec exec, const T *x, int rows, int in_cols, const T *w,
                    const T *b, int out_cols, bool relu_after, T *y) {
  const bool par = exec == Exec::Parallel;
#pragma omp parallel for schedule(static) if (par)
  for (int i = 0; i < rows; ++i) {
    const T *xi = x + static_cast<std::size_t>(i) * in_cols;
    T *yi = y + static_cast<std::size_t>(i) * out_cols;
    for (int o = 0; o < out_cols; ++o) {
      const T *wo = w + static_cast<std::size_t>(o) * in_cols;
      T acc = b[o];
      for (int c = 0; c < in_cols; ++c)
        acc += wo[c] * xi[c];
      yi[o] = relu_after && acc < T(0) ? T(0) : acc;
    }
  }
}

/// One message-passing layer:
///   y[i,:] = relu(w_self * x[i,:] + w_nbr * agg[i,:] + b).
/// Both weight matrices are out_cols x in_cols row-major.  The self and
/// neighbor dot products accumulate separately in T, each in ascending
/// column order, and are added last; the order never depends on Exec.
template <typename T>
void sage_layer(Exec exec, const T *x, const T *agg, int rows, int in_cols,
                const T *w_self, const T *w_nbr, const T *b, int out_cols,
                T *y) {
  const bool par = exec == Exec::Parallel;
#pragma omp parallel for schedule(static) if (par)
  for (int i = 0; i < rows; ++i) {
    const T *xi = x + static_cast<std::size_t>(i) * in_cols;
    const T *gi = agg + static_cast<std::size_t>(i) * in_cols;
    T *yi = y + static_cast<std::size_t>(i) * out_cols;
    for (int o = 0; o < out_cols; ++o) {
      const T *ws = w_self + static_cast<std::size_t>(o) * in_cols;
      const T *wn = w_nbr + static_cast<std::size_t>(o) * in_cols;
      T self_acc = b[o];
      for (int c = 0; c < in_cols; ++c)
        self_acc += ws[c] * xi[c];
      T nbr_acc = T(0);
      for (int c = 0; c < in_cols; ++c)
        nbr_acc += wn[c] * gi[c];
      const T v = self_acc + nbr_acc;
      yi[o] = v < T(0) ? T(0) : v;
    }
  }
}

/// Plain serial loops, written independently of the dispatched kernels.
/// These exist so tests and the kernel benchmark have a second
/// implementation to compare against.
namespace ref {

template <typename T>
void aggregate_neighbors(const NeighborList &nl, const T *x, int cols,
                         Aggregate agg, T *out) {
  for (int i = 0; i < nl.size(); ++i)
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      int deg = 0;
      for (int k = nl.offsets[i]; k < nl.offsets[i + 1]; ++k) {
        acc += static_cast<double>(
            x[static_cast<std::size_t>(nl.neighbors[k]) * cols + c]);
        ++deg;
      }
      if (agg == Aggregate::Mean && deg > 0)
        acc /= deg;
      out[static_cast<std::size_t>(i) * cols + c] = static_cast<T>(acc);
    }
}

template <typename T>
void linear_forward(const T *x, int rows, int in_cols, const T *w, const T *b,
                    int out_cols, bool relu_after, T *y) {
  for (int i = 0; i < rows; ++i)
    for (int o = 0; o < out_cols; ++o) {
      T acc = b[o];
      for (int c = 0; c < in_cols; ++c)
        acc += w[static_cast<std::size_t>(o) * in_cols + c] *
               x[static_cast<std::size_t>(i) * in_cols + c];
      if (relu_after && acc < T(0))
        acc = T(0);
      y[static_cast<std::size_t>(i) * out_cols + o] = acc;
    }
}

template <typename T>
void sage_layer(const T *x, const T *agg, int rows, int in_cols,
                const T *w_self, const T *w_nbr, const T *b, int out_cols,
                T *y) {
  for (int i = 0; i < rows; ++i)
    for (int o = 0; o < out_cols; ++o) {
      T self_acc = b[o];
      for (int c = 0; c < in_cols; ++c)
        self_acc += w_self[static_cast<std::size_t>(o) * in_cols + c] *
                    x[static_cast<std::size_t>(i) * in_cols + c];
      T nbr_acc = T(0);
      for (int c = 0; c < in_cols; ++c)
        nbr_acc += w_nbr[static_cast<std::size_t>(o) * in_cols + c] *
                   agg[static_cast<std::size_t>(i) * in_cols + c];
      T v = self_acc + nbr_acc;
      y[static_cast<std::size_t>(i) * out_cols + o] = v < T(0) ? T(0) : v;
    }
}

} // namespace ref

} // namespace qeqnet::kernels

#endif // QEQNET_KERNELS_HPP_
