//
// Project QEqNet - Copyright 2026 QEqNet Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef QEQNET_GNN_HPP_
#define QEQNET_GNN_HPP_

/// \file
/// Message-passing network mapping per-atom features to per-atom
/// electronegativity and hardness, plus diagonal graph batching and a
/// frozen on-disk weight format.
///
/// Layer update: h' = relu(W_self * h + W_nbr * agg(neighbors) + b).
/// Readout: two-layer perceptron with a relu hidden layer and two
/// unconstrained outputs per atom, (e, s).
///
/// Inference runs in 32-bit floats with neighbor aggregation accumulated
/// in 64-bit (see kernels.hpp), which keeps results exactly permutation
/// equivariant.

#include <cstdint>
#include <string>
#include <vector>

#include "qeqnet/kernels.hpp"
#include "qeqnet/molio.hpp"
#include "qeqnet/perceive.hpp"

namespace qeqnet {

struct ModelConfig {
  int input_width = kFeatureWidth;
  int hidden_width = 128;
  int n_layers = 4;
  kernels::Aggregate aggregation = kernels::Aggregate::Mean;
  std::string activation = "relu";
  int readout_hidden_width = 128;
  std::uint64_t seed = 0;

  bool operator==(const ModelConfig &) const = default;
};

struct ModelParams {
  struct Layer {
    std::vector<float> w_self; // hidden x in, row-major
    std::vector<float> w_nbr;  // hidden x in, row-major
    std::vector<float> b;      // hidden

    bool operator==(const Layer &) const = default;
  };

  ModelConfig config;
  int feature_layout_version = kFeatureLayoutVersion;
  std::vector<Layer> layers;
  std::vector<float> readout_w1; // readout_hidden x hidden
  std::vector<float> readout_b1; // readout_hidden
  std::vector<float> readout_w2; // 2 x readout_hidden
  std::vector<float> readout_b2; // 2

  bool operator==(const ModelParams &) const = default;
};

/// Per-atom electronegativity and hardness.  Values are unconstrained in
/// sign; the equilibration step downstream is responsible for rejecting
/// degenerate hardness.
struct ENSParams {
  std::vector<double> e;
  std::vector<double> s;
};

/// Molecular graphs concatenated into one block-diagonal graph.
struct BatchedGraph {
  FeatureMatrix features;
  std::vector<std::pair<int, int>> edges; // global node indices
  std::vector<std::pair<int, int>> segments; // [begin, end) per molecule
};

/// Number of parameter floats a config implies, in payload order.
std::size_t param_count(const ModelConfig &config);

/// Deterministic initialization: every weight matrix is drawn uniformly
/// from (-a, a) with a = sqrt(6 / (fan_in + fan_out)); biases start at
/// zero.  Draw order is frozen (per layer w_self then w_nbr, then the
/// readout matrices), so a seed fully determines the parameters.
ModelParams init_model(const ModelConfig &config);

/// Single-molecule forward pass.  Features must match the model's input
/// width and layout version (ModelMismatch otherwise).
ENSParams forward(const ModelParams &params, const Molecule &mol,
                  const FeatureMatrix &features,
                  kernels::Exec exec = kernels::Exec::Parallel);

/// Batched forward over a block-diagonal graph; one (e, s) per node in
/// concatenation order.
ENSParams forward(const ModelParams &params, const BatchedGraph &graph,
                  kernels::Exec exec = kernels::Exec::Parallel);

/// Concatenate molecules diagonally.  Feature widths must agree.
BatchedGraph batch(const std::vector<Molecule> &mols,
                   const std::vector<FeatureMatrix> &features);

/// Split per-node values back into per-molecule runs on the segment
/// boundaries.  values.size() must equal the total node count.
std::vector<std::vector<double>> unbatch(const BatchedGraph &graph,
                                         const std::vector<double> &values);

/// Versioned container: text header (magic, config, feature layout
/// version, endianness, payload float count) followed by the raw
/// little-endian float payload.  load(save(p)) == p bitwise.
std::string save_model(const ModelParams &params);
ModelParams load_model(std::string_view bytes);

void save_model_file(const ModelParams &params, const std::string &path);
ModelParams load_model_file(const std::string &path);

} // namespace qeqnet

#endif // QEQNET_GNN_HPP_
