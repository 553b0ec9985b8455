//
// Project QEqNet - Copyright 2026 QEqNet Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef QEQNET_TRAIN_HPP_
#define QEQNET_TRAIN_HPP_

/// \file
/// Fitting the network to reference charges by squared loss through the
/// full featurize -> forward -> equilibrate pipeline.
///
/// Training arithmetic runs entirely in 64-bit: parameters live in a flat
/// double vector whose layout matches the model payload order, and the
/// gradient comes from hand-written reverse-mode passes through the
/// network layers and the closed-form equilibration step.  Checkpoints
/// narrow to the 32-bit on-disk format.

#include <cstdint>
#include <string>
#include <vector>

#include "qeqnet/gnn.hpp"
#include "qeqnet/molio.hpp"

namespace qeqnet {

struct TrainConfig {
  double learning_rate = 1e-3;
  double l2_rate = 1e-4;
  int batch_size = 512; // clamped to the training-set size
  int epochs = 100;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double train_fraction = 0.8;
  double val_fraction = 0.1;
  double test_fraction = 0.1;
  /// Stop once validation loss drops to or below this; 0 disables.
  double early_stop_val_loss = 0.0;
  /// Molecule-level gradient parallelism.  Any value keeps runs
  /// bit-deterministic: per-molecule gradients are reduced in index
  /// order regardless.
  int n_threads = 1;
};

struct LabeledMolecule {
  Molecule mol;
  std::vector<double> ref_charges;
};

/// Throws InvalidArgument when charge count mismatches the atom count or
/// the reference charges miss the molecule's net charge by > 1e-4.
void validate_labeled(const LabeledMolecule &lm);

/// Parameters as one double vector in payload order (per layer w_self,
/// w_nbr, b; then readout w1, b1, w2, b2).
std::vector<double> flatten_params(const ModelParams &params);
ModelParams unflatten_params(const ModelConfig &config,
                             const std::vector<double> &flat);

/// Mean over atoms in the batch of (q_hat - q_ref)^2, plus
/// l2_rate * sum of squared weights (biases excluded).  64-bit path.
double loss(const ModelParams &params,
            const std::vector<LabeledMolecule> &batch, double l2_rate);

/// d(loss)/d(theta) in flat payload order.
std::vector<double> backward(const ModelParams &params,
                             const std::vector<LabeledMolecule> &batch,
                             double l2_rate, int n_threads = 1);

/// Same as loss/backward but over an un-narrowed flat parameter vector.
/// This is the path finite-difference checks probe: a 1e-5 step survives
/// only if parameters never round-trip through 32-bit storage.
double loss_theta(const ModelConfig &config, const std::vector<double> &theta,
                  const std::vector<LabeledMolecule> &batch, double l2_rate);
std::vector<double> backward_theta(const ModelConfig &config,
                                   const std::vector<double> &theta,
                                   const std::vector<LabeledMolecule> &batch,
                                   double l2_rate, int n_threads = 1);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

/// Standard bias-corrected Adam update, in place.
void adam_step(std::vector<double> &theta, const std::vector<double> &grad,
               AdamState &state, const TrainConfig &config);

struct EpochStats {
  int epoch;
  double train_loss;
  double val_loss;
};

struct TrainResult {
  ModelParams params; // lowest-validation-loss checkpoint
  std::vector<EpochStats> history;
};

/// Seeded shuffle-split (train/val/test), mini-batch Adam epochs,
/// checkpoint selection on validation loss.  epochs == 0 returns the
/// initialized model and empty history.
TrainResult train_loop(const std::vector<LabeledMolecule> &dataset,
                       const ModelConfig &model_config,
                       const TrainConfig &train_config);

/// Frozen per-element (electronegativity, hardness) table used as the
/// label-generating teacher.  All hardness entries are positive.
ENSParams teacher_ens(const Molecule &mol);

/// Random small molecules (3 to 30 atoms, trees with occasional rings,
/// hydrogens filled to default valence, net charges in {-2..+2} via
/// protonation/deprotonation-style decoration) labeled by the element
/// table through charge equilibration.
std::vector<LabeledMolecule> make_teacher_dataset(int n_molecules,
                                                  std::uint64_t seed);

/// Dataset container: per record one SDF block, then the molecule's
/// reference charges in charge-file format, then a "$$$$" line.
std::string write_dataset(const std::vector<LabeledMolecule> &dataset);
std::vector<LabeledMolecule> parse_dataset(std::string_view text);
void write_dataset_file(const std::vector<LabeledMolecule> &dataset,
                        const std::string &path);
std::vector<LabeledMolecule> read_dataset_file(const std::string &path);

/// "epoch,train_loss,val_loss" CSV.
std::string write_history_csv(const std::vector<EpochStats> &history);

} // namespace qeqnet

#endif // QEQNET_TRAIN_HPP_
