//
// Project QEqNet - Copyright 2026 QEqNet Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "qeqnet/train.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "qeqnet/errors.hpp"
#include "qeqnet/perceive.hpp"
#include "qeqnet/qeq.hpp"

namespace qeqnet {

namespace {

// ---------------------------------------------------------------------------
// Flat parameter layout (payload order)

struct Layout {
  ModelConfig config;
  std::vector<std::size_t> w_self_off, w_nbr_off, b_off;
  std::size_t rw1 = 0, rb1 = 0, rw2 = 0, rb2 = 0;
  std::size_t total = 0;

  int in_width(int layer) const {
    return layer == 0 ? config.input_width : config.hidden_width;
  }
};

Layout make_layout(const ModelConfig &c) {
  Layout l;
  l.config = c;
  std::size_t off = 0;
  for (int k = 0; k < c.n_layers; ++k) {
    const std::size_t in = k == 0 ? c.input_width : c.hidden_width;
    l.w_self_off.push_back(off);
    off += static_cast<std::size_t>(c.hidden_width) * in;
    l.w_nbr_off.push_back(off);
    off += static_cast<std::size_t>(c.hidden_width) * in;
    l.b_off.push_back(off);
    off += c.hidden_width;
  }
  l.rw1 = off;
  off += static_cast<std::size_t>(c.readout_hidden_width) * c.hidden_width;
  l.rb1 = off;
  off += c.readout_hidden_width;
  l.rw2 = off;
  off += 2 * static_cast<std::size_t>(c.readout_hidden_width);
  l.rb2 = off;
  off += 2;
  l.total = off;
  return l;
}

// Weight (not bias) index ranges, for the L2 term.
std::vector<std::pair<std::size_t, std::size_t>>
weight_ranges(const Layout &l) {
  std::vector<std::pair<std::size_t, std::size_t>> r;
  for (int k = 0; k < l.config.n_layers; ++k) {
    r.push_back({l.w_self_off[k], l.b_off[k]}); // w_self and w_nbr adjoin
  }
  r.push_back({l.rw1, l.rb1});
  r.push_back({l.rw2, l.rb2});
  return r;
}

// ---------------------------------------------------------------------------
// 64-bit forward with cached activations

struct ForwardCache {
  kernels::NeighborList nl;
  std::vector<std::vector<double>> h;   // h[0] = features, h[k+1] after layer k
  std::vector<std::vector<double>> agg; // per layer
  std::vector<double> z;                // readout hidden, post-activation
  std::vector<double> e, s, q;          // per atom
  int n_atoms = 0;
};

ForwardCache forward_double(const std::vector<double> &theta, const Layout &l,
                            const Molecule &mol) {
  const ModelConfig &c = l.config;
  const FeatureMatrix fm = featurize(mol);
  if (fm.cols != c.input_width)
    throw ModelMismatch("feature width does not match model input width");
  const int n = fm.rows;

  ForwardCache cache;
  cache.n_atoms = n;
  cache.nl = kernels::NeighborList::from_molecule(mol);
  cache.h.resize(c.n_layers + 1);
  cache.agg.resize(c.n_layers);
  cache.h[0].assign(fm.data.begin(), fm.data.end());

  for (int k = 0; k < c.n_layers; ++k) {
    const int in = l.in_width(k);
    cache.agg[k].resize(static_cast<std::size_t>(n) * in);
    kernels::aggregate_neighbors(kernels::Exec::Serial, cache.nl,
                                 cache.h[k].data(), in, c.aggregation,
                                 cache.agg[k].data());
    cache.h[k + 1].resize(static_cast<std::size_t>(n) * c.hidden_width);
    kernels::sage_layer(kernels::Exec::Serial, cache.h[k].data(),
                        cache.agg[k].data(), n, in,
                        theta.data() + l.w_self_off[k],
                        theta.data() + l.w_nbr_off[k], theta.data() + l.b_off[k],
                        c.hidden_width, cache.h[k + 1].data());
  }

  cache.z.resize(static_cast<std::size_t>(n) * c.readout_hidden_width);
  kernels::linear_forward(kernels::Exec::Serial, cache.h[c.n_layers].data(), n,
                          c.hidden_width, theta.data() + l.rw1,
                          theta.data() + l.rb1, c.readout_hidden_width, true,
                          cache.z.data());
  std::vector<double> out(static_cast<std::size_t>(n) * 2);
  kernels::linear_forward(kernels::Exec::Serial, cache.z.data(), n,
                          c.readout_hidden_width, theta.data() + l.rw2,
                          theta.data() + l.rb2, 2, false, out.data());

  cache.e.resize(n);
  cache.s.resize(n);
  for (int i = 0; i < n; ++i) {
    cache.e[i] = out[2 * static_cast<std::size_t>(i)];
    cache.s[i] = out[2 * static_cast<std::size_t>(i) + 1];
  }
  cache.q = solve({cache.e, cache.s, mol.net_charge()}).charges;
  return cache;
}

// Accumulates d(loss)/d(theta) for one molecule given dq = dL/dq.
void backward_molecule(const std::vector<double> &theta, const Layout &l,
                       const Molecule &mol, const ForwardCache &cache,
                       const std::vector<double> &dq,
                       std::vector<double> &grad) {
  const ModelConfig &c = l.config;
  const int n = cache.n_atoms;
  const int hw = c.hidden_width;
  const int rh = c.readout_hidden_width;

  const QeqAdjoint adj =
      solve_adjoint({cache.e, cache.s, mol.net_charge()}, cache.q, dq);

  // Readout head: out[i] = (e_i, s_i).
  std::vector<double> dz(static_cast<std::size_t>(n) * rh, 0.0);
  for (int i = 0; i < n; ++i) {
    const std::array<double, 2> dout = {adj.de[i], adj.ds[i]};
    const double *zi = cache.z.data() + static_cast<std::size_t>(i) * rh;
    for (int o = 0; o < 2; ++o) {
      grad[l.rb2 + o] += dout[o];
      double *dw_row = grad.data() + l.rw2 + static_cast<std::size_t>(o) * rh;
      const double *w_row =
          theta.data() + l.rw2 + static_cast<std::size_t>(o) * rh;
      double *dzi = dz.data() + static_cast<std::size_t>(i) * rh;
      for (int j = 0; j < rh; ++j) {
        dw_row[j] += dout[o] * zi[j];
        dzi[j] += dout[o] * w_row[j];
      }
    }
  }

  // Hidden readout layer: z = relu(w1 * h_L + b1).
  std::vector<double> dh(static_cast<std::size_t>(n) * hw, 0.0);
  const std::vector<double> &hL = cache.h[c.n_layers];
  for (int i = 0; i < n; ++i) {
    const double *zi = cache.z.data() + static_cast<std::size_t>(i) * rh;
    double *dzi = dz.data() + static_cast<std::size_t>(i) * rh;
    const double *hi = hL.data() + static_cast<std::size_t>(i) * hw;
    double *dhi = dh.data() + static_cast<std::size_t>(i) * hw;
    for (int o = 0; o < rh; ++o) {
      if (zi[o] <= 0.0)
        continue; // inactive rectifier
      const double g = dzi[o];
      grad[l.rb1 + o] += g;
      double *dw_row = grad.data() + l.rw1 + static_cast<std::size_t>(o) * hw;
      const double *w_row =
          theta.data() + l.rw1 + static_cast<std::size_t>(o) * hw;
      for (int j = 0; j < hw; ++j) {
        dw_row[j] += g * hi[j];
        dhi[j] += g * w_row[j];
      }
    }
  }

  // Message-passing layers, last to first.
  for (int k = c.n_layers - 1; k >= 0; --k) {
    const int in = l.in_width(k);
    const std::vector<double> &hk = cache.h[k];
    const std::vector<double> &hk1 = cache.h[k + 1];
    const std::vector<double> &aggk = cache.agg[k];

    // tmp[v] = w_nbr^T dpre_v (scaled by 1/deg for mean aggregation);
    // dnext[u] = w_self^T dpre_u + sum over aggregating neighbors v.
    std::vector<double> dnext(static_cast<std::size_t>(n) * in, 0.0);
    std::vector<double> tmp(static_cast<std::size_t>(n) * in, 0.0);
    for (int i = 0; i < n; ++i) {
      const double *hki = hk.data() + static_cast<std::size_t>(i) * in;
      const double *aggi = aggk.data() + static_cast<std::size_t>(i) * in;
      const double *dhi = dh.data() + static_cast<std::size_t>(i) * hw;
      double *dnexti = dnext.data() + static_cast<std::size_t>(i) * in;
      double *tmpi = tmp.data() + static_cast<std::size_t>(i) * in;
      const int deg = cache.nl.degree(i);
      const double nbr_scale =
          c.aggregation == kernels::Aggregate::Mean && deg > 0
              ? 1.0 / deg
              : 1.0;
      for (int o = 0; o < hw; ++o) {
        if (hk1[static_cast<std::size_t>(i) * hw + o] <= 0.0)
          continue;
        const double g = dhi[o];
        grad[l.b_off[k] + o] += g;
        double *dws = grad.data() + l.w_self_off[k] +
                      static_cast<std::size_t>(o) * in;
        double *dwn = grad.data() + l.w_nbr_off[k] +
                      static_cast<std::size_t>(o) * in;
        const double *ws = theta.data() + l.w_self_off[k] +
                           static_cast<std::size_t>(o) * in;
        const double *wn = theta.data() + l.w_nbr_off[k] +
                           static_cast<std::size_t>(o) * in;
        for (int j = 0; j < in; ++j) {
          dws[j] += g * hki[j];
          dwn[j] += g * aggi[j];
          dnexti[j] += g * ws[j];
          tmpi[j] += g * wn[j] * nbr_scale;
        }
      }
    }
    // Scatter neighbor contributions: node u receives tmp[v] for each
    // neighbor v that aggregated it.
    for (int u = 0; u < n; ++u) {
      double *dnextu = dnext.data() + static_cast<std::size_t>(u) * in;
      for (int t = cache.nl.offsets[u]; t < cache.nl.offsets[u + 1]; ++t) {
        const double *tv =
            tmp.data() + static_cast<std::size_t>(cache.nl.neighbors[t]) * in;
        for (int j = 0; j < in; ++j)
          dnextu[j] += tv[j];
      }
    }
    if (k > 0)
      dh = std::move(dnext);
  }
}

double data_term_scale(const std::vector<LabeledMolecule> &batch) {
  std::size_t atoms = 0;
  for (const auto &lm : batch)
    atoms += lm.mol.atom_count();
  if (atoms == 0)
    throw InvalidArgument("loss over an empty batch");
  return 1.0 / static_cast<double>(atoms);
}

// Fisher-Yates with explicit index draws, so shuffles do not depend on
// standard-library internals.
void shuffle_indices(std::vector<int> &idx, std::mt19937_64 &gen) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = gen() % i;
    std::swap(idx[i - 1], idx[j]);
  }
}

} // namespace

void validate_labeled(const LabeledMolecule &lm) {
  validate_molecule(lm.mol);
  if (static_cast<int>(lm.ref_charges.size()) != lm.mol.atom_count())
    throw InvalidArgument("reference charge count does not match atom count");
  double sum = 0.0;
  for (double q : lm.ref_charges)
    sum += q;
  if (std::abs(sum - lm.mol.net_charge()) > 1e-4)
    throw InvalidArgument(
        "reference charges sum to " + std::to_string(sum) +
        ", molecule net charge is " + std::to_string(lm.mol.net_charge()));
}

std::vector<double> flatten_params(const ModelParams &params) {
  const Layout l = make_layout(params.config);
  std::vector<double> flat(l.total);
  auto put = [&flat](std::size_t off, const std::vector<float> &v) {
    for (std::size_t i = 0; i < v.size(); ++i)
      flat[off + i] = v[i];
  };
  for (int k = 0; k < params.config.n_layers; ++k) {
    put(l.w_self_off[k], params.layers[k].w_self);
    put(l.w_nbr_off[k], params.layers[k].w_nbr);
    put(l.b_off[k], params.layers[k].b);
  }
  put(l.rw1, params.readout_w1);
  put(l.rb1, params.readout_b1);
  put(l.rw2, params.readout_w2);
  put(l.rb2, params.readout_b2);
  return flat;
}

ModelParams unflatten_params(const ModelConfig &config,
                             const std::vector<double> &flat) {
  const Layout l = make_layout(config);
  if (flat.size() != l.total)
    throw InvalidArgument("flat parameter vector has wrong length");
  ModelParams p;
  p.config = config;
  p.feature_layout_version = kFeatureLayoutVersion;
  auto take = [&flat](std::size_t off, std::size_t count) {
    std::vector<float> v(count);
    for (std::size_t i = 0; i < count; ++i)
      v[i] = static_cast<float>(flat[off + i]);
    return v;
  };
  p.layers.resize(config.n_layers);
  for (int k = 0; k < config.n_layers; ++k) {
    const std::size_t in = l.in_width(k);
    p.layers[k].w_self =
        take(l.w_self_off[k], static_cast<std::size_t>(config.hidden_width) * in);
    p.layers[k].w_nbr =
        take(l.w_nbr_off[k], static_cast<std::size_t>(config.hidden_width) * in);
    p.layers[k].b = take(l.b_off[k], config.hidden_width);
  }
  p.readout_w1 = take(l.rw1, static_cast<std::size_t>(config.readout_hidden_width) *
                                 config.hidden_width);
  p.readout_b1 = take(l.rb1, config.readout_hidden_width);
  p.readout_w2 = take(l.rw2, 2 * static_cast<std::size_t>(config.readout_hidden_width));
  p.readout_b2 = take(l.rb2, 2);
  return p;
}

namespace {

double loss_flat(const std::vector<double> &theta, const Layout &l,
                 const std::vector<LabeledMolecule> &batch, double l2_rate) {
  const double scale = data_term_scale(batch);
  double data = 0.0;
  for (const auto &lm : batch) {
    const ForwardCache cache = forward_double(theta, l, lm.mol);
    for (int i = 0; i < cache.n_atoms; ++i) {
      const double d = cache.q[i] - lm.ref_charges[i];
      data += d * d;
    }
  }
  double reg = 0.0;
  if (l2_rate != 0.0)
    for (auto [begin, end] : weight_ranges(l))
      for (std::size_t i = begin; i < end; ++i)
        reg += theta[i] * theta[i];
  return data * scale + l2_rate * reg;
}

std::vector<double> backward_flat(const std::vector<double> &theta,
                                  const Layout &l,
                                  const std::vector<LabeledMolecule> &batch,
                                  double l2_rate, int n_threads) {
  const double scale = data_term_scale(batch);
  const int n_mols = static_cast<int>(batch.size());
  std::vector<double> grad(l.total, 0.0);

  // Per-molecule buffers reduced in index order make the result
  // independent of scheduling AND of the thread count: a run with any
  // n_threads reproduces the single-threaded gradient bit for bit.  The
  // serial branch reuses one scratch buffer but performs the identical
  // sequence of additions into grad.
  if (n_threads > 1) {
    std::vector<std::vector<double>> partial(n_mols);
#pragma omp parallel for schedule(dynamic) num_threads(n_threads)
    for (int m = 0; m < n_mols; ++m) {
      partial[m].assign(l.total, 0.0);
      const ForwardCache cache = forward_double(theta, l, batch[m].mol);
      std::vector<double> dq(cache.n_atoms);
      for (int i = 0; i < cache.n_atoms; ++i)
        dq[i] = 2.0 * (cache.q[i] - batch[m].ref_charges[i]) * scale;
      backward_molecule(theta, l, batch[m].mol, cache, dq, partial[m]);
    }
    for (int m = 0; m < n_mols; ++m)
      for (std::size_t i = 0; i < l.total; ++i)
        grad[i] += partial[m][i];
  } else {
    std::vector<double> scratch;
    for (int m = 0; m < n_mols; ++m) {
      scratch.assign(l.total, 0.0);
      const ForwardCache cache = forward_double(theta, l, batch[m].mol);
      std::vector<double> dq(cache.n_atoms);
      for (int i = 0; i < cache.n_atoms; ++i)
        dq[i] = 2.0 * (cache.q[i] - batch[m].ref_charges[i]) * scale;
      backward_molecule(theta, l, batch[m].mol, cache, dq, scratch);
      for (std::size_t i = 0; i < l.total; ++i)
        grad[i] += scratch[i];
    }
  }

  if (l2_rate != 0.0)
    for (auto [begin, end] : weight_ranges(l))
      for (std::size_t i = begin; i < end; ++i)
        grad[i] += 2.0 * l2_rate * theta[i];
  return grad;
}

} // namespace

double loss(const ModelParams &params,
            const std::vector<LabeledMolecule> &batch, double l2_rate) {
  return loss_flat(flatten_params(params), make_layout(params.config), batch,
                   l2_rate);
}

std::vector<double> backward(const ModelParams &params,
                             const std::vector<LabeledMolecule> &batch,
                             double l2_rate, int n_threads) {
  return backward_flat(flatten_params(params), make_layout(params.config),
                       batch, l2_rate, n_threads);
}

double loss_theta(const ModelConfig &config, const std::vector<double> &theta,
                  const std::vector<LabeledMolecule> &batch, double l2_rate) {
  const Layout layout = make_layout(config);
  if (theta.size() != layout.total)
    throw InvalidArgument("parameter vector length does not match the model");
  return loss_flat(theta, layout, batch, l2_rate);
}

std::vector<double> backward_theta(const ModelConfig &config,
                                   const std::vector<double> &theta,
                                   const std::vector<LabeledMolecule> &batch,
                                   double l2_rate, int n_threads) {
  const Layout layout = make_layout(config);
  if (theta.size() != layout.total)
    throw InvalidArgument("parameter vector length does not match the model");
  return backward_flat(theta, layout, batch, l2_rate, n_threads);
}

void adam_step(std::vector<double> &theta, const std::vector<double> &grad,
               AdamState &state, const TrainConfig &config) {
  if (grad.size() != theta.size())
    throw InvalidArgument("gradient length does not match parameters");
  if (state.m.empty()) {
    state.m.assign(theta.size(), 0.0);
    state.v.assign(theta.size(), 0.0);
  }
  if (state.m.size() != theta.size())
    throw InvalidArgument("optimizer state does not match parameters");

  state.step += 1;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * grad[i];
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * grad[i] * grad[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    theta[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.adam_eps);
  }
}

TrainResult train_loop(const std::vector<LabeledMolecule> &dataset,
                       const ModelConfig &model_config,
                       const TrainConfig &train_config) {
  if (dataset.empty())
    throw InvalidArgument("training dataset is empty");
  if (train_config.learning_rate <= 0 || train_config.l2_rate < 0 ||
      train_config.batch_size < 1 || train_config.epochs < 0)
    throw InvalidArgument("invalid training configuration");
  if (std::abs(train_config.train_fraction + train_config.val_fraction +
               train_config.test_fraction - 1.0) > 1e-9)
    throw InvalidArgument("split fractions must sum to 1");
  for (const auto &lm : dataset)
    validate_labeled(lm);

  const int n = static_cast<int>(dataset.size());
  std::mt19937_64 gen(train_config.seed);
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i)
    perm[i] = i;
  shuffle_indices(perm, gen);

  const int n_train =
      static_cast<int>(std::floor(train_config.train_fraction * n));
  const int n_val = static_cast<int>(std::floor(train_config.val_fraction * n));
  if (n_train < 1 || n_val < 1)
    throw InvalidArgument("dataset too small for a nonempty train/val split");

  std::vector<LabeledMolecule> train_set, val_set;
  for (int i = 0; i < n_train; ++i)
    train_set.push_back(dataset[perm[i]]);
  for (int i = n_train; i < n_train + n_val; ++i)
    val_set.push_back(dataset[perm[i]]);

  const Layout layout = make_layout(model_config);
  std::vector<double> theta = flatten_params(init_model(model_config));

  TrainResult result;
  result.params = unflatten_params(model_config, theta);
  if (train_config.epochs == 0)
    return result;

  const int batch_size =
      std::min<int>(train_config.batch_size, static_cast<int>(train_set.size()));
  AdamState adam;
  double best_val = std::numeric_limits<double>::infinity();

  std::vector<int> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    order[i] = static_cast<int>(i);

  for (int epoch = 0; epoch < train_config.epochs; ++epoch) {
    shuffle_indices(order, gen);
    double epoch_loss = 0.0;
    int n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      std::vector<LabeledMolecule> batch;
      for (std::size_t i = start;
           i < std::min(order.size(), start + batch_size); ++i)
        batch.push_back(train_set[order[i]]);
      epoch_loss += loss_flat(theta, layout, batch, train_config.l2_rate);
      ++n_batches;
      const auto grad = backward_flat(theta, layout, batch,
                                      train_config.l2_rate,
                                      train_config.n_threads);
      adam_step(theta, grad, adam, train_config);
    }
    // Validation tracks the data term only; the L2 penalty is a training
    // device, not a quality measure.
    const double val_loss = loss_flat(theta, layout, val_set, 0.0);
    result.history.push_back({epoch, epoch_loss / n_batches, val_loss});
    if (val_loss < best_val) {
      best_val = val_loss;
      result.params = unflatten_params(model_config, theta);
    }
    if (train_config.early_stop_val_loss > 0.0 &&
        val_loss <= train_config.early_stop_val_loss)
      break;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Teacher dataset

namespace {

// Frozen (electronegativity, hardness) per element.  Electronegativity
// follows the usual ordering (F highest, alkali metals lowest); hardness
// is unit-scale and strictly positive so equilibration stays convex.
struct TeacherRow {
  double e;
  double s;
};
constexpr std::array<TeacherRow, kNumElements> kTeacherTable = {{
    {0.73, 1.38}, // H
    {0.33, 0.95}, // Li
    {0.85, 1.00}, // C
    {1.01, 1.18}, // N
    {1.15, 1.34}, // O
    {1.33, 1.40}, // F
    {0.31, 0.92}, // Na
    {0.44, 1.05}, // Mg
    {0.73, 0.97}, // P
    {0.86, 0.83}, // S
    {1.05, 0.94}, // Cl
    {0.27, 0.90}, // K
    {0.33, 1.01}, // Ca
    {0.99, 0.84}, // Br
    {0.89, 0.82}, // I
}};

// Default bonding capacity used when growing random molecules.
int default_capacity(Element e) {
  switch (e) {
  case Element::C: return 4;
  case Element::N: return 3;
  case Element::O: return 2;
  case Element::S: return 2;
  case Element::P: return 3;
  case Element::H:
  case Element::F:
  case Element::Cl:
  case Element::Br:
  case Element::I:
  case Element::Li:
  case Element::Na:
  case Element::K:
    return 1;
  case Element::Mg:
  case Element::Ca:
    return 2;
  }
  return 1;
}

Element draw_heavy(std::mt19937_64 &gen, bool multivalent_only) {
  // Weighted toward organic elements; metals and iodine appear rarely.
  static constexpr std::array<Element, 20> pool = {
      Element::C, Element::C, Element::C, Element::C, Element::C, Element::C,
      Element::C, Element::C, Element::N, Element::N, Element::O, Element::O,
      Element::O, Element::S, Element::F, Element::Cl, Element::P,
      Element::Br, Element::I, Element::Li};
  for (;;) {
    const Element e = pool[gen() % pool.size()];
    if (!multivalent_only || default_capacity(e) >= 2)
      return e;
  }
}

Molecule random_molecule(std::mt19937_64 &gen, int index) {
  Molecule m;
  m.name = "teacher-" + std::to_string(index);
  const int n_heavy = 2 + static_cast<int>(gen() % 6); // 2..7
  std::vector<int> capacity;

  auto add = [&](Element e) {
    m.atoms.push_back({e, 0, false});
    capacity.push_back(default_capacity(e));
    return static_cast<int>(m.atoms.size()) - 1;
  };

  add(draw_heavy(gen, true)); // root must be able to grow
  for (int i = 1; i < n_heavy; ++i) {
    std::vector<int> hosts;
    for (int j = 0; j < static_cast<int>(m.atoms.size()); ++j)
      if (capacity[j] > 0)
        hosts.push_back(j);
    if (hosts.empty())
      break;
    const int host = hosts[gen() % hosts.size()];
    const int atom = add(draw_heavy(gen, false));
    m.bonds.push_back({host, atom, BondKind::Single});
    --capacity[host];
    --capacity[atom];
  }

  // Occasional ring closure between unbonded atoms with spare capacity.
  if (gen() % 10 < 3) {
    std::vector<int> open;
    for (int j = 0; j < static_cast<int>(m.atoms.size()); ++j)
      if (capacity[j] > 0)
        open.push_back(j);
    if (open.size() >= 2) {
      const int a = open[gen() % open.size()];
      const int b = open[gen() % open.size()];
      bool bonded = a == b;
      for (const Bond &bond : m.bonds)
        if ((bond.a == a && bond.b == b) || (bond.a == b && bond.b == a))
          bonded = true;
      if (!bonded) {
        m.bonds.push_back({a, b, BondKind::Single});
        --capacity[a];
        --capacity[b];
      }
    }
  }

  // Occasional double-bond upgrade where both ends have spare capacity.
  if (gen() % 10 < 3)
    for (Bond &bond : m.bonds)
      if (capacity[bond.a] > 0 && capacity[bond.b] > 0 &&
          bond.kind == BondKind::Single) {
        bond.kind = BondKind::Double;
        --capacity[bond.a];
        --capacity[bond.b];
        break;
      }

  // Net-charge decoration before hydrogen fill: protonated nitrogens
  // (+1, one extra hydrogen slot) and deprotonated oxygens (-1, one
  // fewer).
  const int target_q = static_cast<int>(gen() % 5) - 2; // -2..+2
  int q = 0;
  if (target_q > 0) {
    for (int j = 0; j < static_cast<int>(m.atoms.size()) && q < target_q; ++j)
      if (m.atoms[j].element == Element::N && m.atoms[j].formal_charge == 0) {
        m.atoms[j].formal_charge = 1;
        ++capacity[j];
        ++q;
      }
  } else if (target_q < 0) {
    for (int j = 0; j < static_cast<int>(m.atoms.size()) && q > target_q; ++j)
      if (m.atoms[j].element == Element::O && m.atoms[j].formal_charge == 0 &&
          capacity[j] > 0) {
        m.atoms[j].formal_charge = -1;
        --capacity[j];
        --q;
      }
  }

  const int n_heavy_final = static_cast<int>(m.atoms.size());
  for (int j = 0; j < n_heavy_final; ++j)
    while (capacity[j] > 0) {
      const int h = add(Element::H);
      m.bonds.push_back({j, h, BondKind::Single});
      --capacity[j];
      --capacity[h];
    }
  return m;
}

} // namespace

ENSParams teacher_ens(const Molecule &mol) {
  ENSParams ens;
  ens.e.reserve(mol.atom_count());
  ens.s.reserve(mol.atom_count());
  for (const AtomRecord &a : mol.atoms) {
    const TeacherRow &row = kTeacherTable[static_cast<int>(a.element)];
    ens.e.push_back(row.e);
    ens.s.push_back(row.s);
  }
  return ens;
}

std::vector<LabeledMolecule> make_teacher_dataset(int n_molecules,
                                                  std::uint64_t seed) {
  if (n_molecules < 1)
    throw InvalidArgument("dataset size must be at least 1");
  std::mt19937_64 gen(seed);
  std::vector<LabeledMolecule> dataset;
  dataset.reserve(n_molecules);
  for (int i = 0; i < n_molecules; ++i) {
    LabeledMolecule lm;
    lm.mol = random_molecule(gen, i);
    const ENSParams ens = teacher_ens(lm.mol);
    lm.ref_charges = solve({ens.e, ens.s, lm.mol.net_charge()}).charges;
    validate_labeled(lm);
    dataset.push_back(std::move(lm));
  }
  return dataset;
}

// ---------------------------------------------------------------------------
// Dataset and history serialization

std::string write_dataset(const std::vector<LabeledMolecule> &dataset) {
  std::string out;
  for (const auto &lm : dataset) {
    out += write_sdf(lm.mol);
    out += write_charge_file({lm.ref_charges, lm.mol.net_charge()});
    out += "$$$$\n";
  }
  return out;
}

std::vector<LabeledMolecule> parse_dataset(std::string_view text) {
  std::vector<LabeledMolecule> dataset;
  std::size_t pos = 0;
  int record = 0;
  while (pos < text.size()) {
    std::size_t sep = text.find("\n$$$$", pos);
    std::string_view block;
    std::size_t next;
    if (sep == std::string_view::npos) {
      block = text.substr(pos);
      next = text.size();
    } else {
      block = text.substr(pos, sep + 1 - pos);
      next = text.find('\n', sep + 1);
      next = next == std::string_view::npos ? text.size() : next + 1;
    }
    // Skip trailing whitespace-only remainders.
    if (block.find_first_not_of(" \t\r\n") == std::string_view::npos) {
      pos = next;
      continue;
    }
    ++record;
    const std::size_t end_tag = block.find("M  END");
    if (end_tag == std::string_view::npos)
      throw ParseError("dataset record " + std::to_string(record) +
                       " has no connection table terminator");
    std::size_t charges_begin = block.find('\n', end_tag);
    if (charges_begin == std::string_view::npos)
      charges_begin = block.size();
    else
      ++charges_begin;

    LabeledMolecule lm;
    try {
      lm.mol = parse_sdf(block.substr(0, charges_begin));
      lm.ref_charges = parse_charge_file(block.substr(charges_begin));
      validate_labeled(lm);
    } catch (const Error &err) {
      throw ParseError("dataset record " + std::to_string(record) + ": " +
                       err.what());
    }
    dataset.push_back(std::move(lm));
    pos = next;
  }
  return dataset;
}

void write_dataset_file(const std::vector<LabeledMolecule> &dataset,
                        const std::string &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw InvalidArgument("cannot open '" + path + "' for writing");
  const std::string text = write_dataset(dataset);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out)
    throw InvalidArgument("failed writing '" + path + "'");
}

std::vector<LabeledMolecule> read_dataset_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InvalidArgument("cannot open dataset '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str());
}

std::string write_history_csv(const std::vector<EpochStats> &history) {
  std::string out = "epoch,train_loss,val_loss\n";
  char buf[96];
  for (const auto &row : history) {
    const int n = std::snprintf(buf, sizeof buf, "%d,%.12g,%.12g\n", row.epoch,
                                row.train_loss, row.val_loss);
    out.append(buf, n);
  }
  return out;
}

} // namespace qeqnet
