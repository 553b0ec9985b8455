//
// Project QEqNet - Copyright 2026 QEqNet Developers.
// SPDX-License-Identifier: Apache-2.0
//

// Release gate.  Every shipped guarantee is checked end to end against
// the bundled model and the real command-line binaries, one printed
// PASS/FAIL line per criterion.  Exits nonzero when any criterion fails,
// so ctest treats a red gate as a failed build.
//
// Usage (normally wired up by CMake):
//   acceptance --cli <qeqnet> --datagen <qeqnet-datagen>
//              --fixtures <dir> --model <file> --workdir <dir>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "qeqnet/analysis.hpp"
#include "qeqnet/errors.hpp"
#include "qeqnet/gnn.hpp"
#include "qeqnet/molio.hpp"
#include "qeqnet/perceive.hpp"
#include "qeqnet/pipeline.hpp"
#include "qeqnet/qeq.hpp"
#include "qeqnet/train.hpp"

namespace {

using namespace qeqnet;

struct Options {
  std::string cli;
  std::string datagen;
  std::string fixtures;
  std::string model;
  std::string workdir;
};

struct Verdict {
  bool pass = false;
  std::string detail;
};

Options parse_options(int argc, char **argv) {
  Options opt;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string key = argv[i];
    const std::string value = argv[i + 1];
    if (key == "--cli")
      opt.cli = value;
    else if (key == "--datagen")
      opt.datagen = value;
    else if (key == "--fixtures")
      opt.fixtures = value;
    else if (key == "--model")
      opt.model = value;
    else if (key == "--workdir")
      opt.workdir = value;
    else {
      std::cerr << "unknown option '" << key << "'\n";
      std::exit(64);
    }
  }
  for (const std::string *p :
       {&opt.cli, &opt.datagen, &opt.fixtures, &opt.model, &opt.workdir})
    if (p->empty()) {
      std::cerr << "usage: acceptance --cli P --datagen P --fixtures D "
                   "--model F --workdir D\n";
      std::exit(64);
    }
  return opt;
}

std::string fixture(const Options &opt, const std::string &name) {
  return opt.fixtures + "/" + name;
}

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out)
    throw std::runtime_error("cannot write '" + path + "'");
}

// Exit code of a shell command, with output folded into a scratch log so
// failures stay quiet unless someone wants to look.
int run_cmd(const Options &opt, const std::string &cmd) {
  const std::string full = cmd + " >'" + opt.workdir + "/cli.log' 2>&1";
  const int status = std::system(full.c_str());
  if (status == -1)
    return -1;
  if (WIFEXITED(status))
    return WEXITSTATUS(status);
  return -2;
}

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// Uniform draw shared by the convex-instance generators.
double uniform(std::mt19937_64 &gen, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(gen);
}

QeqProblem random_convex_problem(std::mt19937_64 &gen, int max_atoms) {
  QeqProblem p;
  const int n = std::uniform_int_distribution<int>(1, max_atoms)(gen);
  for (int i = 0; i < n; ++i) {
    p.s.push_back(uniform(gen, 0.1, 5.0));
    p.e.push_back(uniform(gen, -2.0, 2.0));
  }
  p.total_charge = std::uniform_int_distribution<int>(-2, 2)(gen);
  return p;
}

// Zero-sum direction, so q + t*d stays on the constraint plane.
std::vector<double> feasible_direction(std::mt19937_64 &gen, std::size_t n) {
  std::vector<double> d(n);
  std::normal_distribution<double> normal(0.0, 1.0);
  double mean = 0.0;
  for (double &x : d) {
    x = normal(gen);
    mean += x;
  }
  mean /= static_cast<double>(n);
  for (double &x : d)
    x -= mean;
  return d;
}

std::vector<std::size_t> random_permutation(std::mt19937_64 &gen,
                                            std::size_t n) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i)
    perm[i] = i;
  for (std::size_t i = n; i > 1; --i)
    std::swap(perm[i - 1], perm[gen() % i]);
  return perm;
}

Molecule permuted(const Molecule &mol, const std::vector<std::size_t> &perm) {
  Molecule out;
  out.name = mol.name;
  out.atoms.resize(mol.atoms.size());
  if (mol.coordinates)
    out.coordinates.emplace(mol.atoms.size());
  for (std::size_t i = 0; i < mol.atoms.size(); ++i) {
    out.atoms[perm[i]] = mol.atoms[i];
    if (mol.coordinates)
      (*out.coordinates)[perm[i]] = (*mol.coordinates)[i];
  }
  for (const Bond &b : mol.bonds)
    out.bonds.push_back({static_cast<int>(perm[static_cast<std::size_t>(b.a)]),
                         static_cast<int>(perm[static_cast<std::size_t>(b.b)]),
                         b.kind});
  return out;
}

// Groups of provably interchangeable atoms: all degree-1 atoms bonded to
// the same parent with identical element, formal charge, aromatic flag,
// and bond kind.  Swapping two such atoms relabels the graph onto itself,
// so this never flags a pair that is not genuinely equivalent.
std::vector<std::vector<int>> sibling_orbits(const Molecule &mol) {
  const std::size_t n = mol.atoms.size();
  std::vector<int> degree(n, 0);
  for (const Bond &b : mol.bonds) {
    ++degree[static_cast<std::size_t>(b.a)];
    ++degree[static_cast<std::size_t>(b.b)];
  }
  // key: parent index, element, formal charge, aromatic flag, bond kind
  std::vector<std::pair<std::string, int>> keyed;
  for (const Bond &b : mol.bonds) {
    for (int flip = 0; flip < 2; ++flip) {
      const int leaf = flip ? b.b : b.a;
      const int parent = flip ? b.a : b.b;
      if (degree[static_cast<std::size_t>(leaf)] != 1)
        continue;
      const AtomRecord &a = mol.atoms[static_cast<std::size_t>(leaf)];
      std::ostringstream key;
      key << parent << '|' << static_cast<int>(a.element) << '|'
          << a.formal_charge << '|' << a.aromatic_flag << '|'
          << static_cast<int>(b.kind);
      keyed.emplace_back(key.str(), leaf);
    }
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::vector<int>> orbits;
  for (std::size_t i = 0; i < keyed.size();) {
    std::size_t j = i;
    while (j < keyed.size() && keyed[j].first == keyed[i].first)
      ++j;
    if (j - i >= 2) {
      std::vector<int> orbit;
      for (std::size_t k = i; k < j; ++k)
        orbit.push_back(keyed[k].second);
      orbits.push_back(std::move(orbit));
    }
    i = j;
  }
  return orbits;
}

double max_orbit_spread(const std::vector<double> &charges,
                        const std::vector<std::vector<int>> &orbits) {
  double spread = 0.0;
  for (const std::vector<int> &orbit : orbits) {
    double lo = charges[static_cast<std::size_t>(orbit.front())];
    double hi = lo;
    for (int idx : orbit) {
      lo = std::min(lo, charges[static_cast<std::size_t>(idx)]);
      hi = std::max(hi, charges[static_cast<std::size_t>(idx)]);
    }
    spread = std::max(spread, hi - lo);
  }
  return spread;
}

// ---------------------------------------------------------------------------
// Criterion 1: every assigned charge vector sums to the molecule's total
// charge to 1e-6 e, over a 1000-molecule random corpus plus ethanol.

Verdict check_conservation(const Options &opt, const ModelParams &model) {
  std::vector<Molecule> corpus;
  for (const LabeledMolecule &rec : make_teacher_dataset(1000, 101))
    corpus.push_back(rec.mol);
  corpus.push_back(read_molecule_file(fixture(opt, "ethanol.sdf")));

  double worst = 0.0;
  for (const Molecule &mol : corpus) {
    const ChargeResult result = assign_charges(model, mol);
    double sum = 0.0;
    for (double q : result.charges)
      sum += q;
    worst = std::max(worst, std::fabs(sum - result.net_charge));
  }
  return {worst <= 1e-6, "max |sum(q) - Q| = " + format_double(worst) +
                             " e over " + std::to_string(corpus.size()) +
                             " molecules"};
}

// ---------------------------------------------------------------------------
// Criteria 2 and 3: the closed-form equilibration solution matches an
// independent projected-gradient minimizer, and no feasible perturbation
// finds a lower charging energy.

Verdict check_closed_form(std::vector<QeqProblem> &instances_out) {
  std::mt19937_64 gen(2203);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const QeqProblem p = random_convex_problem(gen, 10);
    const ChargeResult got = solve(p);
    const std::vector<double> want = oracle_solve(p);
    for (std::size_t i = 0; i < want.size(); ++i)
      worst = std::max(worst, std::fabs(got.charges[i] - want[i]));
    instances_out.push_back(p);
  }
  return {worst <= 1e-6,
          "max |closed form - iterative oracle| = " + format_double(worst) +
              " over 100 convex instances"};
}

Verdict check_optimality(const std::vector<QeqProblem> &instances) {
  std::mt19937_64 gen(3301);
  double min_margin = 1e300;
  for (const QeqProblem &p : instances) {
    const ChargeResult star = solve(p);
    const double e_star = charging_energy(p, star.charges);
    for (int k = 0; k < 1000; ++k) {
      const std::vector<double> d = feasible_direction(gen, p.e.size());
      const double t = std::exp(uniform(gen, std::log(1e-3), 0.0));
      std::vector<double> q = star.charges;
      for (std::size_t i = 0; i < q.size(); ++i)
        q[i] += t * d[i];
      min_margin = std::min(min_margin, charging_energy(p, q) - e_star);
    }
  }
  return {min_margin >= -1e-12,
          "lowest perturbed-minus-solved energy margin = " +
              format_double(min_margin) + " over 100 x 1000 perturbations"};
}

// ---------------------------------------------------------------------------
// Criterion 4: relabeling the atoms permutes the charges and nothing else,
// and interchangeable atoms come out with equal charges.

Verdict check_equivariance(const Options &opt, const ModelParams &model) {
  std::vector<Molecule> mols;
  mols.push_back(read_molecule_file(fixture(opt, "methane.sdf")));
  mols.push_back(read_molecule_file(fixture(opt, "benzene.mol2")));
  for (const LabeledMolecule &rec : make_teacher_dataset(50, 404))
    mols.push_back(rec.mol);

  std::mt19937_64 gen(505);
  double worst_perm = 0.0;
  double worst_orbit = 0.0;
  std::size_t n_orbits = 0;
  for (std::size_t m = 0; m < mols.size(); ++m) {
    const Molecule &mol = mols[m];
    const std::vector<double> base = assign_charges(model, mol).charges;

    const std::vector<std::size_t> perm =
        random_permutation(gen, mol.atoms.size());
    const std::vector<double> relabeled =
        assign_charges(model, permuted(mol, perm)).charges;
    for (std::size_t i = 0; i < base.size(); ++i)
      worst_perm = std::max(worst_perm, std::fabs(relabeled[perm[i]] - base[i]));

    std::vector<std::vector<int>> orbits;
    if (m == 0) {
      // Methane: the four hydrogens are one orbit.
      std::vector<int> hydrogens;
      for (std::size_t i = 0; i < mol.atoms.size(); ++i)
        if (mol.atoms[i].element == Element::H)
          hydrogens.push_back(static_cast<int>(i));
      if (hydrogens.size() != 4)
        return {false, "methane fixture does not have 4 hydrogens"};
      orbits.push_back(hydrogens);
    } else if (m == 1) {
      // Benzene: all carbons equivalent, all hydrogens equivalent.
      std::vector<int> carbons, hydrogens;
      for (std::size_t i = 0; i < mol.atoms.size(); ++i)
        (mol.atoms[i].element == Element::C ? carbons : hydrogens)
            .push_back(static_cast<int>(i));
      if (carbons.size() != 6 || hydrogens.size() != 6)
        return {false, "benzene fixture is not C6H6"};
      orbits.push_back(carbons);
      orbits.push_back(hydrogens);
    } else {
      orbits = sibling_orbits(mol);
    }
    n_orbits += orbits.size();
    worst_orbit = std::max(worst_orbit, max_orbit_spread(base, orbits));
  }
  const bool pass = worst_perm <= 1e-9 && worst_orbit <= 1e-6;
  return {pass, "max relabeling deviation = " + format_double(worst_perm) +
                    ", max equivalent-atom spread = " +
                    format_double(worst_orbit) + " over " +
                    std::to_string(n_orbits) + " orbits"};
}

// ---------------------------------------------------------------------------
// Criterion 5: one batched pass reproduces per-molecule charges, and the
// whole batch costs at most 1.5x the largest member processed alone.

Verdict check_batching(const ModelParams &model) {
  std::vector<Molecule> chains;
  for (int n = 1; n <= 100; ++n)
    chains.push_back(generate_chain(n, ChainKind::Alkane));

  std::vector<ChargeResult> singles;
  for (const Molecule &mol : chains)
    singles.push_back(assign_charges(model, mol));

  std::vector<ChargeResult> batched = assign_charges_batched(model, chains);
  double worst = 0.0;
  for (std::size_t m = 0; m < chains.size(); ++m)
    for (std::size_t i = 0; i < singles[m].charges.size(); ++i)
      worst = std::max(worst, std::fabs(batched[m].charges[i] -
                                        singles[m].charges[i]));

  // Median of three timed runs each; the largest molecule is the n=100
  // chain (302 atoms).
  std::vector<double> t_single, t_batch;
  for (int rep = 0; rep < 3; ++rep) {
    double t0 = now_seconds();
    (void)assign_charges(model, chains.back());
    t_single.push_back(now_seconds() - t0);
    t0 = now_seconds();
    (void)assign_charges_batched(model, chains);
    t_batch.push_back(now_seconds() - t0);
  }
  std::sort(t_single.begin(), t_single.end());
  std::sort(t_batch.begin(), t_batch.end());
  const double largest = t_single[1];
  const double batch = t_batch[1];

  const bool charges_ok = worst <= 1e-6;
  const bool time_ok = batch <= 1.5 * largest;
  return {charges_ok && time_ok,
          "max batched-vs-single deviation = " + format_double(worst) +
              "; batch " + format_double(batch) + " s vs largest single " +
              format_double(largest) + " s (ratio " +
              format_double(batch / largest) + ", need <= 1.5)"};
}

// ---------------------------------------------------------------------------
// Criterion 6: single-threaded walltime grows linearly with atom count.

Verdict check_scaling(const ModelParams &model) {
  const BenchmarkResult bench =
      scaling_benchmark(model, {10, 30, 100, 300, 1000}, 5, false);

  const Molecule big = generate_chain(1000, ChainKind::Alkane);
  const double t0 = now_seconds();
  const ChargeResult result = assign_charges(model, big, kernels::Exec::Serial);
  const double elapsed = now_seconds() - t0;

  const bool slope_ok = bench.slope >= 0.8 && bench.slope <= 1.3;
  const bool time_ok = elapsed < 10.0;
  return {slope_ok && time_ok,
          "log-log slope = " + format_double(bench.slope) + "; " +
              std::to_string(result.charges.size()) +
              "-atom chain charged serially in " + format_double(elapsed) +
              " s"};
}

// ---------------------------------------------------------------------------
// Criterion 7: analytic gradients through the network and the
// equilibration layer agree with central finite differences.

Verdict check_gradients(const Options &opt, const ModelParams &) {
  ModelConfig config;
  config.hidden_width = 8;
  config.n_layers = 2;
  config.readout_hidden_width = 8;
  config.seed = 3;

  const std::vector<LabeledMolecule> batch = make_teacher_dataset(3, 77);
  std::vector<double> theta = flatten_params(init_model(config));
  const double l2 = 1e-4;
  const std::vector<double> grad = backward_theta(config, theta, batch, l2);

  std::mt19937_64 gen(88);
  const double h = 1e-5;
  double max_rel = 0.0;
  for (int k = 0; k < 50; ++k) {
    const std::size_t idx = gen() % theta.size();
    const double saved = theta[idx];
    theta[idx] = saved + h;
    const double up = loss_theta(config, theta, batch, l2);
    theta[idx] = saved - h;
    const double down = loss_theta(config, theta, batch, l2);
    theta[idx] = saved;
    const double fd = (up - down) / (2.0 * h);
    const double denom =
        std::max({std::fabs(grad[idx]), std::fabs(fd), 1e-8});
    max_rel = std::max(max_rel, std::fabs(grad[idx] - fd) / denom);
  }
  (void)opt;
  return {max_rel < 1e-4, "max relative analytic-vs-finite-difference error = " +
                              format_double(max_rel) +
                              " over 50 sampled parameters"};
}

// ---------------------------------------------------------------------------
// Criterion 8: a fresh model learns the teacher's charges; at least 4 of
// 5 seeds reach held-out per-atom RMSE below 0.01 e within 500 epochs.

Verdict check_learnability() {
  const std::vector<LabeledMolecule> dataset = make_teacher_dataset(500, 1001);
  const std::vector<LabeledMolecule> held_out = make_teacher_dataset(100, 2002);

  int successes = 0;
  std::string rmses;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ModelConfig mc;
    mc.hidden_width = 32;
    mc.n_layers = 2;
    mc.readout_hidden_width = 32;
    mc.seed = seed;

    TrainConfig tc;
    tc.epochs = 500;
    tc.batch_size = 16;
    tc.learning_rate = 2e-3;
    tc.l2_rate = 1e-6;
    tc.adam_beta2 = 0.99;
    tc.seed = seed;
    tc.early_stop_val_loss = 2.5e-5;

    const TrainResult result = train_loop(dataset, mc, tc);

    double sq_sum = 0.0;
    std::size_t n_atoms = 0;
    for (const LabeledMolecule &rec : held_out) {
      const ChargeResult pred = assign_charges(result.params, rec.mol);
      for (std::size_t i = 0; i < pred.charges.size(); ++i) {
        const double d = pred.charges[i] - rec.ref_charges[i];
        sq_sum += d * d;
      }
      n_atoms += pred.charges.size();
    }
    const double rmse = std::sqrt(sq_sum / static_cast<double>(n_atoms));
    if (rmse < 0.01)
      ++successes;
    if (!rmses.empty())
      rmses += ' ';
    rmses += format_double(rmse);
  }
  return {successes >= 4, "held-out RMSE per seed: " + rmses + " e (" +
                              std::to_string(successes) + "/5 below 0.01)"};
}

// ---------------------------------------------------------------------------
// Criterion 9: the surface-potential evaluator gets the Coulomb constant
// right and is linear in the charges.

Verdict check_esp(const Options &opt) {
  EspGrid unit_grid;
  unit_grid.points.push_back({1.0, 0.0, 0.0});
  const std::vector<double> at_unit =
      esp_at_points({1.0}, {{0.0, 0.0, 0.0}}, unit_grid);
  const double rel = std::fabs(at_unit[0] - kCoulomb) / kCoulomb;

  const Molecule ethanol = read_molecule_file(fixture(opt, "ethanol.sdf"));
  const EspGrid grid = build_grid(ethanol);
  std::mt19937_64 gen(99);
  std::vector<double> a, b;
  for (std::size_t i = 0; i < ethanol.atoms.size(); ++i) {
    a.push_back(uniform(gen, -1.0, 1.0));
    b.push_back(uniform(gen, -1.0, 1.0));
  }
  std::vector<double> combo(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    combo[i] = 2.0 * a[i] - 3.0 * b[i];

  const std::vector<Vec3> &coords = *ethanol.coordinates;
  const std::vector<double> va = esp_at_points(a, coords, grid);
  const std::vector<double> vb = esp_at_points(b, coords, grid);
  const std::vector<double> vc = esp_at_points(combo, coords, grid);
  double worst = 0.0;
  for (std::size_t i = 0; i < vc.size(); ++i)
    worst = std::max(worst, std::fabs(vc[i] - (2.0 * va[i] - 3.0 * vb[i])));

  const bool pass = rel <= 1e-6 && worst <= 1e-9;
  return {pass, "unit-charge relative error = " + format_double(rel) +
                    "; worst linearity deviation = " + format_double(worst) +
                    " over " + std::to_string(grid.points.size()) +
                    " grid points"};
}

// ---------------------------------------------------------------------------
// Criterion 10: parsers round-trip every well-formed fixture exactly, and
// the command-line binaries hit every documented exit code.

const char *kSdfFixtures[] = {
    "acetate.sdf",       "benzene_kekulized.sdf", "bicyclobutane.sdf",
    "bromomethane.sdf",  "caoh2.sdf",             "chloromethane.sdf",
    "cyclohexane.sdf",   "cyclopropane.sdf",      "ethanol.sdf",
    "five_bond_carbon.sdf", "fluoromethane.sdf",  "formaldehyde.sdf",
    "hcn.sdf",           "iodomethane.sdf",       "koh.sdf",
    "lioh.sdf",          "methane.sdf",           "methanethiol.sdf",
    "mgoh2.sdf",         "naoh.sdf",              "naphthalene.sdf",
    "phosphine.sdf",     "pyridine.sdf",          "water.sdf"};

const char *kMol2Fixtures[] = {"ammonium.mol2", "benzene.mol2", "ethanol.mol2",
                               "methane.mol2"};

Verdict check_parsers(const Options &opt) {
  int round_trips = 0;
  for (const char *name : kSdfFixtures) {
    const Molecule mol = parse_sdf(read_file(fixture(opt, name)));
    if (parse_sdf(write_sdf(mol)) == mol)
      ++round_trips;
    else
      return {false, std::string("round trip changed ") + name};
  }
  for (const char *name : kMol2Fixtures) {
    const Molecule mol = parse_mol2(read_file(fixture(opt, name)));
    if (parse_mol2(write_mol2(mol)) == mol)
      ++round_trips;
    else
      return {false, std::string("round trip changed ") + name};
  }

  // Exit-code matrix for the shipped binaries.  Scratch inputs live in
  // the work directory.
  const std::string w = opt.workdir;
  const std::string out_crg = w + "/out.crg";
  const std::string cli = "'" + opt.cli + "'";
  const std::string model = " --model '" + opt.model + "'";
  auto charge_cmd = [&](const std::string &input) {
    return cli + " charge -i '" + input + "' -o '" + out_crg + "'" + model;
  };

  // Model files that must be rejected: wrong version line, truncated
  // payload.
  const std::string bad_version = w + "/bad_version.qnm";
  write_file(bad_version, "QEQNET-MODEL v9\nfeature_layout_version 1\n");
  const std::string truncated_model = w + "/truncated.qnm";
  {
    std::string bytes = read_file(opt.model);
    bytes.resize(bytes.size() - 8);
    write_file(truncated_model, bytes);
  }

  // Batch lists: one valid, one with a malformed member, one empty.
  const std::string good_list = w + "/good_list.txt";
  write_file(good_list, fixture(opt, "methane.sdf") + "\n" +
                            fixture(opt, "water.sdf") + "\n");
  const std::string bad_list = w + "/bad_list.txt";
  write_file(bad_list, fixture(opt, "ethanol.sdf") + "\n" +
                           fixture(opt, "garbage.mol2") + "\n");
  const std::string empty_list = w + "/empty_list.txt";
  write_file(empty_list, "\n");

  // A dataset whose second record is damaged.
  const std::string bad_dataset = w + "/bad.qds";
  {
    std::string text = write_dataset(make_teacher_dataset(2, 5));
    const std::size_t second = text.find("V2000", text.find("$$$$"));
    text.replace(second, 5, "V9000");
    write_file(bad_dataset, text);
  }

  struct Check {
    std::string what;
    std::string cmd;
    int expect;
  };
  const std::vector<Check> checks = {
      {"help", cli + " --help", 0},
      {"missing required option", cli + " charge", 1},
      {"unknown option", cli + " charge --frobnicate -i a -o b", 1},
      {"unknown subcommand", cli + " explode", 1},
      {"bad sizes order", cli + " benchmark --sizes 5 3" + model, 1},
      {"unparseable mol2", charge_cmd(fixture(opt, "garbage.mol2")), 2},
      {"unsupported element", charge_cmd(fixture(opt, "silane.sdf")), 2},
      {"disconnected input", charge_cmd(fixture(opt, "two_fragments.sdf")), 2},
      {"impossible valence", charge_cmd(fixture(opt, "five_bond_carbon.sdf")),
       2},
      {"truncated sdf", charge_cmd(fixture(opt, "truncated.sdf")), 2},
      {"newer sdf dialect", charge_cmd(fixture(opt, "v3000.sdf")), 2},
      {"bond index out of range", charge_cmd(fixture(opt, "bad_bond.sdf")), 2},
      {"missing input file", charge_cmd(w + "/no_such_molecule.sdf"), 2},
      {"batch member malformed",
       cli + " batch --input-list '" + bad_list + "' -o '" + w +
           "/batch_bad'" + model,
       2},
      {"batch list empty",
       cli + " batch --input-list '" + empty_list + "' -o '" + w +
           "/batch_empty'" + model,
       2},
      {"train dataset missing", cli + " train --data '" + w + "/no_such.qds'",
       2},
      {"train dataset damaged",
       cli + " train --data '" + bad_dataset + "' --out '" + w + "/never.qnm'",
       2},
      {"datagen output unwritable",
       "'" + opt.datagen + "' -n 2 -o '" + w + "/no_dir/x.qds'", 2},
      {"missing model file",
       cli + " charge -i '" + fixture(opt, "ethanol.sdf") + "' -o '" +
           out_crg + "' --model '" + w + "/no_such_model.qnm'",
       3},
      {"rejected model version",
       cli + " charge -i '" + fixture(opt, "ethanol.sdf") + "' -o '" +
           out_crg + "' --model '" + bad_version + "'",
       3},
      {"truncated model payload",
       cli + " charge -i '" + fixture(opt, "ethanol.sdf") + "' -o '" +
           out_crg + "' --model '" + truncated_model + "'",
       3},
      {"charge success", charge_cmd(fixture(opt, "ethanol.sdf")), 0},
      {"batch success",
       cli + " batch --input-list '" + good_list + "' -o '" + w +
           "/batch_ok'" + model,
       0},
      {"datagen success",
       "'" + opt.datagen + "' -n 5 --seed 3 -o '" + w + "/mini.qds'", 0},
      {"benchmark success",
       cli + " benchmark --sizes 2 4 --repeats 1" + model, 0},
  };

  int passed = 0;
  std::string failures;
  for (const Check &c : checks) {
    const int got = run_cmd(opt, c.cmd);
    if (got == c.expect) {
      ++passed;
    } else {
      if (!failures.empty())
        failures += ", ";
      failures += c.what + " (expected " + std::to_string(c.expect) +
                  ", got " + std::to_string(got) + ")";
    }
  }

  // The aborted batch must not have produced partial output.
  bool atomic = true;
  const std::filesystem::path bad_dir = w + "/batch_bad";
  if (std::filesystem::exists(bad_dir))
    for (const auto &entry : std::filesystem::directory_iterator(bad_dir))
      if (entry.path().extension() == ".crg")
        atomic = false;

  // The successful runs must have produced sane charge files.
  bool outputs_ok = true;
  try {
    const std::vector<double> q = parse_charge_file(read_file(out_crg));
    double sum = 0.0;
    for (double v : q)
      sum += v;
    // The file stores six decimals, so nine parsed values can be off by
    // up to 9 * 5e-7 in total even though the raw charges sum exactly.
    outputs_ok = q.size() == 9 && std::fabs(sum) <= 5e-6;
    outputs_ok = outputs_ok &&
                 parse_charge_file(read_file(w + "/batch_ok/methane.crg"))
                         .size() == 5 &&
                 parse_charge_file(read_file(w + "/batch_ok/water.crg"))
                         .size() == 3;
    outputs_ok =
        outputs_ok && read_dataset_file(w + "/mini.qds").size() == 5;
  } catch (const std::exception &) {
    outputs_ok = false;
  }

  const bool pass = passed == static_cast<int>(checks.size()) && atomic &&
                    outputs_ok;
  std::string detail = std::to_string(round_trips) +
                       " fixtures round-tripped identically; " +
                       std::to_string(passed) + "/" +
                       std::to_string(checks.size()) + " exit codes correct";
  if (!failures.empty())
    detail += " [" + failures + "]";
  if (!atomic)
    detail += "; aborted batch left partial output";
  if (!outputs_ok)
    detail += "; success-path outputs malformed";
  return {pass, detail};
}

} // namespace

int main(int argc, char **argv) {
  const Options opt = parse_options(argc, argv);
  std::filesystem::create_directories(opt.workdir);

  ModelParams model;
  try {
    model = load_model_file(opt.model);
  } catch (const std::exception &err) {
    std::cerr << "cannot load bundled model '" << opt.model
              << "': " << err.what() << "\n";
    return 1;
  }

  std::vector<QeqProblem> convex_instances;
  struct Criterion {
    const char *name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {"total-charge conservation",
       [&] { return check_conservation(opt, model); }},
      {"closed form matches iterative oracle",
       [&] { return check_closed_form(convex_instances); }},
      {"solution is the energy minimum",
       [&] { return check_optimality(convex_instances); }},
      {"relabeling equivariance and symmetry",
       [&] { return check_equivariance(opt, model); }},
      {"batched equals per-molecule",
       [&] { return check_batching(model); }},
      {"linear scaling", [&] { return check_scaling(model); }},
      {"analytic gradients match finite differences",
       [&] { return check_gradients(opt, model); }},
      {"teacher charges are learnable", [] { return check_learnability(); }},
      {"surface potential evaluator", [&] { return check_esp(opt); }},
      {"parser fidelity and exit codes", [&] { return check_parsers(opt); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].run();
    } catch (const std::exception &err) {
      v = {false, std::string("unexpected exception: ") + err.what()};
    }
    if (!v.pass)
      ++failures;
    std::printf("criterion %2zu %s  %s: %s\n", i + 1,
                v.pass ? "PASS" : "FAIL", criteria[i].name, v.detail.c_str());
    std::fflush(stdout);
  }
  if (failures == 0) {
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return 1;
}
