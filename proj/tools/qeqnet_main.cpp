//
// Project QEqNet - Copyright 2026 QEqNet Developers.
// SPDX-License-Identifier: Apache-2.0
//

// Command-line front end: assign charges to one molecule or a batch,
// train a model, or run the scaling benchmark.
//
// Exit codes: 0 success, 1 usage error, 2 data error (unreadable or
// malformed molecule input), 3 model error (unloadable or incompatible
// weights, degenerate hardness at solve time).

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qeqnet/analysis.hpp"
#include "qeqnet/errors.hpp"
#include "qeqnet/gnn.hpp"
#include "qeqnet/molio.hpp"
#include "qeqnet/pipeline.hpp"
#include "qeqnet/train.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitModel = 3;

std::string default_model_path() {
  if (const char *env = std::getenv("QEQNET_MODEL"))
    return env;
  return "data/default-model.qnm";
}

qeqnet::ModelParams load_model_or_exit(const std::string &path) {
  try {
    return qeqnet::load_model_file(path);
  } catch (const qeqnet::Error &err) {
    std::cerr << "error: " << err.what() << "\n";
    std::exit(kExitModel);
  }
}

void write_text_file(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    std::cerr << "error: cannot open '" << path << "' for writing\n";
    std::exit(kExitData);
  }
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) {
    std::cerr << "error: failed writing '" << path << "'\n";
    std::exit(kExitData);
  }
}

double charge_sum(const qeqnet::ChargeResult &result) {
  double sum = 0.0;
  for (double q : result.charges)
    sum += q;
  return sum;
}

int run_charge(const std::string &input, const std::string &output,
               const std::string &model_path) {
  const qeqnet::ModelParams model = load_model_or_exit(model_path);
  try {
    const qeqnet::Molecule mol = qeqnet::read_molecule_file(input);
    const qeqnet::ChargeResult result = qeqnet::assign_charges(model, mol);
    write_text_file(output, qeqnet::write_charge_file(result));
    std::cout << input << ": " << mol.atom_count() << " atoms, net charge "
              << result.net_charge << ", assigned sum " << charge_sum(result)
              << "\n";
    return kExitOk;
  } catch (const qeqnet::ModelMismatch &err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitModel;
  } catch (const qeqnet::SingularHardness &err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitModel;
  } catch (const qeqnet::Error &err) {
    std::cerr << "error: " << input << ": " << err.what() << "\n";
    return kExitData;
  }
}

int run_batch(const std::string &list_path, const std::string &outdir,
              const std::string &model_path) {
  const qeqnet::ModelParams model = load_model_or_exit(model_path);

  std::ifstream list(list_path);
  if (!list) {
    std::cerr << "error: cannot open list file '" << list_path << "'\n";
    return kExitData;
  }
  std::vector<std::string> paths;
  for (std::string line; std::getline(list, line);) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (!line.empty())
      paths.push_back(line);
  }
  if (paths.empty()) {
    std::cerr << "error: list file '" << list_path << "' names no inputs\n";
    return kExitData;
  }

  // All inputs are parsed up front; any failure aborts before compute so
  // a partial output directory can never look complete.
  std::vector<qeqnet::Molecule> mols;
  for (const std::string &path : paths) {
    try {
      mols.push_back(qeqnet::read_molecule_file(path));
    } catch (const qeqnet::Error &err) {
      std::cerr << "error: " << path << ": " << err.what() << "\n";
      return kExitData;
    }
  }

  std::error_code ec;
  std::filesystem::create_directories(outdir, ec);
  if (ec) {
    std::cerr << "error: cannot create output directory '" << outdir << "'\n";
    return kExitData;
  }

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<qeqnet::ChargeResult> results;
  try {
    results = qeqnet::assign_charges_batched(model, mols);
  } catch (const qeqnet::ModelMismatch &err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitModel;
  } catch (const qeqnet::SingularHardness &err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitModel;
  } catch (const qeqnet::Error &err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitData;
  }
  const auto t1 = std::chrono::steady_clock::now();

  for (std::size_t i = 0; i < paths.size(); ++i) {
    const std::string stem = std::filesystem::path(paths[i]).stem().string();
    const std::string out_path =
        (std::filesystem::path(outdir) / (stem + ".crg")).string();
    write_text_file(out_path, qeqnet::write_charge_file(results[i]));
  }
  std::cout << "charged " << paths.size() << " molecules in "
            << std::chrono::duration<double>(t1 - t0).count() << " s\n";
  return kExitOk;
}

int run_train(const std::string &data_path, const std::string &out_path,
              const std::string &history_path, int hidden, int layers,
              int readout_hidden, const qeqnet::TrainConfig &tc,
              std::uint64_t model_seed) {
  std::vector<qeqnet::LabeledMolecule> dataset;
  try {
    dataset = qeqnet::read_dataset_file(data_path);
  } catch (const qeqnet::Error &err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitData;
  }

  qeqnet::ModelConfig mc;
  mc.hidden_width = hidden;
  mc.n_layers = layers;
  mc.readout_hidden_width = readout_hidden;
  mc.seed = model_seed;

  try {
    const qeqnet::TrainResult result =
        qeqnet::train_loop(dataset, mc, tc);
    qeqnet::save_model_file(result.params, out_path);
    if (!history_path.empty())
      write_text_file(history_path, qeqnet::write_history_csv(result.history));
    if (result.history.empty())
      std::cout << "wrote initialized model to " << out_path << "\n";
    else
      std::cout << "trained " << result.history.size() << " epochs, best val "
                << result.history.back().val_loss << ", model in " << out_path
                << "\n";
    return kExitOk;
  } catch (const qeqnet::SingularHardness &err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitModel;
  } catch (const qeqnet::Error &err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitData;
  }
}

int run_benchmark(const std::vector<int> &sizes, int repeats,
                  const std::string &model_path, bool parallel) {
  for (std::size_t i = 1; i < sizes.size(); ++i)
    if (sizes[i] <= sizes[i - 1]) {
      std::cerr << "error: --sizes must be strictly increasing\n";
      return kExitUsage;
    }
  const qeqnet::ModelParams model = load_model_or_exit(model_path);
  try {
    const qeqnet::BenchmarkResult result =
        qeqnet::scaling_benchmark(model, sizes, repeats, parallel);
    std::cout << qeqnet::format_benchmark_csv(result);
    return kExitOk;
  } catch (const qeqnet::SingularHardness &err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitModel;
  } catch (const qeqnet::Error &err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitData;
  }
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Graph-network charge assignment with exact total-charge "
               "conservation"};
  app.require_subcommand(1);

  std::string model_path = default_model_path();

  // charge
  auto *charge = app.add_subcommand("charge", "Assign charges to one molecule");
  std::string charge_in, charge_out;
  charge->add_option("-i,--input", charge_in, "Input .mol2 or .sdf file")
      ->required();
  charge->add_option("-o,--output", charge_out, "Output .crg file")->required();
  charge->add_option("--model", model_path, "Model weights file");

  // batch
  auto *batch = app.add_subcommand("batch", "Charge many molecules in one pass");
  std::string batch_list, batch_outdir;
  batch->add_option("--input-list", batch_list,
                    "File naming one molecule file per line")
      ->required();
  batch->add_option("-o,--outdir", batch_outdir, "Output directory")
      ->required();
  batch->add_option("--model", model_path, "Model weights file");

  // train
  auto *train = app.add_subcommand("train", "Fit a model to a charge dataset");
  std::string train_data, train_out = "model.qnm", train_history;
  int hidden = 32, layers = 2, readout_hidden = 32;
  qeqnet::TrainConfig tc;
  std::uint64_t model_seed = 0;
  train->add_option("--data", train_data, "Dataset file")->required();
  train->add_option("--out", train_out, "Output model file");
  train->add_option("--history", train_history, "Training history CSV");
  train->add_option("--hidden", hidden, "Hidden width");
  train->add_option("--layers", layers, "Message-passing layers");
  train->add_option("--readout-hidden", readout_hidden, "Readout hidden width");
  train->add_option("--epochs", tc.epochs, "Training epochs");
  train->add_option("--lr", tc.learning_rate, "Learning rate");
  train->add_option("--l2", tc.l2_rate, "L2 regularization rate");
  train->add_option("--batch-size", tc.batch_size, "Mini-batch size");
  train->add_option("--adam-beta1", tc.adam_beta1, "Adam first-moment decay");
  train->add_option("--adam-beta2", tc.adam_beta2, "Adam second-moment decay");
  train->add_option("--seed", tc.seed, "Shuffle/split seed (also model init)");
  train->add_option("--early-stop-val-loss", tc.early_stop_val_loss,
                    "Stop when validation loss reaches this (0 disables)");

  // benchmark
  auto *bench = app.add_subcommand("benchmark", "Scaling benchmark on chains");
  std::vector<int> sizes = {10, 30, 100, 300, 1000};
  int repeats = 5;
  bool bench_parallel = false;
  bench->add_option("--sizes", sizes, "Chain lengths (strictly increasing)");
  bench->add_option("--repeats", repeats, "Timing repeats per size")
      ->check(CLI::Range(1, std::numeric_limits<int>::max()));
  bench->add_flag("--parallel", bench_parallel,
                  "Time the parallel kernels instead of serial");
  bench->add_option("--model", model_path, "Model weights file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    // CLI11 prints help itself; fold every parse outcome into the usage
    // exit code except an explicit --help request, which is a success.
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (charge->parsed())
    return run_charge(charge_in, charge_out, model_path);
  if (batch->parsed())
    return run_batch(batch_list, batch_outdir, model_path);
  if (train->parsed()) {
    model_seed = tc.seed;
    return run_train(train_data, train_out, train_history, hidden, layers,
                     readout_hidden, tc, model_seed);
  }
  if (bench->parsed())
    return run_benchmark(sizes, repeats, model_path, bench_parallel);
  return kExitUsage;
}
