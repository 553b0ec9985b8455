//
// Project QEqNet - Copyright 2026 QEqNet Developers.
// SPDX-License-Identifier: Apache-2.0
//

// Emits a teacher-labeled training dataset: random small molecules with
// charges from the frozen per-element electronegativity table pushed
// through charge equilibration.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qeqnet/errors.hpp"
#include "qeqnet/train.hpp"

int main(int argc, char **argv) {
  CLI::App app{"Generate a teacher-labeled charge dataset"};
  int count = 500;
  std::uint64_t seed = 0;
  std::string out = "teacher.qds";
  app.add_option("-n,--count", count, "Number of molecules")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Generator seed");
  app.add_option("-o,--out", out, "Output dataset file")->required();
  CLI11_PARSE(app, argc, argv);

  try {
    const auto dataset = qeqnet::make_teacher_dataset(count, seed);
    qeqnet::write_dataset_file(dataset, out);
    std::cout << "wrote " << dataset.size() << " molecules to " << out << "\n";
  } catch (const qeqnet::Error &err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  return 0;
}
