#pragma once

// Shared fixtures: the two desk plants used throughout, a seeded random
// plant generator constrained to pass validation, and a harness for driving
// the CLI binary.

#include <cstdint>
#include <random>
#include <string>

#include "trilqg/verify.hpp"

namespace testsup {

using namespace trilqg;

// N = 1 scalar plant with the closed-form solution X = sqrt(2) - 1.
TriangularPlant plant_p1();

// N = 2 plant with unit partitions: A = [[-1,0],[1,-2]], B = C = W = V = I,
// F = [I; 0], H = [0; I].
TriangularPlant plant_p2();

// Random plant with the given partitions: LBT A, B, C with standard-normal
// entries, F = [F1; 0] / H = [0; I] and W = [W1, 0] / V = [0, I] paddings so
// the rank and frequency-domain assumptions hold generically.
TriangularPlant random_plant(std::mt19937_64& rng, std::vector<int> np,
                             std::vector<int> mp, std::vector<int> pp);

// Draws random plants (random N in {2,3}, block sizes <= 3) until one passes
// validation.
TriangularPlant random_valid_plant(std::mt19937_64& rng);

struct CliResult {
  int exit_code = -1;
  std::string stdout_text;
};

// Runs the CLI binary with the given arguments; captures stdout.
CliResult run_cli(const std::string& args);

// Scratch directory unique to the calling test, created fresh.
std::string fresh_dir(const std::string& tag);

double max_abs(const Matrix& M);

}  // namespace testsup
