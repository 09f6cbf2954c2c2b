#pragma once

// Problem data for the triangular H2 design: realization matrices, their
// chain partitions, validation of the well-posedness assumptions, and the
// JSON document format.

#include <string>
#include <vector>

#include "trilqg/structure.hpp"

namespace trilqg {

struct TriangularPlant {
  Matrix A;  // n x n, lower block triangular
  Matrix B;  // n x m, lower block triangular
  Matrix C;  // p x n, lower block triangular
  Matrix F;  // q x n
  Matrix H;  // q x m, full column rank
  Matrix W;  // n x r
  Matrix V;  // p x r, full row rank
  Partition np, mp, pp;

  int players() const { return np.count(); }
  Matrix psi() const { return H.transpose() * H; }
  Matrix phi() const { return V * V.transpose(); }
};

struct ValidationCheck {
  std::string name;
  bool pass = false;
  double margin = 0.0;  // semantics documented per check in validate()
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool all_pass() const;
  std::string to_json() const;
};

// Runs every Assumption-1 clause plus the structural checks; failures are
// reported, never thrown.
ValidationReport validate(const TriangularPlant& plant);

// Document format: JSON object with exactly the fields state_sizes,
// input_sizes, output_sizes, A, B, C, F, H, W, V.  Matrices are row-major
// nested arrays.  Unknown fields are rejected.
TriangularPlant load_plant(const std::string& text);
TriangularPlant load_plant_file(const std::string& path);
std::string save_plant(const TriangularPlant& plant);

}  // namespace trilqg
