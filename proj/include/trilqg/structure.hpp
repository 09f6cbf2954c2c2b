#pragma once

// Block-partition index algebra: the E selectors as index ranges, the
// lower-block-triangular predicate, and the incidence matrices zeta / mu.
// Block indices are 1-based throughout, matching the chain convention
// i = 1..N used everywhere else in the library.

#include <vector>

#include "trilqg/matops.hpp"

namespace trilqg {

class Partition {
 public:
  explicit Partition(std::vector<int> sizes);

  int count() const { return static_cast<int>(sizes_.size()); }
  Eigen::Index total() const { return offsets_.back(); }
  int size(int block) const;
  Eigen::Index offset(int block) const;  // scalar index where `block` starts
  const std::vector<int>& sizes() const { return sizes_; }

 private:
  std::vector<int> sizes_;
  std::vector<Eigen::Index> offsets_;
};

struct BlockRange {
  Eigen::Index start = 0;
  Eigen::Index end = 0;  // half-open
  Eigen::Index length() const { return end - start; }
};

// E^{up i} / E_{up i}: scalar range of blocks 1..i.
BlockRange range_up(const Partition& p, int i);

// E^{down i} / E_{down i}: scalar range of blocks i..N.
BlockRange range_down(const Partition& p, int i);

// Single block i.
BlockRange range_block(const Partition& p, int i);

// The indicated submatrix; realizes all M_{up/down} shorthands.
Matrix sub(const Matrix& M, BlockRange rows, BlockRange cols);

// True iff every block (i,j) with j > i has max-abs entry <= tol.
// tol < 0 selects the default 1e-9 * (1 + maxabs(M)).
bool is_lbt(const Matrix& M, const Partition& rowp, const Partition& colp,
            double tol = -1.0);

// Largest absolute entry above the block diagonal (0 for N = 1).
double lbt_defect(const Matrix& M, const Partition& rowp,
                  const Partition& colp);

struct IncidencePair {
  Matrix zeta;  // block lower triangular of I_n
  Matrix mu;    // its unipotent inverse, in closed form
};

// N x N block pattern at block size n (dimension nN).
IncidencePair incidence_zeta_mu(Eigen::Index n, int N);

// (N+1) x (N+1) block pattern at block size n (dimension n(N+1)).
IncidencePair incidence_bar(Eigen::Index n, int N);

// Materialized selectors, for realizations that need explicit E matrices:
// columns of I_total covering blocks 1..i (resp. i..N).
Matrix selector_up(const Partition& p, int i);
Matrix selector_down(const Partition& p, int i);

}  // namespace trilqg
