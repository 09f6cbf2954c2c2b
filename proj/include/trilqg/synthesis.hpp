#pragma once

// Optimal controller realization, the closed-loop realization it induces,
// the block-triangularizing similarity, and the closed-form optimal cost.

#include <string>

#include "trilqg/coupled_riccati.hpp"

namespace trilqg {

struct Controller {
  StateSpace sys;  // state dim nN, inputs p, outputs m, D = 0
  Partition np, mp, pp;
};

// Blockwise assembly of (A_K, B_K, C_K) from the closed form.
Controller build_controller(const TriangularPlant& plant, const GainSet& gains);

// Same realization assembled by multiplying materialized zeta / mu incidence
// matrices; kept as a redundant route against index-algebra mistakes.
Controller build_controller_incidence(const TriangularPlant& plant,
                                      const GainSet& gains);

// The 2x2-block closed-loop realization: state [x_K; x] of dimension n(N+1).
struct ClosedLoop {
  Matrix A;  // [[A_K, B_K C], [B C_K, A]]
  Matrix B;  // [0; B]
  Matrix C;  // [0, C]
  Matrix F;  // [H C_K, F]
  Matrix W;  // [B_K V; W]
  Matrix H;  // feedthrough of the (z,u) channel
  Matrix V;  // feedthrough of the (y,w) channel
  Eigen::Index n = 0;
  int N = 0;

  StateSpace g11() const;  // w -> z, strictly proper
  StateSpace g12() const;  // u -> z
  StateSpace g21() const;  // w -> y
  StateSpace g22() const;  // u -> y, strictly proper
};

// Assembles the closed loop and rejects it unless the state matrix is
// strictly Hurwitz (abscissa < -1e-10).
ClosedLoop closed_loop(const TriangularPlant& plant, const Controller& ctrl);

// mu_bar * Acal * zeta_bar: block upper triangular with A^KL_{i,i-1} on the
// diagonal.
Matrix block_triangularize(const ClosedLoop& cl, int N, Eigen::Index n);

struct CostBreakdown {
  double j_opt = 0.0;
  double j_cnt = 0.0;   // centralized part
  double j_dcnt = 0.0;  // price of the information constraint
};

CostBreakdown optimal_cost(const TriangularPlant& plant, const GainSet& gains);

// Controller document: JSON with the partitions plus A_K, B_K, C_K.
std::string save_controller(const Controller& ctrl);
Controller load_controller(const std::string& text);
Controller load_controller_file(const std::string& path);

}  // namespace trilqg
