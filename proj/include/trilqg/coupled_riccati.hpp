#pragma once

// Three-step solution of the 2N linearly coupled algebraic Riccati
// equations: sequential sub-Riccati solves along the chain, one square
// linear system for the off-diagonal coupling blocks, and Lyapunov
// completions.  All per-stage containers are indexed 1..N with slot 0
// unused, matching the chain convention.

#include <string>
#include <vector>

#include "trilqg/plant.hpp"

namespace trilqg {

// Hat blocks: X_i restricted to state blocks i..N, Y_i to blocks 1..i,
// K_i's trailing block columns, L_i's leading block rows.
struct HatParts {
  std::vector<Matrix> X, K, Y, L;
};

// Bar blocks: the coupling unknowns of the linear stage.
// X[i], K[i] valid for i = 2..N; Y[i], L[i] valid for i = 1..N-1.
struct BarParts {
  std::vector<Matrix> X, K, Y, L;
  double condition_estimate = 1.0;  // 1-norm estimate of the solved system
};

// Check blocks: the Lyapunov completions.  X[i] for i = 2..N, Y[i] for
// i = 1..N-1.
struct CheckParts {
  std::vector<Matrix> X, Y;
};

struct GainSet {
  std::vector<Matrix> X, K, Y, L;  // 1..N
};

struct EquationResidual {
  std::string name;
  double absolute = 0.0;
  double relative = 0.0;  // absolute / (1 + sum of term norms)
};

struct StepReport {
  std::vector<EquationResidual> equations;
  std::vector<double> stability_margins;  // abscissa of A^KL_{i,i-1}, i=1..N+1
  std::vector<double> psd_floors;         // min eigenvalue of X_1..X_N, Y_1..Y_N
  double step2_condition = 1.0;
  double max_relative_residual() const;
  double worst_stability_margin() const;
  double worst_psd_floor() const;
};

HatParts step1_sequential(const TriangularPlant& plant, double are_tol = 1e-8);

BarParts step2_linear(const TriangularPlant& plant, const HatParts& hats,
                      double cond_limit = 1e12, double lin_tol = 1e-10);

CheckParts step3_lyapunov(const TriangularPlant& plant, const HatParts& hats,
                          const BarParts& bars);

GainSet assemble_gains(const TriangularPlant& plant, const HatParts& hats,
                       const BarParts& bars, const CheckParts& checks);

// Direct-substitution residuals of the rearranged coupled equations plus
// the two boundary AREs, stability margins, and PSD floors.
StepReport residuals(const TriangularPlant& plant, const GainSet& gains);

// A^KL_{i,i-1} for i = 1..N+1 (boundary conventions A+BK_1 and A+L_N C).
Matrix a_kl(const TriangularPlant& plant, const GainSet& gains, int i);

struct SolveResult {
  GainSet gains;
  StepReport report;
};

// step1 -> step2 -> step3 -> assemble -> residuals.
SolveResult solve_coupled(const TriangularPlant& plant, double are_tol = 1e-8,
                          double lin_tol = 1e-10, double cond_limit = 1e12);

namespace detail {
// Dense solve used by step 2: LU with partial pivoting, one iterative
// refinement pass, 1-norm condition estimate.  Throws SingularStep2System
// when the estimate exceeds `cond_limit`.
struct DenseSolve {
  Vector x;
  double condition;
};
DenseSolve solve_with_condition(const Matrix& M, const Vector& rhs,
                                double cond_limit);

// The materialized coupling operator over the vectorized bar unknowns
// (empty for N = 1).  Exposed so tests can probe its spectrum directly.
Matrix step2_operator(const TriangularPlant& plant, const HatParts& hats);
}  // namespace detail

}  // namespace trilqg
