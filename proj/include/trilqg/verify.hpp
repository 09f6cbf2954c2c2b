#pragma once

// Independent optimality certification: inner / co-inner factors of the
// closed-loop channels, the projection residual realizations, closed-form
// residual norms with H2 cross-checks, the certainty-equivalence identity,
// and a randomized Youla perturbation probe.
//
// Every operation has a form taking an explicit ClosedLoop so a controller
// loaded from disk can be certified against freshly solved gains; the
// two-argument forms synthesize the nominal loop internally.

#include <cstdint>
#include <vector>

#include "trilqg/synthesis.hpp"

namespace trilqg {

struct FactorSet {
  std::vector<StateSpace> U;     // inner factors, 1..N
  std::vector<StateSpace> Minv;  // M_i^{-1}, 1..N
  std::vector<StateSpace> V;     // co-inner factors, 1..N
  std::vector<StateSpace> Ninv;  // N_j^{-1}, 1..N
};

struct StructuredSelectors {
  Matrix K;     // script-K_i
  Matrix L;     // script-L_j
  Matrix Jtil;  // J-tilde_i
  Matrix Jhat;  // J-hat_j
};

// The structured selector rows/columns over the n(N+1)-dimensional
// closed-loop state.
Matrix cal_k(const TriangularPlant& plant, const GainSet& gains, int i);
Matrix cal_l(const TriangularPlant& plant, const GainSet& gains, int j);
Matrix j_tilde(const TriangularPlant& plant, int i);
Matrix j_hat(const TriangularPlant& plant, int j);
StructuredSelectors structured_selectors(const TriangularPlant& plant,
                                         const GainSet& gains, int i, int j);

FactorSet build_factors(const TriangularPlant& plant, const GainSet& gains);
FactorSet build_factors(const TriangularPlant& plant, const GainSet& gains,
                        const ClosedLoop& cl);

// max over the grid of ||U(jw)^H U(jw) - I||_F; throws UnstableFactor when
// the realization is not Hurwitz.
double check_inner(const StateSpace& U, const std::vector<double>& freqs);
// Co-inner variant, ||U(jw) U(jw)^H - I||_F.
double check_coinner(const StateSpace& V, const std::vector<double>& freqs);

struct ProjectionResidual {
  StateSpace sys;  // (Acal, Lambda_j, Gamma_i, 0)
  Matrix gamma;
  Matrix lambda;
  double h2 = 0.0;
};

// Middle factor of the projection of G11 onto S_{i,j}.  Valid indices:
// 0 <= i < j <= N+1, or the diagonal 1 <= i = j <= N whose vanishing is the
// optimality certificate.
ProjectionResidual projection_residual(const TriangularPlant& plant,
                                       const GainSet& gains, int i, int j);
ProjectionResidual projection_residual(const TriangularPlant& plant,
                                       const GainSet& gains,
                                       const ClosedLoop& cl, int i, int j);

struct ResidualNormEntry {
  int i = 0;
  int j = 0;
  // 'd': transition (i-1,j) -> (i,j).  'l': transition (i,j+1) -> (i,j).
  char direction = 'd';
  double closed_form = 0.0;  // squared H2 norm from the trace formulas
  double h2_sq = 0.0;        // squared H2 norm of the realization
};

std::vector<ResidualNormEntry> residual_norms(const TriangularPlant& plant,
                                              const GainSet& gains);
std::vector<ResidualNormEntry> residual_norms(const TriangularPlant& plant,
                                              const GainSet& gains,
                                              const ClosedLoop& cl);

// Max frequency-sampled Frobenius norm of the estimator defect realization
// for player j (zero when controller state j is the least-mean-square
// estimate of the plant state from upstream outputs).
double certainty_equivalence_check(const TriangularPlant& plant,
                                   const GainSet& gains, int j);
double certainty_equivalence_check(const TriangularPlant& plant,
                                   const GainSet& gains, const ClosedLoop& cl,
                                   int j);

struct PerturbationReport {
  double nominal_cost = 0.0;
  double worst_delta = 0.0;  // min over trials of (perturbed - nominal)
  double mean_delta = 0.0;   // over surviving trials
  int destabilized = 0;      // trials skipped because the loop left the LHP
  int trials = 0;
};

// Random stable lower-block-triangular Youla perturbations of the given
// magnitude; the controller K' is recovered from each sample and the
// perturbed closed-loop H2 cost compared against the nominal one.
PerturbationReport perturbation_optimality(const TriangularPlant& plant,
                                           const Controller& ctrl, int trials,
                                           double scale, std::uint64_t seed);

}  // namespace trilqg
