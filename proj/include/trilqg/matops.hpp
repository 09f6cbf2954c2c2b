#pragma once

// Dense real linear-algebra substrate: Riccati/Lyapunov/Sylvester solvers,
// H2 norms, frequency responses, and generic linear-operator assembly.
// Everything here is a pure function of its inputs.

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <vector>

#include "trilqg/errors.hpp"

namespace trilqg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;

// A real state-space realization C(sI-A)^{-1}B + D.
struct StateSpace {
  Matrix A, B, C, D;

  StateSpace() = default;
  StateSpace(Matrix a, Matrix b, Matrix c, Matrix d);

  static StateSpace strictly_proper(Matrix a, Matrix b, Matrix c);

  Eigen::Index states() const { return A.rows(); }
  Eigen::Index inputs() const { return B.cols(); }
  Eigen::Index outputs() const { return C.rows(); }
};

struct ArePrimalSolution {
  Matrix X;         // symmetric PSD stabilizing solution
  Matrix K;         // K = -Psi^{-1} (XB + F'H)'
  double residual;  // Frobenius norm of the equation defect
};

struct AreDualSolution {
  Matrix Y;
  Matrix L;  // L = -(CY + VW')' Phi^{-1}
  double residual;
};

// Stabilizing solution of A'X + XA - (XB+F'H) Psi^{-1} (XB+F'H)' + F'F = 0,
// Psi = H'H.  Ordered Schur of the Hamiltonian built from the
// cross-term-eliminated form, stable-subspace graph solve, then one
// Newton defect-correction pass.
ArePrimalSolution solve_are_p(const Matrix& A, const Matrix& B,
                              const Matrix& F, const Matrix& H,
                              double tol = 1e-8);

// Stabilizing solution of AY + YA' - (CY+VW')' Phi^{-1} (CY+VW') + WW' = 0,
// Phi = VV'.  Assembled on the dual side directly (not by transposing
// solve_are_p) so the two routes can cross-check each other.
AreDualSolution solve_are_d(const Matrix& A, const Matrix& C, const Matrix& W,
                            const Matrix& V, double tol = 1e-8);

// A'X + XA + Q = 0 with A Hurwitz and Q symmetric.
Matrix solve_lyapunov(const Matrix& A, const Matrix& Q);

// AX + XB + C = 0 with spec(A) and -spec(B) disjoint (Bartels-Stewart on
// complex Schur forms).
Matrix solve_sylvester(const Matrix& A, const Matrix& B, const Matrix& C);

// sqrt(tr(C P C')) with AP + PA' + BB' = 0; requires A Hurwitz, D = 0.
double h2_norm(const StateSpace& sys);

// Same value through the observability Gramian, sqrt(tr(B' Q B)) with
// A'Q + QA + C'C = 0.  Kept as an independent route for cross-checks.
double h2_norm_via_observability(const StateSpace& sys);

// C (jwI - A)^{-1} B + D.
ComplexMatrix freq_response(const StateSpace& sys, double omega);

// Largest real part over the eigenvalues of A.
double spectral_abscissa(const Matrix& A);

// Materializes a linear map by probing unit basis vectors: column k of the
// result is apply(e_k).
Matrix assemble_linear_operator(
    const std::function<Vector(const Vector&)>& apply, Eigen::Index dim_in,
    Eigen::Index dim_out);

// Symmetric PSD principal square root (negative eigenvalues clipped at 0).
Matrix sym_sqrt(const Matrix& S);

// Principal square root and its inverse; throws `on_singular` when the
// smallest eigenvalue is not safely positive.
struct SymRootPair {
  Matrix root;
  Matrix inverse_root;
};
SymRootPair sym_sqrt_pair(const Matrix& S, ErrorCode on_singular);

// Log-spaced grid on [lo, hi] with `count` points, with w = 0 prepended.
std::vector<double> frequency_grid(double lo, double hi, int count,
                                   bool include_zero = true);

void require_finite(const Matrix& M, const char* name);

}  // namespace trilqg
