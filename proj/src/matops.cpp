#include "trilqg/matops.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

namespace trilqg {

namespace {

using Complex = std::complex<double>;

// Relative floor below which a symmetric factor counts as singular.
constexpr double kSingularFloor = 1e-12;
// Hamiltonian eigenvalues closer to the imaginary axis than this (relative
// to the Hamiltonian norm) violate the frequency-domain rank assumptions.
constexpr double kAxisGuard = 1e-8;

struct SymInverse {
  Matrix inverse;
  double min_eig;
  double max_eig;
};

SymInverse invert_spd(const Matrix& S, ErrorCode on_singular,
                      const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo <= kSingularFloor * std::max(1.0, hi)) {
    throw Error(on_singular,
                std::string(what) + " numerically singular (min eigenvalue " +
                    std::to_string(lo) + ")",
                lo);
  }
  Matrix inv = es.eigenvectors() *
               es.eigenvalues().cwiseInverse().asDiagonal() *
               es.eigenvectors().transpose();
  return {std::move(inv), lo, hi};
}

// Complex Schur form with stable (Re < 0) eigenvalues moved to the leading
// diagonal positions.  Swapping adjacent diagonal entries of an upper
// triangular T uses the unitary similarity whose first column is the
// eigenvector [t12; t22-t11] of the trailing eigenvalue.
struct OrderedSchur {
  ComplexMatrix T;
  ComplexMatrix U;
  Eigen::Index stable_count;
  double min_axis_distance;
};

void swap_adjacent(ComplexMatrix& T, ComplexMatrix& U, Eigen::Index k) {
  const Complex a = T(k, k);
  const Complex b = T(k, k + 1);
  const Complex d = T(k + 1, k + 1);
  const Complex x = b;
  const Complex y = d - a;
  const double nrm = std::sqrt(std::norm(x) + std::norm(y));
  if (nrm == 0.0) return;  // equal eigenvalues, order immaterial
  const Complex c = x / nrm;
  const Complex s = y / nrm;
  ComplexMatrix G(2, 2);
  G << c, -std::conj(s), s, std::conj(c);
  T.middleCols(k, 2) = T.middleCols(k, 2) * G;
  T.middleRows(k, 2) = G.adjoint() * T.middleRows(k, 2);
  U.middleCols(k, 2) = U.middleCols(k, 2) * G;
  T(k + 1, k) = Complex(0.0, 0.0);
}

OrderedSchur ordered_stable_schur(const Matrix& H) {
  const Eigen::Index n2 = H.rows();
  Eigen::ComplexSchur<ComplexMatrix> schur(H.cast<Complex>(), true);
  if (schur.info() != Eigen::Success) {
    throw Error(ErrorCode::NoStableSubspace, "complex Schur iteration failed");
  }
  OrderedSchur out{schur.matrixT(), schur.matrixU(), 0, 0.0};

  const double scale = std::max(1.0, H.norm());
  double min_axis = std::numeric_limits<double>::infinity();
  Eigen::Index stable = 0;
  for (Eigen::Index k = 0; k < n2; ++k) {
    const double re = out.T(k, k).real();
    min_axis = std::min(min_axis, std::abs(re));
    if (re < 0.0) ++stable;
  }
  out.stable_count = stable;
  out.min_axis_distance = min_axis;
  if (min_axis < kAxisGuard * scale) {
    throw Error(ErrorCode::ImaginaryAxisEigs,
                "Hamiltonian eigenvalue within " + std::to_string(min_axis) +
                    " of the imaginary axis",
                min_axis);
  }

  // Selection sort with adjacent swaps: pull each stable eigenvalue to the
  // front while preserving triangularity.
  for (Eigen::Index target = 0; target < stable; ++target) {
    Eigen::Index j = target;
    while (j < n2 && out.T(j, j).real() >= 0.0) ++j;
    for (Eigen::Index k = j; k > target; --k) swap_adjacent(out.T, out.U, k - 1);
  }
  return out;
}

// Solves the standard-form CARE Ab'X + X Ab - X R X + Qb = 0 through the
// stable invariant subspace of its Hamiltonian.
Matrix stable_graph_solution(const Matrix& Ab, const Matrix& R,
                             const Matrix& Qb) {
  const Eigen::Index n = Ab.rows();
  Matrix ham(2 * n, 2 * n);
  ham << Ab, -R, -Qb, -Ab.transpose();

  OrderedSchur os = ordered_stable_schur(ham);
  if (os.stable_count != n) {
    throw Error(ErrorCode::NoStableSubspace,
                "stable invariant subspace has dimension " +
                    std::to_string(os.stable_count) + ", expected " +
                    std::to_string(n));
  }
  ComplexMatrix U1 = os.U.topLeftCorner(n, n);
  ComplexMatrix U2 = os.U.bottomLeftCorner(n, n);
  Eigen::FullPivLU<ComplexMatrix> lu(U1.transpose());
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::NoStableSubspace,
                "stable subspace is not graph-representable");
  }
  Matrix X = lu.solve(U2.transpose()).transpose().real();
  return 0.5 * (X + X.transpose());
}

Matrix are_p_defect(const Matrix& A, const Matrix& B, const Matrix& F,
                    const Matrix& H, const Matrix& PsiInv, const Matrix& X) {
  Matrix S = X * B + F.transpose() * H;
  return A.transpose() * X + X * A - S * PsiInv * S.transpose() +
         F.transpose() * F;
}

Matrix are_d_defect(const Matrix& A, const Matrix& C, const Matrix& W,
                    const Matrix& V, const Matrix& PhiInv, const Matrix& Y) {
  Matrix S = C * Y + V * W.transpose();
  return A * Y + Y * A.transpose() - S.transpose() * PhiInv * S +
         W * W.transpose();
}

void check_square(const Matrix& A, const char* name) {
  if (A.rows() != A.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(name) + " must be square");
  }
}

}  // namespace

void require_finite(const Matrix& M, const char* name) {
  if (!M.allFinite()) {
    throw Error(ErrorCode::SchemaError,
                std::string(name) + " contains a non-finite entry");
  }
}

StateSpace::StateSpace(Matrix a, Matrix b, Matrix c, Matrix d)
    : A(std::move(a)), B(std::move(b)), C(std::move(c)), D(std::move(d)) {
  if (A.rows() != A.cols() || B.rows() != A.rows() || C.cols() != A.rows() ||
      D.rows() != C.rows() || D.cols() != B.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                "incompatible state-space dimensions");
  }
  require_finite(A, "A");
  require_finite(B, "B");
  require_finite(C, "C");
  require_finite(D, "D");
}

StateSpace StateSpace::strictly_proper(Matrix a, Matrix b, Matrix c) {
  Matrix d = Matrix::Zero(c.rows(), b.cols());
  return StateSpace(std::move(a), std::move(b), std::move(c), std::move(d));
}

ArePrimalSolution solve_are_p(const Matrix& A, const Matrix& B,
                              const Matrix& F, const Matrix& H, double tol) {
  check_square(A, "A");
  const Eigen::Index n = A.rows();
  if (B.rows() != n || F.cols() != n || H.rows() != F.rows() ||
      H.cols() != B.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "ARE_p operand dimensions");
  }

  Matrix Psi = H.transpose() * H;
  Matrix PsiInv = invert_spd(Psi, ErrorCode::SingularPsi, "Psi = H'H").inverse;

  // Cross-term elimination: the equation in X equals the standard CARE with
  // Ab = A - B Psi^{-1} H'F,  R = B Psi^{-1} B',  Qb = F'F - F'H Psi^{-1} H'F.
  Matrix HtF = H.transpose() * F;
  Matrix Ab = A - B * PsiInv * HtF;
  Matrix R = B * PsiInv * B.transpose();
  Matrix Qb = F.transpose() * F - HtF.transpose() * PsiInv * HtF;
  Qb = 0.5 * (Qb + Qb.transpose());

  Matrix X = stable_graph_solution(Ab, R, Qb);

  auto gain = [&](const Matrix& Xc) -> Matrix {
    return -PsiInv * (Xc * B + F.transpose() * H).transpose();
  };

  Matrix K = gain(X);
  Matrix Acl = A + B * K;
  if (spectral_abscissa(Acl) >= 0.0) {
    throw Error(ErrorCode::NoStableSubspace,
                "computed gain does not stabilize A + BK");
  }

  // One Newton (Kleinman) defect-correction pass sharpens the residual to
  // near machine precision.
  Matrix defect = are_p_defect(A, B, F, H, PsiInv, X);
  X += solve_lyapunov(Acl, defect);
  X = 0.5 * (X + X.transpose());
  K = gain(X);
  Acl = A + B * K;

  const double res = are_p_defect(A, B, F, H, PsiInv, X).norm();
  if (res > tol * (1.0 + X.norm())) {
    throw Error(ErrorCode::NoStableSubspace,
                "Riccati residual " + std::to_string(res) +
                    " exceeds tolerance",
                res);
  }
  if (spectral_abscissa(Acl) >= 0.0) {
    throw Error(ErrorCode::NoStableSubspace,
                "refined gain does not stabilize A + BK");
  }
  return {std::move(X), std::move(K), res};
}

AreDualSolution solve_are_d(const Matrix& A, const Matrix& C, const Matrix& W,
                            const Matrix& V, double tol) {
  check_square(A, "A");
  const Eigen::Index n = A.rows();
  if (C.cols() != n || W.rows() != n || V.rows() != C.rows() ||
      V.cols() != W.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "ARE_d operand dimensions");
  }

  Matrix Phi = V * V.transpose();
  Matrix PhiInv = invert_spd(Phi, ErrorCode::SingularPhi, "Phi = VV'").inverse;

  // Dual cross-term elimination: Ab Y + Y Ab' - Y Rd Y + Qd = 0 with
  // Ab = A - W V' Phi^{-1} C.  Its Hamiltonian is the primal one of Ab'.
  Matrix WVt = W * V.transpose();
  Matrix Ab = A - WVt * PhiInv * C;
  Matrix Rd = C.transpose() * PhiInv * C;
  Matrix Qd = W * W.transpose() - WVt * PhiInv * WVt.transpose();
  Qd = 0.5 * (Qd + Qd.transpose());

  Matrix Y = stable_graph_solution(Ab.transpose(), Rd, Qd);

  auto gain = [&](const Matrix& Yc) -> Matrix {
    return -(C * Yc + V * W.transpose()).transpose() * PhiInv;
  };

  Matrix L = gain(Y);
  Matrix Aobs = A + L * C;
  if (spectral_abscissa(Aobs) >= 0.0) {
    throw Error(ErrorCode::NoStableSubspace,
                "computed gain does not stabilize A + LC");
  }

  Matrix defect = are_d_defect(A, C, W, V, PhiInv, Y);
  Y += solve_lyapunov(Aobs.transpose(), defect);
  Y = 0.5 * (Y + Y.transpose());
  L = gain(Y);
  Aobs = A + L * C;

  const double res = are_d_defect(A, C, W, V, PhiInv, Y).norm();
  if (res > tol * (1.0 + Y.norm())) {
    throw Error(ErrorCode::NoStableSubspace,
                "dual Riccati residual " + std::to_string(res) +
                    " exceeds tolerance",
                res);
  }
  if (spectral_abscissa(Aobs) >= 0.0) {
    throw Error(ErrorCode::NoStableSubspace,
                "refined gain does not stabilize A + LC");
  }
  return {std::move(Y), std::move(L), res};
}

Matrix solve_sylvester(const Matrix& A, const Matrix& B, const Matrix& C) {
  check_square(A, "A");
  check_square(B, "B");
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.rows();
  if (C.rows() != n || C.cols() != m) {
    throw Error(ErrorCode::DimensionMismatch, "Sylvester operand dimensions");
  }

  Eigen::ComplexSchur<ComplexMatrix> sa(A.cast<Complex>(), true);
  Eigen::ComplexSchur<ComplexMatrix> sb(B.cast<Complex>(), true);
  const ComplexMatrix& TA = sa.matrixT();
  const ComplexMatrix& TB = sb.matrixT();
  const ComplexMatrix& QA = sa.matrixU();
  const ComplexMatrix& QB = sb.matrixU();

  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < m; ++k) {
      const double gap = std::abs(TA(i, i) + TB(k, k));
      if (gap < 1e-12 * (1.0 + std::abs(TA(i, i)) + std::abs(TB(k, k)))) {
        throw Error(ErrorCode::SpectraOverlap,
                    "spec(A) and -spec(B) overlap within tolerance", gap);
      }
    }
  }

  // back substitution in the Schur frame; reused for refinement passes
  auto transformed_solve = [&](const Matrix& rhs) -> Matrix {
    ComplexMatrix Ct = QA.adjoint() * rhs * QB;
    ComplexMatrix Xt = ComplexMatrix::Zero(n, m);
    ComplexMatrix shifted(n, n);
    for (Eigen::Index k = 0; k < m; ++k) {
      Eigen::VectorXcd col = -Ct.col(k);
      if (k > 0) col -= Xt.leftCols(k) * TB.topRows(k).col(k);
      shifted = TA;
      shifted.diagonal().array() += TB(k, k);
      Xt.col(k) = shifted.triangularView<Eigen::Upper>().solve(col);
    }
    return (QA * Xt * QB.adjoint()).real();
  };

  Matrix X = transformed_solve(C);
  // Iterative refinement: the one-shot residual sits at eps*|A|*|X|, which
  // for stiff loops can dwarf |C|.
  double res = (A * X + X * B + C).norm();
  for (int pass = 0; pass < 3 && res > 1e-10 * (1.0 + C.norm()); ++pass) {
    const double prev = res;
    Matrix corr = transformed_solve(A * X + X * B + C);
    X += corr;
    res = (A * X + X * B + C).norm();
    if (res >= prev) break;
  }

  const double floor =
      1e-10 * (1.0 + C.norm() + (A.norm() + B.norm()) * X.norm());
  if (res > floor) {
    throw Error(ErrorCode::SpectraOverlap,
                "Sylvester residual " + std::to_string(res) +
                    " exceeds tolerance (near-overlapping spectra)",
                res);
  }
  return X;
}

Matrix solve_lyapunov(const Matrix& A, const Matrix& Q) {
  check_square(A, "A");
  if (Q.rows() != A.rows() || Q.cols() != A.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "Lyapunov operand dimensions");
  }
  const double alpha = spectral_abscissa(A);
  if (alpha >= 0.0) {
    throw Error(ErrorCode::UnstableA,
                "A has spectral abscissa " + std::to_string(alpha), alpha);
  }
  Matrix Qs = 0.5 * (Q + Q.transpose());
  Matrix X = solve_sylvester(A.transpose(), A, Qs);
  X = 0.5 * (X + X.transpose());
  const double res = (A.transpose() * X + X * A + Qs).norm();
  if (res > 1e-10 * (1.0 + Qs.norm() + 2.0 * A.norm() * X.norm())) {
    throw Error(ErrorCode::UnstableA,
                "Lyapunov residual " + std::to_string(res) +
                    " exceeds tolerance",
                res);
  }
  return X;
}

double h2_norm(const StateSpace& sys) {
  if (sys.D.cwiseAbs().maxCoeff() > 0.0) {
    throw Error(ErrorCode::NonzeroD, "H2 norm requires a strictly proper system");
  }
  const double alpha = spectral_abscissa(sys.A);
  if (alpha >= 0.0) {
    throw Error(ErrorCode::UnstableA,
                "H2 norm requires a Hurwitz state matrix", alpha);
  }
  Matrix P = solve_lyapunov(sys.A.transpose(), sys.B * sys.B.transpose());
  const double v = (sys.C * P * sys.C.transpose()).trace();
  return std::sqrt(std::max(0.0, v));
}

double h2_norm_via_observability(const StateSpace& sys) {
  if (sys.D.cwiseAbs().maxCoeff() > 0.0) {
    throw Error(ErrorCode::NonzeroD, "H2 norm requires a strictly proper system");
  }
  const double alpha = spectral_abscissa(sys.A);
  if (alpha >= 0.0) {
    throw Error(ErrorCode::UnstableA,
                "H2 norm requires a Hurwitz state matrix", alpha);
  }
  Matrix Q = solve_lyapunov(sys.A, sys.C.transpose() * sys.C);
  const double v = (sys.B.transpose() * Q * sys.B).trace();
  return std::sqrt(std::max(0.0, v));
}

ComplexMatrix freq_response(const StateSpace& sys, double omega) {
  ComplexMatrix M = -sys.A.cast<Complex>();
  M.diagonal().array() += Complex(0.0, omega);
  Eigen::FullPivLU<ComplexMatrix> lu(M);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::ResonantFrequency,
                "jw is an eigenvalue of A at w = " + std::to_string(omega),
                omega);
  }
  return sys.C.cast<Complex>() * lu.solve(sys.B.cast<Complex>()) +
         sys.D.cast<Complex>();
}

double spectral_abscissa(const Matrix& A) {
  check_square(A, "A");
  if (A.rows() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<Matrix> es(A, false);
  return es.eigenvalues().real().maxCoeff();
}

Matrix assemble_linear_operator(
    const std::function<Vector(const Vector&)>& apply, Eigen::Index dim_in,
    Eigen::Index dim_out) {
  if (dim_in < 0 || dim_out < 0) {
    throw Error(ErrorCode::DimensionMismatch, "operator dimensions negative");
  }
  Matrix M(dim_out, dim_in);
  Vector e = Vector::Zero(dim_in);
  for (Eigen::Index k = 0; k < dim_in; ++k) {
    e(k) = 1.0;
    Vector col = apply(e);
    if (col.size() != dim_out) {
      throw Error(ErrorCode::DimensionMismatch,
                  "apply returned length " + std::to_string(col.size()) +
                      ", expected " + std::to_string(dim_out));
    }
    M.col(k) = col;
    e(k) = 0.0;
  }
  return M;
}

Matrix sym_sqrt(const Matrix& S) {
  check_square(S, "S");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (S + S.transpose()));
  Vector w = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
}

SymRootPair sym_sqrt_pair(const Matrix& S, ErrorCode on_singular) {
  check_square(S, "S");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (S + S.transpose()));
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo <= kSingularFloor * std::max(1.0, hi)) {
    throw Error(on_singular,
                "matrix square root of a numerically singular factor", lo);
  }
  Vector w = es.eigenvalues().cwiseSqrt();
  SymRootPair out;
  out.root = es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
  out.inverse_root = es.eigenvectors() * w.cwiseInverse().asDiagonal() *
                     es.eigenvectors().transpose();
  return out;
}

std::vector<double> frequency_grid(double lo, double hi, int count,
                                   bool include_zero) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) {
    throw Error(ErrorCode::DimensionMismatch, "bad frequency grid parameters");
  }
  std::vector<double> ws;
  if (include_zero) ws.push_back(0.0);
  if (count == 1) {
    ws.push_back(lo);
    return ws;
  }
  const double step = std::log(hi / lo) / (count - 1);
  for (int k = 0; k < count; ++k) ws.push_back(lo * std::exp(step * k));
  return ws;
}

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SingularPsi: return "SingularPsi";
    case ErrorCode::SingularPhi: return "SingularPhi";
    case ErrorCode::ImaginaryAxisEigs: return "ImaginaryAxisEigs";
    case ErrorCode::NoStableSubspace: return "NoStableSubspace";
    case ErrorCode::UnstableA: return "UnstableA";
    case ErrorCode::NonzeroD: return "NonzeroD";
    case ErrorCode::SpectraOverlap: return "SpectraOverlap";
    case ErrorCode::ResonantFrequency: return "ResonantFrequency";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::IndexOutOfBounds: return "IndexOutOfBounds";
    case ErrorCode::SingularStep2System: return "SingularStep2System";
    case ErrorCode::UnstableDiagonalBlock: return "UnstableDiagonalBlock";
    case ErrorCode::PSDViolation: return "PSDViolation";
    case ErrorCode::UnstableClosedLoop: return "UnstableClosedLoop";
    case ErrorCode::SingularPsiBlock: return "SingularPsiBlock";
    case ErrorCode::SingularPhiBlock: return "SingularPhiBlock";
    case ErrorCode::IndexOutOfDiagram: return "IndexOutOfDiagram";
    case ErrorCode::UnstableFactor: return "UnstableFactor";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::StructureError: return "StructureError";
  }
  return "UnknownError";
}

}  // namespace trilqg
