#include "trilqg/coupled_riccati.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <numeric>

namespace trilqg {

namespace {

// Block shorthands.  Names follow the arrow notation: `dd` selects rows and
// columns of blocks i..N, `uu` blocks 1..i, mixed forms accordingly.
struct Blocks {
  const TriangularPlant& P;

  Matrix A_dd(int i) const {
    return sub(P.A, range_down(P.np, i), range_down(P.np, i));
  }
  Matrix A_uu(int i) const {
    return sub(P.A, range_up(P.np, i), range_up(P.np, i));
  }
  Matrix A_du(int i, int j) const {  // rows i..N, cols 1..j
    return sub(P.A, range_down(P.np, i), range_up(P.np, j));
  }
  Matrix B_dd(int i) const {
    return sub(P.B, range_down(P.np, i), range_down(P.mp, i));
  }
  Matrix B_cols_down(int i) const {  // B E^{down i}
    return sub(P.B, {0, P.np.total()}, range_down(P.mp, i));
  }
  Matrix C_uu(int i) const {
    return sub(P.C, range_up(P.pp, i), range_up(P.np, i));
  }
  Matrix C_rows_up(int i) const {  // E_{up i} C
    return sub(P.C, range_up(P.pp, i), {0, P.np.total()});
  }
  Matrix H_cols_down(int i) const {
    return sub(P.H, {0, P.H.rows()}, range_down(P.mp, i));
  }
  Matrix V_rows_up(int i) const {
    return sub(P.V, range_up(P.pp, i), {0, P.V.cols()});
  }
  Matrix Psi_dd(int i, int j) const {
    Matrix Psi = P.psi();
    return sub(Psi, range_down(P.mp, i), range_down(P.mp, j));
  }
  Matrix Phi_uu(int i, int j) const {
    Matrix Phi = P.phi();
    return sub(Phi, range_up(P.pp, i), range_up(P.pp, j));
  }
};

// K_j E^{up j}: for j = 1 the leading block column of the hat gain, else
// [Kbar_j, first block column of Khat_j].
Matrix row_k_upto(const TriangularPlant& P, const HatParts& hats,
                  const BarParts& bars, int j) {
  const Matrix& Khat = hats.K[j];
  Matrix head = Khat.leftCols(P.np.size(j));
  if (j == 1) return head;
  Matrix out(head.rows(), bars.K[j].cols() + head.cols());
  out << bars.K[j], head;
  return out;
}

// E_{down j} L_j: for j = N the trailing block row of the hat gain, else
// [trailing block row of Lhat_j; Lbar_j].
Matrix col_l_from(const TriangularPlant& P, const HatParts& hats,
                  const BarParts& bars, int j) {
  const int N = P.players();
  const Matrix& Lhat = hats.L[j];
  Matrix tail = Lhat.bottomRows(P.np.size(j));
  if (j == N) return tail;
  Matrix out(tail.rows() + bars.L[j].rows(), tail.cols());
  out << tail, bars.L[j];
  return out;
}

Matrix a_hat_k(const Blocks& b, const HatParts& hats, int i) {
  return b.A_dd(i) + b.B_dd(i) * hats.K[i];
}

Matrix a_hat_l(const Blocks& b, const HatParts& hats, int i) {
  return b.A_uu(i) + hats.L[i] * b.C_uu(i);
}

Matrix a_bar_l(const Blocks& b, const BarParts& bars, int i) {
  return b.A_du(i + 1, i) + bars.L[i] * b.C_uu(i);
}

Matrix a_bar_k(const Blocks& b, const BarParts& bars, int i) {
  return b.A_du(i, i - 1) + b.B_dd(i) * bars.K[i];
}

struct BarShape {
  char kind;  // 'K', 'X', 'L', 'Y'
  int index;
  Eigen::Index rows, cols;
};

std::vector<BarShape> bar_shapes(const TriangularPlant& P) {
  const int N = P.players();
  std::vector<BarShape> shapes;
  for (int i = 2; i <= N; ++i) {
    shapes.push_back({'K', i, range_down(P.mp, i).length(),
                      range_up(P.np, i - 1).length()});
    shapes.push_back({'X', i, range_up(P.np, i - 1).length(),
                      range_down(P.np, i).length()});
  }
  for (int i = 1; i <= N - 1; ++i) {
    shapes.push_back({'L', i, range_down(P.np, i + 1).length(),
                      range_up(P.pp, i).length()});
    shapes.push_back({'Y', i, range_up(P.np, i).length(),
                      range_down(P.np, i + 1).length()});
  }
  return shapes;
}

void unpack_bars(const std::vector<BarShape>& shapes, const Vector& v,
                 const TriangularPlant& P, BarParts& bars) {
  const int N = P.players();
  bars.K.assign(N + 1, Matrix());
  bars.X.assign(N + 1, Matrix());
  bars.L.assign(N + 1, Matrix());
  bars.Y.assign(N + 1, Matrix());
  Eigen::Index pos = 0;
  for (const BarShape& s : shapes) {
    Matrix M(s.rows, s.cols);
    for (Eigen::Index c = 0; c < s.cols; ++c) {
      M.col(c) = v.segment(pos + c * s.rows, s.rows);
    }
    pos += s.rows * s.cols;
    switch (s.kind) {
      case 'K': bars.K[s.index] = std::move(M); break;
      case 'X': bars.X[s.index] = std::move(M); break;
      case 'L': bars.L[s.index] = std::move(M); break;
      case 'Y': bars.Y[s.index] = std::move(M); break;
    }
  }
}

// Residuals of the four linear-equation families, stacked column-major in
// the fixed order (a_2, c_2, ..., a_N, c_N, b_1, d_1, ..., b_{N-1}, d_{N-1}).
Vector step2_equations(const TriangularPlant& P, const HatParts& hats,
                       const BarParts& bars) {
  const int N = P.players();
  Blocks b{P};
  std::vector<Matrix> eqs;
  for (int i = 2; i <= N; ++i) {
    Matrix rowK = row_k_upto(P, hats, bars, i - 1);
    Matrix Khat_b_prev = hats.K[i - 1].rightCols(hats.K[i - 1].cols() -
                                                 P.np.size(i - 1));
    // gain coupling rows 1..i-1
    eqs.push_back(bars.K[i].transpose() * b.Psi_dd(i, i) +
                  bars.X[i] * b.B_dd(i) -
                  rowK.transpose() * b.Psi_dd(i - 1, i));
    // Riccati off-diagonal block
    eqs.push_back(a_hat_l(b, hats, i - 1).transpose() * bars.X[i] +
                  bars.X[i] * a_hat_k(b, hats, i) +
                  a_bar_l(b, bars, i - 1).transpose() * hats.X[i] +
                  rowK.transpose() *
                      (b.Psi_dd(i - 1, i - 1) * Khat_b_prev -
                       b.Psi_dd(i - 1, i) * hats.K[i]));
  }
  for (int i = 1; i <= N - 1; ++i) {
    Matrix colL = col_l_from(P, hats, bars, i + 1);
    Matrix Lhat_b_next = hats.L[i + 1].topRows(range_up(P.np, i).length());
    eqs.push_back(b.Phi_uu(i, i) * bars.L[i].transpose() +
                  b.C_uu(i) * bars.Y[i] -
                  b.Phi_uu(i, i + 1) * colL.transpose());
    eqs.push_back(a_hat_l(b, hats, i) * bars.Y[i] +
                  bars.Y[i] * a_hat_k(b, hats, i + 1).transpose() +
                  hats.Y[i] * a_bar_k(b, bars, i + 1).transpose() +
                  (Lhat_b_next * b.Phi_uu(i + 1, i + 1) -
                   hats.L[i] * b.Phi_uu(i, i + 1)) *
                      colL.transpose());
  }
  Eigen::Index total = 0;
  for (const Matrix& e : eqs) total += e.size();
  Vector out(total);
  Eigen::Index pos = 0;
  for (const Matrix& e : eqs) {
    for (Eigen::Index c = 0; c < e.cols(); ++c) {
      out.segment(pos + c * e.rows(), e.rows()) = e.col(c);
    }
    pos += e.size();
  }
  return out;
}

double one_norm(const Matrix& M) {
  return M.cwiseAbs().colwise().sum().maxCoeff();
}

// Hager/Higham 1-norm estimate of ||M^{-1}||_1 through LU solves.
double inverse_one_norm_estimate(const Eigen::PartialPivLU<Matrix>& lu,
                                 const Eigen::PartialPivLU<Matrix>& luT,
                                 Eigen::Index n) {
  Vector x = Vector::Constant(n, 1.0 / static_cast<double>(n));
  double est = 0.0;
  for (int iter = 0; iter < 5; ++iter) {
    Vector y = lu.solve(x);
    est = y.cwiseAbs().sum();
    Vector xi = y.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
    Vector z = luT.solve(xi);
    Eigen::Index jmax;
    const double zmax = z.cwiseAbs().maxCoeff(&jmax);
    if (zmax <= z.dot(x)) break;
    x.setZero();
    x(jmax) = 1.0;
  }
  return est;
}

void check_gain_set_sizes(const TriangularPlant& P, const GainSet& g) {
  const int N = P.players();
  if (static_cast<int>(g.X.size()) != N + 1 ||
      static_cast<int>(g.K.size()) != N + 1 ||
      static_cast<int>(g.Y.size()) != N + 1 ||
      static_cast<int>(g.L.size()) != N + 1) {
    throw Error(ErrorCode::DimensionMismatch, "gain set has wrong arity");
  }
}

EquationResidual make_residual(const std::string& name,
                               const std::vector<Matrix>& terms) {
  Matrix sum = terms.front();
  double scale = 1.0 + terms.front().norm();
  for (size_t k = 1; k < terms.size(); ++k) {
    sum += terms[k];
    scale += terms[k].norm();
  }
  const double abs = sum.norm();
  return {name, abs, abs / scale};
}

}  // namespace

double StepReport::max_relative_residual() const {
  double worst = 0.0;
  for (const EquationResidual& e : equations) worst = std::max(worst, e.relative);
  return worst;
}

double StepReport::worst_stability_margin() const {
  double worst = -std::numeric_limits<double>::infinity();
  for (double m : stability_margins) worst = std::max(worst, m);
  return worst;
}

double StepReport::worst_psd_floor() const {
  double worst = std::numeric_limits<double>::infinity();
  for (double m : psd_floors) worst = std::min(worst, m);
  return worst;
}

HatParts step1_sequential(const TriangularPlant& P, double are_tol) {
  const int N = P.players();
  Blocks b{P};
  HatParts hats;
  hats.X.assign(N + 1, Matrix());
  hats.K.assign(N + 1, Matrix());
  hats.Y.assign(N + 1, Matrix());
  hats.L.assign(N + 1, Matrix());

  // Control side, ascending: stage i consumes the trailing block columns of
  // the previous stage's gain.
  try {
    ArePrimalSolution s = solve_are_p(P.A, P.B, P.F, P.H, are_tol);
    hats.X[1] = std::move(s.X);
    hats.K[1] = std::move(s.K);
  } catch (const Error& e) {
    throw Error(e.code(), std::string("step1 primal stage 1: ") + e.what(),
                e.detail());
  }
  for (int i = 2; i <= N; ++i) {
    Matrix Khat_b_prev =
        hats.K[i - 1].rightCols(hats.K[i - 1].cols() - P.np.size(i - 1));
    Matrix Fi = -b.H_cols_down(i - 1) * Khat_b_prev;
    try {
      ArePrimalSolution s =
          solve_are_p(b.A_dd(i), b.B_dd(i), Fi, b.H_cols_down(i), are_tol);
      hats.X[i] = std::move(s.X);
      hats.K[i] = std::move(s.K);
    } catch (const Error& e) {
      throw Error(e.code(),
                  "step1 primal stage " + std::to_string(i) + ": " + e.what(),
                  e.detail());
    }
  }

  // Estimation side, descending.
  try {
    AreDualSolution s = solve_are_d(P.A, P.C, P.W, P.V, are_tol);
    hats.Y[N] = std::move(s.Y);
    hats.L[N] = std::move(s.L);
  } catch (const Error& e) {
    throw Error(e.code(),
                "step1 dual stage " + std::to_string(N) + ": " + e.what(),
                e.detail());
  }
  for (int i = N - 1; i >= 1; --i) {
    Matrix Lhat_b_next = hats.L[i + 1].topRows(range_up(P.np, i).length());
    Matrix Wi = -Lhat_b_next * b.V_rows_up(i + 1);
    try {
      AreDualSolution s =
          solve_are_d(b.A_uu(i), b.C_uu(i), Wi, b.V_rows_up(i), are_tol);
      hats.Y[i] = std::move(s.Y);
      hats.L[i] = std::move(s.L);
    } catch (const Error& e) {
      throw Error(e.code(),
                  "step1 dual stage " + std::to_string(i) + ": " + e.what(),
                  e.detail());
    }
  }
  return hats;
}

namespace detail {

Matrix step2_operator(const TriangularPlant& P, const HatParts& hats) {
  const std::vector<BarShape> shapes = bar_shapes(P);
  Eigen::Index total = 0;
  for (const BarShape& s : shapes) total += s.rows * s.cols;
  if (total == 0) return Matrix();
  BarParts probe;
  auto residual_at = [&](const Vector& v) {
    unpack_bars(shapes, v, P, probe);
    return step2_equations(P, hats, probe);
  };
  const Vector r0 = residual_at(Vector::Zero(total));
  return assemble_linear_operator(
      [&](const Vector& v) -> Vector { return residual_at(v) - r0; }, total,
      total);
}

DenseSolve solve_with_condition(const Matrix& M, const Vector& rhs,
                                double cond_limit) {
  if (M.rows() != M.cols() || M.rows() != rhs.size()) {
    throw Error(ErrorCode::DimensionMismatch, "step-2 system not square");
  }
  Eigen::PartialPivLU<Matrix> lu(M);
  Eigen::PartialPivLU<Matrix> luT(M.transpose());
  const double cond =
      one_norm(M) * inverse_one_norm_estimate(lu, luT, M.rows());
  if (!std::isfinite(cond) || cond > cond_limit) {
    throw Error(ErrorCode::SingularStep2System,
                "condition estimate " + std::to_string(cond) +
                    " exceeds limit " + std::to_string(cond_limit),
                cond);
  }
  Vector x = lu.solve(rhs);
  x += lu.solve(rhs - M * x);  // one refinement pass
  return {std::move(x), cond};
}

}  // namespace detail

BarParts step2_linear(const TriangularPlant& P, const HatParts& hats,
                      double cond_limit, double lin_tol) {
  const int N = P.players();
  BarParts bars;
  bars.K.assign(N + 1, Matrix());
  bars.X.assign(N + 1, Matrix());
  bars.L.assign(N + 1, Matrix());
  bars.Y.assign(N + 1, Matrix());
  const std::vector<BarShape> shapes = bar_shapes(P);
  Eigen::Index total = 0;
  for (const BarShape& s : shapes) total += s.rows * s.cols;
  if (total == 0) return bars;  // N = 1: no coupling unknowns

  BarParts probe;
  auto residual_at = [&](const Vector& v) {
    unpack_bars(shapes, v, P, probe);
    return step2_equations(P, hats, probe);
  };
  const Vector r0 = residual_at(Vector::Zero(total));
  Matrix M = detail::step2_operator(P, hats);

  detail::DenseSolve sol = detail::solve_with_condition(M, -r0, cond_limit);
  unpack_bars(shapes, sol.x, P, bars);
  bars.condition_estimate = sol.condition;

  const double res = residual_at(sol.x).norm();
  if (res > lin_tol * (1.0 + r0.norm())) {
    throw Error(ErrorCode::SingularStep2System,
                "coupling-system residual " + std::to_string(res) +
                    " survives refinement (condition " +
                    std::to_string(sol.condition) + ")",
                sol.condition);
  }
  return bars;
}

CheckParts step3_lyapunov(const TriangularPlant& P, const HatParts& hats,
                          const BarParts& bars) {
  const int N = P.players();
  Blocks b{P};
  CheckParts checks;
  checks.X.assign(N + 1, Matrix());
  checks.Y.assign(N + 1, Matrix());

  for (int i = 2; i <= N; ++i) {
    Matrix rowK = row_k_upto(P, hats, bars, i - 1);
    Matrix AbarL = a_bar_l(b, bars, i - 1);
    Matrix Q = AbarL.transpose() * bars.X[i].transpose() +
               bars.X[i] * AbarL -
               bars.K[i].transpose() * b.Psi_dd(i, i) * bars.K[i] +
               rowK.transpose() * b.Psi_dd(i - 1, i - 1) * rowK;
    Matrix Ah = a_hat_l(b, hats, i - 1);
    if (spectral_abscissa(Ah) >= 0.0) {
      throw Error(ErrorCode::UnstableDiagonalBlock,
                  "A_hat_L at stage " + std::to_string(i - 1) +
                      " is not Hurwitz");
    }
    checks.X[i] = solve_lyapunov(Ah, 0.5 * (Q + Q.transpose()));
  }
  for (int i = 1; i <= N - 1; ++i) {
    Matrix colL = col_l_from(P, hats, bars, i + 1);
    Matrix AbarK = a_bar_k(b, bars, i + 1);
    Matrix Q = AbarK * bars.Y[i] + bars.Y[i].transpose() * AbarK.transpose() -
               bars.L[i] * b.Phi_uu(i, i) * bars.L[i].transpose() +
               colL * b.Phi_uu(i + 1, i + 1) * colL.transpose();
    Matrix Ah = a_hat_k(b, hats, i + 1);
    if (spectral_abscissa(Ah) >= 0.0) {
      throw Error(ErrorCode::UnstableDiagonalBlock,
                  "A_hat_K at stage " + std::to_string(i + 1) +
                      " is not Hurwitz");
    }
    checks.Y[i] = solve_lyapunov(Ah.transpose(), 0.5 * (Q + Q.transpose()));
  }
  return checks;
}

GainSet assemble_gains(const TriangularPlant& P, const HatParts& hats,
                       const BarParts& bars, const CheckParts& checks) {
  const int N = P.players();
  GainSet g;
  g.X.assign(N + 1, Matrix());
  g.K.assign(N + 1, Matrix());
  g.Y.assign(N + 1, Matrix());
  g.L.assign(N + 1, Matrix());

  g.X[1] = hats.X[1];
  g.K[1] = hats.K[1];
  g.Y[N] = hats.Y[N];
  g.L[N] = hats.L[N];
  for (int i = 2; i <= N; ++i) {
    const Eigen::Index u = bars.X[i].rows();
    const Eigen::Index d = bars.X[i].cols();
    Matrix X(u + d, u + d);
    X.topLeftCorner(u, u) = checks.X[i];
    X.topRightCorner(u, d) = bars.X[i];
    X.bottomLeftCorner(d, u) = bars.X[i].transpose();
    X.bottomRightCorner(d, d) = hats.X[i];
    g.X[i] = 0.5 * (X + X.transpose());
    Matrix K(hats.K[i].rows(), bars.K[i].cols() + hats.K[i].cols());
    K << bars.K[i], hats.K[i];
    g.K[i] = std::move(K);
  }
  for (int i = 1; i <= N - 1; ++i) {
    const Eigen::Index u = bars.Y[i].rows();
    const Eigen::Index d = bars.Y[i].cols();
    Matrix Y(u + d, u + d);
    Y.topLeftCorner(u, u) = hats.Y[i];
    Y.topRightCorner(u, d) = bars.Y[i];
    Y.bottomLeftCorner(d, u) = bars.Y[i].transpose();
    Y.bottomRightCorner(d, d) = checks.Y[i];
    g.Y[i] = 0.5 * (Y + Y.transpose());
    Matrix L(hats.L[i].rows() + bars.L[i].rows(), hats.L[i].cols());
    L << hats.L[i], bars.L[i];
    g.L[i] = std::move(L);
  }

  for (int i = 1; i <= N; ++i) {
    for (const auto& [M, tag] :
         {std::pair<const Matrix*, const char*>{&g.X[i], "X"},
          std::pair<const Matrix*, const char*>{&g.Y[i], "Y"}}) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(*M, Eigen::EigenvaluesOnly);
      const double floor = -1e-8 * (1.0 + M->norm());
      const double lo = es.eigenvalues().minCoeff();
      if (lo < floor) {
        throw Error(ErrorCode::PSDViolation,
                    std::string(tag) + "_" + std::to_string(i) +
                        " has eigenvalue " + std::to_string(lo),
                    lo);
      }
    }
  }
  return g;
}

Matrix a_kl(const TriangularPlant& P, const GainSet& g, int i) {
  const int N = P.players();
  if (i < 1 || i > N + 1) {
    throw Error(ErrorCode::IndexOutOfBounds,
                "A^KL index " + std::to_string(i) + " outside 1.." +
                    std::to_string(N + 1));
  }
  if (i == 1) return P.A + P.B * g.K[1];
  if (i == N + 1) return P.A + g.L[N] * P.C;
  Blocks b{P};
  return P.A + b.B_cols_down(i) * g.K[i] + g.L[i - 1] * b.C_rows_up(i - 1);
}

StepReport residuals(const TriangularPlant& P, const GainSet& g) {
  const int N = P.players();
  check_gain_set_sizes(P, g);
  Blocks b{P};
  StepReport rep;

  {
    // Boundary equations written through the gains so that a perturbed K_1
    // or L_N shows up in the report (the closed-loop Lyapunov form plus the
    // gain equation, jointly equivalent to the boundary AREs).
    Matrix Acl = P.A + P.B * g.K[1];
    Matrix Fcl = P.F + P.H * g.K[1];
    rep.equations.push_back(make_residual(
        "are_2a", {Acl.transpose() * g.X[1], g.X[1] * Acl,
                   Fcl.transpose() * Fcl}));
    rep.equations.push_back(make_residual(
        "gain_2a", {g.K[1].transpose() * P.psi(), g.X[1] * P.B,
                    P.F.transpose() * P.H}));
    Matrix Aob = P.A + g.L[N] * P.C;
    Matrix Wob = P.W + g.L[N] * P.V;
    rep.equations.push_back(make_residual(
        "are_2c", {Aob * g.Y[N], g.Y[N] * Aob.transpose(),
                   Wob * Wob.transpose()}));
    rep.equations.push_back(make_residual(
        "gain_2c", {P.phi() * g.L[N].transpose(), P.C * g.Y[N],
                    P.V * P.W.transpose()}));
  }

  for (int i = 2; i <= N; ++i) {
    Matrix Akl = a_kl(P, g, i);
    Matrix D = b.H_cols_down(i) * g.K[i] - b.H_cols_down(i - 1) * g.K[i - 1];
    rep.equations.push_back(make_residual(
        "riccati_11a_" + std::to_string(i),
        {Akl.transpose() * g.X[i], g.X[i] * Akl, D.transpose() * D}));
    rep.equations.push_back(make_residual(
        "gain_11b_" + std::to_string(i),
        {g.K[i].transpose() * b.Psi_dd(i, i), g.X[i] * b.B_cols_down(i),
         Matrix(-g.K[i - 1].transpose() * b.Psi_dd(i - 1, i))}));
  }
  for (int i = 1; i <= N - 1; ++i) {
    Matrix Akl = a_kl(P, g, i + 1);
    Matrix D = g.L[i] * b.V_rows_up(i) - g.L[i + 1] * b.V_rows_up(i + 1);
    rep.equations.push_back(make_residual(
        "riccati_12a_" + std::to_string(i),
        {Akl * g.Y[i], g.Y[i] * Akl.transpose(), D * D.transpose()}));
    rep.equations.push_back(make_residual(
        "gain_12b_" + std::to_string(i),
        {b.Phi_uu(i, i) * g.L[i].transpose(), b.C_rows_up(i) * g.Y[i],
         Matrix(-b.Phi_uu(i, i + 1) * g.L[i + 1].transpose())}));
  }

  for (int i = 1; i <= N + 1; ++i) {
    rep.stability_margins.push_back(spectral_abscissa(a_kl(P, g, i)));
  }
  for (int i = 1; i <= N; ++i) {
    rep.psd_floors.push_back(
        Eigen::SelfAdjointEigenSolver<Matrix>(g.X[i], Eigen::EigenvaluesOnly)
            .eigenvalues()
            .minCoeff());
  }
  for (int i = 1; i <= N; ++i) {
    rep.psd_floors.push_back(
        Eigen::SelfAdjointEigenSolver<Matrix>(g.Y[i], Eigen::EigenvaluesOnly)
            .eigenvalues()
            .minCoeff());
  }
  return rep;
}

SolveResult solve_coupled(const TriangularPlant& P, double are_tol,
                          double lin_tol, double cond_limit) {
  HatParts hats = step1_sequential(P, are_tol);
  BarParts bars = step2_linear(P, hats, cond_limit, lin_tol);
  CheckParts checks = step3_lyapunov(P, hats, bars);
  SolveResult out{assemble_gains(P, hats, bars, checks), {}};
  out.report = residuals(P, out.gains);
  out.report.step2_condition = bars.condition_estimate;
  return out;
}

}  // namespace trilqg
