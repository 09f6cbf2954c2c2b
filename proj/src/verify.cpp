#include "trilqg/verify.hpp"

#include <random>

namespace trilqg {

namespace {

Matrix psi_dd(const TriangularPlant& P, int i, int j) {
  Matrix Psi = P.psi();
  return sub(Psi, range_down(P.mp, i), range_down(P.mp, j));
}

Matrix phi_uu(const TriangularPlant& P, int i, int j) {
  Matrix Phi = P.phi();
  return sub(Phi, range_up(P.pp, i), range_up(P.pp, j));
}

ClosedLoop nominal_loop(const TriangularPlant& P, const GainSet& g) {
  return closed_loop(P, build_controller(P, g));
}

// C_{U_i} rows: F + H K_1 for the head factor, otherwise the scaled gain
// difference over input blocks i-1..N.
Matrix factor_c_u(const TriangularPlant& P, const GainSet& g, int i) {
  if (i == 1) return P.F + P.H * g.K[1];
  const Eigen::Index n = P.np.total();
  const Eigen::Index m = P.mp.total();
  Matrix diff = Matrix::Zero(m, n);
  BlockRange mi = range_down(P.mp, i);
  diff.middleRows(mi.start, mi.length()) += g.K[i];
  BlockRange mi1 = range_down(P.mp, i - 1);
  Matrix taken = diff.middleRows(mi1.start, mi1.length());
  taken -= g.K[i - 1];
  return sym_sqrt(psi_dd(P, i - 1, i - 1)) * taken;
}

// B_{V_j} columns: W + L_N V for the tail factor, otherwise the scaled gain
// difference over output blocks 1..j+1.
Matrix factor_b_v(const TriangularPlant& P, const GainSet& g, int j) {
  const int N = P.players();
  if (j == N) return P.W + g.L[N] * P.V;
  const Eigen::Index n = P.np.total();
  const Eigen::Index p = P.pp.total();
  Matrix diff = Matrix::Zero(n, p);
  BlockRange pj = range_up(P.pp, j);
  diff.middleCols(pj.start, pj.length()) += g.L[j];
  BlockRange pj1 = range_up(P.pp, j + 1);
  Matrix taken = diff.middleCols(pj1.start, pj1.length());
  taken -= g.L[j + 1];
  return taken * sym_sqrt(phi_uu(P, j + 1, j + 1));
}

Matrix gamma_row(const TriangularPlant& P, const GainSet& g,
                 const ClosedLoop& cl, int i) {
  if (i == 0) return cl.F;
  return -sym_sqrt(psi_dd(P, i, i)) * cal_k(P, g, i);
}

Matrix lambda_col(const TriangularPlant& P, const GainSet& g,
                  const ClosedLoop& cl, int j) {
  if (j == P.players() + 1) return cl.W;
  return -cal_l(P, g, j) * sym_sqrt(phi_uu(P, j, j));
}

// Interconnections used by the perturbation probe.
StateSpace series(const StateSpace& g2, const StateSpace& g1) {
  const Eigen::Index n1 = g1.states(), n2 = g2.states();
  Matrix A = Matrix::Zero(n1 + n2, n1 + n2);
  A.topLeftCorner(n1, n1) = g1.A;
  A.bottomLeftCorner(n2, n1) = g2.B * g1.C;
  A.bottomRightCorner(n2, n2) = g2.A;
  Matrix B(n1 + n2, g1.inputs());
  B << g1.B, g2.B * g1.D;
  Matrix C(g2.outputs(), n1 + n2);
  C << g2.D * g1.C, g2.C;
  return StateSpace(std::move(A), std::move(B), std::move(C),
                    Matrix(g2.D * g1.D));
}

StateSpace add(const StateSpace& g1, const StateSpace& g2) {
  const Eigen::Index n1 = g1.states(), n2 = g2.states();
  Matrix A = Matrix::Zero(n1 + n2, n1 + n2);
  A.topLeftCorner(n1, n1) = g1.A;
  A.bottomRightCorner(n2, n2) = g2.A;
  Matrix B(n1 + n2, g1.inputs());
  B << g1.B, g2.B;
  Matrix C(g1.outputs(), n1 + n2);
  C << g1.C, g2.C;
  return StateSpace(std::move(A), std::move(B), std::move(C),
                    Matrix(g1.D + g2.D));
}

// K' = -(I - Q G22)^{-1} Q, i.e. u = Q(G22 u - y).  Well-posed because both
// Q and G22 are strictly proper here.
StateSpace youla_to_controller(const StateSpace& Q, const StateSpace& g22) {
  const Eigen::Index nq = Q.states(), n2 = g22.states();
  Matrix A = Matrix::Zero(n2 + nq, n2 + nq);
  A.topLeftCorner(n2, n2) = g22.A;
  A.topRightCorner(n2, nq) = g22.B * Q.C;
  A.bottomLeftCorner(nq, n2) = Q.B * g22.C;
  A.bottomRightCorner(nq, nq) = Q.A;
  Matrix B = Matrix::Zero(n2 + nq, g22.outputs());
  B.bottomRows(nq) = -Q.B;
  Matrix C(Q.outputs(), n2 + nq);
  C << Matrix::Zero(Q.outputs(), n2), Q.C;
  return StateSpace(std::move(A), std::move(B), std::move(C),
                    Matrix::Zero(Q.outputs(), g22.outputs()));
}

// T = K'(I - G22 K')^{-1}, the map e -> u of the feedback loop.
StateSpace feedback_map(const StateSpace& kp, const StateSpace& g22) {
  const Eigen::Index nk = kp.states(), n2 = g22.states();
  Matrix A = Matrix::Zero(nk + n2, nk + n2);
  A.topLeftCorner(nk, nk) = kp.A;
  A.topRightCorner(nk, n2) = kp.B * g22.C;
  A.bottomLeftCorner(n2, nk) = g22.B * kp.C;
  A.bottomRightCorner(n2, n2) = g22.A;
  Matrix B(nk + n2, kp.inputs());
  B << kp.B, Matrix::Zero(n2, kp.inputs());
  Matrix C(kp.outputs(), nk + n2);
  C << kp.C, Matrix::Zero(kp.outputs(), n2);
  return StateSpace(std::move(A), std::move(B), std::move(C),
                    Matrix::Zero(kp.outputs(), kp.inputs()));
}

}  // namespace

Matrix cal_k(const TriangularPlant& P, const GainSet& g, int i) {
  const int N = P.players();
  if (i < 1 || i > N) {
    throw Error(ErrorCode::IndexOutOfBounds, "cal_k index");
  }
  const Eigen::Index n = P.np.total();
  const Eigen::Index m = P.mp.total();
  Matrix row = Matrix::Zero(m, n * (N + 1));
  for (int k = i; k <= N; ++k) {
    Matrix blk = Matrix::Zero(m, n);
    if (k + 1 <= N) {
      BlockRange r = range_down(P.mp, k + 1);
      blk.middleRows(r.start, r.length()) += g.K[k + 1];
    }
    BlockRange r = range_down(P.mp, k);
    blk.middleRows(r.start, r.length()) -= g.K[k];
    row.middleCols((k - 1) * n, n) = blk;
  }
  {
    Matrix blk = Matrix::Zero(m, n);
    BlockRange r = range_down(P.mp, i);
    blk.middleRows(r.start, r.length()) = g.K[i];
    row.middleCols(N * n, n) = blk;
  }
  BlockRange rows = range_down(P.mp, i);
  return row.middleRows(rows.start, rows.length());
}

Matrix cal_l(const TriangularPlant& P, const GainSet& g, int j) {
  const int N = P.players();
  if (j < 1 || j > N) {
    throw Error(ErrorCode::IndexOutOfBounds, "cal_l index");
  }
  const Eigen::Index n = P.np.total();
  const Eigen::Index p = P.pp.total();
  Matrix col = Matrix::Zero(n * (N + 1), p);
  for (int k = 1; k <= N + 1; ++k) {
    const int use = k < j ? k : j;
    BlockRange c = range_up(P.pp, use);
    col.block((k - 1) * n, c.start, n, c.length()) = g.L[use];
  }
  BlockRange cols = range_up(P.pp, j);
  return col.middleCols(cols.start, cols.length());
}

Matrix j_tilde(const TriangularPlant& P, int i) {
  const int N = P.players();
  if (i < 1 || i > N) {
    throw Error(ErrorCode::IndexOutOfBounds, "j_tilde index");
  }
  const Eigen::Index n = P.np.total();
  Matrix J = Matrix::Zero(n, n * (N + 1));
  if (i >= 2) J.middleCols((i - 2) * n, n) = Matrix::Identity(n, n);
  J.middleCols(N * n, n) = -Matrix::Identity(n, n);
  return J;
}

Matrix j_hat(const TriangularPlant& P, int j) {
  const int N = P.players();
  if (j < 1 || j > N) {
    throw Error(ErrorCode::IndexOutOfBounds, "j_hat index");
  }
  const Eigen::Index n = P.np.total();
  Matrix J = Matrix::Zero(n * (N + 1), n);
  for (int k = j + 1; k <= N + 1; ++k) {
    J.middleRows((k - 1) * n, n) = Matrix::Identity(n, n);
  }
  return J;
}

StructuredSelectors structured_selectors(const TriangularPlant& P,
                                         const GainSet& g, int i, int j) {
  return {cal_k(P, g, i), cal_l(P, g, j), j_tilde(P, i), j_hat(P, j)};
}

FactorSet build_factors(const TriangularPlant& P, const GainSet& g) {
  return build_factors(P, g, nominal_loop(P, g));
}

FactorSet build_factors(const TriangularPlant& P, const GainSet& g,
                        const ClosedLoop& cl) {
  const int N = P.players();
  const Eigen::Index m = P.mp.total();
  const Eigen::Index p = P.pp.total();
  FactorSet fs;
  fs.U.assign(N + 1, StateSpace());
  fs.Minv.assign(N + 1, StateSpace());
  fs.V.assign(N + 1, StateSpace());
  fs.Ninv.assign(N + 1, StateSpace());

  for (int i = 1; i <= N; ++i) {
    SymRootPair psi =
        sym_sqrt_pair(psi_dd(P, i, i), ErrorCode::SingularPsiBlock);
    Matrix Akl = a_kl(P, g, i);
    Matrix BU =
        sub(P.B, {0, P.np.total()}, range_down(P.mp, i)) * psi.inverse_root;
    Matrix CU = factor_c_u(P, g, i);
    Matrix DU;
    if (i == 1) {
      DU = P.H * sym_sqrt_pair(P.psi(), ErrorCode::SingularPsiBlock)
                     .inverse_root;
    } else {
      SymRootPair prev =
          sym_sqrt_pair(psi_dd(P, i - 1, i - 1), ErrorCode::SingularPsiBlock);
      BlockRange ri1 = range_down(P.mp, i - 1);
      BlockRange ri = range_down(P.mp, i);
      Matrix sel = Matrix::Identity(m, m)
                       .middleRows(ri1.start, ri1.length())
                       .middleCols(ri.start, ri.length());
      DU = prev.root * sel * psi.inverse_root;
    }
    fs.U[i] = StateSpace(Akl, BU, CU, DU);

    Matrix Bcal_down = cl.B.middleCols(range_down(P.mp, i).start,
                                       range_down(P.mp, i).length());
    fs.Minv[i] = StateSpace(cl.A, Bcal_down,
                            Matrix(-psi.root * cal_k(P, g, i)), psi.root);
  }

  for (int j = 1; j <= N; ++j) {
    SymRootPair phi =
        sym_sqrt_pair(phi_uu(P, j, j), ErrorCode::SingularPhiBlock);
    Matrix Akl = a_kl(P, g, j + 1);
    Matrix CV = phi.inverse_root * sub(P.C, range_up(P.pp, j), {0, P.np.total()});
    Matrix BV = factor_b_v(P, g, j);
    Matrix DV;
    if (j == N) {
      DV = sym_sqrt_pair(P.phi(), ErrorCode::SingularPhiBlock).inverse_root *
           P.V;
    } else {
      SymRootPair next =
          sym_sqrt_pair(phi_uu(P, j + 1, j + 1), ErrorCode::SingularPhiBlock);
      BlockRange rj = range_up(P.pp, j);
      BlockRange rj1 = range_up(P.pp, j + 1);
      Matrix sel = Matrix::Identity(p, p)
                       .middleRows(rj.start, rj.length())
                       .middleCols(rj1.start, rj1.length());
      DV = phi.inverse_root * sel * next.root;
    }
    fs.V[j] = StateSpace(Akl, BV, CV, DV);

    Matrix Ccal_up = cl.C.middleRows(range_up(P.pp, j).start,
                                     range_up(P.pp, j).length());
    fs.Ninv[j] = StateSpace(cl.A, Matrix(-cal_l(P, g, j) * phi.root), Ccal_up,
                            phi.root);
  }
  return fs;
}

double check_inner(const StateSpace& U, const std::vector<double>& freqs) {
  if (spectral_abscissa(U.A) >= 0.0) {
    throw Error(ErrorCode::UnstableFactor, "inner test on an unstable factor");
  }
  double worst = 0.0;
  const Eigen::Index m = U.inputs();
  for (double w : freqs) {
    ComplexMatrix G = freq_response(U, w);
    worst = std::max(
        worst, (G.adjoint() * G - ComplexMatrix::Identity(m, m)).norm());
  }
  return worst;
}

double check_coinner(const StateSpace& V, const std::vector<double>& freqs) {
  if (spectral_abscissa(V.A) >= 0.0) {
    throw Error(ErrorCode::UnstableFactor,
                "co-inner test on an unstable factor");
  }
  double worst = 0.0;
  const Eigen::Index p = V.outputs();
  for (double w : freqs) {
    ComplexMatrix G = freq_response(V, w);
    worst = std::max(
        worst, (G * G.adjoint() - ComplexMatrix::Identity(p, p)).norm());
  }
  return worst;
}

ProjectionResidual projection_residual(const TriangularPlant& P,
                                       const GainSet& g, int i, int j) {
  return projection_residual(P, g, nominal_loop(P, g), i, j);
}

ProjectionResidual projection_residual(const TriangularPlant& P,
                                       const GainSet& g, const ClosedLoop& cl,
                                       int i, int j) {
  const int N = P.players();
  const bool off_diag = 0 <= i && i < j && j <= N + 1;
  const bool diag = 1 <= i && i == j && j <= N;
  if (!off_diag && !diag) {
    throw Error(ErrorCode::IndexOutOfDiagram,
                "(" + std::to_string(i) + "," + std::to_string(j) +
                    ") is not a subspace of the inclusion diagram");
  }
  ProjectionResidual out;
  out.gamma = gamma_row(P, g, cl, i);
  out.lambda = lambda_col(P, g, cl, j);
  out.sys = StateSpace::strictly_proper(cl.A, out.lambda, out.gamma);
  out.h2 = h2_norm(out.sys);
  return out;
}

std::vector<ResidualNormEntry> residual_norms(const TriangularPlant& P,
                                              const GainSet& g) {
  return residual_norms(P, g, nominal_loop(P, g));
}

std::vector<ResidualNormEntry> residual_norms(const TriangularPlant& P,
                                              const GainSet& g,
                                              const ClosedLoop& cl) {
  const int N = P.players();
  std::vector<ResidualNormEntry> out;

  // Downward transitions (i-1,j) -> (i,j): observability Gramian of
  // (A^KL_{i,i-1}, C_{U_i}) recovers X_i, so the closed forms below are the
  // trace formulas evaluated at the solved gains while h2_sq goes through a
  // fresh Lyapunov solve.
  for (int i = 1; i <= N; ++i) {
    Matrix CU = factor_c_u(P, g, i);
    Matrix Akl = a_kl(P, g, i);
    Matrix Gram = solve_lyapunov(Akl, CU.transpose() * CU);
    for (int j = i; j <= N + 1; ++j) {
      ResidualNormEntry e{i, j, 'd', 0.0, 0.0};
      Matrix Bres = -j_tilde(P, i) * lambda_col(P, g, cl, j);
      e.h2_sq = (Bres.transpose() * Gram * Bres).trace();
      if (i == 1 && j == N + 1) {
        e.closed_form = (P.W.transpose() * g.X[1] * P.W).trace();
      } else if (i == 1) {
        e.closed_form =
            (phi_uu(P, j, j) * g.L[j].transpose() * g.X[1] * g.L[j]).trace();
      } else {
        Matrix D = g.L[i - 1] * sub(P.V, range_up(P.pp, i - 1), {0, P.V.cols()});
        // Boundary convention Lambda_{N+1} = Wcal turns the trailing term
        // of the difference into -W.
        if (j == N + 1) {
          D += P.W;
        } else {
          D -= g.L[j] * sub(P.V, range_up(P.pp, j), {0, P.V.cols()});
        }
        e.closed_form = (D.transpose() * g.X[i] * D).trace();
      }
      out.push_back(e);
    }
  }

  // Leftward transitions (i,j+1) -> (i,j): controllability Gramian of
  // (A^KL_{j+1,j}, B_{V_j}) recovers Y_j.
  for (int j = 1; j <= N; ++j) {
    Matrix BV = factor_b_v(P, g, j);
    Matrix Akl = a_kl(P, g, j + 1);
    Matrix Gram = solve_lyapunov(Akl.transpose(), BV * BV.transpose());
    for (int i = 0; i <= j; ++i) {
      ResidualNormEntry e{i, j, 'l', 0.0, 0.0};
      Matrix Cres = -gamma_row(P, g, cl, i) * j_hat(P, j);
      e.h2_sq = (Cres * Gram * Cres.transpose()).trace();
      if (i == 0 && j == N) {
        e.closed_form = (P.F * g.Y[N] * P.F.transpose()).trace();
      } else if (j == N) {
        e.closed_form =
            (psi_dd(P, i, i) * g.K[i] * g.Y[N] * g.K[i].transpose()).trace();
      } else {
        Matrix D = -sub(P.H, {0, P.H.rows()}, range_down(P.mp, j + 1)) *
                   g.K[j + 1];
        // Boundary convention Gamma_0 = Fcal: the leading term becomes F.
        if (i == 0) {
          D = P.F + sub(P.H, {0, P.H.rows()}, range_down(P.mp, j + 1)) *
                        g.K[j + 1];
        } else {
          D += sub(P.H, {0, P.H.rows()}, range_down(P.mp, i)) * g.K[i];
        }
        e.closed_form = (D * g.Y[j] * D.transpose()).trace();
      }
      out.push_back(e);
    }
  }
  return out;
}

double certainty_equivalence_check(const TriangularPlant& P, const GainSet& g,
                                   int j) {
  return certainty_equivalence_check(P, g, nominal_loop(P, g), j);
}

double certainty_equivalence_check(const TriangularPlant& P, const GainSet& g,
                                   const ClosedLoop& cl, int j) {
  const int N = P.players();
  if (j < 1 || j > N) {
    throw Error(ErrorCode::IndexOutOfBounds, "certainty equivalence index");
  }
  const Eigen::Index n = P.np.total();
  // Difference between the projected state estimate and the controller
  // state block j: realization (Acal, -calL_j Phi^{1/2}, [-E_j ... I], 0).
  Matrix Bce = -cal_l(P, g, j) * sym_sqrt(phi_uu(P, j, j));
  Matrix Cce = Matrix::Zero(n, n * (N + 1));
  Cce.middleCols((j - 1) * n, n) = -Matrix::Identity(n, n);
  Cce.middleCols(N * n, n) = Matrix::Identity(n, n);
  StateSpace diff = StateSpace::strictly_proper(cl.A, Bce, Cce);
  double worst = 0.0;
  for (double w : frequency_grid(1e-3, 1e3, 20)) {
    worst = std::max(worst, freq_response(diff, w).norm());
  }
  return worst;
}

PerturbationReport perturbation_optimality(const TriangularPlant& P,
                                           const Controller& ctrl, int trials,
                                           double scale, std::uint64_t seed) {
  const int N = P.players();
  ClosedLoop cl = closed_loop(P, ctrl);
  StateSpace g11 = cl.g11();
  StateSpace g22 = cl.g22();

  PerturbationReport rep;
  rep.trials = trials;
  rep.nominal_cost = h2_norm(g11);
  rep.worst_delta = std::numeric_limits<double>::infinity();
  if (trials <= 0) {
    rep.worst_delta = 0.0;
    return rep;
  }

  double sum_delta = 0.0;
  int survived = 0;
  for (int t = 0; t < trials; ++t) {
    // Deterministic per-trial substream.
    std::seed_seq sq{static_cast<std::uint32_t>(seed),
                     static_cast<std::uint32_t>(seed >> 32),
                     static_cast<std::uint32_t>(t)};
    std::mt19937_64 rng(sq);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> damp(0.5, 2.5);

    // One stable order-2 scalar response per lower-triangular block,
    // spread over the block by a random rank-one coefficient matrix.
    const int blocks = N * (N + 1) / 2;
    Matrix Aq = Matrix::Zero(2 * blocks, 2 * blocks);
    Matrix Bq = Matrix::Zero(2 * blocks, P.pp.total());
    Matrix Cq = Matrix::Zero(P.mp.total(), 2 * blocks);
    int slot = 0;
    for (int bi = 1; bi <= N; ++bi) {
      for (int bj = 1; bj <= bi; ++bj) {
        const double a = damp(rng);
        const double b = 2.0 * unit(rng);
        Aq.block(2 * slot, 2 * slot, 2, 2) << -a, b, -b, -a;
        Vector bg(2);
        bg << unit(rng), unit(rng);
        Vector cg(2);
        cg << unit(rng), unit(rng);
        BlockRange rm = range_block(P.mp, bi);
        BlockRange rp = range_block(P.pp, bj);
        Vector u(rm.length());
        Vector v(rp.length());
        for (Eigen::Index k = 0; k < u.size(); ++k) u(k) = unit(rng);
        for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = unit(rng);
        Bq.block(2 * slot, rp.start, 2, rp.length()) = bg * v.transpose();
        Cq.block(rm.start, 2 * slot, rm.length(), 2) =
            scale * u * cg.transpose();
        ++slot;
      }
    }

    if (Cq.cwiseAbs().maxCoeff() == 0.0) {
      // Q is identically zero, so the recovered controller perturbation is
      // exactly zero and the closed loop is the nominal one.
      rep.worst_delta = std::min(rep.worst_delta, 0.0);
      sum_delta += 0.0;
      ++survived;
      continue;
    }

    StateSpace Q(Aq, Bq, Cq, Matrix::Zero(P.mp.total(), P.pp.total()));
    StateSpace kprime = youla_to_controller(Q, g22);
    StateSpace loop = feedback_map(kprime, g22);
    StateSpace perturbed = add(g11, series(cl.g12(), series(loop, cl.g21())));
    if (spectral_abscissa(perturbed.A) >= -1e-10) {
      ++rep.destabilized;
      continue;
    }
    const double delta = h2_norm(perturbed) - rep.nominal_cost;
    rep.worst_delta = std::min(rep.worst_delta, delta);
    sum_delta += delta;
    ++survived;
  }
  if (survived > 0) rep.mean_delta = sum_delta / survived;
  if (!std::isfinite(rep.worst_delta)) rep.worst_delta = 0.0;
  return rep;
}

}  // namespace trilqg
