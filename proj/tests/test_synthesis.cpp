#include "doctest.h"
#include "support.hpp"
#include "trilqg/synthesis.hpp"

using namespace trilqg;
using doctest::Approx;

namespace {

GainSet zero_gains(const TriangularPlant& P) {
  const int N = P.players();
  GainSet g;
  g.X.assign(N + 1, Matrix());
  g.K.assign(N + 1, Matrix());
  g.Y.assign(N + 1, Matrix());
  g.L.assign(N + 1, Matrix());
  for (int i = 1; i <= N; ++i) {
    g.X[i] = Matrix::Zero(P.np.total(), P.np.total());
    g.Y[i] = Matrix::Zero(P.np.total(), P.np.total());
    g.K[i] = Matrix::Zero(range_down(P.mp, i).length(), P.np.total());
    g.L[i] = Matrix::Zero(P.np.total(), range_up(P.pp, i).length());
  }
  return g;
}

}  // namespace

TEST_CASE("N = 1 controller is the classical compensator") {
  TriangularPlant P = testsup::plant_p1();
  SolveResult sol = solve_coupled(P);
  Controller ctrl = build_controller(P, sol.gains);
  const double r = std::sqrt(2.0) - 1.0;
  CHECK(ctrl.sys.A(0, 0) == Approx(-1.0 - 2.0 * r).epsilon(1e-10));
  CHECK(ctrl.sys.B(0, 0) == Approx(r).epsilon(1e-10));
  CHECK(ctrl.sys.C(0, 0) == Approx(-r).epsilon(1e-10));
  // centralized form A + BK + LC with B_K = -L, C_K = K
  CHECK((ctrl.sys.A - (P.A + P.B * sol.gains.K[1] + sol.gains.L[1] * P.C))
            .norm() < 1e-10);
  CHECK((ctrl.sys.B + sol.gains.L[1]).norm() < 1e-10);
  CHECK((ctrl.sys.C - sol.gains.K[1]).norm() < 1e-10);
  CHECK(testsup::max_abs(ctrl.sys.D) == 0.0);
}

TEST_CASE("blockwise and incidence assembly agree") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 3; ++trial) {
    TriangularPlant P = testsup::random_valid_plant(rng);
    SolveResult sol = solve_coupled(P);
    Controller a = build_controller(P, sol.gains);
    Controller b = build_controller_incidence(P, sol.gains);
    CHECK((a.sys.A - b.sys.A).norm() < 1e-12 * (1.0 + a.sys.A.norm()));
    CHECK((a.sys.B - b.sys.B).norm() < 1e-12 * (1.0 + a.sys.B.norm()));
    CHECK((a.sys.C - b.sys.C).norm() < 1e-12 * (1.0 + a.sys.C.norm()));
  }
}

TEST_CASE("controller transfer function is lower block triangular") {
  TriangularPlant P = testsup::plant_p2();
  SolveResult sol = solve_coupled(P);
  Controller ctrl = build_controller(P, sol.gains);
  for (double w : frequency_grid(1e-3, 1e3, 20, false)) {
    ComplexMatrix K = freq_response(ctrl.sys, w);
    CHECK(lbt_defect(K.real(), ctrl.mp, ctrl.pp) < 1e-9);
    CHECK(lbt_defect(K.imag(), ctrl.mp, ctrl.pp) < 1e-9);
  }
}

TEST_CASE("zero gain set collapses the controller") {
  TriangularPlant P = testsup::plant_p2();
  GainSet g = zero_gains(P);
  Controller ctrl = build_controller(P, g);
  Matrix IA = Matrix::Zero(4, 4);
  IA.topLeftCorner(2, 2) = P.A;
  IA.bottomRightCorner(2, 2) = P.A;
  CHECK((ctrl.sys.A - IA).norm() == 0.0);
  CHECK(testsup::max_abs(ctrl.sys.B) == 0.0);
  CHECK(testsup::max_abs(ctrl.sys.C) == 0.0);

  ClosedLoop cl = closed_loop(P, ctrl);
  CHECK(spectral_abscissa(cl.A) < 0.0);
  Matrix T = block_triangularize(cl, P.players(), P.np.total());
  // with K = L = 0 the transform leaves block-diagonal copies of A
  for (int i = 0; i < 3; ++i) {
    CHECK((T.block(2 * i, 2 * i, 2, 2) - P.A).norm() == 0.0);
  }
}

TEST_CASE("closed loop eigenvalues at N = 1 split into the two designs") {
  TriangularPlant P = testsup::plant_p1();
  SolveResult sol = solve_coupled(P);
  Controller ctrl = build_controller(P, sol.gains);
  ClosedLoop cl = closed_loop(P, ctrl);
  // one eigenvalue from A + BK, one from A + LC; the repeated pair of a
  // non-normal matrix is only recovered to sqrt(eps)
  Eigen::EigenSolver<Matrix> es(cl.A, false);
  for (Eigen::Index k = 0; k < 2; ++k) {
    CHECK(es.eigenvalues()(k).real() == Approx(-std::sqrt(2.0)).epsilon(1e-6));
    CHECK(std::abs(es.eigenvalues()(k).imag()) < 1e-6);
  }
}

TEST_CASE("similarity transform block-triangularizes the closed loop") {
  TriangularPlant P = testsup::plant_p2();
  SolveResult sol = solve_coupled(P);
  Controller ctrl = build_controller(P, sol.gains);
  ClosedLoop cl = closed_loop(P, ctrl);
  Matrix T = block_triangularize(cl, 2, 2);
  const Eigen::Index n = 2;
  double strict_lower = 0.0;
  for (int bi = 2; bi <= 3; ++bi) {
    for (int bj = 1; bj < bi; ++bj) {
      strict_lower = std::max(
          strict_lower,
          testsup::max_abs(T.block((bi - 1) * n, (bj - 1) * n, n, n)));
    }
  }
  CHECK(strict_lower < 1e-9 * cl.A.norm());
  for (int i = 1; i <= 3; ++i) {
    CHECK((T.block((i - 1) * n, (i - 1) * n, n, n) - a_kl(P, sol.gains, i))
              .norm() < 1e-10 * (1.0 + cl.A.norm()));
    CHECK(spectral_abscissa(a_kl(P, sol.gains, i)) < 0.0);
  }
}

TEST_CASE("unstable gains are rejected by closed_loop") {
  TriangularPlant P = testsup::plant_p2();
  GainSet g = zero_gains(P);
  TriangularPlant Punstable = P;
  Punstable.A(0, 0) = 0.3;  // open-loop unstable, zero controller cannot fix
  Controller ctrl = build_controller(Punstable, g);
  CHECK_THROWS_AS(closed_loop(Punstable, ctrl), Error);
}

TEST_CASE("optimal cost closed forms") {
  TriangularPlant P1 = testsup::plant_p1();
  SolveResult s1 = solve_coupled(P1);
  CostBreakdown c1 = optimal_cost(P1, s1.gains);
  CHECK(c1.j_dcnt == Approx(0.0));
  CHECK(c1.j_cnt * c1.j_cnt ==
        Approx(6.0 * std::sqrt(2.0) - 8.0).epsilon(1e-10));
  CHECK(c1.j_opt == Approx(0.6966214).epsilon(1e-6));

  TriangularPlant P2 = testsup::plant_p2();
  SolveResult s2 = solve_coupled(P2);
  CostBreakdown c2 = optimal_cost(P2, s2.gains);
  Controller ctrl = build_controller(P2, s2.gains);
  const double h2 = h2_norm(closed_loop(P2, ctrl).g11());
  CHECK(std::abs(h2 * h2 - c2.j_opt * c2.j_opt) < 1e-6 * h2 * h2);
}

TEST_CASE("decoupled plant pays no decentralization price") {
  Matrix A = Matrix::Zero(2, 2);
  A(0, 0) = -1.0;
  A(1, 1) = -2.0;
  Matrix B = Matrix::Identity(2, 2);
  Matrix C = Matrix::Identity(2, 2);
  Matrix F(4, 2), H(4, 2);
  F << Matrix::Identity(2, 2), Matrix::Zero(2, 2);
  H << Matrix::Zero(2, 2), Matrix::Identity(2, 2);
  Matrix W(2, 4), V(2, 4);
  W << Matrix::Identity(2, 2), Matrix::Zero(2, 2);
  V << Matrix::Zero(2, 2), Matrix::Identity(2, 2);
  TriangularPlant P{A, B, C, F, H, W, V, Partition({1, 1}), Partition({1, 1}),
                    Partition({1, 1})};
  SolveResult sol = solve_coupled(P);
  CostBreakdown cost = optimal_cost(P, sol.gains);
  CHECK(cost.j_dcnt < 1e-10);
}

TEST_CASE("controller document round trip") {
  TriangularPlant P = testsup::plant_p2();
  SolveResult sol = solve_coupled(P);
  Controller ctrl = build_controller(P, sol.gains);
  const std::string text = save_controller(ctrl);
  Controller back = load_controller(text);
  CHECK((ctrl.sys.A - back.sys.A).norm() == 0.0);
  CHECK((ctrl.sys.B - back.sys.B).norm() == 0.0);
  CHECK((ctrl.sys.C - back.sys.C).norm() == 0.0);
  CHECK(save_controller(back) == text);

  CHECK_THROWS_AS(load_controller("{}"), Error);
}
