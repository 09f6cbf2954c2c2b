#include <random>

#include "doctest.h"
#include "support.hpp"
#include "trilqg/matops.hpp"

using namespace trilqg;
using doctest::Approx;

namespace {

Matrix scalar(double v) {
  Matrix M(1, 1);
  M << v;
  return M;
}

Matrix random_stable(std::mt19937_64& rng, int n, double shift = 0.5) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = gauss(rng);
  M -= (spectral_abscissa(M) + shift) * Matrix::Identity(n, n);
  return M;
}

Matrix random_matrix(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix M(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) M(i, j) = gauss(rng);
  return M;
}

}  // namespace

TEST_CASE("solve_are_p scalar closed form") {
  Matrix F(2, 1), H(2, 1);
  F << 1.0, 0.0;
  H << 0.0, 1.0;
  auto sol = solve_are_p(scalar(-1.0), scalar(1.0), F, H);
  CHECK(sol.X(0, 0) == Approx(std::sqrt(2.0) - 1.0).epsilon(1e-12));
  CHECK(sol.K(0, 0) == Approx(-(std::sqrt(2.0) - 1.0)).epsilon(1e-12));
}

TEST_CASE("solve_are_p zero cost fixed point") {
  Matrix F = Matrix::Zero(2, 1);
  Matrix H(2, 1);
  H << 0.0, 1.0;
  auto sol = solve_are_p(scalar(-1.0), scalar(1.0), F, H);
  CHECK(testsup::max_abs(sol.X) < 1e-12);
  CHECK(testsup::max_abs(sol.K) < 1e-12);
}

TEST_CASE("solve_are_p on the two-player plant data") {
  TriangularPlant P = testsup::plant_p2();
  auto sol = solve_are_p(P.A, P.B, P.F, P.H);
  CHECK(sol.residual < 1e-9 * (1.0 + sol.X.norm()));
  CHECK(spectral_abscissa(P.A + P.B * sol.K) < 0.0);
  // symmetry and PSD floor
  CHECK((sol.X - sol.X.transpose()).norm() <= 1e-12 * (1.0 + sol.X.norm()));
  Eigen::SelfAdjointEigenSolver<Matrix> es(sol.X);
  CHECK(es.eigenvalues().minCoeff() >= -1e-10 * (1.0 + sol.X.norm()));
}

TEST_CASE("solve_are_p error paths") {
  Matrix H0 = Matrix::Zero(2, 1);
  Matrix F(2, 1);
  F << 1.0, 0.0;
  CHECK_THROWS_WITH_AS(solve_are_p(scalar(-1.0), scalar(1.0), F, H0),
                       doctest::Contains("SingularPsi"), Error);

  // F/H chosen so the frequency-domain rank test fails at w = 0.
  CHECK_THROWS_AS(
      solve_are_p(scalar(-1.0), scalar(1.0), scalar(-1.0), scalar(1.0)),
      Error);
  try {
    solve_are_p(scalar(-1.0), scalar(1.0), scalar(-1.0), scalar(1.0));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ImaginaryAxisEigs);
  }
}

TEST_CASE("solve_are_d scalar closed form and zero noise") {
  // transpose-dual of the primal scalar case: independent unit noise
  // channels W = [1 0], V = [0 1]
  Matrix W(1, 2), V(1, 2);
  W << 1.0, 0.0;
  V << 0.0, 1.0;
  auto sol = solve_are_d(scalar(-1.0), scalar(1.0), W, V);
  CHECK(sol.Y(0, 0) == Approx(std::sqrt(2.0) - 1.0).epsilon(1e-12));
  CHECK(sol.L(0, 0) == Approx(-(std::sqrt(2.0) - 1.0)).epsilon(1e-12));

  // fully correlated scalar noise (shared channel W = V = 1): the cross
  // term cancels the noise exactly and the error covariance is zero
  auto corr = solve_are_d(scalar(-1.0), scalar(1.0), scalar(1.0), scalar(1.0));
  CHECK(corr.Y(0, 0) == Approx(0.0));
  CHECK(corr.L(0, 0) == Approx(-1.0));
  CHECK(spectral_abscissa(scalar(-1.0) + corr.L * scalar(1.0)) < 0.0);

  auto zero = solve_are_d(scalar(-1.0), scalar(1.0), scalar(0.0), scalar(1.0));
  CHECK(testsup::max_abs(zero.Y) < 1e-12);
  CHECK(testsup::max_abs(zero.L) < 1e-12);
}

TEST_CASE("duality: ARE_d equals transposed ARE_p") {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 3, p = 2;
    Matrix A = random_matrix(rng, n, n);
    Matrix C = random_matrix(rng, p, n);
    Matrix W(n, n + p), V(p, n + p);
    W << random_matrix(rng, n, n), Matrix::Zero(n, p);
    V << Matrix::Zero(p, n), Matrix::Identity(p, p);

    auto dual = solve_are_d(A, C, W, V);
    auto primal = solve_are_p(A.transpose(), C.transpose(), W.transpose(),
                              V.transpose());
    const double scale = 1.0 + dual.Y.norm();
    CHECK((dual.Y - primal.X.transpose()).norm() < 1e-10 * scale);
    CHECK((dual.L - primal.K.transpose()).norm() < 1e-10 * scale);
  }
}

TEST_CASE("solve_lyapunov examples") {
  CHECK(solve_lyapunov(scalar(-1.0), scalar(2.0))(0, 0) == Approx(1.0));

  Matrix A = Matrix::Zero(2, 2);
  A(0, 0) = -1.0;
  A(1, 1) = -2.0;
  Matrix X = solve_lyapunov(A, Matrix::Identity(2, 2));
  CHECK(X(0, 0) == Approx(0.5));
  CHECK(X(1, 1) == Approx(0.25));
  CHECK(std::abs(X(0, 1)) < 1e-14);

  std::mt19937_64 rng(7);
  Matrix As = random_stable(rng, 4);
  Matrix M = random_matrix(rng, 4, 4);
  Matrix Q = M.transpose() * M;
  Matrix Xs = solve_lyapunov(As, Q);
  CHECK((As.transpose() * Xs + Xs * As + Q).norm() < 1e-10 * (1.0 + Q.norm()));
  Eigen::SelfAdjointEigenSolver<Matrix> es(Xs);
  CHECK(es.eigenvalues().minCoeff() >= -1e-10 * (1.0 + Xs.norm()));

  CHECK_THROWS_AS(solve_lyapunov(scalar(1.0), scalar(1.0)), Error);
}

TEST_CASE("solve_sylvester examples") {
  CHECK(solve_sylvester(scalar(-1.0), scalar(-1.0), scalar(2.0))(0, 0) ==
        Approx(1.0));
  CHECK(solve_sylvester(scalar(0.0), scalar(-2.0), scalar(4.0))(0, 0) ==
        Approx(2.0));

  std::mt19937_64 rng(11);
  Matrix A = random_stable(rng, 3);
  Matrix B = random_stable(rng, 3);
  Matrix C = random_matrix(rng, 3, 3);
  Matrix X = solve_sylvester(A, B, C);
  CHECK((A * X + X * B + C).norm() < 1e-10 * (1.0 + C.norm()));

  CHECK_THROWS_AS(solve_sylvester(scalar(1.0), scalar(-1.0), scalar(1.0)),
                  Error);
}

TEST_CASE("h2_norm examples and Gramian duality") {
  StateSpace sys(scalar(-1.0), scalar(1.0), scalar(1.0), scalar(0.0));
  CHECK(h2_norm(sys) == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));

  StateSpace zero_c(scalar(-1.0), scalar(1.0), scalar(0.0), scalar(0.0));
  CHECK(h2_norm(zero_c) == Approx(0.0));

  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    StateSpace s(random_stable(rng, 4), random_matrix(rng, 4, 2),
                 random_matrix(rng, 3, 4), Matrix::Zero(3, 2));
    const double a = h2_norm(s);
    const double b = h2_norm_via_observability(s);
    CHECK(std::abs(a - b) < 1e-10 * (1.0 + a));
  }

  CHECK_THROWS_AS(h2_norm(StateSpace(scalar(1.0), scalar(1.0), scalar(1.0),
                                     scalar(0.0))),
                  Error);
  CHECK_THROWS_AS(h2_norm(StateSpace(scalar(-1.0), scalar(1.0), scalar(1.0),
                                     scalar(0.5))),
                  Error);
}

TEST_CASE("freq_response examples") {
  StateSpace sys(scalar(-1.0), scalar(1.0), scalar(1.0), scalar(0.0));
  CHECK(std::abs(freq_response(sys, 0.0)(0, 0) - 1.0) < 1e-14);
  CHECK(std::abs(freq_response(sys, 1e9)(0, 0)) < 1e-8);
  const std::complex<double> v = freq_response(sys, 1.0)(0, 0);
  CHECK(v.real() == Approx(0.5).epsilon(1e-12));
  CHECK(v.imag() == Approx(-0.5).epsilon(1e-12));

  Matrix rot(2, 2);
  rot << 0.0, 1.0, -1.0, 0.0;
  StateSpace res(rot, Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                 Matrix::Zero(2, 2));
  CHECK_THROWS_AS(freq_response(res, 1.0), Error);
}

TEST_CASE("spectral_abscissa examples") {
  Matrix D = Matrix::Zero(2, 2);
  D(0, 0) = -1.0;
  D(1, 1) = -3.0;
  CHECK(spectral_abscissa(D) == Approx(-1.0));

  Matrix rot(2, 2);
  rot << 0.0, 1.0, -1.0, 0.0;
  CHECK(spectral_abscissa(rot) == Approx(0.0).epsilon(1e-12));

  Matrix tri(2, 2);
  tri << -1.0, 10.0, 0.0, -2.0;
  CHECK(spectral_abscissa(tri) == Approx(-1.0));
}

TEST_CASE("assemble_linear_operator") {
  auto ident = [](const Vector& v) { return v; };
  CHECK((assemble_linear_operator(ident, 3, 3) - Matrix::Identity(3, 3))
            .norm() == 0.0);

  auto twice = [](const Vector& v) { return Vector(2.0 * v); };
  CHECK((assemble_linear_operator(twice, 2, 2) - 2.0 * Matrix::Identity(2, 2))
            .norm() == 0.0);

  // vectorized X -> AX + XB on 2x2, column-major packing
  std::mt19937_64 rng(3);
  Matrix A = random_matrix(rng, 2, 2);
  Matrix B = random_matrix(rng, 2, 2);
  auto sylv = [&](const Vector& v) {
    Matrix X(2, 2);
    X.col(0) = v.segment(0, 2);
    X.col(1) = v.segment(2, 2);
    Matrix R = A * X + X * B;
    Vector out(4);
    out.segment(0, 2) = R.col(0);
    out.segment(2, 2) = R.col(1);
    return out;
  };
  Matrix M = assemble_linear_operator(sylv, 4, 4);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    Vector v(4);
    for (int k = 0; k < 4; ++k) v(k) = gauss(rng);
    CHECK((M * v - sylv(v)).norm() < 1e-12 * (1.0 + v.norm()));
  }

  auto bad = [](const Vector& v) { return Vector(v.head(1)); };
  CHECK_THROWS_AS(assemble_linear_operator(bad, 3, 3), Error);
}

TEST_CASE("operator assembly is exact for linear maps") {
  std::mt19937_64 rng(17);
  Matrix T = random_matrix(rng, 6, 6);
  auto apply = [&](const Vector& v) { return Vector(T * v); };
  Matrix M = assemble_linear_operator(apply, 6, 6);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Vector v(6);
    for (int k = 0; k < 6; ++k) v(k) = gauss(rng);
    CHECK((M * v - apply(v)).norm() < 1e-12 * (1.0 + v.norm()));
  }
}
