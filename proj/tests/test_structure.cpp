#include "doctest.h"
#include "support.hpp"
#include "trilqg/structure.hpp"

using namespace trilqg;

TEST_CASE("range_up and range_down") {
  Partition p({1, 2, 3});
  CHECK(range_up(p, 2).start == 0);
  CHECK(range_up(p, 2).end == 3);
  CHECK(range_up(p, 1).end == 1);
  CHECK(range_up(p, 3).end == 6);
  CHECK(range_down(p, 2).start == 1);
  CHECK(range_down(p, 2).end == 6);
  CHECK(range_down(p, 1).start == 0);
  CHECK(range_down(p, 3).start == 3);
  CHECK_THROWS_AS(range_up(p, 0), Error);
  CHECK_THROWS_AS(range_down(p, 4), Error);

  // adjacent up/down ranges tile the index set
  for (int i = 1; i < p.count(); ++i) {
    CHECK(range_up(p, i).end == range_down(p, i + 1).start);
  }
}

TEST_CASE("sub") {
  Matrix I3 = Matrix::Identity(3, 3);
  Matrix S = sub(I3, {0, 1}, {1, 3});
  CHECK(S.rows() == 1);
  CHECK(S.cols() == 2);
  CHECK(testsup::max_abs(S) == 0.0);

  CHECK((sub(I3, {0, 3}, {0, 3}) - I3).norm() == 0.0);

  Matrix M(2, 2);
  M << 1, 2, 3, 4;
  CHECK(sub(M, {1, 2}, {0, 1})(0, 0) == 3.0);
  CHECK_THROWS_AS(sub(M, {0, 3}, {0, 1}), Error);
}

TEST_CASE("is_lbt") {
  Partition ones({1, 1});
  Matrix M(2, 2);
  M << 1, 0, 5, 2;
  CHECK(is_lbt(M, ones, ones, 0.0));

  M(0, 1) = 1e-3;
  CHECK_FALSE(is_lbt(M, ones, ones, 1e-6));

  Partition single({2});
  CHECK(is_lbt(M, single, single, 0.0));  // N = 1 is always LBT
}

TEST_CASE("incidence matrices") {
  auto [zeta, mu] = incidence_zeta_mu(1, 2);
  Matrix zexp(2, 2), mexp(2, 2);
  zexp << 1, 0, 1, 1;
  mexp << 1, 0, -1, 1;
  CHECK((zeta - zexp).norm() == 0.0);
  CHECK((mu - mexp).norm() == 0.0);

  auto n1 = incidence_zeta_mu(3, 1);
  CHECK((n1.zeta - Matrix::Identity(3, 3)).norm() == 0.0);
  CHECK((n1.mu - Matrix::Identity(3, 3)).norm() == 0.0);

  auto big = incidence_zeta_mu(2, 3);
  CHECK((big.zeta * big.mu - Matrix::Identity(6, 6)).norm() == 0.0);
  CHECK((big.mu * big.zeta - Matrix::Identity(6, 6)).norm() == 0.0);

  Partition blocks({2, 2, 2});
  CHECK(is_lbt(big.zeta, blocks, blocks, 0.0));
  CHECK(is_lbt(big.mu, blocks, blocks, 0.0));
}

TEST_CASE("incidence_bar") {
  auto one = incidence_bar(1, 1);
  Matrix expect(2, 2);
  expect << 1, 0, 1, 1;
  CHECK((one.zeta - expect).norm() == 0.0);

  auto two = incidence_bar(1, 2);
  CHECK(two.zeta.rows() == 3);
  CHECK(two.zeta(2, 0) == 1.0);
  CHECK(two.zeta(0, 2) == 0.0);

  auto nb = incidence_bar(2, 2);
  CHECK((nb.mu * nb.zeta - Matrix::Identity(6, 6)).norm() == 0.0);
}

TEST_CASE("selector materializers") {
  Partition p({1, 2});
  Matrix up = selector_up(p, 1);
  CHECK(up.rows() == 3);
  CHECK(up.cols() == 1);
  CHECK(up(0, 0) == 1.0);
  Matrix down = selector_down(p, 2);
  CHECK(down.cols() == 2);
  CHECK(down(1, 0) == 1.0);
  CHECK(down(2, 1) == 1.0);

  // sub at the selector's range equals multiplication by the selector
  Matrix M(3, 3);
  M << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  CHECK((sub(M, {0, 3}, range_down(p, 2)) - M * down).norm() == 0.0);
}
