#include "doctest.h"

#include <random>

#include "equi/exact.hpp"

using namespace equi;

TEST_CASE("parse and render rationals") {
  CHECK(parse_rational("3/6") == Rational(1, 2));
  CHECK(parse_rational("-0.25") == Rational(-1, 4));
  CHECK(parse_rational("1e-3") == Rational(1, 1000));
  CHECK(parse_rational("2.5E2") == Rational(250));
  CHECK(to_string(Rational(-6, 4)) == "-3/2");
  CHECK(to_string(Rational(7)) == "7");
}

TEST_CASE("snapshot is within half a grid step") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-100, 100);
  const Rational step = Rational(1) / (Rational(mpz_class(1) << 64));
  for (int i = 0; i < 200; ++i) {
    const double x = u(rng);
    const Rational q = snapshot(x);
    Rational diff = q - Rational(x);
    if (diff < 0) diff = -diff;
    CHECK(diff <= step / 2);
  }
  CHECK(snapshot(0.5) == Rational(1, 2));
}

TEST_CASE("rank, kernel and inverse") {
  const QMatrix a = QMatrix::from_rows({{1, 2, 3}, {2, 4, 6}, {1, 0, 1}});
  CHECK(rank(a) == 2);
  const auto ker = kernel_basis(a);
  REQUIRE(ker.size() == 1);
  CHECK(is_zero(a * ker[0]));
  const QMatrix b = QMatrix::from_rows({{2, 1}, {7, 4}});
  CHECK(determinant(b) == 1);
  CHECK(inverse(b) * b == QMatrix::identity(2));
  CHECK_THROWS_AS(inverse(a), std::domain_error);
}

TEST_CASE("integer kernel is saturated") {
  // x + 2y + 3z = 0 over Z: any basis has Gram determinant 1+4+9 = 14.
  const ZMatrix a = ZMatrix::from_rows({{1, 2, 3}}, 3);
  const auto ker = integer_kernel_basis(a);
  REQUIRE(ker.size() == 2);
  for (const auto& v : ker) CHECK(v[0] + 2 * v[1] + 3 * v[2] == 0);
  CHECK(gram_determinant(ker, QMatrix::identity(3)) == 14);
}

TEST_CASE("saturation removes common factors") {
  const auto s = saturate({{2, 4}}, 2);
  REQUIRE(s.size() == 1);
  CHECK(gram_determinant(s, QMatrix::identity(2)) == 5);
  // span{(2,0,0),(0,2,2)} saturates to {(1,0,0),(0,1,1)}: Gram det 2.
  const auto t = saturate({{2, 0, 0}, {0, 2, 2}}, 3);
  CHECK(gram_determinant(t, QMatrix::identity(3)) == 2);
}

TEST_CASE("characteristic polynomial and Sturm counts") {
  // Oracle: diag(1,2,3) has det(xI - A) = x^3 - 6x^2 + 11x - 6.
  const QMatrix a = QMatrix::from_rows({{1, 0, 0}, {0, 2, 0}, {0, 0, 3}});
  const QPoly p = characteristic_polynomial(a);
  REQUIRE(p.size() == 4);
  CHECK(p[0] == -6);
  CHECK(p[1] == 11);
  CHECK(p[2] == -6);
  CHECK(p[3] == 1);
  CHECK(sturm_count(p, 0, 10) == 3);
  CHECK(sturm_count(p, Rational(3, 2), Rational(5, 2)) == 1);
  CHECK(evaluate(p, 2) == 0);
}
