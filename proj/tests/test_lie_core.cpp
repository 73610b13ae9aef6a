#include "doctest.h"

#include <random>

#include "equi/errors.hpp"
#include "equi/lie_core.hpp"

using namespace equi;

namespace {

// Independent oracle: integer n x n matrices with the naive commutator.
using IntMat = std::vector<std::vector<long>>;

IntMat elementary(int n, int i, int j) {
  IntMat m(n, std::vector<long>(n, 0));
  m[i][j] = 1;
  return m;
}

IntMat commutator(const IntMat& a, const IntMat& b) {
  const std::size_t n = a.size();
  IntMat c(n, std::vector<long>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) c[i][j] += a[i][k] * b[k][j] - b[i][k] * a[k][j];
  return c;
}

QVector random_qvector(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> num(-9, 9), den(1, 5);
  QVector v(n);
  for (auto& x : v) {
    x = Rational(num(rng), den(rng));
    x.canonicalize();
  }
  return v;
}

}  // namespace

TEST_CASE("sl2 relations") {
  const auto sl2 = make_sl(2);
  const auto& t = *sl2.sl2_triple();
  CHECK(sl2.bracket(t.e, t.f) == t.h);
  CHECK(sl2.bracket(t.h, t.e) == scale(t.e, 2));
  CHECK(is_zero(sl2.bracket(t.h, t.h)));
}

TEST_CASE("sl3 bracket agrees with matrix commutators") {
  const auto sl3 = make_sl(3);
  const IntMat c = commutator(elementary(3, 0, 1), elementary(3, 1, 2));
  CHECK(c == elementary(3, 0, 2));
  CHECK(sl3.bracket(sl3.basis_vector(sl_offdiag_index(3, 0, 1)), sl3.basis_vector(sl_offdiag_index(3, 1, 2))) ==
        sl3.basis_vector(sl_offdiag_index(3, 0, 2)));
  // every pair of off-diagonal basis elements
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          if (i == j || k == l) continue;
          const IntMat ref = commutator(elementary(3, i, j), elementary(3, k, l));
          QMatrix refq(3, 3);
          for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) refq(a, b) = ref[a][b];
          const QVector got = sl3.bracket(sl3.basis_vector(sl_offdiag_index(3, i, j)),
                                          sl3.basis_vector(sl_offdiag_index(3, k, l)));
          CHECK(sl3.to_matrix(got) == refq);
        }
}

TEST_CASE("Killing form values") {
  const auto sl2 = make_sl(2);
  const auto& t = *sl2.sl2_triple();
  // Hand-built ad matrices in (E,H,F): ad H = diag(2,0,-2); ad E: H->-2E, F->H; ad F: E->-H, H->2F.
  const QMatrix adh = QMatrix::from_rows({{2, 0, 0}, {0, 0, 0}, {0, 0, -2}});
  const QMatrix ade = QMatrix::from_rows({{0, -2, 0}, {0, 0, 1}, {0, 0, 0}});
  const QMatrix adf = QMatrix::from_rows({{0, 0, 0}, {-1, 0, 0}, {0, 2, 0}});
  CHECK((adh * adh).trace() == 8);
  CHECK((ade * adf).trace() == 4);
  CHECK(sl2.killing_form(t.h, t.h) == 8);
  CHECK(sl2.killing_form(t.e, t.f) == 4);
  CHECK(sl2.killing_form(QVector(3, 0), t.f) == 0);
  CHECK(sl2.adjoint_matrix(t.h) == adh);
  CHECK(sl2.adjoint_matrix(t.e) == ade);
  CHECK(sl2.adjoint_matrix(t.f) == adf);
}

TEST_CASE("Killing form is 2n tr(XY) on sl_n") {
  std::mt19937_64 rng(7);
  for (std::size_t n : {2u, 3u, 4u}) {
    const auto g = make_sl(n);
    for (int trial = 0; trial < 5; ++trial) {
      const QVector x = random_qvector(rng, g.dim()), y = random_qvector(rng, g.dim());
      const Rational ref = Rational(2 * static_cast<long>(n)) * (g.to_matrix(x) * g.to_matrix(y)).trace();
      CHECK(g.killing_form(x, y) == ref);
    }
  }
}

TEST_CASE("adjoint of a nilpotent element is nilpotent") {
  const auto sl3 = make_sl(3);
  const QMatrix ad = sl3.adjoint_matrix(sl3.basis_vector(sl_offdiag_index(3, 0, 1)));
  QMatrix p = ad;
  for (int i = 0; i < 4; ++i) p = p * ad;
  CHECK(p.is_zero());
  CHECK(sl3.adjoint_matrix(QVector(8, 0)).is_zero());
}

TEST_CASE("Jacobi identity on random rational triples") {
  std::mt19937_64 rng(11);
  const auto sl3 = make_sl(3);
  for (int trial = 0; trial < 10000; ++trial) {
    const QVector x = random_qvector(rng, 8), y = random_qvector(rng, 8), z = random_qvector(rng, 8);
    QVector s = sl3.bracket(sl3.bracket(x, y), z);
    s = add(s, sl3.bracket(sl3.bracket(y, z), x));
    s = add(s, sl3.bracket(sl3.bracket(z, x), y));
    REQUIRE(is_zero(s));
  }
}

TEST_CASE("calibrated norm is submultiplicative") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (const char* name : {"sl2", "sl3", "sl4"}) {
    const auto g = builtin_algebra(name);
    double worst = 0;
    for (int trial = 0; trial < 10000; ++trial) {
      RVector u(g.dim()), v(g.dim());
      for (Eigen::Index i = 0; i < u.size(); ++i) {
        u(i) = nd(rng);
        v(i) = nd(rng);
      }
      u /= g.norm(u);
      v /= g.norm(v);
      worst = std::max(worst, g.norm(g.bracket(u, v)));
    }
    CHECK(worst <= 1.0);
  }
}

TEST_CASE("Killing form is ad-invariant") {
  std::mt19937_64 rng(5);
  const auto g = make_sl(3);
  for (int trial = 0; trial < 200; ++trial) {
    const QVector x = random_qvector(rng, 8), y = random_qvector(rng, 8), z = random_qvector(rng, 8);
    CHECK(g.killing_form(g.bracket(x, y), z) + g.killing_form(y, g.bracket(x, z)) == 0);
    CHECK(g.killing_form(x, y) == g.killing_form(y, x));
  }
}

TEST_CASE("weight decomposition") {
  const auto sl2 = make_sl(2);
  const auto& t = *sl2.sl2_triple();
  auto [e0, e1] = sl2.weight_decompose(t.e);
  CHECK(e0 == t.e);
  CHECK(is_zero(e1));
  auto [f0, f1] = sl2.weight_decompose(t.f);
  CHECK(is_zero(f0));
  CHECK(f1 == t.f);

  const auto p = make_sl3_principal();
  const QMatrix ade = p.adjoint_matrix(p.sl2_triple()->e);
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const QVector r = random_qvector(rng, 8);
    auto [r0, r1] = p.weight_decompose(r);
    CHECK(add(r0, r1) == r);
    CHECK(is_zero(ade * r0));
    auto [s0, s1] = p.weight_decompose(r0);
    CHECK(s0 == r0);
    CHECK(is_zero(s1));
  }
  // Principal sl2 in sl3: g = V2 + V4, so ker(ad E) has dimension 2.
  CHECK(p.fixed_subspace().size() == 2);
}

TEST_CASE("invariant complements") {
  const auto sl3 = make_sl(3);
  ExactFrame all;
  for (std::size_t i = 0; i < 8; ++i) all.vectors.push_back(sl3.basis_vector(i));
  CHECK(invariant_complement(sl3, all).size() == 0);

  const auto& t = *sl3.sl2_triple();
  const ExactFrame block{{t.e, t.h, t.f}};
  const ExactFrame comp = invariant_complement(sl3, block);
  CHECK(comp.size() == 5);
  // oracle: Killing-orthogonality to the block and invariance
  for (const auto& r : comp.vectors)
    for (const auto& h : block.vectors) CHECK(sl3.killing_form(r, h) == 0);

  // so(2,1) from the principal triple: complement is the 5-dim symmetric-like part.
  const auto p = make_sl3_principal();
  const auto& pt = *p.sl2_triple();
  const ExactFrame so21{{pt.e, pt.h, pt.f}};
  CHECK(is_subalgebra(p, so21));
  CHECK(invariant_complement(p, so21).size() == 5);

  // float version agrees
  const SubspaceFrame fblock = to_frame(sl3, block);
  const SubspaceFrame fcomp = invariant_complement(sl3, fblock);
  CHECK(fcomp.size() == 5);
  CHECK(subspace_distance(sl3, fcomp, to_frame(sl3, comp)) < 1e-10);
  CHECK(orthonormality_error(sl3, fcomp) < 1e-12);
}

TEST_CASE("dimension mismatches and bad input") {
  const auto sl2 = make_sl(2);
  CHECK_THROWS_AS(sl2.bracket(QVector(3, 0), QVector(8, 0)), DimensionError);
  const auto abelian = LieAlgebraModel({"a", "b"}, std::vector<Rational>(8, 0));
  CHECK_THROWS_AS(abelian.weight_decompose(QVector(2, 0)), DegenerateInput);
  std::vector<Rational> bad(8, 0);
  bad[(0 * 2 + 1) * 2 + 0] = 1;  // [a,b] = a without the antisymmetric partner
  CHECK_THROWS_AS(LieAlgebraModel({"a", "b"}, bad), InvariantViolation);
}

TEST_CASE("JSON round trip") {
  const auto sl3 = make_sl3_principal();
  const auto back = LieAlgebraModel::from_json(sl3.to_json());
  CHECK(back.dim() == 8);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) CHECK(back.bracket(back.basis_vector(i), back.basis_vector(j)) ==
                                              sl3.bracket(sl3.basis_vector(i), sl3.basis_vector(j)));
  CHECK(back.sl2_triple()->h == sl3.sl2_triple()->h);
  CHECK(back.norm_scale() == doctest::Approx(sl3.norm_scale()));
}
