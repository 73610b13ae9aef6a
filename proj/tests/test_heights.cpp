#include "doctest.h"

#include <cmath>
#include <random>

#include "equi/errors.hpp"
#include "equi/heights.hpp"

using namespace equi;

namespace {

// Exhaustive oracle over a coefficient box.
double brute_shortest(const RMatrix& b, double scale, int box) {
  const auto n = b.cols();
  std::vector<int> c(static_cast<std::size_t>(n), -box);
  double best = INFINITY;
  while (true) {
    bool nonzero = false;
    RVector x(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      x(i) = c[static_cast<std::size_t>(i)];
      nonzero = nonzero || c[static_cast<std::size_t>(i)] != 0;
    }
    if (nonzero) best = std::min(best, scale * (b * x).norm());
    std::size_t k = 0;
    while (k < c.size() && c[k] == box) c[k++] = -box;
    if (k == c.size()) break;
    ++c[k];
  }
  return best;
}

QMatrix random_unimodular(std::mt19937_64& rng) {
  // product of elementary integer matrices
  QMatrix g = QMatrix::identity(3);
  std::uniform_int_distribution<int> pick(0, 2), coef(-2, 2);
  for (int s = 0; s < 6; ++s) {
    const int i = pick(rng), j = pick(rng);
    if (i == j) continue;
    QMatrix e = QMatrix::identity(3);
    e(i, j) = coef(rng);
    g = g * e;
  }
  return g;
}

Rational killing_det_oracle(const LieAlgebraModel& sl3, const std::vector<QVector>& basis) {
  // B(X,Y) = 6 tr(XY) on sl3
  QMatrix b(basis.size(), basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i)
    for (std::size_t j = 0; j < basis.size(); ++j)
      b(i, j) = Rational(6) * (sl3.to_matrix(basis[i]) * sl3.to_matrix(basis[j])).trace();
  return determinant(b);
}

}  // namespace

TEST_CASE("shortest vectors of simple lattices") {
  CHECK(shortest_vector(LatticeFrame(RMatrix::Identity(4, 4))).length == doctest::Approx(1.0));
  RMatrix hex(2, 2);
  hex << 1.0, 0.5, 0.0, std::sqrt(3.0) / 2 * (1 + 1e-9);
  const auto sv = shortest_vector(LatticeFrame(hex));
  CHECK(sv.length == doctest::Approx(brute_shortest(hex, 1.0, 6)).epsilon(1e-12));
  CHECK(sv.length == doctest::Approx(1.0));
  CHECK_THROWS_AS(shortest_vector(LatticeFrame(RMatrix::Identity(11, 11))), CapExceeded);
}

TEST_CASE("shortest vector agrees with box enumeration on random lattices") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + trial % 3;
    RMatrix b = RMatrix::Identity(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) b(i, j) += 0.6 * nd(rng);
    if (std::abs(b.determinant()) < 0.2) continue;
    const auto sv = shortest_vector(LatticeFrame(b, 1.7));
    CHECK(sv.length == doctest::Approx(brute_shortest(b, 1.7, 5)).epsilon(1e-10));
    // returned coefficients reproduce the vector
    RVector c(n);
    for (int i = 0; i < n; ++i) c(i) = static_cast<double>(sv.coeffs[static_cast<std::size_t>(i)]);
    CHECK((b * c - sv.vector).norm() < 1e-9);
  }
}

TEST_CASE("sl2(Z) in the calibrated norm") {
  const auto sl2 = make_sl(2);
  const auto lat = adjoint_lattice(sl2, RMatrix::Identity(2, 2));
  const double len = shortest_vector(lat).length;
  CHECK(len == doctest::Approx(brute_shortest(lat.basis, lat.scale, 3)));
  CHECK(len == doctest::Approx(sl2.norm_scale()));
  CHECK(height_of_point(sl2, RMatrix::Identity(2, 2)) == doctest::Approx(1.0 / sl2.norm_scale()));
}

TEST_CASE("height grows along the diagonal flow") {
  const auto sl2 = make_sl(2);
  double last = 0;
  for (int k = 0; k <= 50; ++k) {
    const double t = 0.1 * k;
    RMatrix a(2, 2);
    a << std::exp(t / 2), 0, 0, std::exp(-t / 2);
    const double h = height_of_point(sl2, a);
    CHECK(h >= last * (1 - 1e-12));
    // Ad(a^{-1}) rescales E by e^{-t}: shortest vector is that image.
    CHECK(h == doctest::Approx(std::exp(t) / sl2.norm_scale()));
    last = h;
  }
}

TEST_CASE("height distortion constant") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> nd;
  const auto sl3 = make_sl(3);
  double worst = 0;
  for (int trial = 0; trial < 40; ++trial) {
    RMatrix x = RMatrix::Identity(3, 3), g = RMatrix::Identity(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        x(i, j) += 0.5 * nd(rng);
        g(i, j) += 0.5 * nd(rng);
      }
    x /= std::cbrt(x.determinant());
    g /= std::cbrt(g.determinant());
    const double c = height_of_point(sl3, x * g) / (adjoint_group_norm(sl3, g) * height_of_point(sl3, x));
    worst = std::max(worst, c);
  }
  // |Ad(g^{-1})|_op <= dim * max entry.
  CHECK(worst <= 8.0);
  MESSAGE("measured distortion constant " << worst);
}

TEST_CASE("subspace heights") {
  CHECK(subspace_height({{0, 0, 1}}, 3).height == doctest::Approx(1.0));
  CHECK(subspace_height({{1, 2}}, 2).height_squared == 5);
  CHECK(subspace_height({{2, 4}}, 2).height_squared == 5);
  CHECK_THROWS_AS(subspace_height({{0, 0}}, 2), DegenerateInput);
  // invariance under unimodular recombination of the spanning set
  const std::vector<QVector> w{{1, 2, 3, 4}, {0, 1, -1, 2}};
  const std::vector<QVector> w2{add(w[0], scale(w[1], 3)), add(scale(w[0], 2), scale(w[1], 7))};
  CHECK(subspace_height(w, 4).height_squared == subspace_height(w2, 4).height_squared);
}

TEST_CASE("Case A stabilizers") {
  const auto sl3 = make_sl(3);
  const auto so3 = stabilizer_algebra(sl3, QMatrix::identity(3));
  CHECK(so3.size() == 3);
  for (const auto& v : so3.vectors) {
    const QMatrix x = sl3.to_matrix(v);
    CHECK(x.transpose() == x.scaled(-1));
  }
  const QMatrix y = QMatrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, -1}});
  const auto so21 = stabilizer_algebra(sl3, y);
  CHECK(so21.size() == 3);
  for (const auto& v : so21.vectors) {
    const QMatrix x = sl3.to_matrix(v);
    CHECK((x.transpose() * y + y * x).is_zero());
  }
  CHECK(is_subalgebra(sl3, so21));
  CHECK_THROWS_AS(stabilizer_algebra(sl3, QMatrix::from_rows({{1, 0, 0}, {0, 0, 0}, {0, 0, 1}})), DegenerateInput);

  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const QMatrix g = random_unimodular(rng);
    const QMatrix gi = inverse(g);
    const auto conj = stabilizer_algebra(sl3, g.transpose() * y * g);
    // span(conj) = g^{-1} so21 g
    std::vector<QVector> rows = conj.vectors;
    for (const auto& v : so21.vectors) rows.push_back(sl3.from_matrix(gi * sl3.to_matrix(v) * g));
    CHECK(rank(QMatrix::from_rows(rows)) == 3);
  }
}

TEST_CASE("orbit discriminants") {
  const auto sl3 = make_sl(3);
  const auto& t = *sl3.sl2_triple();
  const ExactFrame block{{t.e, t.h, t.f}};
  const auto d0 = orbit_discriminant(sl3, block);
  // block basis is part of the lattice basis, so saturated: disc = |det B|
  CHECK(Rational(d0.disc) == abs(killing_det_oracle(sl3, block.vectors)));
  CHECK(d0.disc == 432);

  ExactFrame scaled = block;
  scaled.vectors[1] = scale(scaled.vectors[1], 3);
  const auto d1 = orbit_discriminant(sl3, scaled);
  CHECK(d1.v == d0.v);

  const QMatrix y = QMatrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, -1}});
  const auto stab = stabilizer_algebra(sl3, y);
  const auto sat = saturate(stab.vectors, 8);
  std::vector<QVector> satq;
  for (const auto& z : sat) {
    QVector q;
    for (const auto& c : z) q.emplace_back(c);
    satq.push_back(q);
  }
  const auto dy = orbit_discriminant(sl3, stab);
  CHECK(Rational(dy.disc) == abs(killing_det_oracle(sl3, satq)));
  CHECK(dy.disc == 1728);

  // conjugation invariance
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const QMatrix g = random_unimodular(rng);
    CHECK(orbit_discriminant(sl3, stabilizer_algebra(sl3, g.transpose() * y * g)).disc == dy.disc);
  }
}

TEST_CASE("disc growth along diag(1,1,-d)") {
  const auto sl3 = make_sl(3);
  std::vector<double> xs, ys;
  for (long d = 2; d <= 500; ++d) {
    bool squarefree = true;
    for (long p = 2; p * p <= d; ++p)
      if (d % (p * p) == 0) squarefree = false;
    if (!squarefree || d % 7 != 2) continue;  // thin the sweep
    const QMatrix y = QMatrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, -d}});
    const auto stab = stabilizer_algebra(sl3, y);
    const auto sat = saturate(stab.vectors, 8);
    std::vector<QVector> satq;
    for (const auto& z : sat) {
      QVector q;
      for (const auto& c : z) q.emplace_back(c);
      satq.push_back(q);
    }
    const Integer disc = orbit_discriminant(sl3, stab).disc;
    CHECK(Rational(disc) == abs(killing_det_oracle(sl3, satq)));
    xs.push_back(std::log(static_cast<double>(d)));
    ys.push_back(std::log(disc.get_d()));
  }
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  MESSAGE("log disc / log d slope " << slope);
  CHECK(slope > 0);
}

TEST_CASE("height/disc ratio records") {
  const auto sl3 = make_sl(3);
  const auto rec = make_orbit_record(sl3, QMatrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, -1}}));
  CHECK(rec.level == -1);
  CHECK(rec.square_part == 1);
  CHECK(rec.disc == 1728);
  const auto rep = check_heightdisc({rec});
  CHECK(rep.count == 1);
  CHECK(rep.band == doctest::Approx(1.0));
  // Euclidean height of the saturated so(2,1) basis {E12-E21, E13+E31, E23+E32} is sqrt(8).
  CHECK(rec.subspace_height == doctest::Approx(std::pow(sl3.norm_scale(), 3) * std::sqrt(8.0)));
}
