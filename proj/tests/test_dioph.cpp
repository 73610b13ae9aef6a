#include "doctest.h"

#include <cmath>
#include <random>

#include "equi/dioph.hpp"
#include "equi/errors.hpp"

using namespace equi;

namespace {

ExactMatrix random_matrix(std::mt19937_64& rng, std::size_t n, std::size_t m) {
  std::uniform_int_distribution<int> entry(-10, 10);
  ZMatrix z(n, m);
  for (auto& x : z.data) x = entry(rng);
  if (std::all_of(z.data.begin(), z.data.end(), [](const Integer& x) { return x == 0; })) z.data[0] = 1;
  return ExactMatrix(std::move(z));
}

double smallest_nonzero_sv(const Eigen::MatrixXd& a) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto s = svd.singularValues();
  double best = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > 1e-9 * s(0)) best = s(i);
  return best;
}

}  // namespace

TEST_CASE("zero matrix keeps everything") {
  const auto a = ExactMatrix::from_rows({{0, 0}, {0, 0}});
  Eigen::VectorXd v(2);
  v << 0.3, -1.7;
  const auto r = kernel_project(a, v, 0.1);
  CHECK((r.v0 - v).norm() < 1e-15);
  CHECK(r.bound < 1e-18);
  CHECK(r.distance <= r.bound);
}

TEST_CASE("hand-checked 2x2 projection") {
  const auto a = ExactMatrix::from_rows({{1, 0}, {0, 0}});
  const double delta = 1.0 / 1024;
  Eigen::VectorXd v(2);
  v << delta, 1.0;
  const auto r = kernel_project(a, v, delta);
  CHECK(r.v0_exact == QVector{0, 1});
  CHECK(r.distance == doctest::Approx(delta));
  CHECK(r.bound == doctest::Approx(4 * delta));
  CHECK_FALSE(r.delta_replaced);
}

TEST_CASE("residual larger than delta replaces delta") {
  const auto a = ExactMatrix::from_rows({{1, 0}, {0, 0}});
  Eigen::VectorXd v(2);
  v << 0.5, 1.0;
  const auto r = kernel_project(a, v, 1e-3);
  CHECK(r.delta_replaced);
  CHECK(r.delta_used == doctest::Approx(0.5));
  CHECK(r.distance <= r.bound);
}

TEST_CASE("randomized kernel projections respect the certified radius") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(1, 5);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = dim(rng), m = dim(rng);
    const auto a = random_matrix(rng, n, m);
    // ground truth: a kernel vector plus noise of norm delta
    const auto ker = integer_kernel_basis(a.entries);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
    for (const auto& k : ker)
      for (std::size_t i = 0; i < m; ++i) v(static_cast<Eigen::Index>(i)) += nd(rng) * k[i].get_d();
    Eigen::VectorXd noise(static_cast<Eigen::Index>(m));
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise(i) = nd(rng);
    const double delta = std::pow(10.0, -1 - (trial % 6));
    v += delta * noise / noise.norm();
    const Eigen::MatrixXd ad = a.to_qmatrix().to_eigen();
    const double av = (ad * v).norm();
    const auto r = kernel_project(a, v, std::max(delta, av));
    REQUIRE(is_zero(a.to_qmatrix() * r.v0_exact));
    REQUIRE(r.distance <= r.bound);
    if (ker.size() < m) {
      const double sigma = smallest_nonzero_sv(ad);
      // nearest kernel point: |v - v0| <= |Av| / sigma_min
      REQUIRE(r.distance <= av / sigma * (1 + 1e-9) + 1e-15);
    }
  }
}

TEST_CASE("singular value floor examples") {
  const auto id = ExactMatrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  const auto f = singular_value_floor(id);
  CHECK(f.sigma_min == doctest::Approx(1.0));
  CHECK(f.floor_sq == Rational(1, 729));
  CHECK(f.holds);

  // AA^t = [[2,2],[2,2]] has eigenvalues 4 and 0.
  const auto ones = ExactMatrix::from_rows({{1, 1}, {1, 1}});
  const auto g = singular_value_floor(ones);
  CHECK(g.sigma_min == doctest::Approx(2.0));
  CHECK(g.floor == doctest::Approx(0.25));
  CHECK(g.rank == 1);
  CHECK(g.sigma_sq_lo <= 4);
  CHECK(g.sigma_sq_hi >= 4);

  CHECK_THROWS_AS(singular_value_floor(ExactMatrix::from_rows({{0, 0}})), DegenerateInput);
}

TEST_CASE("singular value floor never violated on random matrices") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> dim(1, 5);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto a = random_matrix(rng, dim(rng), dim(rng));
    const auto f = singular_value_floor(a);
    REQUIRE(f.holds);
    const double oracle = smallest_nonzero_sv(a.to_qmatrix().to_eigen());
    CHECK(f.sigma_min == doctest::Approx(oracle).epsilon(1e-8));
    CHECK(f.sigma_min >= f.floor);
  }
}

TEST_CASE("cutting sets") {
  const std::vector<QVector> plane{{1, 0, 0}, {0, 1, 0}};
  CHECK(minimal_cutting_set({plane, plane, plane}, 3).size() == 1);

  const std::vector<QVector> xy{{1, 0, 0}, {0, 1, 0}}, yz{{0, 1, 0}, {0, 0, 1}}, xz{{1, 0, 0}, {0, 0, 1}};
  const auto idx = minimal_cutting_set({xy, yz, xy, xz, yz, xz}, 3);
  CHECK(idx.size() == 3);
  CHECK(intersect_subspaces({xy, yz, xy, xz, yz, xz}, 3, idx).empty());

  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> c(-3, 3);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<std::vector<QVector>> hyperplanes;
    for (int h = 0; h < 50; ++h) {
      QVector normal(6);
      for (auto& x : normal) x = c(rng);
      if (is_zero(normal)) normal[0] = 1;
      hyperplanes.push_back(kernel_basis(QMatrix::from_rows({normal})));
    }
    const auto sel = minimal_cutting_set(hyperplanes, 6);
    CHECK(sel.size() <= 6);
    const auto all = intersect_subspaces(hyperplanes, 6);
    const auto part = intersect_subspaces(hyperplanes, 6, sel);
    CHECK(all.size() == part.size());
  }
}
