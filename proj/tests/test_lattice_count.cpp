#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "equi/errors.hpp"
#include "equi/lattice_count.hpp"

using namespace equi;

namespace {

constexpr double kPi = std::numbers::pi;

// Every integer matrix with entries in [-n, n] and determinant 1.
std::vector<Sl2Z> brute_force(long n) {
  std::vector<Sl2Z> out;
  for (long a = -n; a <= n; ++a)
    for (long b = -n; b <= n; ++b)
      for (long c = -n; c <= n; ++c)
        for (long d = -n; d <= n; ++d)
          if (a * d - b * c == 1) out.push_back({a, b, c, d});
  return out;
}

double agm_phi0(double t) {
  double a = std::exp(t / 2), b = std::exp(-t / 2);
  for (int i = 0; i < 64; ++i) {
    const double m = (a + b) / 2;
    b = std::sqrt(a * b);
    a = m;
  }
  return 1 / a;
}

Eigen::Matrix2d rot(double a) {
  Eigen::Matrix2d k;
  k << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return k;
}

// Haar volume of the ball in Iwasawa coordinates g = n_x a_y k_theta with dx dy / y^2 dtheta.
double iwasawa_volume(double T) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
  auto length = [T](double y, double s, double c) {
    const double r = std::sqrt(y);
    // |r c + x s / r| <= T and |-r s + x c / r| <= T
    double lo = -INFINITY, hi = INFINITY;
    auto clip = [&](double slope, double offset) {
      const double u = (-T - offset) * r / slope, v = (T - offset) * r / slope;
      lo = std::max(lo, std::min(u, v));
      hi = std::min(hi, std::max(u, v));
    };
    clip(s, r * c);
    clip(c, -r * s);
    return std::max(0.0, hi - lo);
  };
  auto over_y = [&](double theta) {
    const double s = std::sin(theta), c = std::cos(theta);
    const double y0 = std::pow(std::max(std::abs(s), std::abs(c)) / T, 2);
    const double y1 = T * T * std::pow(std::abs(s) + std::abs(c), 2);
    if (y0 >= y1) return 0.0;
    return GK::integrate([&](double y) { return length(y, s, c) / (y * y); }, y0, y1, 20, 1e-11);
  };
  // the integrand in theta has period pi/2; offset avoids sin or cos vanishing exactly
  return 4 * GK::integrate(over_y, 1e-9, kPi / 2 - 1e-9, 20, 1e-10);
}

}  // namespace

TEST_CASE("enumeration matches brute force for T <= 10") {
  for (long T = 1; T <= 10; ++T) {
    const auto fast = enumerate_sl2z(static_cast<double>(T));
    const auto slow = brute_force(T);
    const std::set<Sl2Z> a(fast.begin(), fast.end()), b(slow.begin(), slow.end());
    CHECK(a.size() == fast.size());
    CHECK(a == b);
    CHECK(fast.size() % 2 == 0);
    CHECK(count_sl2z(static_cast<double>(T)) == fast.size());
  }
  // radius is the floor of T
  CHECK(enumerate_sl2z(2.7) == enumerate_sl2z(2.0));
  CHECK(enumerate_sl2z(0.9).empty());
}

TEST_CASE("T = 1 elements") {
  const auto one = enumerate_sl2z(1);
  const std::set<Sl2Z> s(one.begin(), one.end());
  CHECK(s.count({1, 0, 0, 1}));
  CHECK(s.count({-1, 0, 0, -1}));
  CHECK(s.count({0, 1, -1, 0}));
  CHECK(s.count({0, -1, 1, 0}));
  CHECK(one.size() == brute_force(1).size());
}

TEST_CASE("enumerated elements have norm equal to inverse norm") {
  for (const auto& g : enumerate_sl2z(40)) {
    REQUIRE(g[0] * g[3] - g[1] * g[2] == 1);
    const Sl2Z inv{g[3], -g[1], -g[2], g[0]};
    CHECK(group_norm(g) == group_norm(inv));
    CHECK(group_norm(g) <= 40);
  }
}

TEST_CASE("threaded enumeration is identical") {
  CHECK(enumerate_sl2z(60, 4) == enumerate_sl2z(60, 1));
  CHECK(count_sl2z(150, 3) == count_sl2z(150, 1));
}

TEST_CASE("radius cap") {
  CHECK_THROWS_AS(enumerate_sl2z(501), CapExceeded);
  CHECK_THROWS_AS(count_sl2z(1e9), CapExceeded);
  CHECK_NOTHROW(count_sl2z(500));
}

TEST_CASE("group norm: inverse symmetry and submultiplicativity") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> z(0, 1);
  for (int n : {2, 3}) {
    for (int trial = 0; trial < 2000; ++trial) {
      Eigen::MatrixXd g1(n, n), g2(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          g1(i, j) = z(rng);
          g2(i, j) = z(rng);
        }
      if (std::abs(g1.determinant()) < 1e-3 || std::abs(g2.determinant()) < 1e-3) continue;
      CHECK(group_norm(g1) == doctest::Approx(group_norm(Eigen::MatrixXd(g1.inverse()))));
      CHECK(group_norm(Eigen::MatrixXd(g1 * g2)) <= n * group_norm(g1) * group_norm(g2) * (1 + 1e-12));
    }
  }
}

TEST_CASE("ball volume agrees with an Iwasawa-coordinate oracle") {
  for (double T : {1.0, 3.0, 7.5}) {
    const auto v = ball_volume(T, 512);
    const double oracle = iwasawa_volume(T);
    INFO("T = " << T << " cartan " << v.value << " iwasawa " << oracle);
    CHECK(std::abs(v.value - oracle) <= 2e-4 * oracle);
    CHECK(v.error <= 1e-3 * v.value);
  }
  // no element of SL_2(R) has all entries below 1/sqrt(2)
  CHECK(ball_volume(0.7).value == 0);
}

TEST_CASE("ball volume is monotone and grows like T^2") {
  double previous = 0;
  std::vector<double> ts, vs;
  for (double T = 10; T <= 100; T += 5) {
    const double v = ball_volume(T).value;
    CHECK(v > previous);
    previous = v;
    ts.push_back(T);
    vs.push_back(v);
  }
  const auto fit = fit_loglog(ts, vs);
  CHECK(fit.slope >= 1.8);
  CHECK(fit.slope <= 2.2);
}

TEST_CASE("count / volume stabilizes") {
  const auto report = count_report({50, 100, 200, 300});
  REQUIRE(report.rows.size() == 4);
  CHECK(report.monotone);
  const double r100 = report.rows[1].ratio, r200 = report.rows[2].ratio;
  CHECK(std::abs(r100 - r200) <= 0.1 * r200);
  for (std::size_t i = 1; i < report.rows.size(); ++i)
    CHECK(std::abs(report.rows[i].ratio / report.rows[i - 1].ratio - 1) <= 0.1);
  // Gamma \ G has Haar volume (pi/3) * pi in this normalization: the hyperbolic area of the
  // fundamental domain times the fiber K / {+-1}
  const double limit = 3 / (kPi * kPi);
  CHECK(report.rows[3].ratio == doctest::Approx(limit).epsilon(0.02));
  CHECK(to_csv(report).rfind("T,count,vol,vol_error,ratio,phi0_avg\n", 0) == 0);
}

TEST_CASE("phi0 matches the AGM closed form") {
  CHECK(spherical_phi0(Eigen::Matrix2d::Identity()) == doctest::Approx(1.0).epsilon(1e-15));
  double previous = 1.0;
  for (double t = 0.05; t <= 30; t += 0.35) {
    const double v = spherical_phi0_cartan(t);
    CHECK(v == doctest::Approx(agm_phi0(t)).epsilon(1e-12));
    CHECK(spherical_phi0_cartan(-t) == v);
    CHECK(v > 0);
    CHECK(v < previous);
    previous = v;
  }
}

TEST_CASE("phi0 is bi-K-invariant (direct integral over K without reduction)") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ang(0, 2 * kPi), tt(0, 4);
  for (int trial = 0; trial < 20; ++trial) {
    const double t = tt(rng);
    const Eigen::Matrix2d g = rot(ang(rng)) * Eigen::Vector2d(std::exp(t / 2), std::exp(-t / 2)).asDiagonal() * rot(ang(rng));
    // periodic trapezoid of y(kg)^{1/2} over K, y read off the Iwasawa bottom row
    const int n = 4000;
    double sum = 0;
    for (int i = 0; i < n; ++i) {
      const Eigen::Matrix2d x = rot(2 * kPi * i / n) * g;
      sum += 1 / std::hypot(x(1, 0), x(1, 1));
    }
    CHECK(spherical_phi0(g) == doctest::Approx(sum / n).epsilon(1e-9));
  }
  Eigen::Matrix2d bad;
  bad << 2, 0, 0, 2;
  CHECK_THROWS_AS(spherical_phi0(bad), DimensionError);
}

TEST_CASE("phi0 along the unipotent ray decays at least like (1+t)^{-0.8}") {
  const auto d = phi0_unipotent_decay(1000);
  REQUIRE(d.phi.size() == 1000);
  CHECK(d.fit.slope <= -0.8);
  CHECK(d.fit.slope >= -1.0);
  for (std::size_t i = 0; i < d.phi.size(); ++i)
    CHECK(d.phi[i] <= d.constant * std::pow(1 + d.t[i], -0.9) * (1 + 1e-12));
}

TEST_CASE("spherical table") {
  const SphericalTable table(12, 1.0);
  for (double t : {0.0, 0.013, 1.7, 6.25, 11.9}) CHECK(table.phi(t) == doctest::Approx(agm_phi0(t)).epsilon(1e-5));
  CHECK_THROWS(table.phi(13));
  // power 0 turns the cumulative integral into cosh t - 1
  const SphericalTable flat(8, 0.0);
  for (double t : {0.5, 3.0, 7.9}) CHECK(flat.cumulative(t) == doctest::Approx(std::cosh(t) - 1).epsilon(1e-5));
}

TEST_CASE("ball integrals reduce to volumes at power 0") {
  const SphericalTable flat(2 * std::acosh(2 * 30.0 * 30.0) + 0.1, 0.0);
  const double vol = ball_volume(30).value;
  CHECK(ball_phi_integral(30, flat).value == doctest::Approx(vol).epsilon(1e-4));
  const auto mc = ball_double_phi_integral(30, flat, 4000, 11);
  CHECK(std::abs(mc.value - vol * vol) <= 4 * mc.std_error);
  // deterministic for a fixed seed
  CHECK(ball_double_phi_integral(30, flat, 500, 5).value == ball_double_phi_integral(30, flat, 500, 5).value);
}

TEST_CASE("club averages") {
  const SphericalTable table(24, 1.0);
  std::vector<double> vols, pairs, single_constants;
  for (double R : {2.0, 4.0, 6.0, 8.0, 10.0, 12.0}) {
    const auto c = club_averages(R, 2.0, table);
    // direct 1-d check of the single average
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double direct =
        GK::integrate([](double t) { return agm_phi0(t) * std::sinh(t); }, 0, R, 15, 1e-12) / (std::cosh(R) - 1);
    CHECK(c.single == doctest::Approx(direct).epsilon(1e-4));
    CHECK(c.single <= 1);
    CHECK(c.pair <= 1);
    CHECK(c.pair > 0);
    vols.push_back(c.volume);
    pairs.push_back(c.pair);
    single_constants.push_back(c.single / c.single_bound);
  }
  // vol^{-1} int phi_0 << vol^{-1/3}: the implied constant behaves like R e^{-R/6}, bounded
  // and eventually decreasing
  for (const double c : single_constants) CHECK(c <= 10);
  CHECK(single_constants[5] < single_constants[4]);
  CHECK(single_constants[4] < single_constants[3]);
  // the p = 2 double average decays as a positive power of the volume
  CHECK(fit_loglog(vols, pairs).slope < 0);
  CHECK_THROWS(club_averages(13, 2.0, table));
}

TEST_CASE("sl32 bounds") {
  Sl32Options opt;
  opt.mc_pairs = 5000;
  const auto tiny = check_sl32_bounds(0.5, opt);
  CHECK(tiny.lattice_count == 0);
  CHECK_FALSE(tiny.lower_binding);
  CHECK(tiny.lower_holds);

  std::vector<double> lower, upper;
  for (double T : {20.0, 50.0, 100.0}) {
    const auto r = check_sl32_bounds(T, opt);
    INFO("T = " << T << " lower " << r.lower_constant << " upper " << r.upper_constant);
    CHECK(r.lower_binding);
    CHECK(r.lower_holds);
    CHECK(r.upper_holds);
    CHECK(r.vol_Btilde > r.vol_B);
    CHECK(r.club_single_constant > 0);
    lower.push_back(r.lower_constant);
    upper.push_back(r.upper_constant);
  }
  // constants stay in a band
  CHECK(*std::max_element(lower.begin(), lower.end()) <= 1.5 * *std::min_element(lower.begin(), lower.end()));
  CHECK(*std::max_element(upper.begin(), upper.end()) <= 1.5 * *std::min_element(upper.begin(), upper.end()));
}
