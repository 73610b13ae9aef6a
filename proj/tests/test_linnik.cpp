#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "equi/errors.hpp"
#include "equi/linnik.hpp"

using namespace equi;

namespace {

using Entries = std::array<long, 6>;

long det3(const Entries& m) {
  const long a = m[0], b = m[1], c = m[2], d = m[3], e = m[4], f = m[5];
  return a * (d * f - e * e) - b * (b * f - e * c) + c * (b * e - d * c);
}

std::set<Entries> as_set(const LevelSetSample& s) {
  std::set<Entries> out;
  for (const auto& p : s.points) out.insert(p.m);
  return out;
}

// Six-entry sweep: chart entries in the scaled box by floating comparison away from the
// boundary, m33 over a wide window, determinant computed directly.
std::set<Entries> brute_force(long d, const LevelBox& box, long m33_bound) {
  const double c = std::cbrt(static_cast<double>(d));
  std::array<std::vector<long>, 5> r;
  for (std::size_t i = 0; i < 5; ++i) {
    const double lo = to_double(box.lo[i]) * c, hi = to_double(box.hi[i]) * c;
    for (long m = static_cast<long>(std::floor(lo)) - 1; m <= static_cast<long>(std::ceil(hi)) + 1; ++m)
      if (m >= lo && m < hi) r[i].push_back(m);
  }
  std::set<Entries> out;
  for (long a : r[0])
    for (long b : r[1])
      for (long cc : r[2])
        for (long dd : r[3])
          for (long e : r[4])
            for (long f = -m33_bound; f <= m33_bound; ++f) {
              const Entries m{a, b, cc, dd, e, f};
              if (det3(m) == d) out.insert(m);
            }
  return out;
}

std::size_t cell_of(const RegionGrid& g, std::array<std::size_t, 5> k) { return g.flat_index(k); }

}  // namespace

TEST_CASE("level one contains the anchors") {
  const auto id_box = box_around({Rational(1), Rational(0), Rational(0), Rational(1), Rational(0)}, Rational(1, 4));
  CHECK(as_set(enumerate_levelset(1, id_box)).count({1, 0, 0, 1, 0, 1}) == 1);

  const auto s = enumerate_levelset(1, default_box(Rational(6, 5)));
  const auto pts = as_set(s);
  CHECK(pts.count({-1, 0, 0, -1, 0, 1}) == 1);
  // g^t diag(-1,-1,1) g for g = I + E_12
  CHECK(pts.count({-1, -1, 0, -2, 0, 1}) == 1);
}

TEST_CASE("every point has the right determinant") {
  for (const long d : {1L, 2L, 7L, 30L, 210L, -30L, 1001L}) {
    const auto s = enumerate_levelset(d, default_box());
    for (const auto& p : s.points) {
      CHECK(det3(p.m) == d);
      CHECK(determinant(to_qmatrix(p)) == Rational(d));
    }
  }
}

TEST_CASE("sweep agrees with a six-entry brute force") {
  const auto box = default_box(Rational(3, 5));
  for (const long d : {5L, 30L, 66L}) {
    const auto fast = as_set(enumerate_levelset(d, box));
    long m33 = 0;
    for (const auto& m : fast) m33 = std::max(m33, std::abs(m[5]));
    const auto slow = brute_force(d, box, 4 * m33 + 40);
    CHECK(fast == slow);
    CHECK(!fast.empty());
  }
}

TEST_CASE("negative levels are the negatives") {
  const auto pos = enumerate_levelset(30, default_box());
  const auto neg = enumerate_levelset(-30, default_box());
  REQUIRE(pos.points.size() == neg.points.size());
  for (std::size_t i = 0; i < pos.points.size(); ++i)
    for (std::size_t k = 0; k < 6; ++k) CHECK(neg.points[i].m[k] == -pos.points[i].m[k]);
  CHECK_THROWS_AS(enumerate_levelset(0, default_box()), std::invalid_argument);
}

TEST_CASE("a larger box gives a superset") {
  for (const long d : {30L, 101L, 462L}) {
    const auto small = as_set(enumerate_levelset(d, default_box(Rational(3, 10))));
    const auto large = as_set(enumerate_levelset(d, default_box(Rational(2, 5))));
    CHECK(std::includes(large.begin(), large.end(), small.begin(), small.end()));
    CHECK(large.size() > small.size());
  }
}

TEST_CASE("candidate cap") {
  CHECK_THROWS_AS(enumerate_levelset(20000, default_box()), CapExceeded);
  CHECK_NOTHROW(enumerate_levelset(20000, default_box(), 10'000'000));
}

TEST_CASE("square part cubed divides the level") {
  bool saw_nonprimitive = false;
  for (const long d : {8L, 24L, 54L, 216L, 250L, 1000L}) {
    for (const auto& p : enumerate_levelset(d, default_box()).points) {
      const long s = p.square_part;
      CHECK(d % (s * s * s) == 0);
      saw_nonprimitive = saw_nonprimitive || s > 1;
    }
  }
  CHECK(saw_nonprimitive);
  for (const long d : squarefree_sweep(2, 3000, 20))
    for (const auto& p : enumerate_levelset(d, default_box()).points) CHECK(p.square_part == 1);
}

TEST_CASE("squarefree sweep") {
  CHECK(is_squarefree(30));
  CHECK_FALSE(is_squarefree(12));
  CHECK_FALSE(is_squarefree(49));
  CHECK(is_squarefree(1));
  const auto s = squarefree_sweep(2, 1000, 12);
  CHECK(s.front() == 2);
  CHECK(std::is_sorted(s.begin(), s.end()));
  for (const long d : s) CHECK(is_squarefree(d));
}

TEST_CASE("box parsing") {
  const auto a = parse_box("2/5");
  const auto b = parse_box("-1,0,0,-1,0:0.4");
  const auto c = parse_box("-7/5:-3/5,-2/5:2/5,-2/5:2/5,-7/5:-3/5,-2/5:2/5");
  for (std::size_t i = 0; i < kChartDim; ++i) {
    CHECK(a.lo[i] == b.lo[i]);
    CHECK(a.hi[i] == c.hi[i]);
    CHECK(a.lo[i] == c.lo[i]);
  }
  CHECK(parse_box(to_string(a)).hi[0] == a.hi[0]);
  CHECK_THROWS(parse_box("1,2,3"));
  CHECK_THROWS(parse_box("1:0,0:1,0:1,0:1,0:1"));
}

TEST_CASE("reference masses are invariant under box-preserving signed permutations") {
  const auto g = reference_masses(make_grid(default_box(), 3), 8);
  double sum = 0;
  for (const auto& c : g.cells) sum += c.mass;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  const std::size_t n = g.n;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c)
        for (std::size_t d = 0; d < n; ++d)
          for (std::size_t e = 0; e < n; ++e) {
            const double m = g.cells[cell_of(g, {a, b, c, d, e})].mass;
            CHECK(m > 0);
            // conjugation by diag(1,1,-1): m13, m23 change sign
            CHECK(g.cells[cell_of(g, {a, b, n - 1 - c, d, n - 1 - e})].mass == doctest::Approx(m).epsilon(1e-12));
            // conjugation by diag(-1,1,1): m12, m13 change sign
            CHECK(g.cells[cell_of(g, {a, n - 1 - b, n - 1 - c, d, e})].mass == doctest::Approx(m).epsilon(1e-12));
            // swapping the first two coordinates
            CHECK(g.cells[cell_of(g, {d, b, e, a, c})].mass == doctest::Approx(m).epsilon(1e-12));
          }
}

TEST_CASE("refining the grid keeps the total mass") {
  for (const std::size_t n : {1u, 2u, 3u}) {
    const auto coarse = reference_masses(make_grid(default_box(), n), 8);
    const auto fine = reference_masses(make_grid(default_box(), 2 * n), 8);
    CHECK(std::abs(fine.volume - coarse.volume) < 1e-6);
  }
}

TEST_CASE("reference masses match rejection sampling") {
  const auto g = reference_masses(make_grid(default_box(), 2), 8);
  std::mt19937_64 rng(2024);
  std::array<std::uniform_real_distribution<double>, 5> u;
  for (std::size_t i = 0; i < 5; ++i) u[i] = std::uniform_real_distribution<double>(to_double(g.box.lo[i]), to_double(g.box.hi[i]));
  std::uniform_real_distribution<double> acc(0, 1);
  // A = m11 m22 - m12^2 >= 0.6^2 - 0.4^2 on the box
  const double amin = 0.2;
  const std::size_t N = 200000;
  std::vector<double> counts(g.cells.size(), 0);
  std::size_t accepted = 0;
  while (accepted < N) {
    std::array<double, 5> x;
    for (std::size_t i = 0; i < 5; ++i) x[i] = u[i](rng);
    const double A = x[0] * x[3] - x[1] * x[1];
    if (acc(rng) * A > amin) continue;
    std::array<std::size_t, 5> k;
    for (std::size_t i = 0; i < 5; ++i) k[i] = x[i] < (to_double(g.box.lo[i]) + to_double(g.box.hi[i])) / 2 ? 0 : 1;
    counts[g.flat_index(k)] += 1;
    ++accepted;
  }
  for (std::size_t i = 0; i < g.cells.size(); ++i) {
    const double p = g.cells[i].mass;
    const double sigma = std::sqrt(N * p * (1 - p));
    CHECK(std::abs(counts[i] - N * p) <= 3 * sigma);
  }
}

TEST_CASE("cells on a degenerate chart or a definite region are excluded") {
  // m11 m22 - m12^2 changes sign in this box
  const auto wide = reference_masses(make_grid(default_box(Rational(3, 2)), 4), 4);
  CHECK(std::any_of(wide.cells.begin(), wide.cells.end(), [](const GridCell& c) { return c.reason == "chart"; }));
  CHECK(std::any_of(wide.cells.begin(), wide.cells.end(), [](const GridCell& c) { return !c.excluded; }));
  const auto id_box = box_around({Rational(1), Rational(0), Rational(0), Rational(1), Rational(0)}, Rational(1, 4));
  CHECK_THROWS_AS(reference_masses(make_grid(id_box, 2), 4), DegenerateInput);
}

TEST_CASE("points in excluded cells are not counted") {
  const auto wide = reference_masses(make_grid(default_box(Rational(3, 2)), 4), 4);
  const auto s = enumerate_levelset(30, wide);
  for (const auto& p : s.points)
    if (p.cell >= 0) CHECK_FALSE(wide.cells[static_cast<std::size_t>(p.cell)].excluded);
}

TEST_CASE("distance of a sample proportional to the masses is zero") {
  const auto g = reference_masses(make_grid(default_box(), 2), 8);
  std::vector<double> counts;
  for (const auto& c : g.cells) counts.push_back(1000 * c.mass);
  const auto d = distribution_distance(counts, g);
  CHECK(d.tv < 1e-12);
  CHECK(d.chi2 < 1e-12);
  CHECK_THROWS_AS(distribution_distance(std::vector<double>(g.cells.size(), 0.0), g), DegenerateInput);
}

TEST_CASE("cells are assigned consistently with the scaled coordinates") {
  const auto g = reference_masses(make_grid(default_box(), 3), 4);
  const long d = 2310;
  const double c = std::cbrt(static_cast<double>(d));
  for (const auto& p : enumerate_levelset(d, g).points) {
    REQUIRE(p.cell >= 0);
    const auto& cell = g.cells[static_cast<std::size_t>(p.cell)];
    const std::array<long, 5> chart{p.m[0], p.m[1], p.m[2], p.m[3], p.m[4]};
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(chart[i] / c >= cell.lo[i] - 1e-12);
      CHECK(chart[i] / c < cell.hi[i] + 1e-12);
    }
  }
}

TEST_CASE("threaded enumeration is deterministic") {
  const auto g = reference_masses(make_grid(default_box(), 2), 4);
  const auto levels = squarefree_sweep(2, 2000, 10);
  const auto a = enumerate_levels(levels, g, kDefaultCandidateCap, 1);
  const auto b = enumerate_levels(levels, g, kDefaultCandidateCap, 4);
  for (std::size_t i = 0; i < levels.size(); ++i) CHECK(as_set(a[i]) == as_set(b[i]));
}

TEST_CASE("equidistribution improves along a squarefree sweep") {
  const auto g = reference_masses(make_grid(default_box(), 2), 8);
  const auto levels = squarefree_sweep(2, 7000, 25);
  const auto rep = equidistribution_report(enumerate_levels(levels, g, kDefaultCandidateCap, 4), g);
  CHECK(rep.tv_trend.slope <= 0);
  for (std::size_t i = levels.size() / 4; i < rep.levels.size(); ++i) CHECK(rep.levels[i].growth > 0);
  for (const auto& st : rep.levels) CHECK(st.filtered == 0);
  const auto j = to_json(rep);
  CHECK(j["levels"].size() == levels.size());
}

TEST_CASE("square-part filter") {
  const auto g = reference_masses(make_grid(default_box(), 1), 4);
  const auto s = enumerate_levelset(216, g);
  const auto strict = equidistribution_report({s}, g, 1);
  const auto loose = equidistribution_report({s}, g, 6);
  CHECK(strict.levels[0].filtered > 0);
  CHECK(strict.levels[0].count + strict.levels[0].filtered == loose.levels[0].count);
  CHECK_THROWS_AS(equidistribution_report({LevelSetSample{}}, g), DegenerateInput);
}

TEST_CASE("orbit audit") {
  const auto anchor = enumerate_levelset(1, default_box(Rational(1, 10)));
  REQUIRE(anchor.points.size() == 1);
  const auto a = orbit_audit({anchor}, 1, 5);
  REQUIRE(a.records.size() == 1);
  CHECK(a.records[0].disc == 1728);

  std::vector<LevelSetSample> samples;
  for (const long d : squarefree_sweep(2, 3000, 12)) samples.push_back(enumerate_levelset(d, default_box()));
  const auto audit = orbit_audit(samples, 10, 7);
  CHECK(audit.records.size() >= 50);
  CHECK(audit.conjugation_checks == audit.records.size());
  CHECK(audit.conjugation_failures == 0);
  CHECK(audit.disc_vs_line_height.slope > 0);
  const auto band = check_heightdisc(audit.records);
  CHECK(band.band < 100);
}

TEST_CASE("random unimodular matrices") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 50; ++i) CHECK(determinant(random_unimodular(rng, 6)) == 1);
}
