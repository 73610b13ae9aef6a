// Acceptance run: one PASS/FAIL line per criterion with the measured values and runtime.
// Exit status is the number of failed criteria.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "equi/dioph.hpp"
#include "equi/errors.hpp"
#include "equi/heights.hpp"
#include "equi/lattice_count.hpp"
#include "equi/lie_core.hpp"
#include "equi/linnik.hpp"
#include "equi/stats.hpp"
#include "equi/subalgebra_gen.hpp"
#include "equi/unipotent_dynamics.hpp"

using namespace equi;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool ok = o.pass;
  if (limit_s > 0 && s >= limit_s) {
    ok = false;
    o.detail += "; over time limit " + std::to_string(limit_s) + " s";
  }
  failures += !ok;
  std::printf("%s %-28s %8.2fs  %s\n", ok ? "PASS" : "FAIL", name.c_str(), s, o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4g", x);
  return b;
}

Outcome dioph_suite() {
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<std::size_t> dim(1, 5);
  std::uniform_int_distribution<long> entry(-10, 10);
  std::normal_distribution<double> g;
  std::size_t kernel_fail = 0, bound_fail = 0, floor_fail = 0, trials = 10000;
  double worst = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t n = dim(rng), m = dim(rng);
    ZMatrix z(n, m);
    for (auto& x : z.data) x = entry(rng);
    if (std::all_of(z.data.begin(), z.data.end(), [](const Integer& x) { return x == 0; })) z.data[0] = 1;
    const ExactMatrix a(std::move(z));
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
    for (const auto& k : integer_kernel_basis(a.entries))
      for (std::size_t i = 0; i < m; ++i) v(static_cast<Eigen::Index>(i)) += g(rng) * k[i].get_d();
    Eigen::VectorXd noise(static_cast<Eigen::Index>(m));
    for (auto& x : noise) x = g(rng);
    const double delta = std::pow(10.0, -1.0 - static_cast<double>(t % 6));
    v += delta * noise / noise.norm();
    const double av = (a.to_qmatrix().to_eigen() * v).norm();
    const auto r = kernel_project(a, v, std::max(delta, av));
    kernel_fail += !is_zero(a.to_qmatrix() * r.v0_exact);
    bound_fail += !(r.distance <= r.bound);
    worst = std::max(worst, r.distance / r.bound);
    floor_fail += !singular_value_floor(a).holds;
  }
  std::ostringstream d;
  d << trials << " trials; kernel failures " << kernel_fail << ", bound failures " << bound_fail
    << " (worst distance/bound " << fmt(worst) << "), floor failures " << floor_fail;
  return {kernel_fail == 0 && bound_fail == 0 && floor_fail == 0, d.str()};
}

Outcome subalgebra_recovery() {
  const auto sl3 = make_sl(3);
  bool ok = true;
  std::vector<double> lx, ly;
  std::ostringstream d;
  for (const double delta : {1e-2, 1e-3, 1e-4}) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = prop_E(sl3, perturbed_block_sl2(sl3, delta * delta * delta / 10), delta);
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool this_ok = r.w.size() == 3 && r.closure_defect <= 1e-9 && r.max_generator_distance <= delta &&
                         r.stabilize_iterations <= 8 && s < 5;
    ok = ok && this_ok;
    lx.push_back(std::log(delta));
    ly.push_back(std::log(r.max_residual));
    d << "delta " << fmt(delta) << ": dim " << r.w.size() << ", defect " << fmt(r.closure_defect) << ", gen dist "
      << fmt(r.max_generator_distance) << ", stabilize iters " << r.stabilize_iterations << ", " << fmt(s) << " s; ";
  }
  const double slope = fit_line(lx, ly).slope;
  d << "residual log-log slope " << fmt(slope);
  return {ok && slope > 0, d.str()};
}

Outcome counting_volume() {
  std::size_t mismatched = 0;
  for (long T = 1; T <= 10; ++T) {
    std::vector<Sl2Z> brute;
    for (long a = -T; a <= T; ++a)
      for (long b = -T; b <= T; ++b)
        for (long c = -T; c <= T; ++c)
          for (long e = -T; e <= T; ++e)
            if (a * e - b * c == 1) brute.push_back({a, b, c, e});
    auto fast = enumerate_sl2z(static_cast<double>(T));
    std::sort(brute.begin(), brute.end());
    std::sort(fast.begin(), fast.end());
    mismatched += brute != fast;
  }
  std::vector<double> radii;
  for (int i = 0; i <= 8; ++i) radii.push_back(10 * std::pow(10.0, i / 8.0));
  const auto rep = count_report(radii);
  const auto pair = count_report({100, 200});
  const double r100 = pair.rows[0].ratio, r200 = pair.rows[1].ratio;
  const double rel = std::abs(r200 - r100) / r100;
  const auto decay = phi0_unipotent_decay(1000);
  std::ostringstream d;
  d << "enumeration mismatches " << mismatched << "; volume exponent " << fmt(rep.exponent) << "; count/vol "
    << fmt(r100) << " vs " << fmt(r200) << " (rel " << fmt(rel) << "); phi0 decay slope " << fmt(decay.fit.slope);
  return {mismatched == 0 && rep.exponent >= 1.8 && rep.exponent <= 2.2 && rel <= 0.1 && decay.fit.slope <= -0.8,
          d.str()};
}

RVector random_vector(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1, 1);
  RVector v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = u(rng);
  return v;
}

Outcome polynomial_exactness() {
  const auto sl3 = make_sl(3);
  std::mt19937_64 rng(99);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const RVector r = random_vector(rng, sl3.dim());
    const auto coeffs = divergence_polynomial(sl3, r);
    for (const double t : {1.0, 2.0, 3.0})
      worst = std::max(worst, (evaluate_polynomial(coeffs, t) - conjugate_by_unipotent(sl3, r, t)).cwiseAbs().maxCoeff());
  }
  const auto sl2 = make_sl(2);
  const auto& tr = *sl2.sl2_triple();
  const auto coeffs = divergence_polynomial(sl2, tr.f);
  bool exact = true;
  for (const Rational t : {Rational(1), Rational(2), Rational(3), Rational(-5, 7)}) {
    const QVector expect = add(add(tr.f, scale(tr.h, -t)), scale(tr.e, -(t * t)));
    exact = exact && evaluate_polynomial(coeffs, t) == expect;
  }
  return {worst <= 1e-10 && exact,
          "max |poly - conjugation| " + fmt(worst) + " over 1000 r; sl2 identity exact: " + (exact ? "yes" : "no")};
}

Outcome effective_ergodic() {
  const auto family = default_test_family();
  std::mt19937_64 rng(314159);
  std::vector<ModularPoint> points;
  for (int i = 0; i < 200; ++i) points.push_back(ModularPoint::random(rng));
  std::vector<GenericityVerdict> verdicts(points.size());
  std::atomic<std::size_t> next{0};
  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < points.size();) verdicts[i] = genericity_test(points[i], family, 5, 25, 3);
    });
  for (auto& t : pool) t.join();
  std::size_t pass = 0, negative = 0;
  for (const auto& v : verdicts) {
    pass += v.pass;
    negative += v.pass && v.slope < 0;
  }
  const double pass_frac = static_cast<double>(pass) / 200.0;
  const double neg_frac = pass ? static_cast<double>(negative) / static_cast<double>(pass) : 0.0;
  return {pass_frac >= 0.8 && neg_frac >= 0.9, std::to_string(pass) + "/200 generic (" + fmt(100 * pass_frac) +
                                                   "%), negative slope " + fmt(100 * neg_frac) + "% of those; " +
                                                   std::to_string(workers) + " threads"};
}

Outcome escape() {
  const auto e = escape_of_mass({2, 5, 10, 20, 50});
  return {e.fit.slope <= -0.5, "log-log slope of mu(ht > R) over R in [2, 50]: " + fmt(e.fit.slope)};
}

// Largest level of the sweep: squarefree d near the enumeration cap.
constexpr long kSweepMax = 7500;

Outcome linnik_suite() {
  const auto levels = squarefree_sweep(2, kSweepMax, 40);
  const auto grid = reference_masses(make_grid(default_box(), 2));
  const auto samples = enumerate_levels(levels, grid, kDefaultCandidateCap, std::max(1u, std::thread::hardware_concurrency()));
  std::size_t points = 0, imprimitive = 0;
  for (const auto& s : samples)
    for (const auto& p : s.points) {
      ++points;
      imprimitive += p.square_part != 1;
    }
  const auto audit = orbit_audit(samples, 4, 77);
  const auto rep = equidistribution_report(samples, grid);
  const std::size_t quartile = rep.levels.size() / 4;
  std::size_t growth_bad = 0;
  double min_growth = INFINITY;
  for (std::size_t i = quartile; i < rep.levels.size(); ++i) {
    growth_bad += !(rep.levels[i].growth > 0);
    min_growth = std::min(min_growth, rep.levels[i].growth);
  }
  std::ostringstream d;
  d << levels.size() << " levels up to " << levels.back() << ", " << points << " points, imprimitive " << imprimitive
    << "; disc checks " << audit.conjugation_checks << " failures " << audit.conjugation_failures << "; tv trend "
    << fmt(rep.tv_trend.slope) << "; min growth past first quartile " << fmt(min_growth);
  return {imprimitive == 0 && audit.conjugation_checks >= 100 && audit.conjugation_failures == 0 &&
              rep.tv_trend.slope <= 0 && growth_bad == 0,
          d.str()};
}

Outcome height_disc() {
  std::vector<LevelSetSample> samples;
  for (long d = 2; d <= 300; ++d)
    if (is_squarefree(d)) samples.push_back(enumerate_levelset(d, default_box()));
  const auto audit = orbit_audit(samples, 2, 5, false);
  const auto band = check_heightdisc(audit.records);
  return {audit.records.size() >= 50 && band.band <= 100,
          std::to_string(audit.records.size()) + " orbits; ratio in [" + fmt(band.min_ratio) + ", " +
              fmt(band.max_ratio) + "], band " + fmt(band.band)};
}

}  // namespace

int main() {
  criterion("dioph bound suite", 10, dioph_suite);
  criterion("subalgebra recovery", 0, subalgebra_recovery);
  criterion("counting/volume", 60, counting_volume);
  criterion("polynomial divergence", 0, polynomial_exactness);
  criterion("effective ergodic behavior", 300, effective_ergodic);
  criterion("escape of mass", 0, escape);
  criterion("Linnik suite (r = 3)", 600, linnik_suite);
  criterion("height/disc relation", 0, height_disc);
  std::printf("%d criteria failed\n", failures);
  return failures;
}
