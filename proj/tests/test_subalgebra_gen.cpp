#include "doctest.h"

#include <cmath>
#include <random>

#include "equi/errors.hpp"
#include "equi/subalgebra_gen.hpp"

using namespace equi;

namespace {

RVector unit(const LieAlgebraModel& g, const QVector& v) { return to_eigen(v) / g.norm(to_eigen(v)); }

// Exact oracle: rank of all brackets of depth <= k.
std::size_t exact_closure_rank(const LieAlgebraModel& g, const std::vector<QVector>& t, std::size_t k) {
  std::vector<std::vector<QVector>> levels{{}, t};
  for (std::size_t d = 2; d <= k; ++d) {
    std::vector<QVector> level;
    for (std::size_t i = 1; i < d; ++i)
      for (const auto& a : levels[i])
        for (const auto& b : levels[d - i]) level.push_back(g.bracket(a, b));
    levels.push_back(level);
  }
  std::vector<QVector> all;
  for (const auto& l : levels) all.insert(all.end(), l.begin(), l.end());
  return rank(QMatrix::from_rows(all));
}

SubspaceFrame frame_of(const LieAlgebraModel& g, const std::vector<RVector>& vs) {
  RMatrix m(static_cast<Eigen::Index>(g.dim()), static_cast<Eigen::Index>(vs.size()));
  for (std::size_t i = 0; i < vs.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = vs[i];
  return orthonormalize(g, m);
}

}  // namespace

TEST_CASE("iterated brackets") {
  const auto sl2 = make_sl(2);
  const auto& t = *sl2.sl2_triple();
  const auto only_h = iterated_brackets(sl2, {unit(sl2, t.h)}, 3);
  CHECK(only_h.size() == 1);

  const auto ef = iterated_brackets(sl2, {to_eigen(t.e), to_eigen(t.f)}, 2);
  bool has_h = false;
  for (const auto& el : ef.elements())
    if ((el.v - to_eigen(t.h)).norm() < 1e-14) has_h = true;
  CHECK(has_h);

  const auto sl3 = make_sl(3);
  const auto& b = *sl3.sl2_triple();
  const QVector transverse =
      add(sl3.basis_vector(sl_offdiag_index(3, 0, 2)), sl3.basis_vector(sl_offdiag_index(3, 2, 0)));
  const std::vector<QVector> gens{b.e, b.h, b.f, transverse};
  CHECK(exact_closure_rank(sl3, gens, 3) == 8);
  std::vector<RVector> fgens;
  for (const auto& v : gens) fgens.push_back(unit(sl3, v));
  const auto closure = iterated_brackets(sl3, fgens, 3);
  const Eigen::JacobiSVD<RMatrix> svd(closure.matrix(3));
  CHECK((svd.singularValues().array() > 1e-10).count() == 8);
  // unit generators keep every monomial inside the unit ball
  for (const auto& el : closure.elements()) CHECK(sl3.norm(el.v) <= 1.0 + 1e-12);

  CHECK_THROWS_AS(iterated_brackets(sl3, fgens, 6, 50), CapExceeded);
  CHECK_THROWS_AS(iterated_brackets(sl3, {}, 2), DegenerateInput);
}

TEST_CASE("svd filter") {
  const auto sl2 = make_sl(2);
  const auto& t = *sl2.sl2_triple();
  // exact subalgebra: span{E, H}
  const auto borel = iterated_brackets(sl2, {unit(sl2, t.e), unit(sl2, t.h)}, 2);
  const auto fs = svd_filter(sl2, borel, 1e-6);
  CHECK(fs.frame.size() == 2);

  // {E, E + 1e-6 F}: 2x2 oracle for the singular values of [[1,1],[0,1e-6]] scaled by lambda
  const double lam = sl2.norm_scale();
  const RVector e = to_eigen(t.e), f = to_eigen(t.f);
  const BracketClosure c(sl2, {e, RVector(e + 1e-6 * f)});
  const auto fs2 = svd_filter(sl2, c, 1, 1e-3);
  Eigen::Matrix2d o;
  o << 1, 1, 0, 1e-6;
  const Eigen::JacobiSVD<Eigen::Matrix2d> svd(o * lam);
  CHECK(fs2.singular_values[1] == doctest::Approx(svd.singularValues()(1)).epsilon(1e-6));
  CHECK(fs2.singular_values[1] < 1e-3);
  CHECK(fs2.frame.size() == 1);
  // W is E tilted by about 5e-7 F, i.e. 1.4e-6 in the calibrated norm
  CHECK(distance_to_span(sl2, fs2.frame, e) < 1e-5);
}

TEST_CASE("svd filter satisfies the approximation property and monotonicity") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> nd;
  const auto sl3 = make_sl(3);
  for (int trial = 0; trial < 5; ++trial) {
    RMatrix raw(8, 3);
    for (Eigen::Index i = 0; i < raw.size(); ++i) raw.data()[i] = nd(rng);
    const SubspaceFrame gen = orthonormalize(sl3, raw);
    std::vector<RVector> t;
    for (Eigen::Index i = 0; i < 3; ++i) t.emplace_back(gen.vectors.col(i));
    const auto closure = iterated_brackets(sl3, t, 3);
    const RMatrix fm = closure.matrix(3);
    for (double delta : {0.5, 0.1, 0.01}) {
      const auto fs = svd_filter(sl3, closure, delta);
      for (int s = 0; s < 1000; ++s) {
        RVector v(fm.cols());
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = nd(rng);
        v.normalize();
        REQUIRE(distance_to_span(sl3, fs.frame, fm * v) <= delta * (1 + 1e-9));
      }
      // a smaller threshold never loses directions
      const auto finer = svd_filter(sl3, closure, delta / 10);
      for (Eigen::Index i = 0; i < fs.frame.vectors.cols(); ++i)
        CHECK(distance_to_span(sl3, finer.frame, RVector(fs.frame.vectors.col(i))) < 1e-12);
      // subspace on which |f v| >= delta |v| has dimension <= dim W[delta]
      std::size_t big = 0;
      for (double sv : fs.singular_values)
        if (sv >= delta) ++big;
      CHECK(fs.frame.size() >= big);
    }
  }
}

TEST_CASE("stabilize") {
  const auto sl3 = make_sl(3);
  const auto& b = *sl3.sl2_triple();
  const auto exact = stabilize(sl3, {unit(sl3, b.e), unit(sl3, b.h), unit(sl3, b.f)}, 0.1);
  CHECK(exact.m == 1);
  CHECK(exact.W.frame.size() == 3);

  const auto pert = stabilize(sl3, perturbed_block_sl2(sl3, 1e-4), 0.1);
  CHECK(pert.W.frame.size() == 3);
  CHECK(closure_defect(sl3, pert.W.frame) <= 1e-2);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<int> count(1, 3);
  std::uniform_real_distribution<double> dd(0.05, 0.5);
  std::size_t worst = 0, capped = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    RMatrix raw(8, count(rng));
    for (Eigen::Index i = 0; i < raw.size(); ++i) raw.data()[i] = nd(rng);
    const SubspaceFrame gen = orthonormalize(sl3, raw);
    std::vector<RVector> t;
    for (Eigen::Index i = 0; i < gen.vectors.cols(); ++i) t.emplace_back(gen.vectors.col(i));
    // Near delta = 1/2 the loop can legitimately ask for depth-16 closures; that is the cap error path.
    try {
      const auto st = stabilize(sl3, t, dd(rng), 20000);
      worst = std::max(worst, st.iterations);
    } catch (const CapExceeded&) {
      ++capped;
    }
  }
  CHECK(worst <= 8);
  CHECK(capped < 1000);
  MESSAGE("max stabilization iterations " << worst << ", runs stopped by the closure cap " << capped);
}

TEST_CASE("objective gradient matches finite differences") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> nd;
  const auto sl3 = make_sl(3);
  for (int trial = 0; trial < 10; ++trial) {
    RMatrix x(8, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = nd(rng);
    const RMatrix g = subalgebra_objective_gradient(sl3, x);
    RMatrix fd(8, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double h = 1e-5 * std::max(1.0, std::abs(x.data()[i]));
      RMatrix xp = x, xm = x;
      xp.data()[i] += h;
      xm.data()[i] -= h;
      fd.data()[i] = (subalgebra_objective(sl3, xp) - subalgebra_objective(sl3, xm)) / (2 * h);
    }
    CHECK((g - fd).norm() / fd.norm() < 1e-6);
  }
}

TEST_CASE("nearest subalgebra") {
  const auto sl3 = make_sl(3);
  const auto& b = *sl3.sl2_triple();
  const SubspaceFrame block = to_frame(sl3, ExactFrame{{b.e, b.h, b.f}});
  const auto same = nearest_subalgebra(sl3, block);
  CHECK(same.iterations == 0);
  CHECK((same.frame.vectors - block.vectors).norm() == 0.0);

  const SubspaceFrame noisy = frame_of(sl3, perturbed_block_sl2(sl3, 1e-3));
  const auto near = nearest_subalgebra(sl3, noisy);
  CHECK(near.closure_defect <= 1e-9);
  CHECK(closure_defect(sl3, near.frame) <= 1e-9);
  CHECK(subspace_distance(sl3, near.frame, block) <= 5e-3);

  // keep a given exact subalgebra inside: span{H} of the block
  const SubspaceFrame hline = to_frame(sl3, ExactFrame{{b.h}});
  const auto constrained = nearest_subalgebra(sl3, noisy, hline);
  CHECK(constrained.closure_defect <= 1e-9);
  CHECK(distance_to_span(sl3, constrained.frame, RVector(hline.vectors.col(0))) <= 1e-9);
}

TEST_CASE("prop_E certificates") {
  const auto sl3 = make_sl(3);
  const auto& b = *sl3.sl2_triple();
  const auto exact = prop_E(sl3, {unit(sl3, b.e), unit(sl3, b.h), unit(sl3, b.f)}, 0.1);
  CHECK(exact.w.size() == 3);
  CHECK(exact.max_residual < 1e-12);
  CHECK(exact.max_generator_distance < 1e-12);

  const auto pert = prop_E(sl3, perturbed_block_sl2(sl3, 1e-4), 1e-2);
  CHECK(pert.closure_defect <= 1e-9);
  CHECK(pert.max_generator_distance <= 1e-2);
  CHECK(pert.max_residual <= 0.1);
  for (const auto& c : pert.certificates) CHECK(c.max_coeff <= c.coeff_bound);

  // residual shrinks with delta when the perturbation is tied to delta
  std::vector<double> lx, ly;
  for (double delta : {1e-2, 1e-3, 1e-4}) {
    const auto r = prop_E(sl3, perturbed_block_sl2(sl3, delta * delta * delta / 10), delta);
    CHECK(r.w.size() == 3);
    lx.push_back(std::log(delta));
    ly.push_back(std::log(r.max_residual));
  }
  const double slope = (ly.back() - ly.front()) / (lx.back() - lx.front());
  MESSAGE("condition (1) residual slope " << slope);
  CHECK(slope > 0);
  const auto json = to_json(pert, 3);
  CHECK(json["output_dim"] == pert.w.size());
}
