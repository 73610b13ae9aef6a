#include "equi/unipotent_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/legendre.hpp>

#include "equi/errors.hpp"
#include "equi/heights.hpp"

namespace equi {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Matrix2d iwasawa_matrix(double x, double y, double theta) {
  const double r = std::sqrt(y), c = std::cos(theta), s = std::sin(theta);
  Eigen::Matrix2d g;
  g << r * c + x * s / r, -r * s + x * c / r, s / r, c / r;
  return g;
}

Eigen::Matrix2d unipotent(double t) {
  Eigen::Matrix2d u;
  u << 1, t, 0, 1;
  return u;
}

Eigen::Matrix2d exp_sl2(const Eigen::Matrix2d& X) {
  // X^2 = -det(X) I for trace-zero X
  const double d = -X.determinant();
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  if (d > 0) {
    const double s = std::sqrt(d);
    return std::cosh(s) * I + (std::sinh(s) / s) * X;
  }
  if (d < 0) {
    const double s = std::sqrt(-d);
    return std::cos(s) * I + (std::sin(s) / s) * X;
  }
  return I + X;
}

// 1 at the origin, smooth, supported in (-1, 1)
double psi(double u) {
  const double a = 1 - u * u;
  return a <= 0 ? 0.0 : std::exp(1 - 1 / a);
}

struct LegendreRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

const LegendreRule& legendre_rule(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, LegendreRule> cache;
  const std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  LegendreRule rule;
  const auto zeros = boost::math::legendre_p_zeros<double>(static_cast<int>(n));
  for (const double z : zeros) {
    const double dp = boost::math::legendre_p_prime<double>(static_cast<int>(n), z);
    const double w = 2 / ((1 - z * z) * dp * dp);
    rule.nodes.push_back(z);
    rule.weights.push_back(w);
    if (z != 0) {
      rule.nodes.push_back(-z);
      rule.weights.push_back(w);
    }
  }
  return cache.emplace(n, std::move(rule)).first->second;
}

// Gauss-Legendre over [a, b] split at the given interior points.
template <class F>
double legendre_piecewise(F&& f, double a, double b, std::vector<double> cuts, std::size_t n) {
  if (!(b > a)) return 0.0;
  cuts.push_back(a);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  const auto& rule = legendre_rule(n);
  double total = 0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double lo = std::max(a, cuts[k]), hi = std::min(b, cuts[k + 1]);
    if (!(hi > lo)) continue;
    const double mid = (lo + hi) / 2, half = (hi - lo) / 2;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) total += half * rule.weights[i] * f(mid + half * rule.nodes[i]);
  }
  return total;
}

}  // namespace

// ---------------------------------------------------------------------------
// ModularPoint

ModularPoint::ModularPoint(const Eigen::Matrix2d& g) : rep_(g) {
  const double det = g.determinant();
  if (!std::isfinite(det) || std::abs(det - 1) > 1e-12 * std::max(1.0, g.squaredNorm()))
    throw DimensionError("ModularPoint: determinant must be 1");
  reduce();
}

ModularPoint ModularPoint::from_coordinates(double x, double y, double theta) {
  if (!(y > 0)) throw std::invalid_argument("ModularPoint: y must be positive");
  ModularPoint p;
  p.rep_ = iwasawa_matrix(x, y, theta);
  p.reduce();
  return p;
}

ModularPoint ModularPoint::random(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(-0.5, 0.5), uv(0, 1), ut(0, kPi);
  const double y_min = std::sqrt(3.0) / 2;
  while (true) {
    // y with density y^{-2} on [sqrt(3)/2, inf), then cut to x^2 + y^2 >= 1
    const double x = ux(rng), v = uv(rng);
    if (v == 0) continue;
    const double y = y_min / v;
    if (x * x + y * y < 1) continue;
    return from_coordinates(x, y, ut(rng));
  }
}

void ModularPoint::reduce() {
  Eigen::RowVector2d r1 = rep_.row(0), r2 = rep_.row(1);
  if (r1.squaredNorm() < r2.squaredNorm()) {
    const Eigen::RowVector2d t = r1;
    r1 = -r2;
    r2 = t;
  }
  for (int iter = 0; iter < 10000; ++iter) {
    const double mu = std::round(r1.dot(r2) / r2.squaredNorm());
    r1 -= mu * r2;
    if (r1.squaredNorm() < r2.squaredNorm()) {
      const Eigen::RowVector2d t = r1;
      r1 = -r2;
      r2 = t;
      continue;
    }
    break;
  }
  if (r2(0) < 0 || (r2(0) == 0 && r2(1) < 0)) {
    r1 = -r1;
    r2 = -r2;
  }
  const double n2 = r2.squaredNorm();
  y_ = 1 / n2;
  x_ = r1.dot(r2) / n2;
  theta_ = std::atan2(r2(0), r2(1));
  if (theta_ >= kPi) theta_ -= kPi;
  if (theta_ < 0) theta_ += kPi;
  rep_ = iwasawa_matrix(x_, y_, theta_);
}

Eigen::Vector2d ModularPoint::fingerprint() const {
  const Eigen::Matrix2d gram = rep_ * rep_.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(gram);
  return es.eigenvalues();
}

ModularPoint flow(const ModularPoint& x, double t) { return ModularPoint(x.rep() * unipotent(t)); }

ModularPoint translate(const ModularPoint& x, const Eigen::Matrix2d& X) {
  if (std::abs(X.trace()) > 1e-12 * std::max(1.0, X.norm())) throw DimensionError("translate: X must have trace 0");
  return ModularPoint(x.rep() * exp_sl2(X));
}

// ---------------------------------------------------------------------------
// TestFunction

TestFunction TestFunction::height_bump(double y0, double width, double amplitude) {
  if (!(width > 0) || !(y0 * std::exp(-width) > 1))
    throw std::invalid_argument("height_bump: support must lie in y > 1");
  TestFunction f;
  f.kind_ = TestFunctionKind::height_bump;
  f.y0_ = y0;
  f.width_ = width;
  f.amplitude_ = amplitude;
  f.prepare();
  return f;
}

TestFunction TestFunction::coordinate_bump(double x0, double y0, double theta0, double width, double amplitude) {
  if (!(width > 0) || !(y0 > 0) || std::abs(x0) + width >= 0.5)
    throw std::invalid_argument("coordinate_bump: support leaves the strip |x| < 1/2");
  // the closed disc in (x, log y) must stay outside the unit circle
  for (int i = 0; i < 720; ++i) {
    const double a = 2 * kPi * i / 720;
    for (const double rho : {1.0, 0.5, 0.0}) {
      const double x = x0 + rho * width * std::cos(a), y = y0 * std::exp(rho * width * std::sin(a));
      if (x * x + y * y <= 1 + 1e-9) throw std::invalid_argument("coordinate_bump: support meets |z| = 1");
    }
  }
  TestFunction f;
  f.kind_ = TestFunctionKind::coordinate_bump;
  f.x0_ = x0;
  f.y0_ = y0;
  f.theta0_ = theta0;
  f.width_ = width;
  f.amplitude_ = amplitude;
  f.prepare();
  return f;
}

TestFunction TestFunction::height_tail(double R) {
  if (!(R >= 1)) throw std::invalid_argument("height_tail: R must be >= 1");
  TestFunction f;
  f.kind_ = TestFunctionKind::height_tail;
  f.y0_ = R;
  f.amplitude_ = 1;
  f.prepare();
  return f;
}

TestFunction TestFunction::constant(double c) {
  TestFunction f;
  f.kind_ = TestFunctionKind::constant;
  f.amplitude_ = c;
  f.prepare();
  return f;
}

double TestFunction::eval(double x, double y, double theta) const {
  switch (kind_) {
    case TestFunctionKind::height_bump:
      return amplitude_ * psi(std::log(y / y0_) / width_);
    case TestFunctionKind::coordinate_bump: {
      const double r = std::hypot(x - x0_, std::log(y / y0_));
      if (r >= width_) return 0.0;
      return amplitude_ * psi(r / width_) * 0.5 * (1 + std::cos(2 * (theta - theta0_)));
    }
    case TestFunctionKind::height_tail:
      return y > y0_ ? 1.0 : 0.0;
    case TestFunctionKind::constant:
      return amplitude_;
  }
  return 0.0;
}

std::pair<double, double> TestFunction::y_support() const {
  switch (kind_) {
    case TestFunctionKind::height_bump:
    case TestFunctionKind::coordinate_bump:
      return {y0_ * std::exp(-width_), y0_ * std::exp(width_)};
    case TestFunctionKind::height_tail:
      return {y0_, INFINITY};
    case TestFunctionKind::constant:
      break;
  }
  return {0.0, INFINITY};
}

std::string TestFunction::name() const {
  std::ostringstream os;
  os.precision(6);
  switch (kind_) {
    case TestFunctionKind::height_bump:
      os << "height_bump(y0=" << y0_ << ",w=" << width_ << ")";
      break;
    case TestFunctionKind::coordinate_bump:
      os << "coordinate_bump(x0=" << x0_ << ",y0=" << y0_ << ",theta0=" << theta0_ << ",w=" << width_ << ")";
      break;
    case TestFunctionKind::height_tail:
      os << "height_tail(R=" << y0_ << ")";
      break;
    case TestFunctionKind::constant:
      os << "constant(" << amplitude_ << ")";
      break;
  }
  return os.str();
}

nlohmann::json TestFunction::to_json() const {
  return {{"name", name()}, {"sobolev_surrogate", surrogate_}, {"mean", mean_}};
}

void TestFunction::prepare() {
  mean_ = mu_integral(*this, 64);
  if (kind_ == TestFunctionKind::constant || kind_ == TestFunctionKind::height_tail) {
    surrogate_ = std::abs(amplitude_);
    return;
  }
  // derivatives along an orthonormal frame of sl_2 (algebra norm) by central differences
  static const LieAlgebraModel sl2 = make_sl(2);
  std::vector<Eigen::Matrix2d> frame;
  for (std::size_t i = 0; i < sl2.dim(); ++i) frame.emplace_back(sl2.to_matrix(sl2.unit_basis_vector(i)));
  const double h = 1e-3;
  const auto [ylo, yhi] = y_support();
  const double xlo = kind_ == TestFunctionKind::coordinate_bump ? x0_ - width_ : -0.5;
  const double xhi = kind_ == TestFunctionKind::coordinate_bump ? x0_ + width_ : 0.5;
  const int nx = 24, ny = 24, nt = 12;
  double best = std::abs(amplitude_);
  for (int i = 0; i <= nx; ++i) {
    for (int j = 0; j <= ny; ++j) {
      for (int k = 0; k < nt; ++k) {
        const double x = xlo + (xhi - xlo) * i / nx;
        const double y = ylo * std::pow(yhi / ylo, static_cast<double>(j) / ny);
        const double th = kPi * k / nt;
        if (x * x + y * y < 1) continue;
        const ModularPoint p = ModularPoint::from_coordinates(x, y, th);
        const double f0 = (*this)(p);
        double sum = std::abs(f0);
        for (const auto& X : frame) {
          const double fp = (*this)(translate(p, h * X)), fm = (*this)(translate(p, -h * X));
          sum += std::abs(fp - fm) / (2 * h) + std::abs(fp - 2 * f0 + fm) / (h * h);
        }
        best = std::max(best, sum * std::pow(height_of_point(sl2, p.rep()), 2));
      }
    }
  }
  surrogate_ = best;
}

std::vector<TestFunction> default_test_family() {
  return {TestFunction::height_bump(2.0, 0.5), TestFunction::coordinate_bump(0.0, 2.0, 0.0, 0.35),
          TestFunction::coordinate_bump(0.2, 1.6, kPi / 3, 0.25)};
}

double mu_integral(const TestFunction& f, std::size_t samples) {
  if (samples < 2) throw std::invalid_argument("mu_integral: need at least 2 samples");
  const auto [ylo, yhi] = f.y_support();
  std::vector<double> v_cuts;
  if (ylo > 0) v_cuts.push_back(1 / ylo);
  if (std::isfinite(yhi)) v_cuts.push_back(1 / yhi);
  std::vector<double> x_cuts;
  // the theta dependence is a trigonometric polynomial of degree 2: a periodic trapezoid is exact
  const std::size_t nt = std::max<std::size_t>(samples / 4, 8);
  auto run = [&](auto&& g) {
    return legendre_piecewise(
        [&](double x) {
          const double v1 = 1 / std::sqrt(1 - x * x);
          return legendre_piecewise(
              [&](double v) {
                double s = 0;
                for (std::size_t k = 0; k < nt; ++k) s += g(x, 1 / v, kPi * (k + 0.5) / static_cast<double>(nt));
                return s * kPi / static_cast<double>(nt);
              },
              0.0, v1, v_cuts, samples);
        },
        -0.5, 0.5, x_cuts, samples);
  };
  const double total = run([](double, double, double) { return 1.0; });
  const double value = run([&](double x, double y, double th) { return f.eval(x, y, th); });
  return value / total;
}

// ---------------------------------------------------------------------------
// Discrepancy and genericity

std::vector<double> discrepancy_sequence(const ModularPoint& x, const TestFunction& f, long n0, long n1, double M,
                                         double mu_ref) {
  if (n0 < 1) throw std::invalid_argument("discrepancy: n must be >= 1");
  if (!(M > 0)) throw std::invalid_argument("discrepancy: M must be positive");
  std::vector<double> out;
  if (n1 < n0) return out;
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  ModularPoint base = flow(x, std::pow(static_cast<double>(n0), M));
  for (long n = n0; n <= n1; ++n) {
    const double a = std::pow(static_cast<double>(n), M), b = std::pow(static_cast<double>(n + 1), M);
    const double length = b - a;
    const auto pieces = static_cast<long>(std::ceil(length));
    const double h = length / static_cast<double>(pieces);
    double integral = 0;
    for (long k = 0; k < pieces; ++k) {
      double err = 0;
      const double piece = GK::integrate([&](double s) { return f(flow(base, s)); }, 0.0, h, 10, 1e-10, &err);
      if (!std::isfinite(piece)) throw ConvergenceError("discrepancy: non-finite orbit integral");
      integral += piece;
      base = flow(base, h);
    }
    out.push_back(integral / length - mu_ref);
  }
  return out;
}

double discrepancy(const ModularPoint& x, const TestFunction& f, long n, double M, double mu_ref) {
  return discrepancy_sequence(x, f, n, n, M, mu_ref).front();
}

GenericityVerdict genericity_test(const ModularPoint& x, const std::vector<TestFunction>& family, long T0, long T1,
                                  double M) {
  GenericityVerdict v;
  v.T0 = T0;
  v.T1 = T1;
  v.M = M;
  if (T0 > T1 || family.empty()) return v;
  if (T0 < 1) throw std::invalid_argument("genericity_test: T0 must be >= 1");
  std::vector<double> mean_abs(static_cast<std::size_t>(T1 - T0 + 1), 0.0);
  for (std::size_t fi = 0; fi < family.size(); ++fi) {
    const auto& f = family[fi];
    const auto seq = discrepancy_sequence(x, f, T0, T1, M, f.mean());
    std::vector<double> abs_seq;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const long n = T0 + static_cast<long>(i);
      const double d = std::abs(seq[i]);
      abs_seq.push_back(d);
      mean_abs[i] += d / static_cast<double>(family.size());
      const double ratio = static_cast<double>(n) * d / f.sobolev_surrogate();
      if (ratio > v.worst_ratio) {
        v.worst_ratio = ratio;
        v.worst_n = n;
        v.worst_f = fi;
      }
    }
    v.abs_discrepancy.push_back(std::move(abs_seq));
  }
  v.pass = v.worst_ratio <= 1.0;
  if (T1 > T0) {
    std::vector<double> ns, ds;
    for (std::size_t i = 0; i < mean_abs.size(); ++i) {
      if (mean_abs[i] <= 0) continue;
      ns.push_back(static_cast<double>(T0) + static_cast<double>(i));
      ds.push_back(mean_abs[i]);
    }
    if (ns.size() >= 2) v.slope = fit_loglog(ns, ds).slope;
  }
  return v;
}

nlohmann::json to_json(const GenericityVerdict& v, const ModularPoint& x, const std::vector<TestFunction>& family) {
  nlohmann::json fam = nlohmann::json::array();
  for (const auto& f : family) fam.push_back(f.to_json());
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t fi = 0; fi < v.abs_discrepancy.size(); ++fi)
    for (std::size_t i = 0; i < v.abs_discrepancy[fi].size(); ++i) {
      const long n = v.T0 + static_cast<long>(i);
      const double d = v.abs_discrepancy[fi][i];
      rows.push_back({{"f", fi}, {"n", n}, {"abs_D", d}, {"scaled", static_cast<double>(n) * d / family[fi].sobolev_surrogate()}});
    }
  return {{"point", {{"x", x.x()}, {"y", x.y()}, {"theta", x.theta()}}},
          {"M", v.M},
          {"T0", v.T0},
          {"T1", v.T1},
          {"family", fam},
          {"rows", rows},
          {"generic", v.pass},
          {"worst", {{"n", v.worst_n}, {"f", v.worst_f}, {"ratio", v.worst_ratio}}},
          {"slope", v.slope}};
}

EscapeOfMass escape_of_mass(const std::vector<double>& radii, std::size_t samples) {
  EscapeOfMass out;
  for (const double R : radii) {
    out.R.push_back(R);
    out.mass.push_back(mu_integral(TestFunction::height_tail(R), samples));
  }
  if (out.R.size() >= 2) out.fit = fit_loglog(out.R, out.mass);
  return out;
}

std::vector<double> height_profile(const ModularPoint& x, const std::vector<double>& times) {
  std::vector<double> out;
  ModularPoint p = x;
  double now = 0;
  for (const double t : times) {
    // march in unit steps so the representative never carries large entries
    while (std::abs(t - now) > 1) {
      const double step = t > now ? 1.0 : -1.0;
      p = flow(p, step);
      now += step;
    }
    p = flow(p, t - now);
    now = t;
    out.push_back(p.y());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Polynomial divergence

std::vector<QVector> divergence_polynomial(const LieAlgebraModel& alg, const QVector& r) {
  if (!alg.sl2_triple()) throw DegenerateInput("divergence_polynomial: algebra has no sl2-triple");
  alg.check_dimension(r);
  const QVector& e = alg.sl2_triple()->e;
  std::vector<QVector> coeffs{r};
  for (std::size_t k = 0; k < alg.dim(); ++k) {
    QVector next = scale(alg.bracket(e, coeffs.back()), Rational(-1, static_cast<long>(k + 1)));
    if (is_zero(next)) break;
    coeffs.push_back(std::move(next));
  }
  return coeffs;
}

std::vector<RVector> divergence_polynomial(const LieAlgebraModel& alg, const RVector& r) {
  if (!alg.sl2_triple()) throw DegenerateInput("divergence_polynomial: algebra has no sl2-triple");
  alg.check_dimension(r);
  const RVector e = to_eigen(alg.sl2_triple()->e);
  std::vector<RVector> coeffs{r};
  for (std::size_t k = 0; k < alg.dim(); ++k) {
    RVector next = -alg.bracket(e, coeffs.back()) / static_cast<double>(k + 1);
    if (next.isZero(0.0)) break;
    coeffs.push_back(std::move(next));
  }
  return coeffs;
}

RVector evaluate_polynomial(const std::vector<RVector>& coeffs, double t) {
  if (coeffs.empty()) throw DimensionError("evaluate_polynomial: no coefficients");
  RVector acc = coeffs.back();
  for (std::size_t k = coeffs.size() - 1; k-- > 0;) acc = acc * t + coeffs[k];
  return acc;
}

QVector evaluate_polynomial(const std::vector<QVector>& coeffs, const Rational& t) {
  if (coeffs.empty()) throw DimensionError("evaluate_polynomial: no coefficients");
  QVector acc = coeffs.back();
  for (std::size_t k = coeffs.size() - 1; k-- > 0;) acc = add(scale(acc, t), coeffs[k]);
  return acc;
}

RVector conjugate_by_unipotent(const LieAlgebraModel& alg, const RVector& r, double t) {
  if (!alg.sl2_triple()) throw DegenerateInput("conjugate_by_unipotent: algebra has no sl2-triple");
  if (!alg.has_realization()) throw DegenerateInput("conjugate_by_unipotent: algebra has no matrix realization");
  const RMatrix e = alg.to_matrix(to_eigen(alg.sl2_triple()->e));
  const auto n = e.rows();
  // exp(-t e) as a finite sum, e is nilpotent
  RMatrix g = RMatrix::Identity(n, n), term = RMatrix::Identity(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    term = term * e * (-t / static_cast<double>(k));
    g += term;
  }
  return alg.adjoint_action(g) * r;
}

DivergenceTime divergence_time(const LieAlgebraModel& alg, const RVector& r, double threshold,
                               const std::optional<SubspaceFrame>& complement) {
  if (!(threshold > 0)) throw std::invalid_argument("divergence_time: threshold must be positive");
  const auto [r0, r1] = alg.weight_decompose(r);
  if (alg.norm(r1) <= 1e-14 * std::max(1.0, alg.norm(r)))
    throw DegenerateInput("divergence_time: r1 = 0, r lies in the centralizer of u and never diverges");
  DivergenceTime out;
  out.coeffs = divergence_polynomial(alg, r);
  if (complement)
    for (auto& p : out.coeffs) p = project(alg, *complement, p);
  const std::size_t d = out.coeffs.size();
  // P(tau) = ||q(tau)||^2 in the algebra norm, degree 2(d - 1)
  std::vector<double> P(2 * d - 1, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) P[i + j] += alg.inner(out.coeffs[i], out.coeffs[j]);
  while (P.size() > 1 && std::abs(P.back()) <= 1e-300) P.pop_back();
  if (P.size() == 1) throw DegenerateInput("divergence_time: projected polynomial is constant");
  // critical points of P: real roots of P' from its companion matrix
  std::vector<double> critical;
  {
    std::vector<double> dp;
    for (std::size_t k = 1; k < P.size(); ++k) dp.push_back(static_cast<double>(k) * P[k]);
    const auto m = static_cast<Eigen::Index>(dp.size()) - 1;
    if (m >= 1) {
      Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(m, m);
      for (Eigen::Index i = 1; i < m; ++i) companion(i, i - 1) = 1;
      for (Eigen::Index i = 0; i < m; ++i) companion(i, m - 1) = -dp[static_cast<std::size_t>(i)] / dp.back();
      const Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
      for (Eigen::Index i = 0; i < m; ++i) {
        const auto z = es.eigenvalues()(i);
        if (std::abs(z.imag()) <= 1e-9 * std::max(1.0, std::abs(z)) && z.real() > 0) critical.push_back(z.real());
      }
    }
  }
  auto eval_P = [&](double tau) {
    double acc = 0;
    for (std::size_t k = P.size(); k-- > 0;) acc = acc * tau + P[k];
    return std::sqrt(std::max(0.0, acc));
  };
  auto G = [&](double T) {
    double best = std::max(eval_P(0), eval_P(2 * T));
    for (const double c : critical)
      if (c < 2 * T) best = std::max(best, eval_P(c));
    return best;
  };
  if (G(0) >= threshold) throw DegenerateInput("divergence_time: already above threshold at t = 0");
  double lo = 0, hi = 1;
  while (G(hi) < threshold) {
    lo = hi;
    hi *= 2;
    if (!std::isfinite(hi) || hi > 1e300) throw ConvergenceError("divergence_time: threshold never reached");
  }
  for (int iter = 0; iter < 400 && hi - lo > 1e-14 * hi; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (G(mid) < threshold ? lo : hi) = mid;
  }
  out.T = 0.5 * (lo + hi);
  return out;
}

}  // namespace equi
