#pragma once

// Horocycle flow on X = SL_2(Z) \ SL_2(R) and polynomial divergence of Ad(u(-t)).
//
// A point Gamma g is stored through the lattice Z^2 g (the rows of g). The normal form is
// g = n_x a_y k_theta with |x| <= 1/2, x^2 + y^2 >= 1 and theta in [0, pi), i.e. the rows
// (r1, r2) form a Gauss-reduced basis with r2 the shortest vector and |r2|^2 = 1/y.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "equi/exact.hpp"
#include "equi/lie_core.hpp"
#include "equi/stats.hpp"
#include "json.hpp"

namespace equi {

class ModularPoint {
 public:
  /// Any real 2x2 matrix with determinant 1 (to 1e-12 relative); it is reduced on entry.
  explicit ModularPoint(const Eigen::Matrix2d& g);
  static ModularPoint from_coordinates(double x, double y, double theta);
  /// Haar-random point of the fundamental domain.
  static ModularPoint random(std::mt19937_64& rng);

  const Eigen::Matrix2d& rep() const { return rep_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double theta() const { return theta_; }
  /// Coset-invariant fingerprint: sorted eigenvalues of the Gram matrix of the reduced basis.
  Eigen::Vector2d fingerprint() const;

 private:
  ModularPoint() = default;
  void reduce();
  Eigen::Matrix2d rep_;
  double x_ = 0, y_ = 1, theta_ = 0;
};

/// Reduced representative of x u(t), u(t) = [[1, t], [0, 1]].
ModularPoint flow(const ModularPoint& x, double t);
/// Reduced representative of x exp(X) for X in sl_2 (2x2, trace 0).
ModularPoint translate(const ModularPoint& x, const Eigen::Matrix2d& X);

enum class TestFunctionKind { height_bump, coordinate_bump, height_tail, constant };

/// Smooth compactly supported functions on X written in fundamental-domain coordinates.
/// Supports are kept inside the open domain so that the functions are smooth on X.
class TestFunction {
 public:
  /// psi((log y - log y0) / w), requires y0 e^{-w} > 1.
  static TestFunction height_bump(double y0, double width, double amplitude = 1.0);
  /// psi(|(x - x0, log y - log y0)| / w) (1 + cos(2(theta - theta0))) / 2; the support must
  /// lie strictly inside the fundamental domain.
  static TestFunction coordinate_bump(double x0, double y0, double theta0, double width, double amplitude = 1.0);
  /// Indicator of {y > R}; not smooth, used for mass computations only.
  static TestFunction height_tail(double R);
  static TestFunction constant(double c);

  double operator()(const ModularPoint& p) const { return eval(p.x(), p.y(), p.theta()); }
  double eval(double x, double y, double theta) const;

  TestFunctionKind kind() const { return kind_; }
  std::string name() const;
  double amplitude() const { return amplitude_; }
  /// Surrogate for the degree-2 Sobolev norm: sup over a sample grid of
  /// (|f| + sum_X |D_X f| + sum_X |D_X^2 f|) ht^2, X running over an orthonormal frame of
  /// sl_2 and ht the lattice height of the point; never below sup |f|.
  double sobolev_surrogate() const { return surrogate_; }
  /// int f dmu for the Haar probability measure (cached, 64-point rule per axis).
  double mean() const { return mean_; }
  /// y-interval outside which f vanishes (y_hi may be infinite).
  std::pair<double, double> y_support() const;

  nlohmann::json to_json() const;

 private:
  TestFunction() = default;
  void prepare();
  TestFunctionKind kind_ = TestFunctionKind::constant;
  double x0_ = 0, y0_ = 1, theta0_ = 0, width_ = 1, amplitude_ = 1;
  double surrogate_ = 0, mean_ = 0;
};

/// The bundled family used by the genericity experiments.
std::vector<TestFunction> default_test_family();

/// int f dmu by Gauss-Legendre quadrature in (x, v = 1/y, theta) over the fundamental domain,
/// split at the support bounds of f; normalized by the same rule applied to 1.
double mu_integral(const TestFunction& f, std::size_t samples = 64);

/// D_n(f)(x) = ((n+1)^M - n^M)^{-1} int_{n^M}^{(n+1)^M} f(x u(t)) dt - mu_ref.
double discrepancy(const ModularPoint& x, const TestFunction& f, long n, double M, double mu_ref);
/// D_n for n = n0..n1 in one pass along the orbit.
std::vector<double> discrepancy_sequence(const ModularPoint& x, const TestFunction& f, long n0, long n1, double M,
                                         double mu_ref);

struct GenericityVerdict {
  bool pass = true;
  long worst_n = 0;
  std::size_t worst_f = 0;
  double worst_ratio = 0;  // n |D_n(f)| / S(f), pass iff <= 1 everywhere
  long T0 = 0, T1 = 0;
  double M = 3;
  std::vector<std::vector<double>> abs_discrepancy;  // [f][n - T0]
  double slope = 0;  // log-log slope of the family mean of |D_n| against n
};

/// Checks |D_n(f)(x)| <= S(f) / n for all n in [T0, T1] and f in the family.
GenericityVerdict genericity_test(const ModularPoint& x, const std::vector<TestFunction>& family, long T0, long T1,
                                  double M = 3);
nlohmann::json to_json(const GenericityVerdict& v, const ModularPoint& x, const std::vector<TestFunction>& family);

/// mu(y > R) for each R, and the log-log fit.
struct EscapeOfMass {
  std::vector<double> R;
  std::vector<double> mass;
  LineFit fit;
};
EscapeOfMass escape_of_mass(const std::vector<double>& radii, std::size_t samples = 64);

/// Heights y(x u(t)) along the orbit at the given times.
std::vector<double> height_profile(const ModularPoint& x, const std::vector<double>& times);

// ---------------------------------------------------------------------------
// Polynomial divergence.

/// Coefficients p_k with Ad(u(-t)) r = sum_k t^k p_k, p_{k+1} = -[E, p_k] / (k + 1).
std::vector<QVector> divergence_polynomial(const LieAlgebraModel& alg, const QVector& r);
std::vector<RVector> divergence_polynomial(const LieAlgebraModel& alg, const RVector& r);
/// sum_k t^k p_k.
RVector evaluate_polynomial(const std::vector<RVector>& coeffs, double t);
QVector evaluate_polynomial(const std::vector<QVector>& coeffs, const Rational& t);
/// Ad(u(-t)) r by conjugation in the realization, u(-t) = exp(-t E).
RVector conjugate_by_unipotent(const LieAlgebraModel& alg, const RVector& r, double t);

struct DivergenceTime {
  double T = 0;
  std::vector<RVector> coeffs;  // p_k, projected when a complement frame is given
};

/// T with max_{s in [0,2]} ||q(s T)|| = threshold for q(t) = sum t^k p_k (projected onto
/// `complement` if given). Throws DegenerateInput when the moving part r_1 vanishes or
/// the polynomial already exceeds the threshold at t = 0.
DivergenceTime divergence_time(const LieAlgebraModel& alg, const RVector& r, double threshold,
                               const std::optional<SubspaceFrame>& complement = std::nullopt);

}  // namespace equi
