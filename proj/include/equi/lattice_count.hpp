#pragma once

// Norm balls in SL_2(R), lattice points of SL_2(Z) inside them, Haar volumes and the
// Harish-Chandra spherical function.
//
// Haar measure is fixed once: g = k_phi a_t k_theta with a_t = diag(e^{t/2}, e^{-t/2}),
// density sinh(t) dt dphi dtheta, phi and theta ranging over [0, 2pi). The same
// normalization is used by every volume and integral below.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "equi/stats.hpp"

namespace equi {

inline constexpr const char* kHaarNormalization = "sinh(t) dt dphi dtheta, g = k_phi a_t k_theta, phi,theta in [0,2pi)";

/// (a, b, c, d) for the matrix [[a, b], [c, d]].
using Sl2Z = std::array<long, 4>;

/// ||g|| = max_ij(|g_ij|, |(g^{-1})_ij|) for a square matrix g.
double group_norm(const Eigen::MatrixXd& g);
double group_norm(const Sl2Z& g);

struct NormBall {
  double T = 1;
  bool contains(const Eigen::MatrixXd& g) const { return group_norm(g) <= T; }
};

inline constexpr double kEnumerationRadiusCap = 500;

/// Every gamma in SL_2(Z) with ||gamma|| <= T, sorted lexicographically.
/// Throws CapExceeded for T > 500.
std::vector<Sl2Z> enumerate_sl2z(double T, unsigned threads = 1);
std::size_t count_sl2z(double T, unsigned threads = 1);

/// Cartan coordinate t of g in SL_2(R): cosh t = |g|_F^2 / 2.
double cartan_coordinate(const Eigen::Matrix2d& g);
/// y-coordinate of the Iwasawa decomposition x = n a_y k, a_y = diag(y^{1/2}, y^{-1/2}).
double iwasawa_y(const Eigen::Matrix2d& x);

struct Volume {
  double value = 0;
  double error = 0;      // |Q_n - Q_{n/2}|
  std::size_t samples = 0;
};

/// Haar volume of {g in SL_2(R) : ||g|| <= T}. `samples` is the number of trapezoid
/// nodes per quarter period in each of phi and theta (even, >= 4).
Volume ball_volume(double T, std::size_t samples = 256);

/// phi_0(g) = int_K H_A(kg)^rho dk, reduced to a_t by bi-K-invariance and evaluated by
/// adaptive Gauss-Kronrod over K. Throws ConvergenceError if two quadratures disagree by more than 1e-10 relative.
double spherical_phi0(const Eigen::Matrix2d& g);
double spherical_phi0_cartan(double t);
/// phi_0(u(t)) with u(t) = [[1, t], [0, 1]].
double spherical_phi0_unipotent(double t);

/// phi_0 tabulated on [0, t_max] (log-linear interpolation) together with the
/// cumulative integral G(t) = int_0^t phi_0(a_s)^power sinh(s) ds.
class SphericalTable {
 public:
  SphericalTable(double t_max, double power = 1.0, double step = 5e-3);
  double t_max() const { return t_max_; }
  double power() const { return power_; }
  double phi(double t) const;
  double cumulative(double t) const;

 private:
  double t_max_, power_, step_;
  std::vector<double> log_phi_;
  std::vector<double> cum_;
};

/// Cartan interval {t >= 0 : ||k_phi a_t k_theta|| <= T}; empty when lo > hi.
struct CartanInterval {
  double lo = 0;
  double hi = -1;
  bool empty() const { return lo > hi; }
};
CartanInterval ball_interval(double phi, double theta, double T);

/// int_{B(T)} phi_0(s)^power ds with the table's power.
Volume ball_phi_integral(double T, const SphericalTable& table, std::size_t samples = 256);

struct MonteCarlo {
  double value = 0;
  double std_error = 0;
  std::size_t samples = 0;
};

/// int_{B(T) x B(T)} phi_0(s s'^{-1})^power ds ds' by sampling pairs with density
/// proportional to Haar on each factor.
MonteCarlo ball_double_phi_integral(double T, const SphericalTable& table, std::size_t pairs, std::uint64_t seed);

/// Averages over the bi-K-invariant set {t <= R}.
struct ClubAverages {
  double R = 0;
  double volume = 0;        // 4 pi^2 (cosh R - 1)
  double single = 0;        // vol^{-1} int phi_0
  double single_bound = 0;  // vol^{-1/3}
  double p = 2;
  double pair = 0;          // vol^{-2} int int phi_0(s s'^{-1})^{1/p}
  double pair_bound = 0;    // vol^{-2/(3p)}
};
ClubAverages club_averages(double R, double p, const SphericalTable& table);

struct Phi0Decay {
  std::vector<double> t;
  std::vector<double> phi;
  LineFit fit;        // log phi_0 against log(1 + t)
  double constant;    // max phi_0(u(t)) (1 + t)^{1 - 0.1}
};
/// phi_0(u(t)) at the integers t = 1..t_max.
Phi0Decay phi0_unipotent_decay(int t_max = 1000);

struct CountRow {
  double T = 0;
  std::size_t count = 0;
  Volume volume;
  double ratio = 0;     // count / vol
  double phi0_avg = 0;  // vol^{-1} int_{B(T)} phi_0
};

struct CountReport {
  std::string haar = kHaarNormalization;
  std::vector<CountRow> rows;
  double exponent = 0;       // A from log vol ~ log v + A log T
  double exponent_log = 0;   // A from the three-term fit log v + A log T + l log log T
  double log_exponent = 0;   // l
  bool monotone = true;
};

CountReport count_report(const std::vector<double>& radii, std::size_t quadrature_points = 256, unsigned threads = 1);
std::string to_csv(const CountReport& report);

/// vol(Lambda \ S) measured as vol(B(T)) / |SL_2(Z) cap B(T)|.
double measured_covolume(double T, std::size_t quadrature_points = 256, unsigned threads = 1);

struct Sl32Options {
  double kappa = 5.43656365691809;  // 2e: B~ = B(kappa T) contains {d <= 1} B {d <= 1}
  double rho = 1.0;
  double C = 0.0;                    // 0 checks the strongest form of the lower bound
  double covolume = 0;               // 0: measure at calibration_T
  double calibration_T = 200;
  double lower_constant_min = 0.5;
  double upper_constant_max = 1.0;
  std::size_t quadrature_points = 256;
  std::size_t mc_pairs = 20000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct Sl32Report {
  double T = 0;
  double kappa = 0;
  double covolume = 0;
  std::size_t lattice_count = 0;     // |Lambda cap B|, a lower bound for |Lambda cap B~| and an upper bound for |Delta|
  double vol_B = 0;
  double vol_Btilde = 0;
  double phi_integral = 0;           // int_{B~} phi_0^rho
  MonteCarlo pair_integral;          // int int_{B~ x B~} phi_0(s s'^{-1})^rho
  double lower_rhs = 0;
  bool lower_binding = false;
  double lower_constant = 0;         // count / lower_rhs when binding
  bool lower_holds = true;
  double upper_rhs = 0;
  double upper_constant = 0;         // count^2 / upper_rhs
  bool upper_holds = true;
  ClubAverages club;                 // on the Cartan ball containing B(T), p = 2
  double club_single_constant = 0;   // single / single_bound
  double club_pair_constant = 0;     // pair / pair_bound
};

Sl32Report check_sl32_bounds(double T, const Sl32Options& options = {});

}  // namespace equi
