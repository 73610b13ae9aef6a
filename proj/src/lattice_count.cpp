#include "equi/lattice_count.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "equi/errors.hpp"

namespace equi {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Matrix2d rotation(double phi) {
  Eigen::Matrix2d k;
  k << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  return k;
}

Eigen::Matrix2d cartan_element(double phi, double t, double theta) {
  const Eigen::Vector2d a(std::exp(t / 2), std::exp(-t / 2));
  return rotation(phi) * a.asDiagonal() * rotation(theta);
}

long floor_div(long a, long b) {
  long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}
long ceil_div(long a, long b) { return -floor_div(-a, b); }

// x, y with a x + b y = gcd(a, b) >= 0
long ext_gcd(long a, long b, long& x, long& y) {
  long x0 = 1, y0 = 0, x1 = 0, y1 = 1;
  while (b != 0) {
    const long q = floor_div(a, b);
    long t = a - q * b;
    a = b;
    b = t;
    t = x0 - q * x1;
    x0 = x1;
    x1 = t;
    t = y0 - q * y1;
    y0 = y1;
    y1 = t;
  }
  if (a < 0) {
    a = -a;
    x0 = -x0;
    y0 = -y0;
  }
  x = x0;
  y = y0;
  return a;
}

// k-range with |v0 + k step| <= n; returns false if empty.
bool bound_range(long v0, long step, long n, long& lo, long& hi) {
  if (step == 0) {
    if (std::abs(v0) > n) return false;
    lo = std::numeric_limits<long>::min();
    hi = std::numeric_limits<long>::max();
    return true;
  }
  if (step > 0) {
    lo = ceil_div(-n - v0, step);
    hi = floor_div(n - v0, step);
  } else {
    lo = ceil_div(n - v0, step);
    hi = floor_div(-n - v0, step);
  }
  return lo <= hi;
}

template <class Visit>
void sweep_rows(long n, long a_begin, long a_end, Visit&& visit) {
  for (long a = a_begin; a < a_end; ++a) {
    for (long b = -n; b <= n; ++b) {
      long x = 0, y = 0;
      if (ext_gcd(a, b, x, y) != 1) continue;
      // a d - b c = 1 with d = x, c = -y; then (c, d) + k (a, b)
      const long c0 = -y, d0 = x;
      long lo_c, hi_c, lo_d, hi_d;
      if (!bound_range(c0, a, n, lo_c, hi_c) || !bound_range(d0, b, n, lo_d, hi_d)) continue;
      const long lo = std::max(lo_c, lo_d), hi = std::min(hi_c, hi_d);
      for (long k = lo; k <= hi; ++k) visit(a, b, c0 + k * a, d0 + k * b);
    }
  }
}

long integer_radius(double T) {
  if (!(T <= kEnumerationRadiusCap)) throw CapExceeded("enumerate_sl2z: radius " + std::to_string(T) + " above cap 500");
  return T < 0 ? -1 : static_cast<long>(std::floor(T));
}

template <class Result, class Worker>
std::vector<Result> split_rows(long n, unsigned threads, Worker worker) {
  const long rows = 2 * n + 1;
  const auto parts = static_cast<long>(std::clamp<unsigned>(threads, 1, 64));
  std::vector<Result> out(static_cast<std::size_t>(parts));
  auto run = [&](long p) {
    const long begin = -n + rows * p / parts, end = -n + rows * (p + 1) / parts;
    out[static_cast<std::size_t>(p)] = worker(begin, end);
  };
  if (parts == 1) {
    run(0);
    return out;
  }
  std::vector<std::thread> pool;
  for (long p = 0; p < parts; ++p) pool.emplace_back(run, p);
  for (auto& th : pool) th.join();
  return out;
}

// Feasible s = e^{t/2} > 0 for |s A + B / s| <= T, intersected into [lo, hi].
void entry_constraint(double A, double B, double T, double& lo, double& hi) {
  const double a = std::abs(A), b = std::abs(B);
  const bool same = (A >= 0) == (B >= 0);
  const double disc = same ? T * T - 4 * a * b : T * T + 4 * a * b;
  if (disc < 0) {
    lo = 1;
    hi = 0;
    return;
  }
  const double root = std::sqrt(disc);
  lo = std::max(lo, 2 * b / (T + root));
  if (a > 0) hi = std::min(hi, (T + root) / (2 * a));
}

double cosh_of_s(double s) { return 0.5 * (s * s + 1.0 / (s * s)); }

double ball_cartan_radius(double T) { return T * T * 2 <= 1 ? 0.0 : std::acosh(2 * T * T); }

template <class F>
Volume quarter_grid(std::size_t n, F&& f) {
  if (n < 4 || n % 2 != 0) throw std::invalid_argument("quadrature samples must be even and >= 4");
  const double h = (kPi / 2) / static_cast<double>(n);
  double fine = 0, coarse = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = f(h * static_cast<double>(i), h * static_cast<double>(j));
      fine += v;
      if (i % 2 == 0 && j % 2 == 0) coarse += v;
    }
  }
  fine *= 16 * h * h;
  coarse *= 16 * 4 * h * h;
  return {fine, std::abs(fine - coarse), n * n};
}

}  // namespace

double group_norm(const Eigen::MatrixXd& g) {
  if (g.rows() != g.cols() || g.rows() == 0) throw DimensionError("group_norm: square matrix required");
  const Eigen::MatrixXd inv = g.inverse();
  return std::max(g.cwiseAbs().maxCoeff(), inv.cwiseAbs().maxCoeff());
}

double group_norm(const Sl2Z& g) {
  long m = 0;
  for (const long v : g) m = std::max(m, std::abs(v));
  return static_cast<double>(m);
}

std::vector<Sl2Z> enumerate_sl2z(double T, unsigned threads) {
  const long n = integer_radius(T);
  if (n < 1) return {};
  auto parts = split_rows<std::vector<Sl2Z>>(n, threads, [n](long begin, long end) {
    std::vector<Sl2Z> found;
    sweep_rows(n, begin, end, [&](long a, long b, long c, long d) { found.push_back({a, b, c, d}); });
    return found;
  });
  std::vector<Sl2Z> all;
  for (auto& p : parts) all.insert(all.end(), p.begin(), p.end());
  std::sort(all.begin(), all.end());
  return all;
}

std::size_t count_sl2z(double T, unsigned threads) {
  const long n = integer_radius(T);
  if (n < 1) return 0;
  auto parts = split_rows<std::size_t>(n, threads, [n](long begin, long end) {
    std::size_t count = 0;
    sweep_rows(n, begin, end, [&](long, long, long, long) { ++count; });
    return count;
  });
  std::size_t total = 0;
  for (const auto p : parts) total += p;
  return total;
}

double cartan_coordinate(const Eigen::Matrix2d& g) {
  const double c = 0.5 * g.squaredNorm();
  return c <= 1 ? 0.0 : std::acosh(c);
}

double iwasawa_y(const Eigen::Matrix2d& x) {
  // the bottom row of n a_y k is y^{-1/2} times a unit vector
  return 1.0 / (x(1, 0) * x(1, 0) + x(1, 1) * x(1, 1));
}

CartanInterval ball_interval(double phi, double theta, double T) {
  const Eigen::Vector2d u(std::cos(phi), std::sin(phi)), up(-std::sin(phi), std::cos(phi));
  const Eigen::Vector2d v(std::cos(theta), -std::sin(theta)), vp(std::sin(theta), std::cos(theta));
  const Eigen::Matrix2d A = u * v.transpose(), B = up * vp.transpose();
  double lo = 1, hi = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) entry_constraint(A(i, j), B(i, j), T, lo, hi);
  if (lo > hi) return {};
  return {2 * std::log(lo), 2 * std::log(hi)};
}

Volume ball_volume(double T, std::size_t samples) {
  return quarter_grid(samples, [T](double phi, double theta) {
    const auto iv = ball_interval(phi, theta, T);
    if (iv.empty()) return 0.0;
    return cosh_of_s(std::exp(iv.hi / 2)) - cosh_of_s(std::exp(iv.lo / 2));
  });
}

double spherical_phi0_cartan(double t) {
  t = std::abs(t);
  if (t == 0) return 1.0;
  const Eigen::Vector2d a(std::exp(t / 2), std::exp(-t / 2));
  auto integrand = [&](double theta) {
    const Eigen::Matrix2d x = rotation(theta) * a.asDiagonal();
    return std::sqrt(iwasawa_y(x));
  };
  // The integrand concentrates in a window of width e^{-t} around theta = 0, so the
  // interval is cut geometrically from there. Two different partitions and rules are
  // compared for the error estimate (the per-segment Kronrod estimates are far too pessimistic here).
  auto geometric = [&](auto rule, double ratio) {
    double total = 0, left = 0, right = std::min(std::exp(-t), kPi / 2);
    while (left < kPi / 2) {
      total += rule(left, right);
      left = right;
      right = std::min(right * ratio, kPi / 2);
    }
    return total * 2 / kPi;
  };
  using GK31 = boost::math::quadrature::gauss_kronrod<double, 31>;
  using GK15 = boost::math::quadrature::gauss_kronrod<double, 15>;
  const double value = geometric([&](double a, double b) { return GK31::integrate(integrand, a, b, 0); }, 4.0);
  const double check = geometric([&](double a, double b) { return GK15::integrate(integrand, a, b, 0); }, 2.0);
  const double error = std::abs(value - check);
  if (!std::isfinite(value) || !(error <= 1e-10 * value))
    throw ConvergenceError("spherical_phi0: quadrature error " + std::to_string(error) + " at t = " + std::to_string(t));
  return value;
}

double spherical_phi0(const Eigen::Matrix2d& g) {
  if (std::abs(g.determinant() - 1) > 1e-9 * std::max(1.0, g.squaredNorm()))
    throw DimensionError("spherical_phi0: det(g) must be 1");
  return spherical_phi0_cartan(cartan_coordinate(g));
}

double spherical_phi0_unipotent(double t) {
  Eigen::Matrix2d u;
  u << 1, t, 0, 1;
  return spherical_phi0(u);
}

SphericalTable::SphericalTable(double t_max, double power, double step) : t_max_(t_max), power_(power), step_(step) {
  if (!(t_max >= 0) || !(step > 0)) throw std::invalid_argument("SphericalTable: bad range");
  const auto n = static_cast<std::size_t>(std::ceil(t_max / step)) + 2;
  log_phi_.resize(n);
  cum_.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) log_phi_[i] = std::log(spherical_phi0_cartan(step * static_cast<double>(i)));
  auto g = [&](std::size_t i) { return std::exp(power * log_phi_[i]) * std::sinh(step * static_cast<double>(i)); };
  for (std::size_t i = 1; i < n; ++i) cum_[i] = cum_[i - 1] + 0.5 * step * (g(i - 1) + g(i));
  t_max_ = step * static_cast<double>(n - 1);
}

double SphericalTable::phi(double t) const {
  t = std::abs(t);
  if (t > t_max_) throw std::out_of_range("SphericalTable: t beyond table");
  const double x = t / step_;
  const auto i = std::min(static_cast<std::size_t>(x), log_phi_.size() - 2);
  const double w = x - static_cast<double>(i);
  return std::exp((1 - w) * log_phi_[i] + w * log_phi_[i + 1]);
}

double SphericalTable::cumulative(double t) const {
  if (t < 0 || t > t_max_) throw std::out_of_range("SphericalTable: t beyond table");
  const double x = t / step_;
  const auto i = std::min(static_cast<std::size_t>(x), cum_.size() - 2);
  const double w = x - static_cast<double>(i);
  return (1 - w) * cum_[i] + w * cum_[i + 1];
}

Volume ball_phi_integral(double T, const SphericalTable& table, std::size_t samples) {
  if (ball_cartan_radius(T) > table.t_max()) throw std::out_of_range("ball_phi_integral: table too short");
  return quarter_grid(samples, [&](double phi, double theta) {
    const auto iv = ball_interval(phi, theta, T);
    if (iv.empty()) return 0.0;
    return table.cumulative(iv.hi) - table.cumulative(iv.lo);
  });
}

MonteCarlo ball_double_phi_integral(double T, const SphericalTable& table, std::size_t pairs, std::uint64_t seed) {
  if (2 * ball_cartan_radius(T) > table.t_max()) throw std::out_of_range("ball_double_phi_integral: table too short");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0, 2 * kPi), unit(0, 1);
  struct Sample {
    Eigen::Matrix2d g;
    double weight;
  };
  auto draw = [&]() -> Sample {
    const double phi = angle(rng), theta = angle(rng), u = unit(rng);
    const auto iv = ball_interval(phi, theta, T);
    if (iv.empty()) return {Eigen::Matrix2d::Identity(), 0.0};
    const double c_lo = cosh_of_s(std::exp(iv.lo / 2)), c_hi = cosh_of_s(std::exp(iv.hi / 2));
    const double t = std::acosh(std::max(1.0, c_lo + u * (c_hi - c_lo)));
    return {cartan_element(phi, t, theta), 4 * kPi * kPi * (c_hi - c_lo)};
  };
  double sum = 0, sum_sq = 0;
  for (std::size_t i = 0; i < pairs; ++i) {
    const Sample s = draw(), r = draw();
    double v = 0;
    if (s.weight > 0 && r.weight > 0) {
      const Eigen::Matrix2d rinv{{r.g(1, 1), -r.g(0, 1)}, {-r.g(1, 0), r.g(0, 0)}};
      v = s.weight * r.weight * std::pow(table.phi(cartan_coordinate(s.g * rinv)), table.power());
    }
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(std::max<std::size_t>(pairs, 1));
  const double mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - mean * mean);
  return {mean, std::sqrt(var / n), pairs};
}

ClubAverages club_averages(double R, double p, const SphericalTable& table) {
  if (!(R > 0)) throw std::invalid_argument("club_averages: R must be positive");
  if (!(p >= 1)) throw std::invalid_argument("club_averages: p must be >= 1");
  if (2 * R > table.t_max()) throw std::out_of_range("club_averages: table too short");
  ClubAverages out;
  out.R = R;
  out.p = p;
  const double shell = std::cosh(R) - 1;
  out.volume = 4 * kPi * kPi * shell;

  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  out.single = GK::integrate([&](double t) { return table.phi(t) * std::sinh(t); }, 0, R, 15, 1e-12) / shell;
  out.single_bound = std::pow(out.volume, -1.0 / 3);

  // vol^{-2} int int = (cosh R - 1)^{-2} int int sinh t sinh t' (1/pi) int_0^pi phi(a_t k_alpha a_{-t'})^{1/p}
  using GL = boost::math::quadrature::gauss<double, 10>;
  const int panels = std::max(1, static_cast<int>(std::ceil(R / 0.5)));
  const double width = R / panels;
  std::vector<double> nodes, weights;
  for (int q = 0; q < panels; ++q) {
    const double mid = (q + 0.5) * width, half = width / 2;
    const auto& x = GL::abscissa();
    const auto& w = GL::weights();
    for (std::size_t k = 0; k < x.size(); ++k) {
      for (const double sgn : {-1.0, 1.0}) {
        if (k == 0 && sgn > 0 && x[0] == 0) continue;
        nodes.push_back(mid + sgn * half * x[k]);
        weights.push_back(half * w[k]);
      }
    }
  }
  double total = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double ct = std::cosh(nodes[i]), st = std::sinh(nodes[i]);
    for (std::size_t j = 0; j <= i; ++j) {
      const double cs = std::cosh(nodes[j]), ss = std::sinh(nodes[j]);
      // cosh of the Cartan coordinate of a_t k_alpha a_{-t'} is ch ch' - sh sh' cos(2 alpha)
      auto inner = [&](double alpha) {
        const double c = std::max(1.0, ct * cs - st * ss * std::cos(2 * alpha));
        return std::pow(table.phi(std::acosh(c)), 1.0 / p);
      };
      // the integrand dips in a window of width about e^{-min(t, t')} around alpha = 0
      double avg = 0, left = 0, right = std::min(std::exp(-std::min(nodes[i], nodes[j])), kPi / 2);
      while (left < kPi / 2) {
        avg += GK::integrate(inner, left, right, 0);
        left = right;
        right = std::min(right * 4, kPi / 2);
      }
      avg *= 2 / kPi;
      const double contrib = weights[i] * weights[j] * st * ss * avg;
      total += (i == j) ? contrib : 2 * contrib;
    }
  }
  out.pair = total / (shell * shell);
  out.pair_bound = std::pow(out.volume, -2.0 / (3 * p));
  return out;
}

Phi0Decay phi0_unipotent_decay(int t_max) {
  if (t_max < 2) throw std::invalid_argument("phi0_unipotent_decay: t_max must be >= 2");
  Phi0Decay out;
  std::vector<double> x;
  out.constant = 0;
  for (int t = 1; t <= t_max; ++t) {
    const double v = spherical_phi0_unipotent(t);
    out.t.push_back(t);
    out.phi.push_back(v);
    x.push_back(1.0 + t);
    out.constant = std::max(out.constant, v * std::pow(1.0 + t, 0.9));
  }
  out.fit = fit_loglog(x, out.phi);
  return out;
}

CountReport count_report(const std::vector<double>& radii, std::size_t quadrature_points, unsigned threads) {
  CountReport report;
  std::vector<double> sorted = radii;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.empty()) return report;
  const SphericalTable table(ball_cartan_radius(sorted.back()) + 0.01, 1.0);
  std::vector<double> lt, lv, llt;
  std::size_t previous = 0;
  for (const double T : sorted) {
    CountRow row;
    row.T = T;
    row.count = count_sl2z(T, threads);
    row.volume = ball_volume(T, quadrature_points);
    if (row.volume.value > 0) {
      row.ratio = static_cast<double>(row.count) / row.volume.value;
      row.phi0_avg = ball_phi_integral(T, table, quadrature_points).value / row.volume.value;
      if (T > std::numbers::e) {
        lt.push_back(std::log(T));
        lv.push_back(std::log(row.volume.value));
        llt.push_back(std::log(std::log(T)));
      }
    }
    if (row.count < previous) report.monotone = false;
    previous = row.count;
    report.rows.push_back(row);
  }
  if (lt.size() >= 2) report.exponent = fit_line(lt, lv).slope;
  if (lt.size() >= 3) {
    const std::vector<double> ones(lt.size(), 1.0);
    try {
      const auto c = least_squares({ones, lt, llt}, lv);
      report.exponent_log = c[1];
      report.log_exponent = c[2];
    } catch (const DegenerateInput&) {
    }
  }
  return report;
}

std::string to_csv(const CountReport& report) {
  std::ostringstream os;
  os.precision(12);
  os << "T,count,vol,vol_error,ratio,phi0_avg\n";
  for (const auto& r : report.rows)
    os << r.T << ',' << r.count << ',' << r.volume.value << ',' << r.volume.error << ',' << r.ratio << ',' << r.phi0_avg
       << '\n';
  return os.str();
}

double measured_covolume(double T, std::size_t quadrature_points, unsigned threads) {
  const std::size_t n = count_sl2z(T, threads);
  if (n == 0) throw DegenerateInput("measured_covolume: empty ball");
  return ball_volume(T, quadrature_points).value / static_cast<double>(n);
}

Sl32Report check_sl32_bounds(double T, const Sl32Options& opt) {
  Sl32Report r;
  r.T = T;
  r.kappa = opt.kappa;
  r.covolume = opt.covolume > 0 ? opt.covolume : measured_covolume(opt.calibration_T, opt.quadrature_points, opt.threads);
  r.lattice_count = count_sl2z(T, opt.threads);
  r.vol_B = ball_volume(T, opt.quadrature_points).value;
  const double Tt = opt.kappa * T;
  r.vol_Btilde = ball_volume(Tt, opt.quadrature_points).value;

  const double radius_t = ball_cartan_radius(Tt);
  const SphericalTable table(2 * radius_t + 0.01, opt.rho);
  r.phi_integral = ball_phi_integral(Tt, table, opt.quadrature_points).value;
  r.pair_integral = ball_double_phi_integral(Tt, table, opt.mc_pairs, opt.seed);

  const double count = static_cast<double>(r.lattice_count);
  r.lower_rhs = r.vol_B / r.covolume - opt.C * r.phi_integral;
  r.lower_binding = r.lower_rhs > 0;
  if (r.lower_binding) {
    r.lower_constant = count / r.lower_rhs;
    r.lower_holds = r.lower_constant >= opt.lower_constant_min;
  }
  r.upper_rhs = r.vol_Btilde * r.vol_Btilde / r.covolume + r.pair_integral.value;
  r.upper_constant = r.upper_rhs > 0 ? count * count / r.upper_rhs : 0;
  r.upper_holds = r.upper_rhs > 0 ? r.upper_constant <= opt.upper_constant_max : r.lattice_count == 0;

  const double R = ball_cartan_radius(T);
  if (R > 0) {
    const SphericalTable club_table(2 * R + 0.01, 1.0);
    r.club = club_averages(R, 2.0, club_table);
    r.club_single_constant = r.club.single / r.club.single_bound;
    r.club_pair_constant = r.club.pair / r.club.pair_bound;
  }
  return r;
}

}  // namespace equi
