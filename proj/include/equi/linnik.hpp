#pragma once

// Integral symmetric 3x3 matrices of determinant d, projected to det = 1, against the
// invariant (Gelfand-Leray) measure on the hypersurface.
//
// Chart: the five entries (m11, m12, m13, m22, m23); m33 is solved from det = 1 and
// d det / d m33 = m11 m22 - m12^2. A level-d point M lies in the region when each chart
// entry m satisfies lo <= m / d^{1/3} < hi, which is tested exactly as lo^3 d <= m^3 < hi^3 d.

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "equi/exact.hpp"
#include "equi/heights.hpp"
#include "equi/lie_core.hpp"
#include "equi/stats.hpp"
#include "json.hpp"

namespace equi {

inline constexpr std::size_t kChartDim = 5;
inline constexpr std::size_t kDefaultCandidateCap = 1'000'000;

/// Half-open box [lo, hi) in the chart, in normalized (det = 1) coordinates.
struct LevelBox {
  std::array<Rational, kChartDim> lo;
  std::array<Rational, kChartDim> hi;
};

/// The box of half-width w around diag(-1, -1, 1), i.e. -diag(1, 1, -1).
LevelBox default_box(const Rational& half_width = Rational(2, 5));
LevelBox box_around(const std::array<Rational, kChartDim>& center, const Rational& half_width);
/// "w" (default center), "c11,c12,c13,c22,c23:w", or five "lo:hi" pairs separated by commas.
LevelBox parse_box(const std::string& spec);
std::string to_string(const LevelBox& box);

struct GridCell {
  std::array<double, kChartDim> lo{};
  std::array<double, kChartDim> hi{};
  double raw_mass = 0;  // int_cell |m11 m22 - m12^2|^{-1}
  double mass = 0;      // normalized over included cells
  bool excluded = false;
  std::string reason;   // "chart" (derivative vanishes) or "definite" (compact stabilizer)
};

struct RegionGrid {
  LevelBox box;
  std::size_t n = 1;  // cells per axis
  std::vector<GridCell> cells;
  double volume = 0;  // sum of raw masses over included cells
  std::size_t quad_points = 0;

  std::size_t cell_count() const { return cells.size(); }
  std::size_t flat_index(const std::array<std::size_t, kChartDim>& k) const;
};

RegionGrid make_grid(const LevelBox& box, std::size_t n);
/// Gauss-Legendre quadrature of 1/|d det/d m33| on every cell with `quad_points` nodes per axis.
RegionGrid reference_masses(RegionGrid grid, std::size_t quad_points = 8);

struct LevelPoint {
  std::array<long, 6> m{};  // m11, m12, m13, m22, m23, m33
  long square_part = 0;     // gcd of the entries
  long cell = -1;           // index into the grid, -1 if not assigned or excluded
};

struct LevelSetSample {
  long d = 0;
  std::vector<LevelPoint> points;
  std::size_t candidates = 0;         // five-tuples visited
  std::size_t chart_degenerate = 0;   // tuples with m11 m22 = m12^2, skipped
};

/// Every integral symmetric M with det M = d whose chart entries lie in the box scaled by
/// d^{1/3}. Throws CapExceeded when the sweep would visit more than `cap` five-tuples.
LevelSetSample enumerate_levelset(long d, const LevelBox& box, std::size_t cap = kDefaultCandidateCap);
/// Same, with cell indices filled in from the grid.
LevelSetSample enumerate_levelset(long d, const RegionGrid& grid, std::size_t cap = kDefaultCandidateCap);
std::vector<LevelSetSample> enumerate_levels(const std::vector<long>& levels, const RegionGrid& grid,
                                             std::size_t cap = kDefaultCandidateCap, unsigned threads = 1);

QMatrix to_qmatrix(const LevelPoint& p);
bool is_squarefree(long d);
/// Squarefree integers closest to `count` geometrically spaced targets in [lo, hi].
std::vector<long> squarefree_sweep(long lo, long hi, std::size_t count);

struct Distance {
  double tv = 0;
  double chi2 = 0;
};
/// Distance between cell counts (any scale) and the grid's reference masses.
Distance distribution_distance(const std::vector<double>& counts, const RegionGrid& grid);

struct LevelStats {
  long d = 0;
  std::size_t count = 0;      // N_d after the square-part filter
  std::size_t filtered = 0;   // points removed by the filter
  std::vector<std::size_t> cell_counts;
  Distance distance;
  double C_d = 0;             // N_d / vol(region)
  double growth = 0;          // log C_d / log d, 0 for d = 1
};

struct EquidistributionReport {
  std::vector<LevelStats> levels;
  LineFit tv_trend;           // tv against log d
  double volume = 0;
  long max_square_part = 1;
};

EquidistributionReport equidistribution_report(const std::vector<LevelSetSample>& samples, const RegionGrid& grid,
                                               long max_square_part = 1);
std::string level_csv(const LevelSetSample& sample, const RegionGrid& grid);
nlohmann::json to_json(const EquidistributionReport& report);

struct OrbitAudit {
  std::vector<OrbitRecord> records;
  std::size_t conjugation_checks = 0;
  std::size_t conjugation_failures = 0;
  LineFit disc_vs_line_height;  // log disc against log ht(Q.y)
};

/// Orbit records for up to `max_points` points of each sample (evenly strided), each
/// re-checked against a conjugate gamma^t y gamma by a random small element of SL_3(Z).
OrbitAudit orbit_audit(const std::vector<LevelSetSample>& samples, std::size_t max_points, std::uint64_t seed,
                       bool check_conjugates = true);

/// Product of `steps` random elementary matrices I +- E_ij.
QMatrix random_unimodular(std::mt19937_64& rng, std::size_t steps = 4);

}  // namespace equi
