#include "equi/linnik.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <boost/math/special_functions/legendre.hpp>

#include "equi/errors.hpp"

namespace equi {

namespace {

// chart axes that enter d det / d m33 = m11 m22 - m12^2
constexpr std::size_t kM11 = 0, kM12 = 1, kM13 = 2, kM22 = 3, kM23 = 4;

Rational cube(const Rational& q) { return q * q * q; }

// Integers m with lo^3 d <= m^3 < hi^3 d, ascending, for d > 0.
std::vector<long> axis_range(const Rational& lo, const Rational& hi, long d) {
  const double c = std::cbrt(static_cast<double>(d));
  const auto a = static_cast<long>(std::floor(to_double(lo) * c)) - 1;
  const auto b = static_cast<long>(std::ceil(to_double(hi) * c)) + 1;
  const Rational lo3 = cube(lo) * d, hi3 = cube(hi) * d;
  std::vector<long> out;
  for (long m = a; m <= b; ++m) {
    const Rational m3 = cube(Rational(m));
    if (m3 >= lo3 && m3 < hi3) out.push_back(m);
  }
  return out;
}

// For each m of the range, the cell index k along one axis.
std::vector<std::size_t> axis_cells(const std::vector<long>& range, const Rational& lo, const Rational& hi,
                                    std::size_t n, long d) {
  std::vector<Rational> bounds;
  for (std::size_t k = 0; k <= n; ++k) bounds.push_back(cube(lo + (hi - lo) * Rational(static_cast<long>(k), static_cast<long>(n))) * d);
  std::vector<std::size_t> out;
  for (const long m : range) {
    const Rational m3 = cube(Rational(m));
    std::size_t k = 0;
    while (k + 1 < n && m3 >= bounds[k + 1]) ++k;
    out.push_back(k);
  }
  return out;
}

struct Rule {
  std::vector<double> nodes, weights;  // on [-1, 1]
};

Rule gauss_legendre(std::size_t n) {
  Rule r;
  for (const double z : boost::math::legendre_p_zeros<double>(static_cast<int>(n))) {
    const double dp = boost::math::legendre_p_prime<double>(static_cast<int>(n), z);
    const double w = 2 / ((1 - z * z) * dp * dp);
    r.nodes.push_back(z);
    r.weights.push_back(w);
    if (z != 0) {
      r.nodes.push_back(-z);
      r.weights.push_back(w);
    }
  }
  return r;
}

long gcd_entries(const std::array<long, 6>& m) {
  long g = 0;
  for (const long v : m) g = std::gcd(g, v);
  return g;
}

LevelSetSample sweep(long d, const LevelBox& box, const RegionGrid* grid, std::size_t cap) {
  if (d == 0) throw std::invalid_argument("enumerate_levelset: d must be nonzero");
  if (std::abs(d) > 1'000'000'000'000L) throw CapExceeded("enumerate_levelset: |d| above 1e12");
  if (d < 0) {
    // M / d^{1/3} = (-M) / |d|^{1/3}
    LevelSetSample s = sweep(-d, box, grid, cap);
    s.d = d;
    for (auto& p : s.points)
      for (auto& v : p.m) v = -v;
    return s;
  }
  std::array<std::vector<long>, kChartDim> range;
  std::array<std::vector<std::size_t>, kChartDim> cells;
  double total = 1;
  for (std::size_t i = 0; i < kChartDim; ++i) {
    if (!(box.lo[i] < box.hi[i])) throw std::invalid_argument("enumerate_levelset: empty box");
    range[i] = axis_range(box.lo[i], box.hi[i], d);
    total *= static_cast<double>(range[i].size());
    if (grid) cells[i] = axis_cells(range[i], box.lo[i], box.hi[i], grid->n, d);
  }
  if (total > static_cast<double>(cap))
    throw CapExceeded("enumerate_levelset: " + std::to_string(static_cast<long long>(total)) +
                      " candidates exceed the cap of " + std::to_string(cap));
  LevelSetSample s;
  s.d = d;
  s.candidates = static_cast<std::size_t>(total);
  const std::size_t inner = range[kM13].size() * range[kM23].size();
  for (std::size_t i11 = 0; i11 < range[kM11].size(); ++i11) {
    const long m11 = range[kM11][i11];
    for (std::size_t i12 = 0; i12 < range[kM12].size(); ++i12) {
      const long m12 = range[kM12][i12];
      for (std::size_t i22 = 0; i22 < range[kM22].size(); ++i22) {
        const long m22 = range[kM22][i22];
        const long A = m11 * m22 - m12 * m12;
        if (A == 0) {
          s.chart_degenerate += inner;
          continue;
        }
        for (std::size_t i13 = 0; i13 < range[kM13].size(); ++i13) {
          const long m13 = range[kM13][i13];
          for (std::size_t i23 = 0; i23 < range[kM23].size(); ++i23) {
            const long m23 = range[kM23][i23];
            // det = m33 A - m11 m23^2 + 2 m12 m13 m23 - m22 m13^2
            const long num = d + m11 * m23 * m23 - 2 * m12 * m13 * m23 + m22 * m13 * m13;
            if (num % A != 0) continue;
            LevelPoint p;
            p.m = {m11, m12, m13, m22, m23, num / A};
            p.square_part = gcd_entries(p.m);
            if (grid) {
              const long idx = static_cast<long>(grid->flat_index({cells[0][i11], cells[1][i12], cells[2][i13], cells[3][i22], cells[4][i23]}));
              p.cell = grid->cells[static_cast<std::size_t>(idx)].excluded ? -1 : idx;
            }
            s.points.push_back(p);
          }
        }
      }
    }
  }
  return s;
}

}  // namespace

LevelBox box_around(const std::array<Rational, kChartDim>& center, const Rational& half_width) {
  if (!(half_width > 0)) throw std::invalid_argument("box_around: half-width must be positive");
  LevelBox b;
  for (std::size_t i = 0; i < kChartDim; ++i) {
    b.lo[i] = center[i] - half_width;
    b.hi[i] = center[i] + half_width;
  }
  return b;
}

LevelBox default_box(const Rational& half_width) {
  return box_around({Rational(-1), Rational(0), Rational(0), Rational(-1), Rational(0)}, half_width);
}

LevelBox parse_box(const std::string& spec) {
  auto split = [](const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
  };
  if (spec.find(',') == std::string::npos) return default_box(parse_rational(spec));
  const auto parts = split(spec, ',');
  if (parts.size() != kChartDim) throw std::invalid_argument("parse_box: expected five comma-separated fields");
  const auto colon = spec.rfind(':');
  if (std::count(spec.begin(), spec.end(), ':') == 1 && colon != std::string::npos) {
    std::array<Rational, kChartDim> center;
    const auto head = split(spec.substr(0, colon), ',');
    for (std::size_t i = 0; i < kChartDim; ++i) center[i] = parse_rational(head[i]);
    return box_around(center, parse_rational(spec.substr(colon + 1)));
  }
  LevelBox b;
  for (std::size_t i = 0; i < kChartDim; ++i) {
    const auto lh = split(parts[i], ':');
    if (lh.size() != 2) throw std::invalid_argument("parse_box: expected lo:hi in field " + std::to_string(i + 1));
    b.lo[i] = parse_rational(lh[0]);
    b.hi[i] = parse_rational(lh[1]);
    if (!(b.lo[i] < b.hi[i])) throw std::invalid_argument("parse_box: empty interval");
  }
  return b;
}

std::string to_string(const LevelBox& box) {
  std::string out;
  for (std::size_t i = 0; i < kChartDim; ++i) {
    if (i) out += ',';
    out += to_string(box.lo[i]) + ':' + to_string(box.hi[i]);
  }
  return out;
}

std::size_t RegionGrid::flat_index(const std::array<std::size_t, kChartDim>& k) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < kChartDim; ++i) {
    if (k[i] >= n) throw DimensionError("RegionGrid: cell index out of range");
    idx = idx * n + k[i];
  }
  return idx;
}

RegionGrid make_grid(const LevelBox& box, std::size_t n) {
  if (n == 0) throw std::invalid_argument("make_grid: need at least one cell per axis");
  RegionGrid g;
  g.box = box;
  g.n = n;
  std::size_t total = 1;
  for (std::size_t i = 0; i < kChartDim; ++i) total *= n;
  g.cells.resize(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    std::array<std::size_t, kChartDim> k{};
    for (std::size_t i = kChartDim; i-- > 0;) {
      k[i] = rest % n;
      rest /= n;
    }
    for (std::size_t i = 0; i < kChartDim; ++i) {
      const double lo = to_double(box.lo[i]), hi = to_double(box.hi[i]);
      const double h = (hi - lo) / static_cast<double>(n);
      g.cells[idx].lo[i] = lo + h * static_cast<double>(k[i]);
      g.cells[idx].hi[i] = k[i] + 1 == n ? hi : lo + h * static_cast<double>(k[i] + 1);
    }
  }
  return g;
}

RegionGrid reference_masses(RegionGrid grid, std::size_t quad_points) {
  if (quad_points < 1) throw std::invalid_argument("reference_masses: need at least one node");
  const Rule rule = gauss_legendre(quad_points);
  grid.volume = 0;
  grid.quad_points = quad_points;
  for (auto& c : grid.cells) {
    c.excluded = false;
    c.reason.clear();
    // range of A = m11 m22 - m12^2 over the cell
    double pmin = 1e300, pmax = -1e300;
    for (const double a : {c.lo[kM11], c.hi[kM11]})
      for (const double b : {c.lo[kM22], c.hi[kM22]}) {
        pmin = std::min(pmin, a * b);
        pmax = std::max(pmax, a * b);
      }
    const double s_lo = c.lo[kM12], s_hi = c.hi[kM12];
    const double sq_max = std::max(s_lo * s_lo, s_hi * s_hi);
    const double sq_min = s_lo <= 0 && s_hi >= 0 ? 0.0 : std::min(s_lo * s_lo, s_hi * s_hi);
    const double amin = pmin - sq_max, amax = pmax - sq_min;
    if (amin <= 0 && amax >= 0) {
      c.excluded = true;
      c.reason = "chart";
    } else if (c.hi[kM11] > 0 && amax > 0) {
      // m11 > 0 and A > 0 at level det = 1 means positive definite
      c.excluded = true;
      c.reason = "definite";
    }
    if (c.excluded) {
      c.raw_mass = 0;
      continue;
    }
    auto node = [&](std::size_t axis, std::size_t i) {
      return (c.lo[axis] + c.hi[axis]) / 2 + (c.hi[axis] - c.lo[axis]) / 2 * rule.nodes[i];
    };
    double sum = 0;
    const std::size_t q = rule.nodes.size();
    for (std::size_t i = 0; i < q; ++i)
      for (std::size_t j = 0; j < q; ++j)
        for (std::size_t k = 0; k < q; ++k) {
          const double A = node(kM11, i) * node(kM22, k) - node(kM12, j) * node(kM12, j);
          sum += rule.weights[i] * rule.weights[j] * rule.weights[k] / std::abs(A);
        }
    double jac = 1;
    for (std::size_t i = 0; i < kChartDim; ++i) jac *= c.hi[i] - c.lo[i];
    c.raw_mass = sum * jac / 8;
    grid.volume += c.raw_mass;
  }
  if (!(grid.volume > 0)) throw DegenerateInput("reference_masses: every cell is excluded");
  for (auto& c : grid.cells) c.mass = c.raw_mass / grid.volume;
  return grid;
}

LevelSetSample enumerate_levelset(long d, const LevelBox& box, std::size_t cap) { return sweep(d, box, nullptr, cap); }

LevelSetSample enumerate_levelset(long d, const RegionGrid& grid, std::size_t cap) { return sweep(d, grid.box, &grid, cap); }

std::vector<LevelSetSample> enumerate_levels(const std::vector<long>& levels, const RegionGrid& grid, std::size_t cap,
                                             unsigned threads) {
  std::vector<LevelSetSample> out(levels.size());
  std::vector<std::exception_ptr> errors(levels.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < levels.size(); i = next++) {
      try {
        out[i] = enumerate_levelset(levels[i], grid, cap);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(levels.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

QMatrix to_qmatrix(const LevelPoint& p) { return symmetric_from_coordinates({p.m.begin(), p.m.end()}); }

bool is_squarefree(long d) {
  d = std::abs(d);
  if (d == 0) return false;
  for (long p = 2; p * p <= d; ++p) {
    if (d % (p * p) == 0) return false;
    if (d % p == 0) d /= p;
  }
  return true;
}

std::vector<long> squarefree_sweep(long lo, long hi, std::size_t count) {
  if (lo < 1 || hi < lo || count == 0) throw std::invalid_argument("squarefree_sweep: bad range");
  std::vector<long> out;
  for (std::size_t i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    const auto target = static_cast<long>(std::llround(static_cast<double>(lo) * std::pow(static_cast<double>(hi) / static_cast<double>(lo), t)));
    for (long off = 0;; ++off) {
      if (target - off >= lo && is_squarefree(target - off)) {
        out.push_back(target - off);
        break;
      }
      if (target + off <= hi && is_squarefree(target + off)) {
        out.push_back(target + off);
        break;
      }
      if (target - off < lo && target + off > hi) break;
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Distance distribution_distance(const std::vector<double>& counts, const RegionGrid& grid) {
  if (counts.size() != grid.cells.size()) throw DimensionError("distribution_distance: one count per cell");
  double total = 0;
  for (std::size_t i = 0; i < counts.size(); ++i)
    if (!grid.cells[i].excluded) total += counts[i];
  if (!(total > 0)) throw DegenerateInput("distribution_distance: no points in the region");
  Distance out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const auto& c = grid.cells[i];
    if (c.excluded) continue;
    const double f = counts[i] / total;
    out.tv += std::abs(f - c.mass) / 2;
    if (c.mass > 0) out.chi2 += total * (f - c.mass) * (f - c.mass) / c.mass;
  }
  return out;
}

EquidistributionReport equidistribution_report(const std::vector<LevelSetSample>& samples, const RegionGrid& grid,
                                               long max_square_part) {
  if (!(grid.volume > 0)) throw DegenerateInput("equidistribution_report: grid has no reference masses");
  EquidistributionReport rep;
  rep.volume = grid.volume;
  rep.max_square_part = max_square_part;
  bool any = false;
  for (const auto& s : samples) {
    LevelStats st;
    st.d = s.d;
    st.cell_counts.assign(grid.cells.size(), 0);
    for (const auto& p : s.points) {
      if (p.square_part > max_square_part) {
        ++st.filtered;
        continue;
      }
      if (p.cell < 0) continue;
      ++st.cell_counts[static_cast<std::size_t>(p.cell)];
      ++st.count;
    }
    st.C_d = static_cast<double>(st.count) / grid.volume;
    const double ad = std::abs(static_cast<double>(s.d));
    st.growth = ad > 1 && st.C_d > 0 ? std::log(st.C_d) / std::log(ad) : 0.0;
    if (st.count > 0) {
      any = true;
      st.distance = distribution_distance({st.cell_counts.begin(), st.cell_counts.end()}, grid);
    } else {
      st.distance.tv = 1;
    }
    rep.levels.push_back(std::move(st));
  }
  if (!any) throw DegenerateInput("equidistribution_report: every sample is empty");
  std::vector<double> x, y;
  for (const auto& st : rep.levels)
    if (st.count > 0) {
      x.push_back(std::log(std::abs(static_cast<double>(st.d))));
      y.push_back(st.distance.tv);
    }
  if (x.size() >= 2 && *std::max_element(x.begin(), x.end()) > *std::min_element(x.begin(), x.end()))
    rep.tv_trend = fit_line(x, y);
  return rep;
}

std::string level_csv(const LevelSetSample& sample, const RegionGrid& grid) {
  std::vector<std::size_t> counts(grid.cells.size(), 0);
  for (const auto& p : sample.points)
    if (p.cell >= 0) ++counts[static_cast<std::size_t>(p.cell)];
  std::ostringstream os;
  os.precision(12);
  os << "cell,count,ref_mass\n";
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    if (grid.cells[i].excluded) continue;
    os << i << ',' << counts[i] << ',' << grid.cells[i].mass << '\n';
  }
  return os.str();
}

nlohmann::json to_json(const EquidistributionReport& report) {
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& st : report.levels)
    levels.push_back({{"d", st.d},
                      {"N_d", st.count},
                      {"filtered", st.filtered},
                      {"C_d", st.C_d},
                      {"log_C_d_over_log_d", st.growth},
                      {"distance", st.distance.tv},
                      {"chi2", st.distance.chi2}});
  return {{"levels", levels},
          {"volume", report.volume},
          {"max_square_part", report.max_square_part},
          {"tv_trend", {{"slope", report.tv_trend.slope}, {"intercept", report.tv_trend.intercept}}}};
}

QMatrix random_unimodular(std::mt19937_64& rng, std::size_t steps) {
  std::uniform_int_distribution<int> idx(0, 2), sign(0, 1);
  QMatrix g = QMatrix::identity(3);
  for (std::size_t s = 0; s < steps; ++s) {
    const int i = idx(rng);
    int j = idx(rng);
    while (j == i) j = idx(rng);
    QMatrix e = QMatrix::identity(3);
    e(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = sign(rng) ? 1 : -1;
    g = g * e;
  }
  return g;
}

OrbitAudit orbit_audit(const std::vector<LevelSetSample>& samples, std::size_t max_points, std::uint64_t seed,
                       bool check_conjugates) {
  static const LieAlgebraModel sl3 = make_sl(3);
  OrbitAudit out;
  std::mt19937_64 rng(seed);
  for (const auto& s : samples) {
    if (s.points.empty() || max_points == 0) continue;
    const std::size_t stride = std::max<std::size_t>(1, s.points.size() / max_points);
    for (std::size_t i = 0; i < s.points.size() && i / stride < max_points; i += stride) {
      const QMatrix y = to_qmatrix(s.points[i]);
      out.records.push_back(make_orbit_record(sl3, y));
      if (check_conjugates) {
        const QMatrix g = random_unimodular(rng);
        const auto conj = make_orbit_record(sl3, g.transpose() * y * g);
        ++out.conjugation_checks;
        if (conj.disc != out.records.back().disc) ++out.conjugation_failures;
      }
    }
  }
  std::vector<double> x, v;
  for (const auto& r : out.records) {
    x.push_back(r.line_height);
    v.push_back(r.disc.get_d());
  }
  if (x.size() >= 2 && *std::max_element(x.begin(), x.end()) > *std::min_element(x.begin(), x.end()))
    out.disc_vs_line_height = fit_loglog(x, v);
  return out;
}

}  // namespace equi
