#include "equi/cli.hpp"

#include <gmp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <Eigen/Core>
#include <boost/version.hpp>

#include "CLI11.hpp"
#include "equi/dioph.hpp"
#include "equi/errors.hpp"
#include "equi/heights.hpp"
#include "equi/lattice_count.hpp"
#include "equi/lie_core.hpp"
#include "equi/linnik.hpp"
#include "equi/subalgebra_gen.hpp"
#include "equi/unipotent_dynamics.hpp"

namespace equi {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kSubcommands{"subalg", "dioph", "heights", "count", "flow", "linnik"};

// Defaults per subcommand; any key not listed here is rejected.
json defaults_for(const std::string& sub) {
  if (sub == "subalg")
    return {{"algebra", "sl3"}, {"generators", "perturbed_block_sl2"}, {"eps", 1e-7}, {"delta", 1e-2},
            {"closure_tol", 1e-9}, {"max_iter", 500}, {"cap", 100000}};
  if (sub == "dioph")
    return {{"trials", 1000}, {"n_max", 5}, {"m_max", 5}, {"entry_max", 10}, {"delta", 1e-6},
            {"bound_scale", 1.0}, {"matrix", nullptr}, {"v", nullptr}};
  if (sub == "heights")
    return {{"d_max", 300}, {"box", "2/5"}, {"points_per_level", 2}, {"band_max", 100.0}};
  if (sub == "count")
    return {{"T_min", 10.0}, {"T_max", 200.0}, {"steps", 8}, {"quadrature_points", 256}, {"sl32", json::array()}};
  if (sub == "flow")
    return {{"x", "random"}, {"f", "family"}, {"T0", 5}, {"T1", 25}, {"M", 3.0}};
  if (sub == "linnik")
    return {{"r", 3}, {"d_list", "2..3000:20"}, {"box", "2/5"}, {"grid", 2}, {"cap", 1000000},
            {"max_square_part", 1}, {"quad_points", 8}, {"audit_points", 0}};
  throw UsageError("unknown subcommand '" + sub + "'");
}

// keys whose values must be strictly positive numbers
const std::vector<std::string> kPositive{"eps", "delta", "closure_tol", "max_iter", "cap", "trials", "n_max",
                                         "m_max", "entry_max", "bound_scale", "d_max", "points_per_level",
                                         "band_max", "T_min", "T_max", "steps", "quadrature_points", "T0",
                                         "M", "grid", "max_square_part", "quad_points"};

template <class T>
T get(const json& sec, const std::string& key) {
  try {
    return sec.at(key).get<T>();
  } catch (const json::exception& e) {
    throw UsageError("config field '" + key + "': " + e.what());
  }
}

fs::path resolve(const ExperimentConfig& cfg, const std::string& p) {
  const fs::path path(p);
  if (path.is_absolute() || fs::exists(path)) return path;
  return cfg.base_dir / path;
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << text;
}

// Identifies the run in every artifact.
struct Stamp {
  std::string hash;
  std::uint64_t seed = 0;
};

void write_json(const fs::path& file, const json& doc, const Stamp& st) {
  json d = round_floats(doc);
  d["config_hash"] = st.hash;
  d["seed"] = st.seed;
  write_text(file, d.dump(2) + "\n");
}

// CSV with the stamp as a gnuplot comment line
void write_csv(const fs::path& file, const std::string& body, const Stamp& st) {
  write_text(file, "# config_hash=" + st.hash + " seed=" + std::to_string(st.seed) + "\n" + body);
}

// gnuplot script for a CSV written next to it
void write_plot(const fs::path& csv, const std::string& xlabel, const std::string& ylabel, const std::string& using_,
                bool logscale) {
  fs::path gp = csv;
  gp.replace_extension(".gp");
  std::ostringstream os;
  os << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set xlabel '" << xlabel << "'\nset ylabel '" << ylabel << "'\n"
     << (logscale ? "set logscale xy\n" : "") << "plot '" << csv.filename().string() << "' using " << using_
     << " with linespoints\n";
  write_text(gp, os.str());
}

std::string fmt12(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

struct Violations {
  std::vector<std::pair<std::string, std::string>> items;
  void add(const std::string& name, const std::string& detail) { items.emplace_back(name, detail); }
  json to_json() const {
    json a = json::array();
    for (const auto& [n, d] : items) a.push_back({{"invariant", n}, {"detail", d}});
    return a;
  }
  void raise() const {
    if (!items.empty()) throw InvariantViolation(items.front().first, items.front().second);
  }
};

LieAlgebraModel load_algebra(const ExperimentConfig& cfg, const std::string& name) {
  try {
    return builtin_algebra(name);
  } catch (const std::invalid_argument&) {
  }
  const fs::path p = resolve(cfg, name);
  if (!fs::exists(p)) throw UsageError("algebra '" + name + "' is neither built in nor a readable file");
  return LieAlgebraModel::load(p);
}

double number_of(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return to_double(parse_rational(v.get<std::string>()));
  throw UsageError("expected a number or a rational string");
}

// ---------------------------------------------------------------------------

json run_subalg(const ExperimentConfig& cfg, const Stamp& stamp, Violations& bad, std::ostream& log) {
  const auto& s = cfg.section();
  const auto alg = load_algebra(cfg, get<std::string>(s, "algebra"));
  const double delta = get<double>(s, "delta");
  std::vector<RVector> gens;
  if (s.at("generators").is_string()) {
    if (get<std::string>(s, "generators") != "perturbed_block_sl2")
      throw UsageError("unknown generator family '" + get<std::string>(s, "generators") + "'");
    if (alg.dim() != 8) throw UsageError("perturbed_block_sl2 needs sl3");
    gens = perturbed_block_sl2(alg, get<double>(s, "eps"));
  } else {
    for (const auto& row : s.at("generators")) {
      RVector v(static_cast<Eigen::Index>(alg.dim()));
      if (row.size() != alg.dim()) throw UsageError("generator length differs from the algebra dimension");
      for (std::size_t i = 0; i < alg.dim(); ++i) v(static_cast<Eigen::Index>(i)) = number_of(row[i]);
      gens.push_back(v);
    }
    if (gens.empty()) throw UsageError("no generators");
  }
  NearestOptions opt;
  opt.closure_tol = get<double>(s, "closure_tol");
  opt.max_iter = get<std::size_t>(s, "max_iter");
  const auto r = prop_E(alg, gens, delta, std::nullopt, opt, get<std::size_t>(s, "cap"));
  log << "subalg: output_dim " << r.w.size() << ", closure_defect " << fmt12(r.closure_defect) << "\n";
  if (!(r.closure_defect <= opt.closure_tol))
    bad.add("closure_defect", fmt12(r.closure_defect) + " > " + fmt12(opt.closure_tol));
  if (!(r.max_generator_distance <= delta))
    bad.add("generator_distance", fmt12(r.max_generator_distance) + " > delta " + fmt12(delta));
  json out = to_json(r, gens.size());
  write_json(cfg.output() / "subalg.json", out, stamp);
  return out;
}

json run_dioph(const ExperimentConfig& cfg, const Stamp& stamp, Violations& bad, std::ostream& log) {
  const auto& s = cfg.section();
  const double scale = get<double>(s, "bound_scale");
  struct Instance {
    ExactMatrix a;
    Eigen::VectorXd v;
    double delta;
  };
  std::vector<Instance> instances;
  if (!s.at("matrix").is_null()) {
    std::vector<std::vector<long>> rows;
    if (s.at("matrix").is_string()) {
      // CSV of integers, one row per line
      std::ifstream in(resolve(cfg, s.at("matrix").get<std::string>()));
      if (!in) throw UsageError("cannot read matrix file '" + s.at("matrix").get<std::string>() + "'");
      for (std::string line; std::getline(in, line);) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ls(line);
        std::vector<long> row;
        for (std::string cell; std::getline(ls, cell, ',');) {
          try {
            row.push_back(std::stol(cell));
          } catch (const std::exception&) {
            throw UsageError("matrix file: '" + cell + "' is not an integer");
          }
        }
        rows.push_back(std::move(row));
      }
    } else {
      try {
        rows = s.at("matrix").get<std::vector<std::vector<long>>>();
      } catch (const json::exception&) {
        throw UsageError("dioph.matrix must be a list of integer rows or a CSV file");
      }
    }
    if (rows.empty() || rows.front().empty()) throw UsageError("dioph.matrix is empty");
    for (const auto& r : rows)
      if (r.size() != rows.front().size()) throw UsageError("dioph.matrix rows differ in length");
    const auto a = ExactMatrix::from_rows(rows);
    if (s.at("v").is_null() || s.at("v").size() != a.cols()) throw UsageError("dioph.v must have one entry per column");
    Eigen::VectorXd v(static_cast<Eigen::Index>(a.cols()));
    for (std::size_t i = 0; i < a.cols(); ++i) v(static_cast<Eigen::Index>(i)) = number_of(s.at("v")[i]);
    instances.push_back({a, v, get<double>(s, "delta")});
  } else {
    std::mt19937_64 rng(cfg.seed());
    const auto trials = get<std::size_t>(s, "trials");
    std::uniform_int_distribution<std::size_t> nd(1, get<std::size_t>(s, "n_max")), md(1, get<std::size_t>(s, "m_max"));
    const long E = get<long>(s, "entry_max");
    std::uniform_int_distribution<long> entry(-E, E);
    std::normal_distribution<double> g;
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t n = nd(rng), m = md(rng);
      ZMatrix z(n, m);
      for (auto& x : z.data) x = entry(rng);
      if (std::all_of(z.data.begin(), z.data.end(), [](const Integer& x) { return x == 0; })) z.data[0] = 1;
      ExactMatrix a(std::move(z));
      // a kernel vector plus noise of norm delta
      Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
      for (const auto& k : integer_kernel_basis(a.entries))
        for (std::size_t i = 0; i < m; ++i) v(static_cast<Eigen::Index>(i)) += g(rng) * k[i].get_d();
      Eigen::VectorXd noise(static_cast<Eigen::Index>(m));
      for (auto& x : noise) x = g(rng);
      const double delta = get<double>(s, "delta");
      v += delta * noise / noise.norm();
      const double av = (a.to_qmatrix().to_eigen() * v).norm();
      instances.push_back({std::move(a), v, std::max(delta, av)});
    }
  }
  std::size_t kernel_fail = 0, bound_fail = 0, floor_fail = 0;
  double worst = 0;
  json detail = json::array();
  for (const auto& inst : instances) {
    const auto r = kernel_project(inst.a, inst.v, inst.delta);
    if (!is_zero(inst.a.to_qmatrix() * r.v0_exact)) ++kernel_fail;
    const double ratio = r.bound > 0 ? r.distance / r.bound : (r.distance > 0 ? INFINITY : 0.0);
    worst = std::max(worst, ratio);
    if (!(r.distance <= scale * r.bound)) ++bound_fail;
    bool floor_ok = true;
    if (!inst.a.to_qmatrix().is_zero()) {
      floor_ok = singular_value_floor(inst.a).holds;
      if (!floor_ok) ++floor_fail;
    }
    if (instances.size() == 1) {
      json v0 = json::array();
      for (const auto& q : r.v0_exact) v0.push_back(to_string(q));
      detail.push_back({{"v0", v0},
                        {"distance", r.distance},
                        {"bound", r.bound},
                        {"claimed_bound", scale * r.bound},
                        {"delta_used", r.delta_used},
                        {"delta_replaced", r.delta_replaced},
                        {"snapshot_bits", r.snapshot_bits},
                        {"floor_holds", floor_ok}});
    }
  }
  log << "dioph: " << instances.size() << " instances, worst distance/bound " << fmt12(worst) << "\n";
  if (kernel_fail) bad.add("kernel_membership", std::to_string(kernel_fail) + " projections not in ker A");
  if (bound_fail)
    bad.add("kernel_bound", std::to_string(bound_fail) + " distances exceed " + fmt12(scale) + " x delta (nm)^{n/2} E^n");
  if (floor_fail) bad.add("singular_value_floor", std::to_string(floor_fail) + " matrices below (nmE^2)^{-n/2}");
  json out{{"instances", instances.size()},
           {"bound_scale", scale},
           {"worst_distance_over_bound", worst},
           {"kernel_failures", kernel_fail},
           {"bound_failures", bound_fail},
           {"floor_failures", floor_fail}};
  if (!detail.empty()) out["detail"] = detail;
  out["violations"] = bad.to_json();
  write_json(cfg.output() / "dioph.json", out, stamp);
  return out;
}

json run_heights(const ExperimentConfig& cfg, const Stamp& stamp, Violations& bad, std::ostream& log) {
  const auto& s = cfg.section();
  const auto box = parse_box(get<std::string>(s, "box"));
  std::vector<long> levels;
  for (long d = 2; d <= get<long>(s, "d_max"); ++d)
    if (is_squarefree(d)) levels.push_back(d);
  std::vector<LevelSetSample> samples;
  for (const long d : levels) samples.push_back(enumerate_levelset(d, box));
  const auto audit = orbit_audit(samples, get<std::size_t>(s, "points_per_level"), cfg.seed());
  if (audit.records.empty()) throw UsageError("heights: no lattice points in the box for d <= d_max");
  const auto band = check_heightdisc(audit.records);
  std::ostringstream lines, csv;
  csv << "d,disc,height,ratio\n";
  for (std::size_t i = 0; i < audit.records.size(); ++i) {
    const auto& r = audit.records[i];
    json e = json::array();
    for (const auto& z : symmetric_coordinates(r.y)) e.push_back(z.get_si());
    json j{{"y", e},
           {"level", r.level.get_str()},
           {"disc", r.disc.get_str()},
           {"subspace_height", r.subspace_height},
           {"square_part", r.square_part.get_str()},
           {"line_height", r.line_height},
           {"config_hash", stamp.hash},
           {"seed", stamp.seed}};
    lines << round_floats(j).dump() << "\n";
    csv << r.level.get_str() << ',' << r.disc.get_str() << ',' << fmt12(r.subspace_height) << ','
        << fmt12(band.ratios[i]) << "\n";
  }
  write_text(cfg.output() / "heights.jsonl", lines.str());
  write_csv(cfg.output() / "heights.csv", csv.str(), stamp);
  write_plot(cfg.output() / "heights.csv", "disc", "height", "2:3", true);
  log << "heights: " << audit.records.size() << " orbits, band " << fmt12(band.band) << "\n";
  const double band_max = get<double>(s, "band_max");
  if (!(band.band <= band_max)) bad.add("heightdisc_band", fmt12(band.band) + " > " + fmt12(band_max));
  if (audit.conjugation_failures)
    bad.add("disc_invariance", std::to_string(audit.conjugation_failures) + " conjugates changed disc");
  json out{{"orbits", audit.records.size()},
           {"box", to_string(box)},
           {"min_ratio", band.min_ratio},
           {"max_ratio", band.max_ratio},
           {"median_ratio", band.median_ratio},
           {"band", band.band},
           {"conjugation_checks", audit.conjugation_checks},
           {"conjugation_failures", audit.conjugation_failures},
           {"disc_vs_line_height_slope", audit.disc_vs_line_height.slope},
           {"violations", bad.to_json()}};
  write_json(cfg.output() / "heights.json", out, stamp);
  return out;
}

json run_count(const ExperimentConfig& cfg, const Stamp& stamp, Violations& bad, std::ostream& log) {
  const auto& s = cfg.section();
  const double lo = get<double>(s, "T_min"), hi = get<double>(s, "T_max");
  const auto steps = get<std::size_t>(s, "steps");
  if (hi < lo) throw UsageError("count: T_max < T_min");
  if (hi > kEnumerationRadiusCap) throw UsageError("count: T_max above the enumeration cap of 500");
  std::vector<double> radii;
  for (std::size_t i = 0; i < steps; ++i)
    radii.push_back(steps == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(steps - 1)));
  const auto rep = count_report(radii, get<std::size_t>(s, "quadrature_points"), cfg.threads());
  write_csv(cfg.output() / "count.csv", to_csv(rep), stamp);
  write_plot(cfg.output() / "count.csv", "T", "count, vol", "1:2, '' using 1:3", true);
  for (const auto& r : rep.rows)
    if (r.count % 2) bad.add("count_even", "odd count at T = " + fmt12(r.T));
  if (!rep.monotone) bad.add("count_monotone", "counts decrease along T");
  json sl32 = json::array();
  for (const auto& t : s.at("sl32")) {
    Sl32Options opt;
    opt.threads = cfg.threads();
    opt.seed = cfg.seed();
    const auto r = check_sl32_bounds(number_of(t), opt);
    sl32.push_back({{"T", r.T},
                    {"lattice_count", r.lattice_count},
                    {"vol_Btilde", r.vol_Btilde},
                    {"covolume", r.covolume},
                    {"lower_binding", r.lower_binding},
                    {"lower_constant", r.lower_constant},
                    {"lower_holds", r.lower_holds},
                    {"upper_constant", r.upper_constant},
                    {"upper_holds", r.upper_holds},
                    {"club_single_constant", r.club_single_constant},
                    {"club_pair_constant", r.club_pair_constant}});
  }
  log << "count: exponent " << fmt12(rep.exponent) << "\n";
  json out{{"haar", rep.haar},
           {"exponent", rep.exponent},
           {"exponent_log", rep.exponent_log},
           {"log_exponent", rep.log_exponent},
           {"monotone", rep.monotone},
           {"sl32", sl32},
           {"violations", bad.to_json()}};
  write_json(cfg.output() / "count.json", out, stamp);
  return out;
}

std::vector<TestFunction> parse_family(const json& f) {
  std::vector<std::string> specs;
  if (f.is_string()) specs.push_back(f.get<std::string>());
  else
    for (const auto& x : f) specs.push_back(x.get<std::string>());
  std::vector<TestFunction> out;
  for (const auto& spec : specs) {
    if (spec == "family") {
      for (auto& g : default_test_family()) out.push_back(std::move(g));
      continue;
    }
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    std::vector<double> p;
    if (colon != std::string::npos) {
      std::stringstream ss(spec.substr(colon + 1));
      std::string item;
      while (std::getline(ss, item, ',')) p.push_back(to_double(parse_rational(item)));
    }
    try {
      if (kind == "height_bump" && p.size() == 2) out.push_back(TestFunction::height_bump(p[0], p[1]));
      else if (kind == "coordinate_bump" && p.size() == 4)
        out.push_back(TestFunction::coordinate_bump(p[0], p[1], p[2], p[3]));
      else
        throw UsageError("test function '" + spec + "': expected height_bump:y0,w or coordinate_bump:x0,y0,theta0,w");
    } catch (const UsageError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  return out;
}

json run_flow(const ExperimentConfig& cfg, const Stamp& stamp, Violations& bad, std::ostream& log) {
  const auto& s = cfg.section();
  const auto family = parse_family(s.at("f"));
  ModularPoint x = ModularPoint::from_coordinates(0, 1, 0);
  const auto& xs = s.at("x");
  if (xs.is_array()) {
    if (xs.size() != 3) throw UsageError("flow.x must be [x, y, theta]");
    x = ModularPoint::from_coordinates(number_of(xs[0]), number_of(xs[1]), number_of(xs[2]));
  } else {
    std::mt19937_64 rng(xs.is_number_integer() ? xs.get<std::uint64_t>() : cfg.seed());
    if (xs.is_string() && xs.get<std::string>() != "random") throw UsageError("flow.x must be \"random\", a seed or [x, y, theta]");
    x = ModularPoint::random(rng);
  }
  const auto v = genericity_test(x, family, get<long>(s, "T0"), get<long>(s, "T1"), get<double>(s, "M"));
  json out = to_json(v, x, family);
  for (std::size_t i = 0; i < family.size(); ++i) {
    out["family"][i]["mean"] = family[i].mean();
    if (!(family[i].sobolev_surrogate() >= std::abs(family[i].amplitude())))
      bad.add("sobolev_surrogate", "surrogate below sup |f| for " + family[i].name());
    if (family[i].mean() < std::min(0.0, family[i].amplitude()) - 1e-12 ||
        family[i].mean() > std::max(0.0, family[i].amplitude()) + 1e-12)
      bad.add("mu_integral_range", family[i].name());
  }
  out["violations"] = bad.to_json();
  std::ostringstream csv;
  csv << "f,n,abs_D\n";
  for (std::size_t fi = 0; fi < v.abs_discrepancy.size(); ++fi)
    for (std::size_t i = 0; i < v.abs_discrepancy[fi].size(); ++i)
      csv << fi << ',' << v.T0 + static_cast<long>(i) << ',' << fmt12(v.abs_discrepancy[fi][i]) << "\n";
  write_json(cfg.output() / "flow.json", out, stamp);
  write_csv(cfg.output() / "flow.csv", csv.str(), stamp);
  write_plot(cfg.output() / "flow.csv", "n", "|D_n(f)|", "2:3", true);
  log << "flow: generic " << (v.pass ? "yes" : "no") << ", worst ratio " << fmt12(v.worst_ratio) << "\n";
  return out;
}

std::vector<long> parse_levels(const ExperimentConfig& cfg, const json& spec) {
  std::vector<long> out;
  if (spec.is_array()) {
    for (const auto& d : spec) out.push_back(d.get<long>());
  } else if (spec.is_string()) {
    const std::string str = spec.get<std::string>();
    const auto dots = str.find("..");
    if (dots != std::string::npos) {
      const auto colon = str.find(':', dots);
      const long a = std::stol(str.substr(0, dots));
      const long b = std::stol(str.substr(dots + 2, colon == std::string::npos ? std::string::npos : colon - dots - 2));
      if (colon != std::string::npos) return squarefree_sweep(a, b, std::stoul(str.substr(colon + 1)));
      for (long d = a; d <= b; ++d)
        if (is_squarefree(d)) out.push_back(d);
    } else {
      std::ifstream in(resolve(cfg, str));
      if (!in) throw UsageError("cannot read d-list file '" + str + "'");
      long d;
      while (in >> d) out.push_back(d);
    }
  } else {
    throw UsageError("linnik.d_list must be a list, a range a..b[:count] or a file");
  }
  if (out.empty()) throw UsageError("linnik: empty d list");
  for (const long d : out)
    if (d == 0) throw UsageError("linnik: d must be nonzero");
  return out;
}

json run_linnik(const ExperimentConfig& cfg, const Stamp& stamp, Violations& bad, std::ostream& log) {
  const auto& s = cfg.section();
  if (get<long>(s, "r") != 3) throw UsageError("linnik: only r = 3 is supported");
  const auto levels = parse_levels(cfg, s.at("d_list"));
  const auto grid = reference_masses(make_grid(parse_box(get<std::string>(s, "box")), get<std::size_t>(s, "grid")),
                                     get<std::size_t>(s, "quad_points"));
  const auto samples = enumerate_levels(levels, grid, get<std::size_t>(s, "cap"), cfg.threads());
  std::size_t det_fail = 0, spade_fail = 0, prim_fail = 0;
  for (const auto& smp : samples) {
    for (const auto& p : smp.points) {
      if (determinant(to_qmatrix(p)) != Rational(smp.d)) ++det_fail;
      const long sp = p.square_part;
      if (smp.d % (sp * sp * sp) != 0) ++spade_fail;
      if (is_squarefree(smp.d) && sp != 1) ++prim_fail;
    }
    write_csv(cfg.output() / ("linnik_d" + std::to_string(smp.d) + ".csv"), level_csv(smp, grid), stamp);
  }
  if (det_fail) bad.add("level_determinant", std::to_string(det_fail) + " points with det != d");
  if (spade_fail) bad.add("square_part_divides", std::to_string(spade_fail) + " points with square part^3 not dividing d");
  if (prim_fail) bad.add("primitive_squarefree", std::to_string(prim_fail) + " imprimitive points on squarefree levels");
  const auto rep = equidistribution_report(samples, grid, get<long>(s, "max_square_part"));
  json out = to_json(rep);
  out["box"] = to_string(grid.box);
  out["grid"] = grid.n;
  json cand = json::array();
  for (const auto& smp : samples) cand.push_back(smp.candidates);
  out["candidates"] = cand;
  if (const auto n = get<std::size_t>(s, "audit_points"); n > 0) {
    const auto audit = orbit_audit(samples, n, cfg.seed());
    if (audit.conjugation_failures)
      bad.add("disc_invariance", std::to_string(audit.conjugation_failures) + " conjugates changed disc");
    out["audit"] = {{"records", audit.records.size()},
                    {"conjugation_failures", audit.conjugation_failures},
                    {"disc_vs_line_height_slope", audit.disc_vs_line_height.slope}};
  }
  out["violations"] = bad.to_json();
  write_json(cfg.output() / "linnik.json", out, stamp);
  log << "linnik: " << levels.size() << " levels, tv trend " << fmt12(rep.tv_trend.slope) << "\n";
  return out;
}

std::string versions() {
  std::ostringstream os;
  os << "equi " << kVersion << "; Eigen " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.'
     << EIGEN_MINOR_VERSION << "; Boost " << BOOST_LIB_VERSION << "; GMP " << gmp_version << "; CLI11 "
     << CLI11_VERSION << "; nlohmann_json " << NLOHMANN_JSON_VERSION_MAJOR << '.' << NLOHMANN_JSON_VERSION_MINOR << '.'
     << NLOHMANN_JSON_VERSION_PATCH;
  return os.str();
}

json parse_flag_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return text;
  }
}

}  // namespace

std::string config_hash(const json& doc) {
  const std::string s = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json round_floats(const json& doc) {
  if (doc.is_number_float()) {
    const double x = doc.get<double>();
    if (!std::isfinite(x)) return std::isnan(x) ? json("nan") : json(x > 0 ? "inf" : "-inf");
    return std::strtod(fmt12(x).c_str(), nullptr);
  }
  if (doc.is_array()) {
    json out = json::array();
    for (const auto& x : doc) out.push_back(round_floats(x));
    return out;
  }
  if (doc.is_object()) {
    json out = json::object();
    for (auto it = doc.begin(); it != doc.end(); ++it) out[it.key()] = round_floats(it.value());
    return out;
  }
  return doc;
}

ExperimentConfig validate_config(json doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw UsageError("config must be a JSON object");
  if (!doc.contains("subcommand") || !doc["subcommand"].is_string()) throw UsageError("config needs a subcommand");
  const std::string sub = doc["subcommand"].get<std::string>();
  if (std::find(kSubcommands.begin(), kSubcommands.end(), sub) == kSubcommands.end())
    throw UsageError("unknown subcommand '" + sub + "'");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const auto& k = it.key();
    if (k != "subcommand" && k != "seed" && k != "threads" && k != "output" && k != sub)
      throw UsageError("unexpected config field '" + k + "'");
  }
  if (!doc.contains("seed")) doc["seed"] = 1;
  if (!doc.contains("threads")) doc["threads"] = 1;
  if (!doc.contains("output")) doc["output"] = "out";
  if (!doc["seed"].is_number_integer() || doc["seed"].get<long long>() < 0)
    throw UsageError("seed must be a nonnegative integer");
  doc["seed"] = doc["seed"].get<std::uint64_t>();
  if (!doc["threads"].is_number_integer() || doc["threads"].get<long long>() <= 0)
    throw UsageError("threads must be a positive integer");
  doc["threads"] = doc["threads"].get<unsigned>();
  if (!doc["output"].is_string()) throw UsageError("output must be a path");
  json sec = defaults_for(sub);
  if (doc.contains(sub)) {
    if (!doc[sub].is_object()) throw UsageError("config field '" + sub + "' must be an object");
    for (auto it = doc[sub].begin(); it != doc[sub].end(); ++it) {
      if (!sec.contains(it.key())) throw UsageError("unexpected field '" + sub + "." + it.key() + "'");
      sec[it.key()] = it.value();
    }
  }
  for (const auto& k : kPositive) {
    if (!sec.contains(k)) continue;
    const auto& v = sec[k];
    if (!v.is_number() || !(v.get<double>() > 0)) throw UsageError("'" + sub + "." + k + "' must be a positive number");
  }
  doc[sub] = sec;
  ExperimentConfig cfg;
  cfg.doc = std::move(doc);
  cfg.base_dir = base_dir;
  return cfg;
}

void run(const ExperimentConfig& cfg, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(cfg.output());
  const Stamp stamp{config_hash(cfg.doc), cfg.seed()};
  Violations bad;
  const std::string sub = cfg.subcommand();
  if (sub == "subalg") run_subalg(cfg, stamp, bad, log);
  else if (sub == "dioph") run_dioph(cfg, stamp, bad, log);
  else if (sub == "heights") run_heights(cfg, stamp, bad, log);
  else if (sub == "count") run_count(cfg, stamp, bad, log);
  else if (sub == "flow") run_flow(cfg, stamp, bad, log);
  else if (sub == "linnik") run_linnik(cfg, stamp, bad, log);
  else throw UsageError("unknown subcommand '" + sub + "'");
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json manifest{{"config", cfg.doc},
                {"config_hash", stamp.hash},
                {"versions", versions()},
                {"wall_time_s", wall},
                {"status", bad.items.empty() ? "ok" : "invariant_violation"},
                {"violations", bad.to_json()}};
  write_text(cfg.output() / "manifest.json", round_floats(manifest).dump(2) + "\n");
  bad.raise();
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Experiments on effective equidistribution: subalgebras, heights, counting, horocycles, level sets"};
  app.set_version_flag("--version", std::string(kVersion));
  std::string config_file, out_dir;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  auto* o_config = app.add_option("--config", config_file, "JSON ExperimentConfig")->check(CLI::ExistingFile);
  auto* o_out = app.add_option("--out", out_dir, "output directory");
  auto* o_seed = app.add_option("--seed", seed, "seed for randomized trials");
  auto* o_threads = app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  // per-subcommand overrides: flag name -> config key
  struct Flag {
    std::string sub, key, value;
    CLI::Option* opt = nullptr;
  };
  std::vector<Flag> flags;
  flags.reserve(64);
  auto add = [&](CLI::App* sc, const std::string& name, const std::string& key, const std::string& help) {
    flags.push_back({sc->get_name(), key, "", nullptr});
    flags.back().opt = sc->add_option(name, flags.back().value, help);
  };
  auto* s_subalg = app.add_subcommand("subalg", "effective generation of a subalgebra (prop_E)");
  add(s_subalg, "--algebra", "algebra", "built-in name or algebra JSON file");
  add(s_subalg, "--delta", "delta", "threshold delta");
  add(s_subalg, "--eps", "eps", "perturbation of the block sl2 fixture");
  add(s_subalg, "--closure-tol", "closure_tol", "closure tolerance");
  auto* s_dioph = app.add_subcommand("dioph", "kernel approximation bound suite");
  add(s_dioph, "--trials", "trials", "random instances");
  add(s_dioph, "--delta", "delta", "noise norm");
  add(s_dioph, "--bound-scale", "bound_scale", "factor applied to the certified radius before checking");
  auto* s_heights = app.add_subcommand("heights", "height/disc relation on Case A orbits");
  add(s_heights, "--d-max", "d_max", "largest level");
  add(s_heights, "--box", "box", "region box spec");
  add(s_heights, "--band-max", "band_max", "allowed max/min ratio");
  auto* s_count = app.add_subcommand("count", "SL2(Z) lattice points in norm balls");
  add(s_count, "--T-min", "T_min", "smallest radius");
  add(s_count, "--T-max", "T_max", "largest radius");
  add(s_count, "--steps", "steps", "geometric steps");
  add(s_count, "--quadrature-points", "quadrature_points", "nodes per quarter period");
  auto* s_flow = app.add_subcommand("flow", "horocycle discrepancy and genericity");
  add(s_flow, "--x", "x", "random | seed | [x,y,theta]");
  add(s_flow, "--f", "f", "family | height_bump:y0,w | coordinate_bump:x0,y0,theta0,w");
  add(s_flow, "--T0", "T0", "first block index");
  add(s_flow, "--T1", "T1", "last block index");
  add(s_flow, "--M", "M", "block exponent");
  auto* s_linnik = app.add_subcommand("linnik", "integral symmetric matrices of determinant d");
  add(s_linnik, "--r", "r", "matrix size (3)");
  add(s_linnik, "--d-list", "d_list", "file | a..b | a..b:count");
  add(s_linnik, "--box", "box", "region box spec");
  add(s_linnik, "--grid", "grid", "cells per axis");
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    json doc = json::object();
    fs::path base = ".";
    if (*o_config) {
      std::ifstream in(config_file);
      try {
        doc = json::parse(in);
      } catch (const json::exception& e) {
        throw UsageError(std::string("config is not valid JSON: ") + e.what());
      }
      base = fs::path(config_file).parent_path();
    }
    const auto chosen = app.get_subcommands();
    if (!chosen.empty()) {
      const std::string name = chosen.front()->get_name();
      if (doc.contains("subcommand") && doc["subcommand"] != name)
        throw UsageError("config is for '" + doc["subcommand"].get<std::string>() + "', not '" + name + "'");
      doc["subcommand"] = name;
    }
    if (!doc.contains("subcommand")) {
      out << app.help();
      return kExitUsage;
    }
    if (*o_out) doc["output"] = out_dir;
    if (*o_seed) doc["seed"] = seed;
    if (*o_threads) doc["threads"] = threads;
    for (const auto& f : flags)
      if (f.opt->count() > 0 && doc["subcommand"] == f.sub) doc[f.sub][f.key] = parse_flag_value(f.value);
    const auto cfg = validate_config(doc, base);
    run(cfg, out);
    out << "artifacts in " << cfg.output().string() << " (config " << config_hash(cfg.doc) << ")\n";
    return kExitOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvariantViolation& e) {
    err << "invariant violated: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace equi
