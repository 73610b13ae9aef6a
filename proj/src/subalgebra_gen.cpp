#include "equi/subalgebra_gen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "equi/errors.hpp"

namespace equi {

namespace {

constexpr double kDedupTol = 1e-12;
constexpr double kZeroTol = 1e-13;

// Modified Gram–Schmidt (two passes) on columns, unit coordinates. Returns false on rank loss.
bool orthonormalize_columns(RMatrix& z, double tol = 1e-10) {
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    const double before = z.col(c).norm();
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index p = 0; p < c; ++p) z.col(c) -= z.col(p).dot(z.col(c)) * z.col(p);
    const double n = z.col(c).norm();
    if (n <= tol * std::max(1.0, before)) return false;
    z.col(c) /= n;
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// Bracket closure

BracketClosure::BracketClosure(const LieAlgebraModel& alg, const std::vector<RVector>& generators, std::size_t cap)
    : alg_(&alg), cap_(cap) {
  if (generators.empty()) throw DegenerateInput("iterated_brackets: empty generating set");
  level_start_.assign(2, 0);  // level 0 unused
  for (std::size_t i = 0; i < generators.size(); ++i) {
    alg.check_dimension(generators[i]);
    insert(generators[i], 1, "t" + std::to_string(i));
  }
  depth_ = 1;
  level_start_.push_back(elements_.size());  // start of level 2
}

bool BracketClosure::insert(RVector v, std::size_t depth, std::string expr) {
  const double n = alg_->norm(v);
  if (n < kZeroTol) return false;
  auto lo = std::lower_bound(by_norm_.begin(), by_norm_.end(), std::make_pair(n - kDedupTol, std::size_t{0}));
  for (auto it = lo; it != by_norm_.end() && it->first <= n + kDedupTol; ++it) {
    const RVector& u = elements_[it->second].v;
    if (std::min(alg_->norm(v - u), alg_->norm(v + u)) < kDedupTol) return false;
  }
  if (elements_.size() + 1 > cap_)
    throw CapExceeded("iterated_brackets: closure exceeds the cap of " + std::to_string(cap_) + " elements");
  const std::size_t idx = elements_.size();
  elements_.push_back({std::move(v), depth, std::move(expr)});
  by_norm_.insert(std::upper_bound(by_norm_.begin(), by_norm_.end(), std::make_pair(n, idx)), std::make_pair(n, idx));
  return true;
}

void BracketClosure::extend(std::size_t depth) {
  while (depth_ < depth) {
    const std::size_t d = depth_ + 1;
    // level_start_[l] .. level_start_[l+1] holds depth l; level d starts at the current size.
    for (std::size_t i = 1; i <= d / 2; ++i) {
      const std::size_t j = d - i;
      for (std::size_t a = level_start_[i]; a < level_start_[i + 1]; ++a) {
        const std::size_t b0 = (i == j) ? a + 1 : level_start_[j];
        for (std::size_t b = b0; b < level_start_[j + 1]; ++b) {
          RVector v = alg_->bracket(elements_[a].v, elements_[b].v);
          insert(std::move(v), d, "[" + elements_[a].expr + "," + elements_[b].expr + "]");
        }
      }
    }
    depth_ = d;
    level_start_.push_back(elements_.size());
  }
}

std::size_t BracketClosure::count_up_to(std::size_t k) const {
  if (k >= depth_) return elements_.size();
  return level_start_[k + 1];
}

RMatrix BracketClosure::matrix(std::size_t k) const {
  const std::size_t n = count_up_to(k);
  RMatrix m(static_cast<Eigen::Index>(alg_->dim()), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) m.col(static_cast<Eigen::Index>(i)) = elements_[i].v;
  return m;
}

BracketClosure iterated_brackets(const LieAlgebraModel& alg, const std::vector<RVector>& generators, std::size_t k,
                                 std::size_t cap) {
  if (k == 0) throw std::invalid_argument("iterated_brackets: depth must be >= 1");
  BracketClosure c(alg, generators, cap);
  c.extend(k);
  return c;
}

// ---------------------------------------------------------------------------
// SVD filter

double singular_value_noise_floor(const std::vector<double>& sv, std::size_t columns) {
  const double top = sv.empty() ? 0.0 : sv.front();
  return 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, top) *
         std::sqrt(static_cast<double>(std::max<std::size_t>(columns, 1)));
}

FilteredSpace svd_filter(const LieAlgebraModel& alg, const BracketClosure& closure, std::size_t m, double delta) {
  if (!(delta >= 0 && delta < 1)) throw std::invalid_argument("svd_filter: delta must lie in [0,1)");
  const RMatrix f = closure.matrix(m) * alg.norm_scale();
  if (f.cols() == 0) throw DegenerateInput("svd_filter: empty closure");
  FilteredSpace out;
  out.m = m;
  out.delta = delta;
  RMatrix u;
  RVector s;
  if (f.cols() <= f.rows()) {
    const Eigen::JacobiSVD<RMatrix> svd(f, Eigen::ComputeThinU);
    u = svd.matrixU();
    s = svd.singularValues();
  } else {
    // f^t = QR, so f f^t = R^t R and the left singular data of f are those of R^t.
    const Eigen::HouseholderQR<RMatrix> qr(f.transpose());
    const RMatrix r = qr.matrixQR().topRows(f.rows()).triangularView<Eigen::Upper>();
    const Eigen::JacobiSVD<RMatrix> svd(r.transpose(), Eigen::ComputeThinU);
    u = svd.matrixU();
    s = svd.singularValues();
  }
  out.singular_values.assign(s.data(), s.data() + s.size());
  const double floor = singular_value_noise_floor(out.singular_values, static_cast<std::size_t>(f.cols()));
  const double threshold = std::max(delta, floor);
  Eigen::Index keep = 0;
  while (keep < s.size() && s(keep) >= threshold) ++keep;
  out.left = u;
  out.frame.vectors = u.leftCols(keep) / alg.norm_scale();
  return out;
}

FilteredSpace svd_filter(const LieAlgebraModel& alg, const BracketClosure& closure, double delta) {
  return svd_filter(alg, closure, closure.depth(), delta);
}

// ---------------------------------------------------------------------------
// Stabilization

StabilizeResult stabilize(const LieAlgebraModel& alg, BracketClosure& closure, double delta) {
  if (!(delta > 0 && delta < 1)) throw std::invalid_argument("stabilize: delta must lie in (0,1)");
  StabilizeResult out;
  std::size_t m = 1;
  double d1 = delta;
  while (true) {
    closure.extend(2 * m);
    FilteredSpace here = svd_filter(alg, closure, m, d1);
    const FilteredSpace next = svd_filter(alg, closure, 2 * m, d1 * d1 * d1);
    out.dims.push_back(here.frame.size());
    if (here.frame.size() >= next.frame.size()) {
      out.m = m;
      out.delta1 = d1;
      out.W = std::move(here);
      return out;
    }
    m *= 2;
    d1 = d1 * d1 * d1;
    ++out.iterations;
    if (out.iterations > alg.dim())
      throw InvariantViolation("stabilize_iterations", "dimension increased more than dim(g) times");
  }
}

StabilizeResult stabilize(const LieAlgebraModel& alg, const std::vector<RVector>& generators, double delta,
                          std::size_t cap) {
  BracketClosure closure(alg, generators, cap);
  return stabilize(alg, closure, delta);
}

// ---------------------------------------------------------------------------
// Nearest subalgebra

namespace {

// Residuals r_ij = sqrt(det A) P [X_i, X_j] (i < j) in unit coordinates with normalized constants,
// plus the Jacobian w.r.t. the columns listed in `free_cols`.
struct ResidualModel {
  const LieAlgebraModel& alg;
  double inv_scale;

  RVector nbracket(const RVector& a, const RVector& b) const { return alg.bracket(a, b) * inv_scale; }
  RMatrix nad(const RVector& a) const { return alg.adjoint_matrix(a) * inv_scale; }

  RVector residual(const RMatrix& x) const {
    const Eigen::Index n = x.rows(), r = x.cols();
    const RMatrix a = x.transpose() * x;
    const Eigen::LDLT<RMatrix> ldlt(a);
    const double s = std::sqrt(std::max(0.0, a.determinant()));
    const RMatrix proj = RMatrix::Identity(n, n) - x * ldlt.solve(x.transpose());
    RVector out(n * r * (r - 1) / 2);
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = i + 1; j < r; ++j, row += n)
        out.segment(row, n) = s * proj * nbracket(x.col(i), x.col(j));
    return out;
  }

  RMatrix jacobian(const RMatrix& x, const std::vector<Eigen::Index>& free_cols) const {
    const Eigen::Index n = x.rows(), r = x.cols();
    const RMatrix a = x.transpose() * x;
    const RMatrix ainv = a.inverse();
    const double s = std::sqrt(std::max(0.0, a.determinant()));
    const RMatrix g = ainv * x.transpose();  // r x n
    const RMatrix xa = x * ainv;             // n x r
    const RMatrix proj = RMatrix::Identity(n, n) - x * g;
    std::vector<RMatrix> ads;
    for (Eigen::Index i = 0; i < r; ++i) ads.push_back(nad(x.col(i)));
    const Eigen::Index pairs = r * (r - 1) / 2;
    RMatrix jac = RMatrix::Zero(n * pairs, n * static_cast<Eigen::Index>(free_cols.size()));
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = i + 1; j < r; ++j, row += n) {
        const RVector y = nbracket(x.col(i), x.col(j));
        const RVector z = g * y;
        const RVector p = proj * y;
        for (std::size_t fc = 0; fc < free_cols.size(); ++fc) {
          const Eigen::Index c = free_cols[fc];
          for (Eigen::Index e = 0; e < n; ++e) {
            RVector d = g(c, e) * p - proj.col(e) * z(c) - xa.col(c) * p(e);
            if (c == i) d -= proj * ads[static_cast<std::size_t>(j)].col(e);
            if (c == j) d += proj * ads[static_cast<std::size_t>(i)].col(e);
            jac.block(row, static_cast<Eigen::Index>(fc) * n + e, n, 1) = s * d;
          }
        }
      }
    return jac;
  }
};

}  // namespace

double subalgebra_objective(const LieAlgebraModel& alg, const RMatrix& x_unit) {
  if (static_cast<std::size_t>(x_unit.rows()) != alg.dim()) throw DimensionError("objective: wrong frame height");
  if (x_unit.cols() < 2) return 0.0;
  const ResidualModel model{alg, 1.0 / alg.norm_scale()};
  return 2.0 * model.residual(x_unit).squaredNorm();
}

RMatrix subalgebra_objective_gradient(const LieAlgebraModel& alg, const RMatrix& x_unit) {
  if (static_cast<std::size_t>(x_unit.rows()) != alg.dim()) throw DimensionError("gradient: wrong frame height");
  const Eigen::Index n = x_unit.rows(), r = x_unit.cols();
  if (r < 2) return RMatrix::Zero(n, r);
  const ResidualModel model{alg, 1.0 / alg.norm_scale()};
  std::vector<Eigen::Index> cols(static_cast<std::size_t>(r));
  for (Eigen::Index c = 0; c < r; ++c) cols[static_cast<std::size_t>(c)] = c;
  const RVector g = 4.0 * model.jacobian(x_unit, cols).transpose() * model.residual(x_unit);
  return Eigen::Map<const RMatrix>(g.data(), n, r);
}

NearestResult nearest_subalgebra(const LieAlgebraModel& alg, const SubspaceFrame& w,
                                 const std::optional<SubspaceFrame>& contain, const NearestOptions& options) {
  const double lam = alg.norm_scale();
  const Eigen::Index n = static_cast<Eigen::Index>(alg.dim());
  if (w.vectors.rows() != n) throw DimensionError("nearest_subalgebra: frame of the wrong algebra");
  const Eigen::Index r = w.vectors.cols();
  NearestResult out;

  // Fixed block (contain) and free block, unit coordinates.
  RMatrix fixed(n, 0);
  if (contain && contain->size() > 0) {
    if (contain->vectors.rows() != n) throw DimensionError("nearest_subalgebra: contain frame of the wrong algebra");
    fixed = contain->vectors * lam;
    if (!orthonormalize_columns(fixed)) throw DegenerateInput("nearest_subalgebra: contain frame is dependent");
    if (fixed.cols() > r) throw DimensionError("nearest_subalgebra: contain is larger than the frame");
  }
  const Eigen::Index s = fixed.cols();
  RMatrix z(n, r);
  z.leftCols(s) = fixed;
  if (s > 0) {
    const RMatrix rest = w.vectors * lam - fixed * (fixed.transpose() * (w.vectors * lam));
    const Eigen::JacobiSVD<RMatrix> svd(rest, Eigen::ComputeThinU);
    z.rightCols(r - s) = svd.matrixU().leftCols(r - s);
  } else {
    z = w.vectors * lam;
  }
  if (!orthonormalize_columns(z)) throw DegenerateInput("nearest_subalgebra: frame is dependent");

  auto frame_of = [&](const RMatrix& unit) {
    SubspaceFrame f;
    f.vectors = unit / lam;
    return f;
  };
  out.frame = s > 0 ? frame_of(z) : w;
  out.closure_defect = closure_defect(alg, out.frame);
  const ResidualModel model{alg, 1.0 / lam};
  if (r < 2) {
    out.frame = frame_of(z);
    out.closure_defect = 0;
    return out;
  }
  RVector res = model.residual(z);
  double f = 2.0 * res.squaredNorm();
  out.initial_objective = f;
  out.final_objective = f;
  if (out.closure_defect <= options.closure_tol) return out;

  std::vector<Eigen::Index> free_cols;
  for (Eigen::Index c = s; c < r; ++c) free_cols.push_back(c);
  double mu = -1;
  for (std::size_t it = 1; it <= options.max_iter; ++it) {
    const RMatrix jac = model.jacobian(z, free_cols);
    const RMatrix h = jac.transpose() * jac;
    const RVector g = jac.transpose() * res;
    if (mu < 0) mu = 1e-3 * std::max(h.diagonal().maxCoeff(), 1e-30);
    bool accepted = false;
    for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
      const RMatrix damped = h + mu * RMatrix::Identity(h.rows(), h.cols());
      const RVector step = -damped.ldlt().solve(g);
      RMatrix cand = z;
      for (std::size_t fc = 0; fc < free_cols.size(); ++fc)
        cand.col(free_cols[fc]) += step.segment(static_cast<Eigen::Index>(fc) * n, n);
      if (orthonormalize_columns(cand)) {
        const RVector cres = model.residual(cand);
        const double cf = 2.0 * cres.squaredNorm();
        if (cf < f) {
          z = cand;
          res = cres;
          f = cf;
          mu = std::max(mu / 3.0, 1e-18);
          accepted = true;
          break;
        }
      }
      mu *= 4.0;
    }
    out.iterations = it;
    out.frame = frame_of(z);
    out.closure_defect = closure_defect(alg, out.frame);
    out.final_objective = f;
    if (out.closure_defect <= options.closure_tol) return out;
    if (!accepted) break;
  }
  throw ConvergenceError("nearest_subalgebra: closure defect " + std::to_string(out.closure_defect) + " after " +
                         std::to_string(out.iterations) + " iterations");
}

// ---------------------------------------------------------------------------
// Full pipeline

PropEResult prop_E(const LieAlgebraModel& alg, const std::vector<RVector>& generators, double delta,
                   const std::optional<SubspaceFrame>& h, const NearestOptions& options, std::size_t cap) {
  BracketClosure closure(alg, generators, cap);
  const StabilizeResult st = stabilize(alg, closure, delta);
  const NearestResult near = nearest_subalgebra(alg, st.W.frame, h, options);

  PropEResult out;
  out.w = near.frame;
  out.k = st.m;
  out.m = st.m;
  out.delta = delta;
  out.delta1 = st.delta1;
  out.closure_size = closure.count_up_to(st.m);
  out.stabilize_iterations = st.iterations;
  out.nearest_iterations = near.iterations;
  out.closure_defect = near.closure_defect;

  // c = V S^{-1} U^t w over the kept directions; explicit V keeps the conditioning linear in 1/sigma.
  const double lam = alg.norm_scale();
  const RMatrix f = closure.matrix(st.m) * lam;
  const Eigen::JacobiSVD<RMatrix> svd(f, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::Index keep = std::min<Eigen::Index>(static_cast<Eigen::Index>(st.W.frame.size()),
                                                   svd.singularValues().size());
  const RMatrix u = svd.matrixU().leftCols(keep);
  const RMatrix v = svd.matrixV().leftCols(keep);
  const RVector inv_s = svd.singularValues().head(keep).cwiseInverse();
  const double bound = std::pow(st.delta1, -static_cast<double>(out.k));
  for (std::size_t i = 0; i < out.w.size(); ++i) {
    const RVector wi = out.w.vectors.col(static_cast<Eigen::Index>(i)) * lam;
    const RVector c = v * inv_s.asDiagonal() * (u.transpose() * wi);
    Certificate cert;
    cert.coeffs.assign(c.data(), c.data() + c.size());
    cert.max_coeff = c.size() ? c.cwiseAbs().maxCoeff() : 0.0;
    cert.coeff_bound = bound;
    cert.residual = (wi - f * c).norm();
    out.max_residual = std::max(out.max_residual, cert.residual);
    out.certificates.push_back(std::move(cert));
  }
  for (const auto& t : generators) {
    const double d = distance_to_span(alg, out.w, t);
    out.generator_distances.push_back(d);
    out.max_generator_distance = std::max(out.max_generator_distance, d);
  }
  return out;
}

nlohmann::json to_json(const PropEResult& r, std::size_t input_dim) {
  nlohmann::json certs = nlohmann::json::array();
  for (const auto& c : r.certificates) {
    nlohmann::json j{{"residual", c.residual}, {"max_coeff", c.max_coeff}, {"coeff_bound", c.coeff_bound},
                     {"coeff_count", c.coeffs.size()}};
    if (c.coeffs.size() <= 64) j["coeffs"] = c.coeffs;
    certs.push_back(j);
  }
  return {{"input_dim", input_dim},
          {"k", r.k},
          {"m", r.m},
          {"delta", r.delta},
          {"delta1", r.delta1},
          {"output_dim", r.w.size()},
          {"closure_defect", r.closure_defect},
          {"closure_size", r.closure_size},
          {"stabilize_iterations", r.stabilize_iterations},
          {"nearest_iterations", r.nearest_iterations},
          {"generator_distances", r.generator_distances},
          {"certificates", certs}};
}

std::vector<RVector> perturbed_generators(const LieAlgebraModel& alg, const std::vector<RVector>& base,
                                          const std::vector<RVector>& directions, double eps) {
  RMatrix cols(static_cast<Eigen::Index>(alg.dim()), static_cast<Eigen::Index>(base.size()));
  for (std::size_t i = 0; i < base.size(); ++i) {
    alg.check_dimension(base[i]);
    RVector v = base[i] / alg.norm(base[i]);
    if (i < directions.size()) v += eps * directions[i] / alg.norm(directions[i]);
    cols.col(static_cast<Eigen::Index>(i)) = v;
  }
  const SubspaceFrame frame = orthonormalize(alg, cols);
  if (frame.size() != base.size()) throw DegenerateInput("perturbed_generators: dependent input");
  std::vector<RVector> out;
  for (std::size_t i = 0; i < frame.size(); ++i) out.emplace_back(frame.vectors.col(static_cast<Eigen::Index>(i)));
  return out;
}

std::vector<RVector> perturbed_block_sl2(const LieAlgebraModel& sl3, double eps) {
  if (sl3.dim() != 8 || !sl3.sl2_triple()) throw DimensionError("perturbed_block_sl2: needs sl3 with its block triple");
  const auto& t = *sl3.sl2_triple();
  const std::vector<RVector> base{to_eigen(t.e), to_eigen(t.h), to_eigen(t.f)};
  const std::vector<RVector> dirs{to_eigen(sl3.basis_vector(sl_offdiag_index(3, 0, 2))),
                                  to_eigen(sl3.basis_vector(sl_offdiag_index(3, 2, 1))),
                                  to_eigen(sl3.basis_vector(sl_offdiag_index(3, 1, 2)))};
  return perturbed_generators(sl3, base, dirs, eps);
}

}  // namespace equi
