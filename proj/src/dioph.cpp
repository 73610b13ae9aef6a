#include "equi/dioph.hpp"

#include <cmath>
#include <numeric>

#include "equi/errors.hpp"

namespace equi {

ExactMatrix::ExactMatrix(ZMatrix z, Integer den) : entries(std::move(z)), denominator(std::move(den)) {
  if (denominator <= 0) throw std::invalid_argument("ExactMatrix: denominator must be positive");
  if (entries.rows == 0 || entries.cols == 0) throw DimensionError("ExactMatrix: empty shape");
}

ExactMatrix ExactMatrix::from_rows(const std::vector<std::vector<long>>& rows) {
  if (rows.empty()) throw DimensionError("ExactMatrix: no rows");
  ZMatrix z(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != z.cols) throw DimensionError("ExactMatrix: ragged rows");
    for (std::size_t j = 0; j < z.cols; ++j) z(i, j) = rows[i][j];
  }
  return ExactMatrix(std::move(z));
}

ExactMatrix ExactMatrix::from_rational(const QMatrix& q) {
  Integer den = 1;
  for (std::size_t i = 0; i < q.rows(); ++i)
    for (std::size_t j = 0; j < q.cols(); ++j) den = lcm(den, Integer(q(i, j).get_den()));
  ZMatrix z(q.rows(), q.cols());
  for (std::size_t i = 0; i < q.rows(); ++i)
    for (std::size_t j = 0; j < q.cols(); ++j) {
      const Rational scaled = q(i, j) * den;
      z(i, j) = scaled.get_num();
    }
  return ExactMatrix(std::move(z), den);
}

Integer ExactMatrix::entry_bound() const {
  Integer e = 0;
  for (const auto& x : entries.data)
    if (abs(x) > e) e = abs(x);
  return e;
}

QMatrix ExactMatrix::to_qmatrix() const {
  QMatrix q(rows(), cols());
  for (std::size_t i = 0; i < rows(); ++i)
    for (std::size_t j = 0; j < cols(); ++j) q(i, j) = Rational(entries(i, j), denominator);
  return q;
}

namespace {

QMatrix integer_part(const ExactMatrix& a) {
  QMatrix q(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) q(i, j) = Rational(a.entries(i, j));
  return q;
}

// sqrt of a nonnegative rational, rounded up to the next double.
double sqrt_up(const Rational& q) {
  const double s = std::sqrt(q.get_d());
  return std::nextafter(s, INFINITY);
}

}  // namespace

KernelProjection kernel_project(const ExactMatrix& a, const Eigen::VectorXd& v, double delta, unsigned snapshot_bits) {
  const std::size_t n = a.rows(), m = a.cols();
  if (static_cast<std::size_t>(v.size()) != m) throw DimensionError("kernel_project: v has the wrong length");
  if (!(delta >= 0)) throw std::invalid_argument("kernel_project: delta must be nonnegative");
  KernelProjection out;
  out.snapshot_bits = snapshot_bits;

  const QVector vq = to_qvector(v, snapshot_bits);
  // Each coordinate moved by at most 2^-(bits+1).
  out.snapshot_slack = std::sqrt(static_cast<double>(m)) * std::ldexp(1.0, -static_cast<int>(snapshot_bits) - 1);

  const QMatrix aq = integer_part(a);
  const QVector av = aq * vq;
  out.residual = sqrt_up(dot(av, av));
  // The lemma is stated for the integer matrix; a denominator rescales the residual.
  const double delta_int = delta * a.denominator.get_d();
  out.delta_used = std::max(delta_int, out.residual);
  // Only flag a replacement that the snapshot rounding cannot explain.
  const double rounding = a.entry_bound().get_d() * static_cast<double>(n * m) * out.snapshot_slack;
  out.delta_replaced = out.residual > delta_int * (1.0 + 1e-12) + rounding;

  const auto ker = kernel_basis(aq);
  out.v0_exact = ker.empty() ? QVector(m, 0) : project_onto(ker, vq);
  out.v0 = to_eigen(out.v0_exact);
  const QVector diff = sub(vq, out.v0_exact);
  out.distance = std::sqrt(dot(diff, diff).get_d()) + out.snapshot_slack;

  const double e = a.entry_bound().get_d();
  const double nm = static_cast<double>(n * m);
  out.bound = out.delta_used * std::pow(nm, static_cast<double>(n) / 2.0) * std::pow(e, static_cast<double>(n)) +
              out.snapshot_slack;
  return out;
}

SingularValueFloor singular_value_floor(const ExactMatrix& a) {
  const Integer e = a.entry_bound();
  if (e == 0) throw DegenerateInput("singular_value_floor: zero matrix");
  const std::size_t n = a.rows(), m = a.cols();
  const QMatrix aq = integer_part(a);
  const QMatrix gram = aq * aq.transpose();
  QPoly p = characteristic_polynomial(gram);
  // Strip the zero eigenvalues; the remaining roots are the nonzero sigma^2, all positive.
  std::size_t zeros = 0;
  while (zeros < p.size() && p[zeros] == 0) ++zeros;
  QPoly q(p.begin() + static_cast<std::ptrdiff_t>(zeros), p.end());

  SingularValueFloor out;
  out.rank = n - zeros;
  Integer base = Integer(static_cast<unsigned long>(n * m)) * e * e;
  Integer pw;
  mpz_pow_ui(pw.get_mpz_t(), base.get_mpz_t(), static_cast<unsigned long>(n));
  out.floor_sq = Rational(1) / Rational(pw);
  out.floor = std::sqrt(out.floor_sq.get_d());

  // Float estimate of the smallest positive eigenvalue, then certified bracketing.
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram.to_eigen());
  const auto ev = eig.eigenvalues();  // ascending
  double guess = ev(static_cast<Eigen::Index>(n - 1));
  const double tiny = 1e-9 * std::max(1.0, guess);
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > tiny) {
      guess = ev(i);
      break;
    }
  double rel = 1e-10;
  for (int attempt = 0;; ++attempt) {
    if (attempt > 60) throw ConvergenceError("singular_value_floor: could not isolate the smallest root");
    const Rational lo = snapshot(guess * (1.0 - rel));
    const Rational hi = snapshot(guess * (1.0 + rel));
    if (lo > 0 && sturm_count(q, 0, lo) == 0 && evaluate(q, lo) != 0 && sturm_count(q, lo, hi) >= 1) {
      out.sigma_sq_lo = lo;
      out.sigma_sq_hi = hi;
      out.refinements = attempt;
      break;
    }
    rel = std::min(0.5, rel * 10.0);
    if (rel >= 0.5) {
      // The float guess is off; fall back to exact bisection on (0, trace].
      Rational l = 0, h = gram.trace();
      while (h - l > h * Rational(1, 1000000000)) {
        const Rational mid = (l + h) / 2;
        if (sturm_count(q, 0, mid) >= 1) {
          h = mid;
        } else {
          l = mid;
        }
        if (++attempt > 400) throw ConvergenceError("singular_value_floor: bisection did not converge");
      }
      out.sigma_sq_lo = l;
      out.sigma_sq_hi = h;
      out.refinements = attempt;
      break;
    }
  }
  out.sigma_min = std::sqrt(Rational((out.sigma_sq_lo + out.sigma_sq_hi) / 2).get_d());
  // Exact decision: no root of q strictly below the floor.
  std::size_t below = sturm_count(q, 0, out.floor_sq);
  if (evaluate(q, out.floor_sq) == 0 && below > 0) --below;
  out.holds = below == 0;
  return out;
}

std::vector<QVector> intersect_subspaces(const std::vector<std::vector<QVector>>& subspaces, std::size_t d,
                                         const std::vector<std::size_t>& indices) {
  std::vector<std::size_t> use = indices;
  if (use.empty()) {
    use.resize(subspaces.size());
    std::iota(use.begin(), use.end(), 0);
  }
  std::vector<QVector> annihilators;
  for (std::size_t idx : use) {
    const auto& span = subspaces.at(idx);
    if (span.empty()) {
      for (std::size_t i = 0; i < d; ++i) {
        QVector e(d, 0);
        e[i] = 1;
        annihilators.push_back(e);
      }
      continue;
    }
    for (const auto& v : span)
      if (v.size() != d) throw DimensionError("intersect_subspaces: vector of the wrong length");
    for (auto& row : kernel_basis(QMatrix::from_rows(span))) annihilators.push_back(std::move(row));
  }
  if (annihilators.empty()) {
    std::vector<QVector> all;
    for (std::size_t i = 0; i < d; ++i) {
      QVector e(d, 0);
      e[i] = 1;
      all.push_back(e);
    }
    return all;
  }
  return kernel_basis(QMatrix::from_rows(annihilators));
}

std::vector<std::size_t> minimal_cutting_set(const std::vector<std::vector<QVector>>& subspaces, std::size_t d) {
  std::vector<std::size_t> chosen;
  std::vector<QVector> stacked;
  std::size_t current_rank = 0;
  for (std::size_t idx = 0; idx < subspaces.size(); ++idx) {
    std::vector<QVector> trial = stacked;
    const auto& span = subspaces[idx];
    if (span.empty()) {
      for (std::size_t i = 0; i < d; ++i) {
        QVector e(d, 0);
        e[i] = 1;
        trial.push_back(e);
      }
    } else {
      for (const auto& v : span)
        if (v.size() != d) throw DimensionError("minimal_cutting_set: vector of the wrong length");
      for (auto& row : kernel_basis(QMatrix::from_rows(span))) trial.push_back(std::move(row));
    }
    if (trial.empty()) continue;
    const std::size_t r = rank(QMatrix::from_rows(trial));
    if (r > current_rank) {
      chosen.push_back(idx);
      current_rank = r;
      stacked = row_space_basis(QMatrix::from_rows(trial));
    }
    if (current_rank == d) break;
  }
  // Every subspace is the whole space: any single one already cuts out the intersection.
  if (chosen.empty() && !subspaces.empty()) chosen.push_back(0);
  return chosen;
}

}  // namespace equi
