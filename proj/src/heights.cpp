#include "equi/heights.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "equi/errors.hpp"

namespace equi {

LatticeFrame::LatticeFrame(RMatrix b, double s) : basis(std::move(b)), scale(s) {
  if (basis.cols() == 0) throw DimensionError("LatticeFrame: empty basis");
  if (!(scale > 0)) throw std::invalid_argument("LatticeFrame: scale must be positive");
  const Eigen::FullPivLU<RMatrix> lu(basis);
  if (static_cast<Eigen::Index>(lu.rank()) != basis.cols()) throw DegenerateInput("LatticeFrame: basis is not full rank");
}

namespace {

struct GramSchmidt {
  RMatrix mu;
  RVector norms;  // |b*_i|^2
};

GramSchmidt gram_schmidt(const RMatrix& b) {
  const Eigen::Index n = b.cols();
  GramSchmidt gs{RMatrix::Zero(n, n), RVector::Zero(n)};
  RMatrix star = b;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      gs.mu(i, j) = b.col(i).dot(star.col(j)) / gs.norms(j);
      star.col(i) -= gs.mu(i, j) * star.col(j);
    }
    gs.norms(i) = star.col(i).squaredNorm();
  }
  return gs;
}

// LLL with delta = 0.99. U tracks the integer change of basis (columns).
void lll(RMatrix& b, std::vector<std::vector<long long>>& u) {
  const Eigen::Index n = b.cols();
  Eigen::Index k = 1;
  GramSchmidt gs = gram_schmidt(b);
  int guard = 0;
  while (k < n) {
    if (++guard > 100000) throw ConvergenceError("LLL did not terminate");
    for (Eigen::Index j = k - 1; j >= 0; --j) {
      const double q = std::round(gs.mu(k, j));
      if (q != 0.0) {
        b.col(k) -= q * b.col(j);
        for (std::size_t r = 0; r < u.size(); ++r) u[r][k] -= static_cast<long long>(q) * u[r][j];
        gs = gram_schmidt(b);
      }
    }
    if (gs.norms(k) >= (0.99 - gs.mu(k, k - 1) * gs.mu(k, k - 1)) * gs.norms(k - 1)) {
      ++k;
    } else {
      b.col(k).swap(b.col(k - 1));
      for (auto& row : u) std::swap(row[k], row[k - 1]);
      gs = gram_schmidt(b);
      k = std::max<Eigen::Index>(k - 1, 1);
    }
  }
}

}  // namespace

ShortestVector shortest_vector(const LatticeFrame& lattice) {
  const std::size_t n = lattice.rank();
  if (n > kShortestVectorRankCap) throw CapExceeded("shortest_vector: rank above 10");
  RMatrix b = lattice.basis * lattice.scale;
  std::vector<std::vector<long long>> u(n, std::vector<long long>(n, 0));
  for (std::size_t i = 0; i < n; ++i) u[i][i] = 1;
  lll(b, u);

  const RMatrix g = b.transpose() * b;
  const Eigen::LLT<RMatrix> llt(g);
  if (llt.info() != Eigen::Success) throw DegenerateInput("shortest_vector: Gram matrix not positive definite");
  const RMatrix r = llt.matrixU();
  const auto ni = static_cast<Eigen::Index>(n);

  // Radius: shortest reduced basis vector, slightly inflated so ties are found.
  double best = g.diagonal().minCoeff();
  const double radius2 = best * (1.0 + 1e-10);
  std::vector<long long> x(n, 0), best_x(n, 0);
  {
    Eigen::Index arg = 0;
    g.diagonal().minCoeff(&arg);
    best_x[static_cast<std::size_t>(arg)] = 1;
  }
  std::size_t visited = 0;
  double bound = radius2;

  // Depth-first over levels n-1..0 with partial squared lengths.
  std::function<void(Eigen::Index, double)> recurse = [&](Eigen::Index i, double partial) {
    double center = 0;
    for (Eigen::Index j = i + 1; j < ni; ++j) center -= r(i, j) * static_cast<double>(x[static_cast<std::size_t>(j)]);
    center /= r(i, i);
    const double rii2 = r(i, i) * r(i, i);
    const double span = std::sqrt(std::max(0.0, (bound - partial) / rii2));
    const auto lo = static_cast<long long>(std::ceil(center - span - 1e-12));
    const auto hi = static_cast<long long>(std::floor(center + span + 1e-12));
    for (long long xi = lo; xi <= hi; ++xi) {
      ++visited;
      const double d = static_cast<double>(xi) - center;
      const double p = partial + rii2 * d * d;
      if (p > bound * (1.0 + 1e-12)) continue;
      x[static_cast<std::size_t>(i)] = xi;
      if (i == 0) {
        if (std::any_of(x.begin(), x.end(), [](long long v) { return v != 0; })) {
          RVector cx(ni);
          for (Eigen::Index k = 0; k < ni; ++k) cx(k) = static_cast<double>(x[static_cast<std::size_t>(k)]);
          const double len2 = (b * cx).squaredNorm();
          if (len2 < best) {
            best = len2;
            best_x = x;
            bound = std::min(bound, len2 * (1.0 + 1e-12));
          }
        }
      } else {
        recurse(i - 1, p);
      }
    }
    x[static_cast<std::size_t>(i)] = 0;
  };
  recurse(ni - 1, 0.0);

  ShortestVector out;
  out.visited = visited;
  out.radius = std::sqrt(radius2);
  out.coeffs.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.coeffs[i] += u[i][j] * best_x[j];
  RVector c(ni);
  for (Eigen::Index i = 0; i < ni; ++i) c(i) = static_cast<double>(out.coeffs[static_cast<std::size_t>(i)]);
  out.vector = lattice.basis * c;
  out.length = lattice.scale * out.vector.norm();
  return out;
}

LatticeFrame adjoint_lattice(const LieAlgebraModel& alg, const RMatrix& g) {
  const RMatrix ad_inv = alg.adjoint_action(g.inverse());
  RMatrix l(static_cast<Eigen::Index>(alg.dim()), static_cast<Eigen::Index>(alg.dim()));
  for (std::size_t i = 0; i < alg.dim(); ++i) l.col(static_cast<Eigen::Index>(i)) = to_eigen(alg.lattice_basis()[i]);
  return LatticeFrame(ad_inv * l, alg.norm_scale());
}

double height_of_point(const LieAlgebraModel& alg, const RMatrix& g) {
  return 1.0 / shortest_vector(adjoint_lattice(alg, g)).length;
}

double adjoint_group_norm(const LieAlgebraModel& alg, const RMatrix& g) {
  const RMatrix a = alg.adjoint_action(g);
  const RMatrix ai = alg.adjoint_action(g.inverse());
  return std::max(a.cwiseAbs().maxCoeff(), ai.cwiseAbs().maxCoeff());
}

SubspaceHeight subspace_height(const std::vector<QVector>& spanning, std::size_t n, const QMatrix& gram) {
  SubspaceHeight out;
  out.saturated = saturate(spanning, n);
  if (out.saturated.empty()) throw DegenerateInput("subspace_height: zero subspace");
  const QMatrix g = gram.rows() == 0 ? QMatrix::identity(n) : gram;
  out.height_squared = gram_determinant(out.saturated, g);
  out.height = std::sqrt(out.height_squared.get_d());
  return out;
}

ExactFrame stabilizer_algebra(const LieAlgebraModel& slr, const QMatrix& y) {
  const std::size_t r = y.rows();
  if (y.cols() != r || slr.realization_size() != r) throw DimensionError("stabilizer_algebra: size mismatch");
  if (!(y == y.transpose())) throw std::invalid_argument("stabilizer_algebra: y must be symmetric");
  if (determinant(y) == 0) throw DegenerateInput("stabilizer_algebra: singular y");
  QMatrix system(r * r, slr.dim());
  for (std::size_t b = 0; b < slr.dim(); ++b) {
    const QMatrix& x = slr.realization()[b];
    const QMatrix m = x.transpose() * y + y * x;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < r; ++j) system(i * r + j, b) = m(i, j);
  }
  ExactFrame out{kernel_basis(system)};
  if (out.size() != r * (r - 1) / 2)
    throw InvariantViolation("stabilizer_dimension", "stabilizer of a nondegenerate form must be r(r-1)/2-dimensional");
  return out;
}

namespace {

void subsets(std::size_t n, std::size_t r, std::vector<std::vector<std::size_t>>& out) {
  std::vector<std::size_t> idx(r);
  for (std::size_t i = 0; i < r; ++i) idx[i] = i;
  if (r > n) return;
  while (true) {
    out.push_back(idx);
    std::size_t i = r;
    while (i > 0 && idx[i - 1] == n - r + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < r; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

QVector plucker(const std::vector<QVector>& basis) {
  if (basis.empty()) return {Rational(1)};
  const std::size_t r = basis.size(), n = basis.front().size();
  std::vector<std::vector<std::size_t>> subs;
  subsets(n, r, subs);
  QVector out;
  out.reserve(subs.size());
  for (const auto& s : subs) {
    QMatrix minor(r, r);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < r; ++j) minor(i, j) = basis[i][s[j]];
    out.push_back(determinant(minor));
  }
  return out;
}

namespace {

OrbitDiscriminant discriminant_from_basis(const LieAlgebraModel& alg, const std::vector<QVector>& basis) {
  const std::size_t r = basis.size();
  OrbitDiscriminant out;
  out.r = r;
  QMatrix b(r, r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) b(i, j) = alg.killing_form(basis[i], basis[j]);
  out.killing_det = determinant(b);
  if (out.killing_det == 0) throw DegenerateInput("orbit_discriminant: Killing form degenerate on the stabilizer");
  // Lattice coordinates of the basis.
  const QMatrix linv = inverse(QMatrix::from_columns(alg.lattice_basis()));
  std::vector<QVector> coords;
  for (const auto& v : basis) coords.push_back(linv * v);
  const QVector p = plucker(coords);
  out.v.reserve(p.size() * p.size());
  Integer disc = 1;
  for (const auto& ps : p)
    for (const auto& pt : p) {
      Rational val = ps * pt / out.killing_det;
      val.canonicalize();
      disc = lcm(disc, Integer(val.get_den()));
      out.v.push_back(std::move(val));
    }
  out.disc = disc;
  return out;
}

}  // namespace

OrbitDiscriminant orbit_discriminant(const LieAlgebraModel& alg, const ExactFrame& stab, bool verify) {
  if (stab.size() == 0) throw DegenerateInput("orbit_discriminant: empty frame");
  for (const auto& v : stab.vectors) alg.check_dimension(v);
  if (rank(QMatrix::from_rows(stab.vectors)) != stab.size())
    throw DimensionError("orbit_discriminant: frame vectors are dependent");
  OrbitDiscriminant out = discriminant_from_basis(alg, stab.vectors);
  if (verify) {
    // Second basis: a fixed unipotent-times-diagonal recombination.
    std::vector<QVector> other;
    for (std::size_t i = 0; i < stab.size(); ++i) {
      QVector w = scale(stab.vectors[i], Rational(static_cast<long>(i + 2), 3));
      for (std::size_t j = 0; j < i; ++j)
        w = add(w, scale(stab.vectors[j], Rational(static_cast<long>((i + 2 * j) % 5) - 2, 7)));
      other.push_back(std::move(w));
    }
    const OrbitDiscriminant second = discriminant_from_basis(alg, other);
    if (second.v != out.v || second.disc != out.disc)
      throw InvariantViolation("disc_basis_invariance", "v_gH depends on the chosen basis");
  }
  return out;
}

ZVector symmetric_coordinates(const QMatrix& y) {
  ZVector out;
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t j = i; j < y.cols(); ++j) {
      if (y(i, j).get_den() != 1) throw std::invalid_argument("symmetric_coordinates: entries must be integral");
      out.push_back(y(i, j).get_num());
    }
  return out;
}

QMatrix symmetric_from_coordinates(const std::vector<long>& m, std::size_t r) {
  if (m.size() != r * (r + 1) / 2) throw DimensionError("symmetric_from_coordinates: wrong number of entries");
  QMatrix y(r, r);
  std::size_t k = 0;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = i; j < r; ++j, ++k) {
      y(i, j) = m[k];
      y(j, i) = m[k];
    }
  return y;
}

OrbitRecord make_orbit_record(const LieAlgebraModel& slr, const QMatrix& y) {
  OrbitRecord rec;
  rec.y = y;
  const Rational det = determinant(y);
  if (det.get_den() != 1) throw std::invalid_argument("make_orbit_record: y must be integral");
  rec.level = det.get_num();
  rec.stabilizer = stabilizer_algebra(slr, y);
  rec.disc = orbit_discriminant(slr, rec.stabilizer, false).disc;

  // Height of the stabilizer as a rational subspace of g w.r.t. g_Z and the algebra inner product.
  const QMatrix l = QMatrix::from_columns(slr.lattice_basis());
  const QMatrix linv = inverse(l);
  std::vector<QVector> coords;
  for (const auto& v : rec.stabilizer.vectors) coords.push_back(linv * v);
  const SubspaceHeight h = subspace_height(coords, slr.dim(), l.transpose() * l);
  rec.subspace_height = std::pow(slr.norm_scale(), static_cast<double>(rec.stabilizer.size())) * h.height;

  const ZVector coordsy = symmetric_coordinates(y);
  rec.square_part = content(coordsy);
  Rational norm2 = 0;
  for (const auto& c : coordsy) norm2 += Rational(c / rec.square_part) * Rational(c / rec.square_part);
  rec.line_height = std::sqrt(norm2.get_d());
  return rec;
}

HeightDiscReport check_heightdisc(const std::vector<OrbitRecord>& records) {
  HeightDiscReport rep;
  rep.count = records.size();
  if (records.empty()) return rep;
  for (const auto& rec : records) rep.ratios.push_back(rec.subspace_height / std::sqrt(rec.disc.get_d()));
  std::vector<double> sorted = rep.ratios;
  std::sort(sorted.begin(), sorted.end());
  rep.min_ratio = sorted.front();
  rep.max_ratio = sorted.back();
  const std::size_t mid = sorted.size() / 2;
  rep.median_ratio = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  rep.band = rep.max_ratio / rep.min_ratio;
  return rep;
}

}  // namespace equi
