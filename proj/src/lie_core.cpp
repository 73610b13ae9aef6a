#include "equi/lie_core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "equi/errors.hpp"

namespace equi {

namespace {

std::vector<QVector> identity_basis(std::size_t n) {
  std::vector<QVector> out;
  for (std::size_t i = 0; i < n; ++i) {
    QVector v(n, 0);
    v[i] = 1;
    out.push_back(std::move(v));
  }
  return out;
}

QVector parse_qvector(const nlohmann::json& arr) {
  QVector v;
  for (const auto& x : arr) {
    if (x.is_string()) {
      v.push_back(parse_rational(x.get<std::string>()));
    } else if (x.is_number_integer()) {
      v.emplace_back(x.get<long>());
    } else {
      throw std::invalid_argument("expected a rational string or integer");
    }
  }
  return v;
}

nlohmann::json dump_qvector(const QVector& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& q : v) arr.push_back(to_string(q));
  return arr;
}

}  // namespace

LieAlgebraModel::LieAlgebraModel(std::vector<std::string> basis_names, const std::vector<Rational>& constants,
                                 std::vector<QVector> lattice_basis, std::optional<Sl2Triple> triple,
                                 std::vector<QMatrix> realization)
    : dim_(basis_names.size()),
      names_(std::move(basis_names)),
      lattice_(std::move(lattice_basis)),
      triple_(std::move(triple)),
      realization_(std::move(realization)) {
  if (dim_ == 0) throw DimensionError("Lie algebra must have positive dimension");
  if (constants.size() != dim_ * dim_ * dim_) throw DimensionError("structure constant tensor has wrong size");
  terms_.assign(dim_ * dim_, {});
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j)
      for (std::size_t k = 0; k < dim_; ++k) {
        const Rational& c = constants[(i * dim_ + j) * dim_ + k];
        if (c != 0) terms_[i * dim_ + j].push_back({k, c, c.get_d()});
      }
  if (lattice_.empty()) lattice_ = identity_basis(dim_);
  if (!realization_.empty() && realization_.size() != dim_)
    throw DimensionError("realization must provide one matrix per basis element");
  validate();
  killing_ = QMatrix(dim_, dim_);
  {
    std::vector<QMatrix> ads;
    for (std::size_t i = 0; i < dim_; ++i) ads.push_back(adjoint_matrix(basis_vector(i)));
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = i; j < dim_; ++j) {
        const Rational b = (ads[i] * ads[j]).trace();
        killing_(i, j) = b;
        killing_(j, i) = b;
      }
  }
  compute_norm_scale();
  if (triple_) prepare_weights();
  if (!realization_.empty()) prepare_realization();
}

Rational LieAlgebraModel::structure_constant(std::size_t i, std::size_t j, std::size_t k) const {
  for (const auto& t : terms_[i * dim_ + j])
    if (t.k == k) return t.value;
  return 0;
}

void LieAlgebraModel::validate() const {
  // Antisymmetry.
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j)
      for (std::size_t k = 0; k < dim_; ++k)
        if (structure_constant(i, j, k) != -structure_constant(j, i, k))
          throw InvariantViolation("antisymmetry", "c[i][j][k] != -c[j][i][k] at (" + std::to_string(i) + "," +
                                                       std::to_string(j) + "," + std::to_string(k) + ")");
  // Jacobi identity on basis triples.
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = i + 1; j < dim_; ++j)
      for (std::size_t k = j + 1; k < dim_; ++k) {
        const QVector ei = basis_vector(i), ej = basis_vector(j), ek = basis_vector(k);
        QVector s = bracket(bracket(ei, ej), ek);
        s = add(s, bracket(bracket(ej, ek), ei));
        s = add(s, bracket(bracket(ek, ei), ej));
        if (!is_zero(s)) throw InvariantViolation("jacobi", "Jacobi identity fails on a basis triple");
      }
  // Lattice: full rank and closed under the bracket.
  if (lattice_.size() != dim_) throw DimensionError("lattice basis must have dim vectors");
  for (const auto& v : lattice_) check_dimension(v);
  const QMatrix l = QMatrix::from_columns(lattice_);
  if (determinant(l) == 0) throw DegenerateInput("lattice basis is not full rank");
  const QMatrix linv = inverse(l);
  for (std::size_t a = 0; a < dim_; ++a)
    for (std::size_t b = a + 1; b < dim_; ++b) {
      const QVector coords = linv * bracket(lattice_[a], lattice_[b]);
      for (const auto& c : coords)
        if (c.get_den() != 1) throw InvariantViolation("lattice_closed", "[g_Z, g_Z] is not contained in g_Z");
    }
  if (triple_) {
    check_dimension(triple_->e);
    check_dimension(triple_->h);
    check_dimension(triple_->f);
    const bool ok = bracket(triple_->h, triple_->e) == scale(triple_->e, 2) &&
                    bracket(triple_->h, triple_->f) == scale(triple_->f, -2) &&
                    bracket(triple_->e, triple_->f) == triple_->h;
    if (!ok) throw InvariantViolation("sl2_triple", "[H,E]=2E, [H,F]=-2F, [E,F]=H do not hold");
  }
}

void LieAlgebraModel::compute_norm_scale() {
  // Spectral norm of the flattening (i,j) -> k bounds |[u,v]| / (|u||v|).
  RMatrix flat = RMatrix::Zero(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_ * dim_));
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j)
      for (const auto& t : terms_[i * dim_ + j])
        flat(static_cast<Eigen::Index>(t.k), static_cast<Eigen::Index>(i * dim_ + j)) = t.value_d;
  const Eigen::JacobiSVD<RMatrix> svd(flat);
  const double sigma = svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
  // Slack absorbs SVD rounding; abelian algebras keep the plain Euclidean norm.
  norm_scale_ = sigma > 0 ? sigma * (1.0 + 1e-12) : 1.0;
}

void LieAlgebraModel::prepare_weights() {
  const QMatrix ad_e = adjoint_matrix(triple_->e);
  const QMatrix ad_f = adjoint_matrix(triple_->f);
  fixed_ = kernel_basis(ad_e);
  moving_ = row_space_basis(ad_f.transpose());  // column space of ad F
  if (fixed_.size() + moving_.size() != dim_)
    throw DegenerateInput("ker(ad E) and im(ad F) do not have complementary dimensions");
  std::vector<QVector> cols = fixed_;
  cols.insert(cols.end(), moving_.begin(), moving_.end());
  const QMatrix p = QMatrix::from_columns(cols);
  if (determinant(p) == 0) throw DegenerateInput("ker(ad E) and im(ad F) are not complementary");
  weight_inverse_ = inverse(p);
  weight_inverse_d_ = weight_inverse_.to_eigen();
  const RMatrix pd = p.to_eigen();
  const Eigen::Index k0 = static_cast<Eigen::Index>(fixed_.size());
  fixed_projector_d_ = pd.leftCols(k0) * weight_inverse_d_.topRows(k0);
}

void LieAlgebraModel::prepare_realization() {
  const std::size_t n = realization_.front().rows();
  for (const auto& m : realization_)
    if (m.rows() != n || m.cols() != n) throw DimensionError("realization matrices must be square of equal size");
  // Flatten each basis matrix into a column of an (n^2 x dim) matrix, pick dim pivot rows.
  QMatrix flat(n * n, dim_);
  for (std::size_t b = 0; b < dim_; ++b)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) flat(i * n + j, b) = realization_[b](i, j);
  std::vector<std::size_t> piv;
  rref(flat.transpose(), &piv);
  if (piv.size() != dim_) throw DegenerateInput("realization matrices are linearly dependent");
  real_pivots_ = piv;
  QMatrix block(dim_, dim_);
  for (std::size_t r = 0; r < dim_; ++r)
    for (std::size_t b = 0; b < dim_; ++b) block(r, b) = flat(piv[r], b);
  real_inverse_ = inverse(block);
  real_inverse_d_ = real_inverse_.to_eigen();
  // Realization must be a homomorphism: [X_a, X_b] = sum_k c_abk X_k.
  for (std::size_t a = 0; a < dim_; ++a)
    for (std::size_t b = a + 1; b < dim_; ++b) {
      const QMatrix comm = realization_[a] * realization_[b] - realization_[b] * realization_[a];
      if (!(comm == to_matrix(bracket(basis_vector(a), basis_vector(b)))))
        throw InvariantViolation("realization", "matrix commutators disagree with the structure constants");
    }
}

LieAlgebraModel LieAlgebraModel::with_triple(const Sl2Triple& triple) const {
  std::vector<Rational> constants(dim_ * dim_ * dim_, 0);
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j)
      for (const auto& t : terms_[i * dim_ + j]) constants[(i * dim_ + j) * dim_ + t.k] = t.value;
  return LieAlgebraModel(names_, constants, lattice_, triple, realization_);
}

QVector LieAlgebraModel::basis_vector(std::size_t i) const {
  QVector v(dim_, 0);
  v.at(i) = 1;
  return v;
}

RVector LieAlgebraModel::unit_basis_vector(std::size_t i) const {
  RVector v = RVector::Zero(static_cast<Eigen::Index>(dim_));
  v(static_cast<Eigen::Index>(i)) = 1.0 / norm_scale_;
  return v;
}

void LieAlgebraModel::check_dimension(const QVector& x) const {
  if (x.size() != dim_)
    throw DimensionError("vector of length " + std::to_string(x.size()) + " used with a " + std::to_string(dim_) +
                         "-dimensional algebra");
}

void LieAlgebraModel::check_dimension(const RVector& x) const {
  if (static_cast<std::size_t>(x.size()) != dim_)
    throw DimensionError("vector of length " + std::to_string(x.size()) + " used with a " + std::to_string(dim_) +
                         "-dimensional algebra");
}

QVector LieAlgebraModel::bracket(const QVector& x, const QVector& y) const {
  check_dimension(x);
  check_dimension(y);
  QVector out(dim_, 0);
  for (std::size_t i = 0; i < dim_; ++i) {
    if (x[i] == 0) continue;
    for (std::size_t j = 0; j < dim_; ++j) {
      if (y[j] == 0) continue;
      const Rational xy = x[i] * y[j];
      for (const auto& t : terms_[i * dim_ + j]) out[t.k] += xy * t.value;
    }
  }
  return out;
}

RVector LieAlgebraModel::bracket(const RVector& x, const RVector& y) const {
  check_dimension(x);
  check_dimension(y);
  RVector out = RVector::Zero(static_cast<Eigen::Index>(dim_));
  for (std::size_t i = 0; i < dim_; ++i) {
    const double xi = x(static_cast<Eigen::Index>(i));
    if (xi == 0.0) continue;
    for (std::size_t j = 0; j < dim_; ++j) {
      const double xy = xi * y(static_cast<Eigen::Index>(j));
      if (xy == 0.0) continue;
      for (const auto& t : terms_[i * dim_ + j]) out(static_cast<Eigen::Index>(t.k)) += xy * t.value_d;
    }
  }
  return out;
}

QMatrix LieAlgebraModel::adjoint_matrix(const QVector& x) const {
  check_dimension(x);
  QMatrix ad(dim_, dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    if (x[i] == 0) continue;
    for (std::size_t j = 0; j < dim_; ++j)
      for (const auto& t : terms_[i * dim_ + j]) ad(t.k, j) += x[i] * t.value;
  }
  return ad;
}

RMatrix LieAlgebraModel::adjoint_matrix(const RVector& x) const {
  check_dimension(x);
  RMatrix ad = RMatrix::Zero(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
  for (std::size_t i = 0; i < dim_; ++i) {
    const double xi = x(static_cast<Eigen::Index>(i));
    if (xi == 0.0) continue;
    for (std::size_t j = 0; j < dim_; ++j)
      for (const auto& t : terms_[i * dim_ + j])
        ad(static_cast<Eigen::Index>(t.k), static_cast<Eigen::Index>(j)) += xi * t.value_d;
  }
  return ad;
}

Rational LieAlgebraModel::killing_form(const QVector& x, const QVector& y) const {
  check_dimension(x);
  check_dimension(y);
  return dot(x, killing_ * y);
}

double LieAlgebraModel::killing_form(const RVector& x, const RVector& y) const {
  check_dimension(x);
  check_dimension(y);
  return x.dot(killing_.to_eigen() * y);
}

std::pair<QVector, QVector> LieAlgebraModel::weight_decompose(const QVector& r) const {
  if (!triple_) throw DegenerateInput("weight_decompose: no sl2-triple set");
  check_dimension(r);
  const QVector coeff = weight_inverse_ * r;
  QVector r0(dim_, 0);
  for (std::size_t a = 0; a < fixed_.size(); ++a) {
    if (coeff[a] == 0) continue;
    for (std::size_t i = 0; i < dim_; ++i) r0[i] += coeff[a] * fixed_[a][i];
  }
  return {r0, sub(r, r0)};
}

std::pair<RVector, RVector> LieAlgebraModel::weight_decompose(const RVector& r) const {
  if (!triple_) throw DegenerateInput("weight_decompose: no sl2-triple set");
  check_dimension(r);
  RVector r0 = fixed_projector_d_ * r;
  return {r0, r - r0};
}

const std::vector<QVector>& LieAlgebraModel::fixed_subspace() const {
  if (!triple_) throw DegenerateInput("fixed_subspace: no sl2-triple set");
  return fixed_;
}

const std::vector<QVector>& LieAlgebraModel::moving_subspace() const {
  if (!triple_) throw DegenerateInput("moving_subspace: no sl2-triple set");
  return moving_;
}

QMatrix LieAlgebraModel::to_matrix(const QVector& x) const {
  if (realization_.empty()) throw DegenerateInput("algebra has no matrix realization");
  check_dimension(x);
  const std::size_t n = realization_size();
  QMatrix m(n, n);
  for (std::size_t b = 0; b < dim_; ++b)
    if (x[b] != 0) m = m + realization_[b].scaled(x[b]);
  return m;
}

RMatrix LieAlgebraModel::to_matrix(const RVector& x) const {
  if (realization_.empty()) throw DegenerateInput("algebra has no matrix realization");
  check_dimension(x);
  const auto n = static_cast<Eigen::Index>(realization_size());
  RMatrix m = RMatrix::Zero(n, n);
  for (std::size_t b = 0; b < dim_; ++b) m += x(static_cast<Eigen::Index>(b)) * realization_[b].to_eigen();
  return m;
}

QVector LieAlgebraModel::from_matrix(const QMatrix& m) const {
  if (realization_.empty()) throw DegenerateInput("algebra has no matrix realization");
  const std::size_t n = realization_size();
  if (m.rows() != n || m.cols() != n) throw DimensionError("from_matrix: wrong matrix size");
  QVector picked(dim_);
  for (std::size_t r = 0; r < dim_; ++r) picked[r] = m(real_pivots_[r] / n, real_pivots_[r] % n);
  QVector x = real_inverse_ * picked;
  if (!(to_matrix(x) == m)) throw DimensionError("from_matrix: matrix is not in the span of the realization");
  return x;
}

RVector LieAlgebraModel::from_matrix(const RMatrix& m) const {
  if (realization_.empty()) throw DegenerateInput("algebra has no matrix realization");
  const auto n = static_cast<Eigen::Index>(realization_size());
  if (m.rows() != n || m.cols() != n) throw DimensionError("from_matrix: wrong matrix size");
  RVector picked(static_cast<Eigen::Index>(dim_));
  for (std::size_t r = 0; r < dim_; ++r) {
    const auto p = static_cast<Eigen::Index>(real_pivots_[r]);
    picked(static_cast<Eigen::Index>(r)) = m(p / n, p % n);
  }
  return real_inverse_d_ * picked;
}

RMatrix LieAlgebraModel::adjoint_action(const RMatrix& g) const {
  const RMatrix ginv = g.inverse();
  RMatrix ad(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
  for (std::size_t b = 0; b < dim_; ++b) {
    const RMatrix conj = g * realization_[b].to_eigen() * ginv;
    ad.col(static_cast<Eigen::Index>(b)) = from_matrix(conj);
  }
  return ad;
}

// ---------------------------------------------------------------------------
// JSON

LieAlgebraModel LieAlgebraModel::from_json(const nlohmann::json& doc) {
  const std::size_t dim = doc.at("dim").get<std::size_t>();
  std::vector<std::string> names;
  if (doc.contains("basis_names")) {
    names = doc.at("basis_names").get<std::vector<std::string>>();
  } else {
    for (std::size_t i = 0; i < dim; ++i) names.push_back("e" + std::to_string(i + 1));
  }
  if (names.size() != dim) throw DimensionError("basis_names length differs from dim");
  std::vector<Rational> constants(dim * dim * dim, 0);
  std::vector<bool> seen(dim * dim * dim, false);
  for (const auto& triplet : doc.at("structure_constants")) {
    if (triplet.size() != 4) throw std::invalid_argument("structure constant entries are [i, j, k, \"p/q\"]");
    const auto i = triplet[0].get<std::size_t>();
    const auto j = triplet[1].get<std::size_t>();
    const auto k = triplet[2].get<std::size_t>();
    if (i >= dim || j >= dim || k >= dim) throw DimensionError("structure constant index out of range");
    const Rational c =
        triplet[3].is_string() ? parse_rational(triplet[3].get<std::string>()) : Rational(triplet[3].get<long>());
    const std::size_t a = (i * dim + j) * dim + k;
    const std::size_t b = (j * dim + i) * dim + k;
    if (seen[a] && constants[a] != c) throw InvariantViolation("antisymmetry", "conflicting structure constants");
    if (seen[b] && constants[b] != -c) throw InvariantViolation("antisymmetry", "conflicting structure constants");
    constants[a] = c;
    constants[b] = -c;
    seen[a] = seen[b] = true;
  }
  std::vector<QVector> lattice;
  if (doc.contains("lattice_basis"))
    for (const auto& row : doc.at("lattice_basis")) lattice.push_back(parse_qvector(row));
  std::optional<Sl2Triple> triple;
  if (doc.contains("sl2_triple") && !doc.at("sl2_triple").is_null()) {
    const auto& t = doc.at("sl2_triple");
    auto basis = [dim](std::size_t i) {
      if (i >= dim) throw DimensionError("sl2_triple index out of range");
      QVector v(dim, 0);
      v[i] = 1;
      return v;
    };
    if (t.is_array()) {
      triple = Sl2Triple{basis(t.at(0).get<std::size_t>()), basis(t.at(1).get<std::size_t>()),
                         basis(t.at(2).get<std::size_t>())};
    } else {
      triple = Sl2Triple{parse_qvector(t.at("E")), parse_qvector(t.at("H")), parse_qvector(t.at("F"))};
    }
  }
  std::vector<QMatrix> realization;
  if (doc.contains("realization")) {
    for (const auto& mat : doc.at("realization")) {
      std::vector<QVector> rows;
      for (const auto& row : mat) rows.push_back(parse_qvector(row));
      realization.push_back(QMatrix::from_rows(rows));
    }
  }
  return LieAlgebraModel(std::move(names), constants, std::move(lattice), std::move(triple), std::move(realization));
}

LieAlgebraModel LieAlgebraModel::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read algebra file " + file.string());
  nlohmann::json doc;
  in >> doc;
  return from_json(doc);
}

nlohmann::json LieAlgebraModel::to_json() const {
  nlohmann::json doc;
  doc["dim"] = dim_;
  doc["basis_names"] = names_;
  nlohmann::json sc = nlohmann::json::array();
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = i + 1; j < dim_; ++j)
      for (const auto& t : terms_[i * dim_ + j]) sc.push_back({i, j, t.k, to_string(t.value)});
  doc["structure_constants"] = sc;
  nlohmann::json lat = nlohmann::json::array();
  for (const auto& v : lattice_) lat.push_back(dump_qvector(v));
  doc["lattice_basis"] = lat;
  if (triple_) {
    doc["sl2_triple"] = {{"E", dump_qvector(triple_->e)}, {"H", dump_qvector(triple_->h)},
                         {"F", dump_qvector(triple_->f)}};
  }
  if (!realization_.empty()) {
    nlohmann::json mats = nlohmann::json::array();
    for (const auto& m : realization_) {
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(dump_qvector(m.row(i)));
      mats.push_back(rows);
    }
    doc["realization"] = mats;
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Built-ins

std::size_t sl_offdiag_index(std::size_t n, std::size_t i, std::size_t j) {
  if (i == j || i >= n || j >= n) throw DimensionError("sl_offdiag_index: bad index pair");
  const std::size_t upper = n * (n - 1) / 2;
  std::size_t idx = 0;
  if (i < j) {
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b, ++idx)
        if (a == i && b == j) return idx;
  } else {
    idx = upper + (n - 1);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < a; ++b, ++idx)
        if (a == i && b == j) return idx;
  }
  throw DimensionError("sl_offdiag_index: unreachable");
}

std::size_t sl_cartan_index(std::size_t n, std::size_t i) {
  if (i + 1 >= n) throw DimensionError("sl_cartan_index: bad index");
  return n * (n - 1) / 2 + i;
}

LieAlgebraModel make_sl(std::size_t n) {
  if (n < 2) throw DimensionError("sl_n needs n >= 2");
  const std::size_t dim = n * n - 1;
  std::vector<QMatrix> basis(dim, QMatrix(n, n));
  std::vector<std::string> names(dim);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const std::size_t b = sl_offdiag_index(n, i, j);
      basis[b](i, j) = 1;
      names[b] = "E" + std::to_string(i + 1) + std::to_string(j + 1);
    }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t b = sl_cartan_index(n, i);
    basis[b](i, i) = 1;
    basis[b](i + 1, i + 1) = -1;
    names[b] = "H" + std::to_string(i + 1);
  }
  // Coordinates of a traceless matrix: off-diagonal entries directly,
  // diagonal d via h_i = d_1 + ... + d_i.
  auto coords = [&](const QMatrix& m) {
    QVector x(dim, 0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) x[sl_offdiag_index(n, i, j)] = m(i, j);
    Rational partial = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      partial += m(i, i);
      x[sl_cartan_index(n, i)] = partial;
    }
    return x;
  };
  std::vector<Rational> constants(dim * dim * dim, 0);
  for (std::size_t a = 0; a < dim; ++a)
    for (std::size_t b = 0; b < dim; ++b) {
      const QMatrix comm = basis[a] * basis[b] - basis[b] * basis[a];
      const QVector c = coords(comm);
      for (std::size_t k = 0; k < dim; ++k) constants[(a * dim + b) * dim + k] = c[k];
    }
  QVector e(dim, 0), h(dim, 0), f(dim, 0);
  e[sl_offdiag_index(n, 0, 1)] = 1;
  h[sl_cartan_index(n, 0)] = 1;
  f[sl_offdiag_index(n, 1, 0)] = 1;
  return LieAlgebraModel(names, constants, {}, Sl2Triple{e, h, f}, basis);
}

LieAlgebraModel make_sl3_principal() {
  const LieAlgebraModel sl3 = make_sl(3);
  QMatrix e(3, 3), h(3, 3), f(3, 3);
  e(0, 1) = 1;
  e(1, 2) = 1;
  h(0, 0) = 2;
  h(2, 2) = -2;
  f(1, 0) = 2;
  f(2, 1) = 2;
  return sl3.with_triple(Sl2Triple{sl3.from_matrix(e), sl3.from_matrix(h), sl3.from_matrix(f)});
}

LieAlgebraModel builtin_algebra(const std::string& name) {
  if (name == "sl2") return make_sl(2);
  if (name == "sl3" || name == "sl3_block") return make_sl(3);
  if (name == "sl4") return make_sl(4);
  if (name == "sl3_principal") return make_sl3_principal();
  throw std::invalid_argument("unknown built-in algebra '" + name + "'");
}

// ---------------------------------------------------------------------------
// Frames

SubspaceFrame orthonormalize(const LieAlgebraModel& alg, const RMatrix& columns, double drop_tol) {
  const double s = alg.norm_scale();
  std::vector<RVector> kept;
  for (Eigen::Index c = 0; c < columns.cols(); ++c) {
    RVector v = columns.col(c) * s;  // unit coordinates
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : kept) v -= q.dot(v) * q;
    const double n = v.norm();
    if (n <= drop_tol) continue;
    kept.push_back(v / n);
  }
  SubspaceFrame frame;
  frame.vectors.resize(static_cast<Eigen::Index>(alg.dim()), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) frame.vectors.col(static_cast<Eigen::Index>(i)) = kept[i] / s;
  return frame;
}

SubspaceFrame to_frame(const LieAlgebraModel& alg, const ExactFrame& exact) {
  RMatrix cols(static_cast<Eigen::Index>(alg.dim()), static_cast<Eigen::Index>(exact.size()));
  for (std::size_t i = 0; i < exact.size(); ++i) cols.col(static_cast<Eigen::Index>(i)) = to_eigen(exact.vectors[i]);
  return orthonormalize(alg, cols);
}

double orthonormality_error(const LieAlgebraModel& alg, const SubspaceFrame& frame) {
  const double s2 = alg.norm_scale() * alg.norm_scale();
  const RMatrix g = s2 * frame.vectors.transpose() * frame.vectors;
  return (g - RMatrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

RVector project(const LieAlgebraModel& alg, const SubspaceFrame& frame, const RVector& x) {
  alg.check_dimension(x);
  if (frame.size() == 0) return RVector::Zero(x.size());
  const double s2 = alg.norm_scale() * alg.norm_scale();
  return frame.vectors * (s2 * (frame.vectors.transpose() * x));
}

double distance_to_span(const LieAlgebraModel& alg, const SubspaceFrame& frame, const RVector& x) {
  return alg.norm(x - project(alg, frame, x));
}

double closure_defect(const LieAlgebraModel& alg, const SubspaceFrame& frame) {
  double worst = 0.0;
  for (std::size_t i = 0; i < frame.size(); ++i)
    for (std::size_t j = i + 1; j < frame.size(); ++j) {
      const RVector b = alg.bracket(RVector(frame.vectors.col(static_cast<Eigen::Index>(i))),
                                    RVector(frame.vectors.col(static_cast<Eigen::Index>(j))));
      worst = std::max(worst, distance_to_span(alg, frame, b));
    }
  return worst;
}

bool is_subalgebra(const LieAlgebraModel& alg, const ExactFrame& frame) {
  if (frame.size() == 0) return true;
  const std::size_t r = rank(QMatrix::from_rows(frame.vectors));
  for (std::size_t i = 0; i < frame.size(); ++i)
    for (std::size_t j = i + 1; j < frame.size(); ++j) {
      std::vector<QVector> rows = frame.vectors;
      rows.push_back(alg.bracket(frame.vectors[i], frame.vectors[j]));
      if (rank(QMatrix::from_rows(rows)) != r) return false;
    }
  return true;
}

double subspace_distance(const LieAlgebraModel& alg, const SubspaceFrame& a, const SubspaceFrame& b) {
  if (a.size() != b.size()) return 1.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, distance_to_span(alg, b, RVector(a.vectors.col(static_cast<Eigen::Index>(i)))));
  for (std::size_t i = 0; i < b.size(); ++i)
    worst = std::max(worst, distance_to_span(alg, a, RVector(b.vectors.col(static_cast<Eigen::Index>(i)))));
  return worst;
}

ExactFrame invariant_complement(const LieAlgebraModel& alg, const ExactFrame& h) {
  for (const auto& v : h.vectors) alg.check_dimension(v);
  if (h.size() == 0) {
    ExactFrame all;
    for (std::size_t i = 0; i < alg.dim(); ++i) all.vectors.push_back(alg.basis_vector(i));
    return all;
  }
  const std::size_t r = h.size();
  QMatrix restricted(r, r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) restricted(i, j) = alg.killing_form(h.vectors[i], h.vectors[j]);
  if (determinant(restricted) == 0) throw DegenerateInput("Killing form restricted to the frame is degenerate");
  std::vector<QVector> rows;
  for (const auto& v : h.vectors) rows.push_back(alg.killing_matrix() * v);
  ExactFrame comp{kernel_basis(QMatrix::from_rows(rows))};
  // ad(h) r must stay inside r.
  if (comp.size() > 0) {
    const std::size_t base_rank = comp.size();
    for (const auto& x : h.vectors)
      for (const auto& y : comp.vectors) {
        std::vector<QVector> test = comp.vectors;
        test.push_back(alg.bracket(x, y));
        if (rank(QMatrix::from_rows(test)) != base_rank)
          throw InvariantViolation("ad_invariance", "Killing complement is not ad(h)-invariant");
      }
  }
  return comp;
}

SubspaceFrame invariant_complement(const LieAlgebraModel& alg, const SubspaceFrame& h) {
  const Eigen::Index n = static_cast<Eigen::Index>(alg.dim());
  if (h.size() == 0) return orthonormalize(alg, RMatrix::Identity(n, n));
  const RMatrix kd = alg.killing_matrix().to_eigen();
  const RMatrix restricted = h.vectors.transpose() * kd * h.vectors;
  const Eigen::JacobiSVD<RMatrix> rsvd(restricted);
  const double smax = std::max(1.0, rsvd.singularValues()(0));
  if (rsvd.singularValues()(rsvd.singularValues().size() - 1) <= 1e-10 * smax)
    throw DegenerateInput("Killing form restricted to the frame is degenerate");
  // Kernel of the r x dim matrix h^T K.
  const RMatrix rows = h.vectors.transpose() * kd;
  const Eigen::JacobiSVD<RMatrix> svd(rows, Eigen::ComputeFullV);
  const Eigen::Index rk = static_cast<Eigen::Index>(h.size());
  const RMatrix kernel = svd.matrixV().rightCols(n - rk);
  SubspaceFrame comp = orthonormalize(alg, kernel);
  for (std::size_t i = 0; i < h.size(); ++i)
    for (std::size_t j = 0; j < comp.size(); ++j) {
      const RVector b = alg.bracket(RVector(h.vectors.col(static_cast<Eigen::Index>(i))),
                                    RVector(comp.vectors.col(static_cast<Eigen::Index>(j))));
      if (distance_to_span(alg, comp, b) > 1e-10)
        throw InvariantViolation("ad_invariance", "Killing complement is not ad(h)-invariant");
    }
  return comp;
}

}  // namespace equi
