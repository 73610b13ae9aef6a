#include "equi/exact.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace equi {

Rational parse_rational(const std::string& text) {
  std::string s;
  for (char c : text) {
    if (c != ' ' && c != '\t') s.push_back(c);
  }
  if (s.empty()) throw std::invalid_argument("empty rational literal");
  const auto dot_pos = s.find('.');
  const auto exp_pos = s.find_first_of("eE");
  if (dot_pos != std::string::npos || exp_pos != std::string::npos) {
    // Decimal literal: interpret exactly in base 10.
    std::string mantissa = s.substr(0, exp_pos);
    long exponent = 0;
    if (exp_pos != std::string::npos) exponent = std::stol(s.substr(exp_pos + 1));
    bool negative = false;
    if (!mantissa.empty() && (mantissa[0] == '-' || mantissa[0] == '+')) {
      negative = mantissa[0] == '-';
      mantissa.erase(0, 1);
    }
    std::string digits;
    long frac_digits = 0;
    bool after_dot = false;
    for (char c : mantissa) {
      if (c == '.') {
        after_dot = true;
        continue;
      }
      if (c < '0' || c > '9') throw std::invalid_argument("bad rational literal: " + text);
      digits.push_back(c);
      if (after_dot) ++frac_digits;
    }
    if (digits.empty()) throw std::invalid_argument("bad rational literal: " + text);
    Rational q{Integer(digits, 10)};
    exponent -= frac_digits;
    Integer ten_pow;
    mpz_ui_pow_ui(ten_pow.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exponent)));
    if (exponent >= 0) {
      q *= ten_pow;
    } else {
      q /= ten_pow;
    }
    if (negative) q = -q;
    q.canonicalize();
    return q;
  }
  Rational q;
  if (q.set_str(s, 10) != 0) throw std::invalid_argument("bad rational literal: " + text);
  if (q.get_den() == 0) throw std::invalid_argument("zero denominator: " + text);
  q.canonicalize();
  return q;
}

std::string to_string(const Rational& q) {
  Rational c = q;
  c.canonicalize();
  return c.get_str();
}

Rational snapshot(double x, unsigned bits) {
  if (!std::isfinite(x)) throw std::invalid_argument("cannot snapshot a non-finite value");
  Rational exact(x);
  Integer scale_factor = 1;
  scale_factor <<= bits;
  Rational scaled = exact * scale_factor;
  // Round half away from zero onto the grid.
  Integer num = scaled.get_num();
  Integer den = scaled.get_den();
  Integer twice = 2 * num + (num >= 0 ? den : -den);
  Integer rounded;
  mpz_tdiv_q(rounded.get_mpz_t(), twice.get_mpz_t(), Integer(2 * den).get_mpz_t());
  Rational out(rounded, scale_factor);
  out.canonicalize();
  return out;
}

double to_double(const Rational& q) { return q.get_d(); }

Eigen::VectorXd to_eigen(const QVector& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i].get_d();
  return out;
}

QVector to_qvector(const Eigen::VectorXd& v, unsigned bits) {
  QVector out(static_cast<std::size_t>(v.size()));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = snapshot(v(static_cast<Eigen::Index>(i)), bits);
  return out;
}

Rational dot(const QVector& a, const QVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  Rational s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != 0 && b[i] != 0) s += a[i] * b[i];
  }
  return s;
}

QVector add(const QVector& a, const QVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("add: length mismatch");
  QVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

QVector sub(const QVector& a, const QVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("sub: length mismatch");
  QVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

QVector scale(const QVector& a, const Rational& s) {
  QVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
  return out;
}

bool is_zero(const QVector& v) {
  return std::all_of(v.begin(), v.end(), [](const Rational& q) { return q == 0; });
}

// ---------------------------------------------------------------------------

QMatrix::QMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0) {}

QMatrix QMatrix::identity(std::size_t n) {
  QMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
  return m;
}

QMatrix QMatrix::from_rows(const std::vector<QVector>& rows) {
  if (rows.empty()) return {};
  QMatrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols_) throw std::invalid_argument("from_rows: ragged rows");
    for (std::size_t j = 0; j < m.cols_; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

QMatrix QMatrix::from_columns(const std::vector<QVector>& cols) { return from_rows(cols).transpose(); }

QVector QMatrix::row(std::size_t i) const {
  return QVector(data_.begin() + static_cast<std::ptrdiff_t>(i * cols_),
                 data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols_));
}

QVector QMatrix::col(std::size_t j) const {
  QVector out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
  return out;
}

QMatrix QMatrix::transpose() const {
  QMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

QMatrix QMatrix::operator*(const QMatrix& other) const {
  if (cols_ != other.rows_) throw std::invalid_argument("QMatrix product: shape mismatch");
  QMatrix out(rows_, other.cols_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = 0; k < cols_; ++k) {
      const Rational& a = (*this)(i, k);
      if (a == 0) continue;
      for (std::size_t j = 0; j < other.cols_; ++j) {
        if (other(k, j) != 0) out(i, j) += a * other(k, j);
      }
    }
  }
  return out;
}

QVector QMatrix::operator*(const QVector& v) const {
  if (cols_ != v.size()) throw std::invalid_argument("QMatrix*vector: shape mismatch");
  QVector out(rows_, 0);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) {
      if ((*this)(i, j) != 0 && v[j] != 0) out[i] += (*this)(i, j) * v[j];
    }
  }
  return out;
}

QMatrix QMatrix::operator+(const QMatrix& other) const {
  if (rows_ != other.rows_ || cols_ != other.cols_) throw std::invalid_argument("QMatrix sum: shape mismatch");
  QMatrix out(rows_, cols_);
  for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] = data_[i] + other.data_[i];
  return out;
}

QMatrix QMatrix::operator-(const QMatrix& other) const {
  if (rows_ != other.rows_ || cols_ != other.cols_) throw std::invalid_argument("QMatrix difference: shape mismatch");
  QMatrix out(rows_, cols_);
  for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] = data_[i] - other.data_[i];
  return out;
}

QMatrix QMatrix::scaled(const Rational& s) const {
  QMatrix out = *this;
  for (auto& x : out.data_) x *= s;
  return out;
}

bool QMatrix::operator==(const QMatrix& other) const {
  return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
}

Rational QMatrix::trace() const {
  Rational t = 0;
  for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
  return t;
}

bool QMatrix::is_zero() const {
  return std::all_of(data_.begin(), data_.end(), [](const Rational& q) { return q == 0; });
}

Eigen::MatrixXd QMatrix::to_eigen() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*this)(i, j).get_d();
  return m;
}

// ---------------------------------------------------------------------------

QMatrix rref(const QMatrix& a, std::vector<std::size_t>* pivots) {
  QMatrix m = a;
  std::vector<std::size_t> piv;
  std::size_t r = 0;
  for (std::size_t c = 0; c < m.cols() && r < m.rows(); ++c) {
    std::size_t p = r;
    while (p < m.rows() && m(p, c) == 0) ++p;
    if (p == m.rows()) continue;
    if (p != r) {
      for (std::size_t j = 0; j < m.cols(); ++j) std::swap(m(p, j), m(r, j));
    }
    const Rational inv = 1 / m(r, c);
    for (std::size_t j = c; j < m.cols(); ++j) m(r, j) *= inv;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      if (i == r || m(i, c) == 0) continue;
      const Rational f = m(i, c);
      for (std::size_t j = c; j < m.cols(); ++j) {
        if (m(r, j) != 0) m(i, j) -= f * m(r, j);
      }
    }
    piv.push_back(c);
    ++r;
  }
  if (pivots) *pivots = std::move(piv);
  return m;
}

std::size_t rank(const QMatrix& a) {
  std::vector<std::size_t> piv;
  rref(a, &piv);
  return piv.size();
}

std::vector<QVector> kernel_basis(const QMatrix& a) {
  std::vector<std::size_t> piv;
  const QMatrix r = rref(a, &piv);
  std::vector<bool> is_pivot(a.cols(), false);
  for (auto p : piv) is_pivot[p] = true;
  std::vector<QVector> basis;
  for (std::size_t free = 0; free < a.cols(); ++free) {
    if (is_pivot[free]) continue;
    QVector v(a.cols(), 0);
    v[free] = 1;
    for (std::size_t i = 0; i < piv.size(); ++i) v[piv[i]] = -r(i, free);
    basis.push_back(std::move(v));
  }
  return basis;
}

std::vector<QVector> row_space_basis(const QMatrix& a) {
  std::vector<std::size_t> piv;
  const QMatrix r = rref(a, &piv);
  std::vector<QVector> out;
  for (std::size_t i = 0; i < piv.size(); ++i) out.push_back(r.row(i));
  return out;
}

Rational determinant(const QMatrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("determinant: matrix not square");
  QMatrix m = a;
  Rational det = 1;
  const std::size_t n = m.rows();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    while (p < n && m(p, c) == 0) ++p;
    if (p == n) return 0;
    if (p != c) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m(p, j), m(c, j));
      det = -det;
    }
    det *= m(c, c);
    const Rational inv = 1 / m(c, c);
    for (std::size_t i = c + 1; i < n; ++i) {
      if (m(i, c) == 0) continue;
      const Rational f = m(i, c) * inv;
      for (std::size_t j = c; j < n; ++j) m(i, j) -= f * m(c, j);
    }
  }
  return det;
}

QMatrix inverse(const QMatrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("inverse: matrix not square");
  const std::size_t n = a.rows();
  QMatrix aug(n, 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) aug(i, j) = a(i, j);
    aug(i, n + i) = 1;
  }
  std::vector<std::size_t> piv;
  const QMatrix r = rref(aug, &piv);
  if (piv.size() < n || piv[n - 1] != n - 1) throw std::domain_error("inverse: singular matrix");
  QMatrix inv(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) inv(i, j) = r(i, n + j);
  return inv;
}

QVector solve(const QMatrix& a, const QVector& b) { return inverse(a) * b; }

QVector coordinates_in(const std::vector<QVector>& basis, const QVector& v) {
  if (basis.empty()) {
    if (!is_zero(v)) throw std::domain_error("coordinates_in: vector not in span");
    return {};
  }
  // Solve [basis columns | v] by elimination.
  std::vector<QVector> cols = basis;
  cols.push_back(v);
  const QMatrix aug = QMatrix::from_columns(cols);
  std::vector<std::size_t> piv;
  const QMatrix r = rref(aug, &piv);
  if (!piv.empty() && piv.back() == basis.size()) throw std::domain_error("coordinates_in: vector not in span");
  if (piv.size() != basis.size()) throw std::domain_error("coordinates_in: basis is dependent");
  QVector c(basis.size(), 0);
  for (std::size_t i = 0; i < piv.size(); ++i) c[piv[i]] = r(i, basis.size());
  return c;
}

QVector project_onto(const std::vector<QVector>& basis, const QVector& v) {
  if (basis.empty()) return QVector(v.size(), 0);
  const QMatrix b = QMatrix::from_columns(basis);
  const QMatrix bt = b.transpose();
  const QVector coeff = solve(bt * b, bt * v);
  return b * coeff;
}

// ---------------------------------------------------------------------------

Integer content(const ZVector& v) {
  Integer g = 0;
  for (const auto& x : v) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), x.get_mpz_t());
  return g;
}

ZVector primitive_integer_vector(const QVector& v) {
  Integer l = 1;
  for (const auto& q : v) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), q.get_den_mpz_t());
  ZVector z(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    Rational s = v[i] * l;
    z[i] = s.get_num();
  }
  const Integer g = content(z);
  if (g > 1) {
    for (auto& x : z) x /= g;
  }
  return z;
}

std::vector<ZVector> primitive_integer_rows(const std::vector<QVector>& rows) {
  std::vector<ZVector> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(primitive_integer_vector(r));
  return out;
}

ZMatrix ZMatrix::from_rows(const std::vector<ZVector>& rows, std::size_t width) {
  ZMatrix m(rows.size(), width);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != width) throw std::invalid_argument("ZMatrix::from_rows: ragged rows");
    for (std::size_t j = 0; j < width; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

ZVector ZMatrix::row(std::size_t i) const {
  return ZVector(data.begin() + static_cast<std::ptrdiff_t>(i * cols),
                 data.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols));
}

ZVector ZMatrix::col(std::size_t j) const {
  ZVector out(rows);
  for (std::size_t i = 0; i < rows; ++i) out[i] = (*this)(i, j);
  return out;
}

namespace {

// Unimodular column operation on columns p, q of both a and u:
// col_p <- s col_p + t col_q, col_q <- -(b/g) col_p + (a/g) col_q.
void combine_columns(ZMatrix& a, ZMatrix& u, std::size_t p, std::size_t q, const Integer& s, const Integer& t,
                     const Integer& x, const Integer& y) {
  for (ZMatrix* m : {&a, &u}) {
    for (std::size_t i = 0; i < m->rows; ++i) {
      const Integer cp = (*m)(i, p);
      const Integer cq = (*m)(i, q);
      (*m)(i, p) = s * cp + t * cq;
      (*m)(i, q) = x * cp + y * cq;
    }
  }
}

// Size-reduces the kernel vectors against each other to keep entries small.
void reduce_columns(ZMatrix& u, std::size_t first) {
  for (std::size_t pass = 0; pass < 4; ++pass) {
    bool changed = false;
    for (std::size_t j = first; j < u.cols; ++j) {
      for (std::size_t k = first; k < u.cols; ++k) {
        if (j == k) continue;
        Integer nk = 0, dot_jk = 0;
        for (std::size_t i = 0; i < u.rows; ++i) {
          nk += u(i, k) * u(i, k);
          dot_jk += u(i, j) * u(i, k);
        }
        if (nk == 0) continue;
        // nearest integer to dot/nk
        Integer q;
        Integer twice = 2 * dot_jk + nk;
        mpz_fdiv_q(q.get_mpz_t(), twice.get_mpz_t(), Integer(2 * nk).get_mpz_t());
        if (q != 0) {
          for (std::size_t i = 0; i < u.rows; ++i) u(i, j) -= q * u(i, k);
          changed = true;
        }
      }
    }
    if (!changed) break;
  }
}

}  // namespace

std::vector<ZVector> integer_kernel_basis(const ZMatrix& a_in) {
  ZMatrix a = a_in;
  const std::size_t m = a.cols;
  ZMatrix u(m, m);
  for (std::size_t i = 0; i < m; ++i) u(i, i) = 1;
  std::size_t p = 0;
  for (std::size_t row = 0; row < a.rows && p < m; ++row) {
    for (std::size_t q = p + 1; q < m; ++q) {
      const Integer& b = a(row, q);
      if (b == 0) continue;
      const Integer av = a(row, p);
      const Integer bv = b;
      Integer g, s, t;
      mpz_gcdext(g.get_mpz_t(), s.get_mpz_t(), t.get_mpz_t(), av.get_mpz_t(), bv.get_mpz_t());
      const Integer x = -bv / g;
      const Integer y = av / g;
      combine_columns(a, u, p, q, s, t, x, y);
    }
    if (a(row, p) != 0) ++p;
  }
  reduce_columns(u, p);
  std::vector<ZVector> basis;
  for (std::size_t j = p; j < m; ++j) basis.push_back(u.col(j));
  return basis;
}

std::vector<ZVector> saturate(const std::vector<QVector>& rows, std::size_t n) {
  std::vector<ZVector> ints;
  for (const auto& r : rows) {
    if (r.size() != n) throw std::invalid_argument("saturate: vector length mismatch");
    if (!is_zero(r)) ints.push_back(primitive_integer_vector(r));
  }
  const ZMatrix b = ZMatrix::from_rows(ints, n);
  const auto kernel = integer_kernel_basis(b);
  const ZMatrix k = ZMatrix::from_rows(kernel, n);
  return integer_kernel_basis(k);
}

Rational gram_determinant(const std::vector<ZVector>& basis, const QMatrix& gram) {
  const std::size_t r = basis.size();
  if (r == 0) return 1;
  const std::size_t n = basis.front().size();
  if (gram.rows() != n || gram.cols() != n) throw std::invalid_argument("gram_determinant: shape mismatch");
  QMatrix b(r, n);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < n; ++j) b(i, j) = Rational(basis[i][j]);
  return determinant(b * gram * b.transpose());
}

// ---------------------------------------------------------------------------

QPoly characteristic_polynomial(const QMatrix& a) {
  const std::size_t n = a.rows();
  if (n != a.cols()) throw std::invalid_argument("characteristic_polynomial: matrix not square");
  QPoly c(n + 1, 0);
  c[n] = 1;
  QMatrix mk(n, n);
  for (std::size_t k = 1; k <= n; ++k) {
    QMatrix next = a * mk;
    for (std::size_t i = 0; i < n; ++i) next(i, i) += c[n - k + 1];
    mk = next;
    c[n - k] = -(a * mk).trace() / Rational(static_cast<long>(k));
  }
  return c;
}

Rational evaluate(const QPoly& p, const Rational& x) {
  Rational acc = 0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * x + *it;
  return acc;
}

namespace {

void trim(QPoly& p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
}

QPoly derivative(const QPoly& p) {
  QPoly d;
  for (std::size_t i = 1; i < p.size(); ++i) d.push_back(p[i] * Rational(static_cast<long>(i)));
  trim(d);
  return d;
}

QPoly remainder(QPoly a, const QPoly& b) {
  trim(a);
  while (a.size() >= b.size() && !a.empty()) {
    const Rational f = a.back() / b.back();
    const std::size_t shift = a.size() - b.size();
    for (std::size_t i = 0; i < b.size(); ++i) a[shift + i] -= f * b[i];
    trim(a);
  }
  return a;
}

int sign_changes(const std::vector<QPoly>& seq, const Rational& x) {
  int changes = 0;
  int last = 0;
  for (const auto& p : seq) {
    const Rational v = evaluate(p, x);
    const int s = sgn(v);
    if (s == 0) continue;
    if (last != 0 && s != last) ++changes;
    last = s;
  }
  return changes;
}

}  // namespace

std::size_t sturm_count(const QPoly& p_in, const Rational& lo, const Rational& hi) {
  QPoly p = p_in;
  trim(p);
  if (p.size() <= 1) return 0;
  std::vector<QPoly> seq{p, derivative(p)};
  while (seq.back().size() > 1) {
    QPoly r = remainder(seq[seq.size() - 2], seq.back());
    if (r.empty()) break;
    for (auto& x : r) x = -x;
    seq.push_back(std::move(r));
  }
  const int diff = sign_changes(seq, lo) - sign_changes(seq, hi);
  return diff > 0 ? static_cast<std::size_t>(diff) : 0;
}

}  // namespace equi
