#pragma once

// Exact rational / integer linear algebra on top of GMP.

#include <gmpxx.h>

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace equi {

using Rational = mpq_class;
using Integer = mpz_class;
using QVector = std::vector<Rational>;
using ZVector = std::vector<Integer>;

/// Parses "p/q", "p" or a decimal literal such as "-0.25" into an exact rational.
Rational parse_rational(const std::string& text);
/// Renders in lowest terms as "p/q" (or "p" when the denominator is 1).
std::string to_string(const Rational& q);

/// Exact snapshot of a double onto the dyadic grid 2^-bits.
Rational snapshot(double x, unsigned bits = 64);

double to_double(const Rational& q);
Eigen::VectorXd to_eigen(const QVector& v);
QVector to_qvector(const Eigen::VectorXd& v, unsigned bits = 64);

Rational dot(const QVector& a, const QVector& b);
QVector add(const QVector& a, const QVector& b);
QVector sub(const QVector& a, const QVector& b);
QVector scale(const QVector& a, const Rational& s);
bool is_zero(const QVector& v);

/// Dense row-major rational matrix.
class QMatrix {
 public:
  QMatrix() = default;
  QMatrix(std::size_t rows, std::size_t cols);
  static QMatrix identity(std::size_t n);
  /// Rows given as vectors; all must share one length.
  static QMatrix from_rows(const std::vector<QVector>& rows);
  static QMatrix from_columns(const std::vector<QVector>& cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Rational& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const Rational& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  QVector row(std::size_t i) const;
  QVector col(std::size_t j) const;

  QMatrix transpose() const;
  QMatrix operator*(const QMatrix& other) const;
  QVector operator*(const QVector& v) const;
  QMatrix operator+(const QMatrix& other) const;
  QMatrix operator-(const QMatrix& other) const;
  QMatrix scaled(const Rational& s) const;
  bool operator==(const QMatrix& other) const;

  Rational trace() const;
  bool is_zero() const;

  Eigen::MatrixXd to_eigen() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Rational> data_;
};

/// Reduced row echelon form; pivots receives the pivot column of each nonzero row.
QMatrix rref(const QMatrix& a, std::vector<std::size_t>* pivots = nullptr);
std::size_t rank(const QMatrix& a);
/// Basis of {x : A x = 0}; vectors have length a.cols().
std::vector<QVector> kernel_basis(const QMatrix& a);
/// Basis of the row space (nonzero rows of the rref).
std::vector<QVector> row_space_basis(const QMatrix& a);
Rational determinant(const QMatrix& a);
/// Throws std::domain_error when singular.
QMatrix inverse(const QMatrix& a);
/// Solves A x = b for square nonsingular A.
QVector solve(const QMatrix& a, const QVector& b);
/// Coordinates of v in the basis `basis` (which must contain v in its span).
QVector coordinates_in(const std::vector<QVector>& basis, const QVector& v);
/// Orthogonal projection of v onto span(basis) w.r.t. the standard dot product.
QVector project_onto(const std::vector<QVector>& basis, const QVector& v);

/// Clears denominators row by row and divides each row by its content.
std::vector<ZVector> primitive_integer_rows(const std::vector<QVector>& rows);
ZVector primitive_integer_vector(const QVector& v);
Integer content(const ZVector& v);

/// Dense integer matrix; only what the Hermite-style reductions need.
struct ZMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Integer> data;

  ZMatrix() = default;
  ZMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0) {}
  Integer& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  const Integer& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  static ZMatrix from_rows(const std::vector<ZVector>& rows, std::size_t width);
  ZVector row(std::size_t i) const;
  ZVector col(std::size_t j) const;
};

/// Z-basis of ker(A) ∩ Z^cols, obtained from a unimodular column reduction of A
/// to lower echelon form (Hermite style). The returned lattice is saturated.
std::vector<ZVector> integer_kernel_basis(const ZMatrix& a);

/// Z-basis of span_Q(rows) ∩ Z^n, i.e. the saturation of the row lattice.
std::vector<ZVector> saturate(const std::vector<QVector>& rows, std::size_t n);

/// Gram determinant det(B G B^t) for integer rows B and rational Gram matrix G.
Rational gram_determinant(const std::vector<ZVector>& basis, const QMatrix& gram);

/// Integer polynomial utilities (coefficients low degree first).
using QPoly = std::vector<Rational>;
/// Characteristic polynomial det(xI - A) via the Faddeev–LeVerrier recursion.
QPoly characteristic_polynomial(const QMatrix& a);
Rational evaluate(const QPoly& p, const Rational& x);
/// Number of distinct real roots in (lo, hi] via a Sturm sequence.
std::size_t sturm_count(const QPoly& p, const Rational& lo, const Rational& hi);

}  // namespace equi
