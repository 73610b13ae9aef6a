#pragma once

// Kernel approximation for integer matrices and greedy cutting sets.

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "equi/exact.hpp"

namespace equi {

/// Integer matrix A/denominator; kernel computations only ever see the integer part.
struct ExactMatrix {
  ZMatrix entries;
  Integer denominator = 1;

  ExactMatrix() = default;
  explicit ExactMatrix(ZMatrix z, Integer den = 1);
  static ExactMatrix from_rows(const std::vector<std::vector<long>>& rows);
  /// Clears the common denominator of a rational matrix.
  static ExactMatrix from_rational(const QMatrix& q);

  std::size_t rows() const { return entries.rows; }
  std::size_t cols() const { return entries.cols; }
  /// max |a_ij| of the integer part.
  Integer entry_bound() const;
  QMatrix to_qmatrix() const;
};

struct KernelProjection {
  Eigen::VectorXd v0;
  QVector v0_exact;          // A v0_exact = 0 exactly
  double delta_used = 0;     // max(delta, |A v|) for the integer matrix
  bool delta_replaced = false;
  double residual = 0;       // |A v| (integer matrix, snapshot of v)
  double bound = 0;          // delta_used (nm)^{n/2} E^n + snapshot slack
  double distance = 0;       // |v - v0|, exact up to the final rounding
  double snapshot_slack = 0; // |v - snapshot(v)| upper bound
  unsigned snapshot_bits = 64;
};

/// Orthogonal projection of v onto ker(A), computed exactly from a 2^-bits snapshot of v.
KernelProjection kernel_project(const ExactMatrix& a, const Eigen::VectorXd& v, double delta,
                                unsigned snapshot_bits = 64);

struct SingularValueFloor {
  double sigma_min = 0;      // smallest nonzero singular value of the integer part
  Rational sigma_sq_lo;      // certified enclosure of sigma_min^2
  Rational sigma_sq_hi;
  double floor = 0;          // (nmE^2)^{-n/2}
  Rational floor_sq;         // (nmE^2)^{-n}, exact
  bool holds = false;        // sigma_min^2 >= floor_sq, decided exactly by a Sturm count
  std::size_t rank = 0;
  int refinements = 0;
};

/// Throws DegenerateInput for the zero matrix, ConvergenceError if certification keeps failing.
SingularValueFloor singular_value_floor(const ExactMatrix& a);

/// Greedy selection of subspaces (given by spanning sets in Q^d) whose intersection equals
/// the intersection of all of them; at most d indices.
std::vector<std::size_t> minimal_cutting_set(const std::vector<std::vector<QVector>>& subspaces, std::size_t d);

/// Basis of the intersection of the selected subspaces (all of them if `indices` is empty).
std::vector<QVector> intersect_subspaces(const std::vector<std::vector<QVector>>& subspaces, std::size_t d,
                                         const std::vector<std::size_t>& indices = {});

}  // namespace equi
