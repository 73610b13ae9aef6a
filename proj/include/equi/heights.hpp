#pragma once

// Heights of points and rational subspaces, Case A stabilizers and orbit discriminants.

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "equi/exact.hpp"
#include "equi/lie_core.hpp"

namespace equi {

/// Full-rank lattice spanned by the columns of `basis`; lengths are `scale` times Euclidean.
struct LatticeFrame {
  RMatrix basis;
  double scale = 1.0;

  LatticeFrame() = default;
  LatticeFrame(RMatrix b, double s = 1.0);
  RMatrix gram() const { return scale * scale * basis.transpose() * basis; }
  std::size_t rank() const { return static_cast<std::size_t>(basis.cols()); }
};

struct ShortestVector {
  RVector vector;                 // ambient coordinates
  std::vector<long long> coeffs;  // in the input basis
  double length = 0;
  double radius = 0;              // enumeration radius that was searched exhaustively
  std::size_t visited = 0;        // enumeration nodes
};

constexpr std::size_t kShortestVectorRankCap = 10;

/// LLL reduction followed by Fincke–Pohst enumeration. Throws CapExceeded above rank 10.
ShortestVector shortest_vector(const LatticeFrame& lattice);

/// The lattice Ad(g^{-1}) g_Z in e-coordinates with the algebra norm.
LatticeFrame adjoint_lattice(const LieAlgebraModel& alg, const RMatrix& g);
/// 1 / shortest nonzero vector of Ad(g^{-1}) g_Z.
double height_of_point(const LieAlgebraModel& alg, const RMatrix& g);
/// ||g|| = max_ij(|Ad(g)_ij|, |Ad(g^{-1})_ij|) in the e-basis.
double adjoint_group_norm(const LieAlgebraModel& alg, const RMatrix& g);

struct SubspaceHeight {
  double height = 0;
  Rational height_squared;           // exact Gram determinant
  std::vector<ZVector> saturated;    // basis of W ∩ Z^n
};

/// sqrt(det Gram) of a basis of W ∩ Z^n. `gram` is the ambient inner product on Z^n
/// (identity if empty). Throws DegenerateInput for the zero subspace.
SubspaceHeight subspace_height(const std::vector<QVector>& spanning, std::size_t n, const QMatrix& gram = {});

/// Case A convention: SL_r acts on symmetric matrices by g.M = g^t M g; the stabilizer
/// algebra of y is {X in sl_r : X^t y + y X = 0}. `slr` must realize sl_r by r x r matrices.
ExactFrame stabilizer_algebra(const LieAlgebraModel& slr, const QMatrix& y);

struct OrbitDiscriminant {
  Integer disc;
  QVector v;                 // (wedge^r)^{⊗2} coordinates, indexed (S, T) over sorted r-subsets
  Rational killing_det;      // det B(e_i, e_j) for the supplied basis
  std::size_t r = 0;
};

/// v = (e_1 ∧ ... ∧ e_r)^{⊗2} / det B(e_i,e_j) in lattice coordinates and the least m with m v integral.
/// With `verify`, recomputes from a second rational basis and throws InvariantViolation on mismatch.
OrbitDiscriminant orbit_discriminant(const LieAlgebraModel& alg, const ExactFrame& stab, bool verify = true);

/// Plücker coordinates (r x r minors, sorted subsets) of the rows of `basis`.
QVector plucker(const std::vector<QVector>& basis);

struct OrbitRecord {
  QMatrix y;
  Integer level;              // det y
  ExactFrame stabilizer;
  Integer disc;
  double subspace_height = 0; // height of the stabilizer subspace of g w.r.t. g_Z, algebra norm
  Integer square_part;        // gcd of the entries of y
  double line_height = 0;     // height of Q.y in the symmetric-matrix lattice
};

/// Symmetric integral y with det y != 0.
OrbitRecord make_orbit_record(const LieAlgebraModel& slr, const QMatrix& y);

/// Entries m11,m12,m13,m22,m23,m33 (upper triangle, row-major).
ZVector symmetric_coordinates(const QMatrix& y);
QMatrix symmetric_from_coordinates(const std::vector<long>& m, std::size_t r = 3);

struct HeightDiscReport {
  std::size_t count = 0;
  double min_ratio = 0;
  double max_ratio = 0;
  double median_ratio = 0;
  double band = 0;  // max / min
  std::vector<double> ratios;
};

/// ratio = subspace_height / disc^{1/2} per record.
HeightDiscReport check_heightdisc(const std::vector<OrbitRecord>& records);

}  // namespace equi
