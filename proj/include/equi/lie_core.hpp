#pragma once

// Finite-dimensional real Lie algebras with exact rational structure constants.
//
// Coordinates are always taken in the defining basis e_1..e_n. The algebra norm
// is the coordinate Euclidean norm multiplied by norm_scale(), which is chosen so
// that ||[u,v]|| <= ||u|| ||v|| holds for all u, v.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "equi/exact.hpp"
#include "json.hpp"

namespace equi {

using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

/// (E, H, F) with [H,E] = 2E, [H,F] = -2F, [E,F] = H.
struct Sl2Triple {
  QVector e;
  QVector h;
  QVector f;
};

class LieAlgebraModel {
 public:
  struct Term {
    std::size_t k;
    Rational value;
    double value_d;
  };

  /// `constants` is the dense tensor c[i][j][k] flattened as (i*dim + j)*dim + k.
  /// `lattice_basis` defaults to the coordinate basis; `realization` optionally gives
  /// each basis element as a square matrix (used for group-level computations).
  LieAlgebraModel(std::vector<std::string> basis_names, const std::vector<Rational>& constants,
                  std::vector<QVector> lattice_basis = {}, std::optional<Sl2Triple> triple = std::nullopt,
                  std::vector<QMatrix> realization = {});

  static LieAlgebraModel from_json(const nlohmann::json& doc);
  static LieAlgebraModel load(const std::filesystem::path& file);
  nlohmann::json to_json() const;

  std::size_t dim() const { return dim_; }
  const std::vector<std::string>& basis_names() const { return names_; }
  Rational structure_constant(std::size_t i, std::size_t j, std::size_t k) const;
  /// Nonzero entries of [e_i, e_j].
  const std::vector<Term>& bracket_terms(std::size_t i, std::size_t j) const { return terms_[i * dim_ + j]; }
  double norm_scale() const { return norm_scale_; }
  const std::vector<QVector>& lattice_basis() const { return lattice_; }
  const std::optional<Sl2Triple>& sl2_triple() const { return triple_; }
  LieAlgebraModel with_triple(const Sl2Triple& triple) const;

  bool has_realization() const { return !realization_.empty(); }
  std::size_t realization_size() const { return realization_.empty() ? 0 : realization_.front().rows(); }
  const std::vector<QMatrix>& realization() const { return realization_; }

  QVector basis_vector(std::size_t i) const;
  RVector unit_basis_vector(std::size_t i) const;  // e_i / norm_scale, unit in the algebra norm

  // --- bracket / Killing form / adjoint -------------------------------------
  QVector bracket(const QVector& x, const QVector& y) const;
  RVector bracket(const RVector& x, const RVector& y) const;
  Rational killing_form(const QVector& x, const QVector& y) const;
  double killing_form(const RVector& x, const RVector& y) const;
  /// Gram matrix B(e_i, e_j) of the Killing form, exact.
  const QMatrix& killing_matrix() const { return killing_; }
  QMatrix adjoint_matrix(const QVector& x) const;
  RMatrix adjoint_matrix(const RVector& x) const;

  // --- norm --------------------------------------------------------------------
  double norm(const RVector& x) const { return norm_scale_ * x.norm(); }
  double inner(const RVector& x, const RVector& y) const { return norm_scale_ * norm_scale_ * x.dot(y); }

  // --- weight decomposition g = g0 (+) g1 for the fixed sl2-triple -------------
  std::pair<QVector, QVector> weight_decompose(const QVector& r) const;
  std::pair<RVector, RVector> weight_decompose(const RVector& r) const;
  /// Basis of g0 = ker(ad E), the u(t)-fixed subspace.
  const std::vector<QVector>& fixed_subspace() const;
  /// Basis of g1 = im(ad F), the sum of the non-highest weight spaces.
  const std::vector<QVector>& moving_subspace() const;

  // --- linear realization ------------------------------------------------------
  QMatrix to_matrix(const QVector& x) const;
  RMatrix to_matrix(const RVector& x) const;
  /// Inverse of to_matrix on the image; throws DimensionError if M is not in the span (exact mode).
  QVector from_matrix(const QMatrix& m) const;
  RVector from_matrix(const RMatrix& m) const;
  /// Ad(g) in the e-basis for a group element g of the realization.
  RMatrix adjoint_action(const RMatrix& g) const;

  void check_dimension(const QVector& x) const;
  void check_dimension(const RVector& x) const;

 private:
  void validate() const;
  void compute_norm_scale();
  void prepare_weights();
  void prepare_realization();

  std::size_t dim_ = 0;
  std::vector<std::string> names_;
  std::vector<std::vector<Term>> terms_;
  std::vector<QVector> lattice_;
  std::optional<Sl2Triple> triple_;
  std::vector<QMatrix> realization_;
  QMatrix killing_;
  double norm_scale_ = 1.0;

  // weight decomposition data
  std::vector<QVector> fixed_;
  std::vector<QVector> moving_;
  QMatrix weight_inverse_;  // inverse of [fixed | moving]
  RMatrix weight_inverse_d_;
  RMatrix fixed_projector_d_;

  // realization solve data: pivot entries of the flattened basis and the inverse of that block
  std::vector<std::size_t> real_pivots_;
  QMatrix real_inverse_;
  RMatrix real_inverse_d_;
};

// ---------------------------------------------------------------------------
// Built-in algebras.

/// sl_n with basis E_ij (i<j), H_i = E_ii - E_{i+1,i+1}, E_ij (i>j); the integral
/// lattice is the span of this basis and the triple is the upper-left block sl_2.
LieAlgebraModel make_sl(std::size_t n);
/// sl_3 carrying the principal (irreducible) sl_2: E = E12 + E23, H = diag(2,0,-2), F = 2E21 + 2E32.
LieAlgebraModel make_sl3_principal();
/// Names: sl2, sl3, sl4, sl3_block, sl3_principal.
LieAlgebraModel builtin_algebra(const std::string& name);

/// Elementary-matrix coordinates in make_sl(n)'s basis.
std::size_t sl_offdiag_index(std::size_t n, std::size_t i, std::size_t j);
std::size_t sl_cartan_index(std::size_t n, std::size_t i);

// ---------------------------------------------------------------------------
// Subspace frames.

/// Orthonormal frame (w.r.t. the algebra inner product) stored as columns in e-coordinates.
struct SubspaceFrame {
  RMatrix vectors;
  std::size_t size() const { return static_cast<std::size_t>(vectors.cols()); }
};

/// Exact rational basis of a subspace (not orthonormalized).
struct ExactFrame {
  std::vector<QVector> vectors;
  std::size_t size() const { return vectors.size(); }
};

/// Orthonormalizes the columns (algebra inner product); drops columns whose residual
/// falls below `drop_tol` in the algebra norm.
SubspaceFrame orthonormalize(const LieAlgebraModel& alg, const RMatrix& columns, double drop_tol = 1e-13);
SubspaceFrame to_frame(const LieAlgebraModel& alg, const ExactFrame& exact);
/// max |<w_i,w_j> - delta_ij|
double orthonormality_error(const LieAlgebraModel& alg, const SubspaceFrame& frame);
RVector project(const LieAlgebraModel& alg, const SubspaceFrame& frame, const RVector& x);
double distance_to_span(const LieAlgebraModel& alg, const SubspaceFrame& frame, const RVector& x);
/// max over frame pairs of the algebra-norm distance of [w_i, w_j] to the span. Always recomputed.
double closure_defect(const LieAlgebraModel& alg, const SubspaceFrame& frame);
/// Exact test that span(frame) is closed under the bracket.
bool is_subalgebra(const LieAlgebraModel& alg, const ExactFrame& frame);
/// Largest principal-angle sine between two subspaces (0 when equal).
double subspace_distance(const LieAlgebraModel& alg, const SubspaceFrame& a, const SubspaceFrame& b);

/// Killing-orthogonal complement r of h. Throws DegenerateInput when B|h is degenerate and
/// InvariantViolation when ad(h) r is not inside r (tolerance 1e-10 in float mode, exact otherwise).
ExactFrame invariant_complement(const LieAlgebraModel& alg, const ExactFrame& h);
SubspaceFrame invariant_complement(const LieAlgebraModel& alg, const SubspaceFrame& h);

}  // namespace equi
