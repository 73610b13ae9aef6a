#pragma once

// Effective generation of Lie subalgebras: iterated brackets, SVD filtering, the
// doubling/cubing stabilization loop and projection onto a nearby genuine subalgebra.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "equi/lie_core.hpp"
#include "json.hpp"

namespace equi {

struct BracketElement {
  RVector v;           // e-coordinates
  std::size_t depth;
  std::string expr;    // e.g. "[t0,[t1,t2]]"
};

/// T^(k): bracket monomials of depth <= k, deduplicated up to sign at 1e-12.
class BracketClosure {
 public:
  BracketClosure(const LieAlgebraModel& alg, const std::vector<RVector>& generators, std::size_t cap = 100000);

  /// Adds all levels up to `depth`. Throws CapExceeded when the element count passes the cap.
  void extend(std::size_t depth);
  std::size_t depth() const { return depth_; }
  std::size_t size() const { return elements_.size(); }
  /// Elements of depth <= k (a prefix, since levels are appended in order).
  std::size_t count_up_to(std::size_t k) const;
  const std::vector<BracketElement>& elements() const { return elements_; }
  /// Columns are the first count_up_to(k) elements in e-coordinates.
  RMatrix matrix(std::size_t k) const;

 private:
  bool insert(RVector v, std::size_t depth, std::string expr);

  const LieAlgebraModel* alg_;
  std::size_t cap_;
  std::size_t depth_ = 0;
  std::vector<BracketElement> elements_;
  std::vector<std::size_t> level_start_;  // level_start_[d] = first index of depth d (1-based levels)
  std::vector<std::pair<double, std::size_t>> by_norm_;  // sorted (norm, index) for the dedup window
};

BracketClosure iterated_brackets(const LieAlgebraModel& alg, const std::vector<RVector>& generators, std::size_t k,
                                 std::size_t cap = 100000);

struct FilteredSpace {
  std::size_t m = 0;
  double delta = 0;
  SubspaceFrame frame;                 // W_m[delta]
  std::vector<double> singular_values; // descending, algebra norm
  RMatrix left;                        // all left singular vectors, unit coordinates (dim x rank)
};

/// Noise floor below which singular values are treated as zero regardless of delta.
double singular_value_noise_floor(const std::vector<double>& sv, std::size_t columns);

/// SVD of f_m: R^{T^(m)} -> g, keeping left singular directions with sigma >= delta.
FilteredSpace svd_filter(const LieAlgebraModel& alg, const BracketClosure& closure, std::size_t m, double delta);
FilteredSpace svd_filter(const LieAlgebraModel& alg, const BracketClosure& closure, double delta);

struct StabilizeResult {
  std::size_t m = 1;
  double delta1 = 0;
  FilteredSpace W;
  std::size_t iterations = 0;  // number of (m, delta1) -> (2m, delta1^3) updates
  std::vector<std::size_t> dims;  // dim W_m[delta1] at each visited m
};

StabilizeResult stabilize(const LieAlgebraModel& alg, BracketClosure& closure, double delta);
StabilizeResult stabilize(const LieAlgebraModel& alg, const std::vector<RVector>& generators, double delta,
                          std::size_t cap = 100000);

struct NearestOptions {
  double closure_tol = 1e-9;
  std::size_t max_iter = 500;
};

struct NearestResult {
  SubspaceFrame frame;
  std::size_t iterations = 0;
  double initial_objective = 0;
  double final_objective = 0;
  double closure_defect = 0;
};

/// F(X) = sum_{i != j} |X_1 ^ ... ^ X_r ^ [X_i, X_j]|^2 in unit coordinates (columns of `x_unit`).
double subalgebra_objective(const LieAlgebraModel& alg, const RMatrix& x_unit);
/// Analytic gradient of subalgebra_objective w.r.t. the entries of x_unit.
RMatrix subalgebra_objective_gradient(const LieAlgebraModel& alg, const RMatrix& x_unit);

/// Damped Gauss–Newton on F with re-orthonormalization. When `contain` is given its span is kept
/// inside the frame exactly. Throws ConvergenceError after max_iter.
NearestResult nearest_subalgebra(const LieAlgebraModel& alg, const SubspaceFrame& w,
                                 const std::optional<SubspaceFrame>& contain = std::nullopt,
                                 const NearestOptions& options = {});

struct Certificate {
  std::vector<double> coeffs;  // over T^(k)
  double max_coeff = 0;
  double coeff_bound = 0;      // delta1^{-k}
  double residual = 0;         // |w_i - sum c_t t|
};

struct PropEResult {
  SubspaceFrame w;
  std::size_t k = 0;            // depth of the closure the certificates refer to
  std::size_t m = 0;
  double delta = 0;
  double delta1 = 0;
  std::size_t closure_size = 0;
  std::size_t stabilize_iterations = 0;
  std::size_t nearest_iterations = 0;
  double closure_defect = 0;
  std::vector<Certificate> certificates;
  std::vector<double> generator_distances;  // dist(t, w) for t in T
  double max_residual = 0;
  double max_generator_distance = 0;
};

PropEResult prop_E(const LieAlgebraModel& alg, const std::vector<RVector>& generators, double delta,
                   const std::optional<SubspaceFrame>& h = std::nullopt, const NearestOptions& options = {},
                   std::size_t cap = 100000);

nlohmann::json to_json(const PropEResult& r, std::size_t input_dim);

/// Orthonormal generating set: each base vector pushed by `eps` (algebra norm) along the matching
/// direction, then orthonormalized. Directions may be fewer than base vectors.
std::vector<RVector> perturbed_generators(const LieAlgebraModel& alg, const std::vector<RVector>& base,
                                          const std::vector<RVector>& directions, double eps);

/// The block sl2 of sl3 pushed by eps along E13, E32, E23 respectively.
std::vector<RVector> perturbed_block_sl2(const LieAlgebraModel& sl3, double eps);

}  // namespace equi
