#pragma once

#include <ostream>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "lgcp/domain.hpp"
#include "lgcp/sparse_cholesky.hpp"

namespace lgcp {

/// Unscaled structure matrix R of a Gaussian block (precision = scale * R)
/// together with the linear equality constraints A x = 0 attached to it.
struct SparsePrecision {
  SparseMatrix entries;
  int rank_deficiency = 0;
  std::vector<Eigen::VectorXd> constraints;

  Eigen::Index dimension() const { return entries.rows(); }
  /// True when the only constraint is the all-ones row.
  bool sum_to_zero_only() const;
  Eigen::MatrixXd constraint_matrix() const;
};

/// Besag CAR structure D - A on a connected graph, with a sum-to-zero constraint.
SparsePrecision besag_structure(const SlopeUnitGraph& graph);

/// First-order random walk on n >= 3 ordered bins (cyclic: circular bins).
SparsePrecision rw1_structure(int n, bool cyclic);

/// Identity structure; optionally with a sum-to-zero constraint.
SparsePrecision iid_structure(int n, bool sum_to_zero = false);

/// tau_0 such that the constrained field with precision tau * tau_0 * R has
/// generalized marginal variance 1/tau, i.e. the geometric mean of the
/// diagonal of the constrained generalized inverse of R.
double scaling_constant(const SparsePrecision& structure);

/// log det(V^T R V) and diag(V (V^T R V)^{-1} V^T), V an orthonormal basis of
/// the constraint null space. Dense eigendecomposition up to
/// kDenseScalingLimit, sparse selected inversion beyond (sum-to-zero or
/// unconstrained structures only).
struct ConstrainedSummary {
  double log_determinant = 0.0;
  Eigen::VectorXd variances;
};
ConstrainedSummary summarize_constrained(const SparsePrecision& structure);

/// Covariance of the constrained field with precision R (dense; dimension <= 5000).
Eigen::MatrixXd constrained_generalized_inverse(const SparsePrecision& structure);

/// log det(V^T R V) with V an orthonormal basis of the constraint null space:
/// the log normalizing constant of the block density on the constraint subspace.
double constrained_log_determinant(const SparsePrecision& structure);

/// Sparse basis T (n x n-1) of {x : sum(x) = 0} with x_0 = z_0,
/// x_i = z_i - z_{i-1}, x_{n-1} = -z_{n-2}.
SparseMatrix sum_to_zero_basis(int n);

/// Penalized-complexity prior for a precision: sigma = tau^{-1/2} is
/// exponential with Pr(sigma > u) = alpha.
struct PCPrior {
  double u = 1.0;
  double alpha = 0.01;

  double rate() const;
  /// Pr(sigma > s) under the implied exponential law.
  double tail_probability(double s) const;
};

/// log density of tau: log(rate/2) - 3/2 log(tau) - rate * tau^{-1/2}.
double pc_prior_log_density(double tau, const PCPrior& prior);

/// `row,col,value` triplets (0-based), sorted by row then column.
void write_triplets(std::ostream& out, const SparsePrecision& structure);

/// Dense-route size limit for generalized inverses.
inline constexpr Eigen::Index kDenseScalingLimit = 5000;

}  // namespace lgcp
