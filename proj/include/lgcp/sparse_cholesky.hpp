#pragma once

#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace lgcp {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Entries of A^{-1} on the (filled) pattern of the Cholesky factor of A.
class SelectedInverse {
 public:
  /// (i, j) in original ordering. Throws std::out_of_range when the entry is
  /// not in the factor pattern.
  double operator()(Eigen::Index i, Eigen::Index j) const;
  Eigen::VectorXd diagonal() const;
  /// Quadratic form a^T A^{-1} a for a sparse vector given as (index, value)
  /// pairs whose indices are pairwise in the pattern (e.g. one row of an
  /// incidence matrix whose cross-products entered A).
  double quadratic_form(const std::vector<std::pair<Eigen::Index, double>>& a) const;

 private:
  friend class SparseCholesky;
  double permuted(Eigen::Index r, Eigen::Index c) const;

  SparseMatrix sigma_;  ///< lower-triangular, permuted ordering, same pattern as L
  Eigen::VectorXi perm_;
};

/// Sparse LL^T of a symmetric positive definite matrix with AMD ordering.
class SparseCholesky {
 public:
  /// Analyzes and factorizes. Throws NumericalError if A is not positive definite.
  explicit SparseCholesky(const SparseMatrix& a);
  ~SparseCholesky();
  SparseCholesky(SparseCholesky&&) noexcept;
  SparseCholesky& operator=(SparseCholesky&&) noexcept;

  /// Re-factorizes a matrix with the same sparsity pattern, reusing the ordering.
  void refactorize(const SparseMatrix& a);

  Eigen::Index size() const;
  double log_determinant() const;
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;
  /// Maps w ~ N(0, I) to a draw from N(0, A^{-1}).
  Eigen::VectorXd sample_from_standard(const Eigen::VectorXd& w) const;
  /// Takahashi recursions on the factor.
  SelectedInverse selected_inverse() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace lgcp
