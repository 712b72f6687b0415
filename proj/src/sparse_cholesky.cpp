#include "lgcp/sparse_cholesky.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>

#include "lgcp/error.hpp"

namespace lgcp {

struct SparseCholesky::Impl {
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt;
};

SparseCholesky::SparseCholesky(const SparseMatrix& a) : impl_(std::make_unique<Impl>()) {
  impl_->llt.analyzePattern(a);
  refactorize(a);
}

SparseCholesky::~SparseCholesky() = default;
SparseCholesky::SparseCholesky(SparseCholesky&&) noexcept = default;
SparseCholesky& SparseCholesky::operator=(SparseCholesky&&) noexcept = default;

void SparseCholesky::refactorize(const SparseMatrix& a) {
  impl_->llt.factorize(a);
  if (impl_->llt.info() != Eigen::Success)
    throw NumericalError("sparse Cholesky factorization failed: matrix is not positive definite");
}

Eigen::Index SparseCholesky::size() const { return impl_->llt.rows(); }

double SparseCholesky::log_determinant() const {
  const SparseMatrix& l = impl_->llt.matrixL().nestedExpression();
  double sum = 0.0;
  for (Eigen::Index j = 0; j < l.outerSize(); ++j) {
    SparseMatrix::InnerIterator it(l, j);
    sum += std::log(it.value());
  }
  return 2.0 * sum;
}

Eigen::VectorXd SparseCholesky::solve(const Eigen::VectorXd& b) const { return impl_->llt.solve(b); }

Eigen::MatrixXd SparseCholesky::solve(const Eigen::MatrixXd& b) const { return impl_->llt.solve(b); }

Eigen::VectorXd SparseCholesky::sample_from_standard(const Eigen::VectorXd& w) const {
  Eigen::VectorXd u = impl_->llt.matrixU().solve(w);
  return impl_->llt.permutationPinv() * u;
}

SelectedInverse SparseCholesky::selected_inverse() const {
  const SparseMatrix& l = impl_->llt.matrixL().nestedExpression();
  SelectedInverse out;
  out.sigma_ = l;  // same pattern; values overwritten below
  out.perm_ = impl_->llt.permutationP().indices();
  const Eigen::Index n = l.cols();
  const int* outer = l.outerIndexPtr();
  const int* inner = l.innerIndexPtr();
  const double* lv = l.valuePtr();
  double* sv = out.sigma_.valuePtr();

  for (Eigen::Index j = n - 1; j >= 0; --j) {
    const int begin = outer[j];
    const int end = outer[j + 1];
    const double ljj = lv[begin];  // diagonal is stored first
    // Off-diagonal entries of column j: Sigma_ij = -1/L_jj sum_k L_kj Sigma_ki
    for (int p = begin + 1; p < end; ++p) {
      const int i = inner[p];
      double acc = 0.0;
      for (int q = begin + 1; q < end; ++q) {
        const int k = inner[q];
        acc += lv[q] * out.permuted(std::max(k, i), std::min(k, i));
      }
      sv[p] = -acc / ljj;
    }
    double acc = 0.0;
    for (int q = begin + 1; q < end; ++q) acc += lv[q] * sv[q];
    sv[begin] = 1.0 / (ljj * ljj) - acc / ljj;
  }
  return out;
}

double SelectedInverse::permuted(Eigen::Index r, Eigen::Index c) const {
  // r >= c; binary search row r in column c
  const int* outer = sigma_.outerIndexPtr();
  const int* inner = sigma_.innerIndexPtr();
  const int* first = inner + outer[c];
  const int* last = inner + outer[c + 1];
  const int* hit = std::lower_bound(first, last, static_cast<int>(r));
  if (hit == last || *hit != r) throw std::out_of_range("entry not in the factor pattern");
  return sigma_.valuePtr()[hit - inner];
}

double SelectedInverse::operator()(Eigen::Index i, Eigen::Index j) const {
  const Eigen::Index pi = perm_[i];
  const Eigen::Index pj = perm_[j];
  return permuted(std::max(pi, pj), std::min(pi, pj));
}

Eigen::VectorXd SelectedInverse::diagonal() const {
  const Eigen::Index n = sigma_.cols();
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index p = perm_[i];
    d[i] = sigma_.valuePtr()[sigma_.outerIndexPtr()[p]];
  }
  return d;
}

double SelectedInverse::quadratic_form(const std::vector<std::pair<Eigen::Index, double>>& a) const {
  double sum = 0.0;
  for (std::size_t s = 0; s < a.size(); ++s) {
    sum += a[s].second * a[s].second * (*this)(a[s].first, a[s].first);
    for (std::size_t t = s + 1; t < a.size(); ++t) sum += 2.0 * a[s].second * a[t].second * (*this)(a[s].first, a[t].first);
  }
  return sum;
}

}  // namespace lgcp
