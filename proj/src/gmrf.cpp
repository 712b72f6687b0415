#include "lgcp/gmrf.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "lgcp/error.hpp"

namespace lgcp {

namespace {

SparseMatrix from_triplets(Eigen::Index rows, Eigen::Index cols, const std::vector<Triplet>& t) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

bool is_identity(const SparseMatrix& m) {
  if (m.rows() != m.cols() || m.nonZeros() != m.rows()) return false;
  for (Eigen::Index j = 0; j < m.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(m, j); it; ++it)
      if (it.row() != it.col() || it.value() != 1.0) return false;
  return true;
}

// Eigendecomposition of P R P + (I - P), P the projector onto the constraint
// null space: its inverse minus (I - P) is the constrained covariance and its
// log-determinant equals log det(V^T R V).
Eigen::MatrixXd dense_constrained_inverse(const SparsePrecision& s, double* log_det) {
  const Eigen::Index n = s.dimension();
  const Eigen::MatrixXd r = Eigen::MatrixXd(s.entries);
  Eigen::MatrixXd complement = Eigen::MatrixXd::Zero(n, n);
  if (!s.constraints.empty()) {
    const Eigen::MatrixXd c = s.constraint_matrix();
    complement = c.transpose() * (c * c.transpose()).ldlt().solve(c);
  }
  const Eigen::MatrixXd p = Eigen::MatrixXd::Identity(n, n) - complement;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p * r * p + complement);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition of structure matrix failed");
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  if (lambda.minCoeff() <= 1e-10 * std::max(1.0, lambda.cwiseAbs().maxCoeff()))
    throw NumericalError("structure matrix is singular beyond its declared rank deficiency");
  if (log_det != nullptr) *log_det = lambda.array().log().sum();
  const Eigen::MatrixXd& v = eig.eigenvectors();
  return v * lambda.cwiseInverse().asDiagonal() * v.transpose() - complement;
}

ConstrainedSummary dense_summary(const SparsePrecision& s) {
  ConstrainedSummary out;
  out.variances = dense_constrained_inverse(s, &out.log_determinant).diagonal();
  return out;
}

ConstrainedSummary sparse_summary(const SparsePrecision& s) {
  const Eigen::Index n = s.dimension();
  if (!s.constraints.empty() && !s.sum_to_zero_only())
    throw InputError("structures above the dense limit support only sum-to-zero constraints");
  ConstrainedSummary out;
  out.variances.resize(n);
  if (s.constraints.empty()) {
    SparseCholesky chol(s.entries);
    out.log_determinant = chol.log_determinant();
    out.variances = chol.selected_inverse().diagonal();
    return out;
  }
  const SparseMatrix t = sum_to_zero_basis(static_cast<int>(n));
  SparseMatrix reduced = SparseMatrix(t.transpose() * s.entries * t);
  std::vector<Triplet> band;
  for (Eigen::Index i = 1; i < n - 1; ++i) band.emplace_back(i, i - 1, 0.0), band.emplace_back(i - 1, i, 0.0);
  reduced += from_triplets(n - 1, n - 1, band);
  SparseCholesky chol(reduced);
  out.log_determinant = chol.log_determinant() - std::log(static_cast<double>(n));
  const SelectedInverse sigma = chol.selected_inverse();
  out.variances[0] = sigma(0, 0);
  for (Eigen::Index i = 1; i < n - 1; ++i)
    out.variances[i] = sigma(i, i) + sigma(i - 1, i - 1) - 2.0 * sigma(i, i - 1);
  out.variances[n - 1] = sigma(n - 2, n - 2);
  return out;
}

}  // namespace

bool SparsePrecision::sum_to_zero_only() const {
  return constraints.size() == 1 && (constraints[0].array() == 1.0).all();
}

Eigen::MatrixXd SparsePrecision::constraint_matrix() const {
  Eigen::MatrixXd c(static_cast<Eigen::Index>(constraints.size()), dimension());
  for (std::size_t k = 0; k < constraints.size(); ++k) c.row(static_cast<Eigen::Index>(k)) = constraints[k].transpose();
  return c;
}

SparsePrecision besag_structure(const SlopeUnitGraph& graph) {
  const int n = graph.n_su();
  if (n < 2) throw InputError("Besag structure needs at least two slope units");
  if (!SlopeUnitGraph::is_connected(n, graph.edges())) throw InputError("disconnected graph");
  std::vector<Triplet> t;
  for (int i = 0; i < n; ++i) t.emplace_back(i, i, static_cast<double>(graph.degrees()[i]));
  for (auto [a, b] : graph.edges()) {
    t.emplace_back(a, b, -1.0);
    t.emplace_back(b, a, -1.0);
  }
  return {from_triplets(n, n, t), 1, {Eigen::VectorXd::Ones(n)}};
}

SparsePrecision rw1_structure(int n, bool cyclic) {
  if (n < 3) throw InputError("random walk needs at least three bins");
  std::vector<Triplet> t;
  for (int i = 0; i < n; ++i) {
    const bool edge = !cyclic && (i == 0 || i == n - 1);
    t.emplace_back(i, i, edge ? 1.0 : 2.0);
  }
  for (int i = 0; i + 1 < n; ++i) {
    t.emplace_back(i, i + 1, -1.0);
    t.emplace_back(i + 1, i, -1.0);
  }
  if (cyclic) {
    t.emplace_back(0, n - 1, -1.0);
    t.emplace_back(n - 1, 0, -1.0);
  }
  return {from_triplets(n, n, t), 1, {Eigen::VectorXd::Ones(n)}};
}

SparsePrecision iid_structure(int n, bool sum_to_zero) {
  if (n < 1) throw InputError("iid block needs a positive dimension");
  SparseMatrix identity(n, n);
  identity.setIdentity();
  SparsePrecision s{identity, 0, {}};
  if (sum_to_zero) s.constraints.push_back(Eigen::VectorXd::Ones(n));
  return s;
}

ConstrainedSummary summarize_constrained(const SparsePrecision& structure) {
  const Eigen::Index n = structure.dimension();
  if (is_identity(structure.entries) && structure.constraints.empty())
    return {0.0, Eigen::VectorXd::Ones(n)};
  if (n <= kDenseScalingLimit) return dense_summary(structure);
  return sparse_summary(structure);
}

double scaling_constant(const SparsePrecision& structure) {
  const ConstrainedSummary s = summarize_constrained(structure);
  if ((s.variances.array() <= 0.0).any()) throw NumericalError("non-positive constrained variance");
  return std::exp(s.variances.array().log().mean());
}

Eigen::MatrixXd constrained_generalized_inverse(const SparsePrecision& structure) {
  if (structure.dimension() > kDenseScalingLimit)
    throw InputError("dense generalized inverse is limited to 5000 dimensions");
  return dense_constrained_inverse(structure, nullptr);
}

double constrained_log_determinant(const SparsePrecision& structure) {
  if (is_identity(structure.entries)) return 0.0;
  return summarize_constrained(structure).log_determinant;
}

SparseMatrix sum_to_zero_basis(int n) {
  if (n < 2) throw InputError("sum-to-zero basis needs at least two coordinates");
  std::vector<Triplet> t;
  t.reserve(2 * static_cast<std::size_t>(n));
  for (int i = 0; i < n - 1; ++i) {
    t.emplace_back(i, i, 1.0);
    t.emplace_back(i + 1, i, -1.0);
  }
  return from_triplets(n, n - 1, t);
}

double PCPrior::rate() const {
  if (!(u > 0.0) || !(alpha > 0.0 && alpha < 1.0))
    throw InputError(fmt::format("invalid PC prior (u={}, alpha={})", u, alpha));
  return -std::log(alpha) / u;
}

double PCPrior::tail_probability(double s) const { return std::exp(-rate() * s); }

double pc_prior_log_density(double tau, const PCPrior& prior) {
  if (!(tau > 0.0)) throw InputError("precision must be positive");
  const double rate = prior.rate();
  return std::log(rate / 2.0) - 1.5 * std::log(tau) - rate / std::sqrt(tau);
}

void write_triplets(std::ostream& out, const SparsePrecision& structure) {
  std::vector<std::tuple<Eigen::Index, Eigen::Index, double>> entries;
  for (Eigen::Index j = 0; j < structure.entries.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(structure.entries, j); it; ++it)
      entries.emplace_back(it.row(), it.col(), it.value());
  std::sort(entries.begin(), entries.end());
  out << "row,col,value\n";
  for (auto [r, c, v] : entries) out << r << ',' << c << ',' << fmt::format("{:.17g}", v) << '\n';
}

}  // namespace lgcp
