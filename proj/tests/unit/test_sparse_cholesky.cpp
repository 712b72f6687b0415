#include <doctest.h>

#include <Eigen/Dense>

#include "lgcp/error.hpp"
#include "lgcp/rng.hpp"
#include "lgcp/sparse_cholesky.hpp"

using namespace lgcp;

namespace {

SparseMatrix random_spd(int n, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<Triplet> t;
  Eigen::VectorXd diag = Eigen::VectorXd::Constant(n, 0.5);
  for (int k = 0; k < 3 * n; ++k) {
    const int i = static_cast<int>(rng() % n);
    const int j = static_cast<int>(rng() % n);
    if (i == j) continue;
    const double w = rng.uniform();
    t.emplace_back(i, j, -w);
    t.emplace_back(j, i, -w);
    diag[i] += w;
    diag[j] += w;
  }
  for (int i = 0; i < n; ++i) t.emplace_back(i, i, diag[i]);
  SparseMatrix a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

}  // namespace

TEST_CASE("log determinant and solve match dense") {
  const SparseMatrix a = random_spd(40, 3);
  const Eigen::MatrixXd dense(a);
  SparseCholesky chol(a);
  CHECK(chol.log_determinant() == doctest::Approx(dense.llt().matrixLLT().diagonal().array().log().sum() * 2.0).epsilon(1e-12));
  const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(40, -1.0, 2.0);
  CHECK((chol.solve(b) - dense.llt().solve(b)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("selected inverse matches dense inverse on the pattern") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SparseMatrix a = random_spd(30, seed);
    const Eigen::MatrixXd inv = Eigen::MatrixXd(a).inverse();
    SparseCholesky chol(a);
    const SelectedInverse s = chol.selected_inverse();
    CHECK((s.diagonal() - inv.diagonal()).cwiseAbs().maxCoeff() < 1e-10);
    for (int j = 0; j < a.outerSize(); ++j)
      for (SparseMatrix::InnerIterator it(a, j); it; ++it) {
        CHECK(s(it.row(), it.col()) == doctest::Approx(inv(it.row(), it.col())).epsilon(1e-9));
      }
  }
}

TEST_CASE("quadratic form on a pattern row") {
  const SparseMatrix a = random_spd(20, 9);
  const Eigen::MatrixXd inv = Eigen::MatrixXd(a).inverse();
  SparseCholesky chol(a);
  const auto s = chol.selected_inverse();
  // entries of one column of a are pairwise in the filled pattern
  std::vector<std::pair<Eigen::Index, double>> row;
  Eigen::VectorXd dense_row = Eigen::VectorXd::Zero(20);
  for (SparseMatrix::InnerIterator it(a, 4); it; ++it) {
    row.emplace_back(it.row(), 0.3 + it.row());
    dense_row[it.row()] = 0.3 + it.row();
  }
  bool all_in_pattern = true;
  for (auto [i, _] : row)
    for (auto [j, __] : row) {
      try {
        s(i, j);
      } catch (const std::out_of_range&) {
        all_in_pattern = false;
      }
    }
  if (all_in_pattern) CHECK(s.quadratic_form(row) == doctest::Approx(dense_row.dot(inv * dense_row)));
}

TEST_CASE("sampling transform has the inverse covariance") {
  const SparseMatrix a = random_spd(6, 4);
  SparseCholesky chol(a);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(6, 6);
  for (int k = 0; k < 6; ++k) {
    const Eigen::VectorXd col = chol.sample_from_standard(Eigen::VectorXd::Unit(6, k));
    cov += col * col.transpose();
  }
  CHECK((cov - Eigen::MatrixXd(a).inverse()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("non positive definite input is rejected") {
  SparseMatrix a(2, 2);
  a.insert(0, 0) = 1.0;
  a.insert(1, 1) = -1.0;
  CHECK_THROWS_AS(SparseCholesky{a}, NumericalError);
}
