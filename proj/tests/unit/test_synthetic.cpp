#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "lgcp/error.hpp"
#include "lgcp/gmrf.hpp"
#include "lgcp/inference.hpp"
#include "lgcp/synthetic.hpp"
#include "support.hpp"

using namespace lgcp;

namespace {

TruthConfig small_truth(std::uint64_t seed) {
  TruthConfig t;
  t.grid.nx = 6;
  t.grid.ny = 5;
  t.grid.su_x = 3;
  t.grid.su_y = 2;
  t.model_config.aspect_effect = false;
  t.hyperparameters = Eigen::VectorXd::Constant(1, 2.0);
  t.fixed_effects = Eigen::Vector3d(0.5, 0.4, -0.3);
  t.seed = seed;
  return t;
}

LatentModel scalar_model(double prior_precision) {
  LatentModelBuilder b(1);
  const int c = b.add_fixed("b", {"x"}, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, prior_precision));
  b.add_weight(0, c, 0, 1.0);
  return std::move(b).build(ModelId::intercept_only);
}

/// Batch-means standard error of a chain column.
double batch_se(const Eigen::VectorXd& chain, int batches = 25) {
  const Eigen::Index len = chain.size() / batches;
  Eigen::VectorXd means(batches);
  for (int b = 0; b < batches; ++b) means[b] = chain.segment(b * len, len).mean();
  const double m = means.mean();
  return std::sqrt((means.array() - m).square().sum() / (batches - 1) / batches);
}

}  // namespace

TEST_CASE("grid layout") {
  GridSpec g;
  g.nx = 5;
  g.ny = 4;
  g.su_x = 2;
  g.su_y = 2;
  const auto raw = synthetic_covariates(g, 1);
  CHECK(raw.rows() == 20);
  CHECK(raw.su_id.front() == 1);
  CHECK(raw.su_id.back() == 4);
  const auto graph = grid_adjacency(g);
  CHECK(graph.n_su() == 4);
  CHECK(graph.edges().size() == 4);
  g.su_x = 1;
  g.su_y = 1;
  CHECK_THROWS_AS(grid_adjacency(g), InputError);
}

TEST_CASE("simulation is deterministic and respects constraints") {
  auto t = small_truth(3);
  t.model_config.aspect_effect = true;
  t.hyperparameters = Eigen::Vector2d(2.0, 4.0);
  const auto a = simulate_counts(t);
  const auto b = simulate_counts(t);
  CHECK(a.raw.count == b.raw.count);
  CHECK(a.latent == b.latent);
  const auto m = assemble(ModelId::M0, a.domain, t.model_config);
  for (const auto& c : m.components())
    if (c.sum_to_zero) CHECK(std::abs(a.latent.segment(c.offset, c.size).sum()) < 1e-10);
  CHECK((SparseMatrix(m.incidence(m.default_theta())) * a.latent - a.predictor).cwiseAbs().maxCoeff() < 1e-12);
  t.seed = 4;
  CHECK(simulate_counts(t).raw.count != a.raw.count);

  t.hyperparameters = Eigen::Vector3d(1.0, 1.0, 1.0);
  CHECK_THROWS_AS(simulate_counts(t), InputError);
}

TEST_CASE("infinite precisions leave the fixed-effect surface") {
  auto t = small_truth(5);
  t.hyperparameters[0] = INFINITY;
  const auto s = simulate_counts(t);
  for (int i = 0; i < s.domain.n_grid(); ++i) {
    const auto& p = s.domain.pixels()[static_cast<std::size_t>(i)];
    const double surface = 0.5 + 0.4 * p.continuous[0] - 0.3 * p.slope_value;
    CHECK(s.predictor[i] == doctest::Approx(surface).epsilon(1e-14));
  }
}

TEST_CASE("deterministic intensity gives Poisson means") {
  TruthConfig t;
  t.model_id = ModelId::intercept_only;
  t.grid.nx = 400;
  t.grid.ny = 250;
  t.grid.su_x = 2;
  t.grid.su_y = 1;
  t.hyperparameters.resize(0);
  t.fixed_effects = Eigen::VectorXd::Constant(1, 0.7);
  const auto s = simulate_counts(t);
  const auto counts = s.domain.counts();
  double mean = 0.0;
  for (int c : counts) mean += c;
  mean /= static_cast<double>(counts.size());
  CHECK(std::abs(mean - std::exp(0.7)) < 3.0 * std::sqrt(std::exp(0.7) / static_cast<double>(counts.size())));
}

TEST_CASE("latent truth explains the data better than zero") {
  int wins = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const auto s = simulate_counts(small_truth(100 + static_cast<std::uint64_t>(rep)));
    Eigen::VectorXd y(s.domain.n_grid());
    for (int i = 0; i < y.size(); ++i) y[i] = s.domain.pixels()[static_cast<std::size_t>(i)].count;
    if (poisson_loglik(s.predictor, y, 1.0) > poisson_loglik(Eigen::VectorXd::Zero(y.size()), y, 1.0)) ++wins;
  }
  CHECK(wins >= 19);
}

TEST_CASE("dense oracle on a scalar Poisson model") {
  const auto m = scalar_model(1.0);
  const auto obs = Observations::poisson({1}, 1.0);
  const auto r = dense_posterior_oracle(m, obs);
  REQUIRE(r.modes.size() == 1);
  CHECK(std::abs(r.modes[0][0]) < 1e-10);
  // exact moments of exp(x - e^x - x^2/2), mpmath quadrature
  CHECK(std::abs(r.latent_mean[0] + 0.1192913996039084) < 1e-7);
  CHECK(std::abs(r.latent_sd[0] - 0.7066355561273678) < 1e-7);
  const auto g = gaussian_approximation(m, Eigen::VectorXd(0), obs);
  CHECK(std::abs(g.mode[0]) < 1e-12);
  const auto fit = explore_hyperparameters(m, obs);
  CHECK(std::abs(fit.latent_sd[0] / r.latent_sd[0] - 1.0) < 0.05);
}

TEST_CASE("dense oracle matches the conjugate Gaussian posterior") {
  const auto m = testing::mixed_model();  // too large: check the cap
  CHECK_THROWS_AS(dense_posterior_oracle(m, Observations::gaussian(Eigen::VectorXd::Zero(12), 1.0)), InputError);

  LatentModelBuilder b(6);
  Eigen::VectorXd means(2), prec(2);
  means << 0.3, -0.2;
  prec << 2.0, 0.5;
  const int f = b.add_fixed("fixed", {"a", "b"}, means, prec);
  const int s = b.add_structured("cat", ComponentKind::iid, iid_structure(2, true), PCPrior{1.0, 0.01}, false);
  Eigen::VectorXd y(6);
  y << 0.4, -0.1, 0.9, 1.3, -0.5, 0.2;
  for (int i = 0; i < 6; ++i) {
    b.add_weight(i, f, 0, 1.0);
    b.add_weight(i, f, 1, 0.3 * i - 0.6);
    b.add_weight(i, s, i % 2, 1.0);
  }
  const auto model = std::move(b).build(ModelId::intercept_only);
  REQUIRE(model.total_dim() == 4);
  CHECK_THROWS_AS(dense_posterior_oracle(model, Observations::gaussian(y, 2.0)), InputError);
}

TEST_CASE("dense oracle: exact Gaussian case and quadrature refinement") {
  LatentModelBuilder b(6);
  const int f = b.add_fixed("fixed", {"a"}, Eigen::VectorXd::Constant(1, 0.3), Eigen::VectorXd::Constant(1, 2.0));
  const int s = b.add_structured("cat", ComponentKind::iid, iid_structure(2, true), PCPrior{1.0, 0.01}, false);
  Eigen::VectorXd y(6);
  y << 0.4, -0.1, 0.9, 1.3, -0.5, 0.2;
  for (int i = 0; i < 6; ++i) {
    b.add_weight(i, f, 0, 1.0);
    b.add_weight(i, s, i % 2, 1.0);
  }
  const auto model = std::move(b).build(ModelId::intercept_only);
  const auto obs = Observations::gaussian(y, 2.0);
  const auto oracle = dense_posterior_oracle(model, obs);

  // per grid value the Gaussian case is closed form: mix the exact moments
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(3), second = Eigen::VectorXd::Zero(3);
  for (Eigen::Index h = 0; h < oracle.hyper_internal.size(); ++h) {
    const Eigen::VectorXd theta = from_internal(model, Eigen::VectorXd::Constant(1, oracle.hyper_internal[h]));
    auto g = gaussian_approximation(model, theta, obs);
    compute_marginal_sd(model, g, obs);
    mean += oracle.hyper_weights[h] * g.mode;
    second += oracle.hyper_weights[h] * (g.latent_sd.array().square() + g.mode.array().square()).matrix();
    CHECK((oracle.modes[static_cast<std::size_t>(h)] - g.mode).cwiseAbs().maxCoeff() < 1e-8);
  }
  CHECK((oracle.latent_mean - mean).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((oracle.latent_sd - (second - mean.cwiseProduct(mean)).cwiseSqrt()).cwiseAbs().maxCoeff() < 1e-8);

  // hyperparameter weights against exact Gaussian marginal likelihoods
  Eigen::VectorXd lw(oracle.hyper_internal.size());
  for (Eigen::Index h = 0; h < lw.size(); ++h) {
    const Eigen::VectorXd phi = Eigen::VectorXd::Constant(1, oracle.hyper_internal[h]);
    lw[h] = log_posterior_theta(model, from_internal(model, phi), obs) + internal_log_jacobian(model, phi);
  }
  lw[0] += std::log(0.5);
  lw[lw.size() - 1] += std::log(0.5);
  Eigen::VectorXd w = (lw.array() - lw.maxCoeff()).exp();
  w /= w.sum();
  CHECK((w - oracle.hyper_weights).cwiseAbs().maxCoeff() < 1e-9);

  // Poisson data: halving the quadrature step barely moves the means
  const auto pobs = Observations::poisson({0, 2, 1, 3, 0, 1}, 1.0);
  DenseOracleOptions coarse;
  DenseOracleOptions fine = coarse;
  fine.nodes = 2 * coarse.nodes - 1;
  fine.hyper_nodes = 2 * coarse.hyper_nodes - 1;
  const auto rc = dense_posterior_oracle(model, pobs, coarse);
  const auto rf = dense_posterior_oracle(model, pobs, fine);
  CHECK((rc.latent_mean - rf.latent_mean).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("MCMC oracle on a conjugate target") {
  LatentModelBuilder b(5);
  Eigen::VectorXd means(2), prec(2);
  means << 0.2, -0.4;
  prec << 1.0, 3.0;
  const int f = b.add_fixed("fixed", {"a", "b"}, means, prec);
  Eigen::VectorXd y(5);
  y << 0.5, 0.1, -0.3, 0.8, 0.0;
  for (int i = 0; i < 5; ++i) {
    b.add_weight(i, f, 0, 1.0);
    b.add_weight(i, f, 1, 0.5 * i - 1.0);
  }
  const auto m = std::move(b).build(ModelId::intercept_only);
  const auto obs = Observations::gaussian(y, 4.0);
  const auto exact = gaussian_approximation(m, Eigen::VectorXd(0), obs);

  McmcOptions o;
  o.iterations = 60000;
  o.burn_in = 10000;
  o.thin = 5;
  o.seed = 9;
  const auto r = mcmc_oracle(m, obs, o);
  CHECK(r.acceptance > 0.1);
  CHECK(r.acceptance < 0.5);
  for (int j = 0; j < 2; ++j) CHECK(std::abs(r.latent_mean[j] - exact.mode[j]) < 3.0 * batch_se(r.latent_samples.col(j)));

  const auto again = mcmc_oracle(m, obs, o);
  CHECK(again.latent_samples == r.latent_samples);
  o.seed = 10;
  CHECK(mcmc_oracle(m, obs, o).latent_samples != r.latent_samples);

  o.burn_in = 500;
  CHECK_THROWS_AS(mcmc_oracle(m, obs, o), InputError);
}

TEST_CASE("MCMC oracle agrees with the dense oracle") {
  LatentModelBuilder b(8);
  const int f = b.add_fixed("fixed", {"intercept"}, Eigen::VectorXd::Constant(1, -2.0), Eigen::VectorXd::Ones(1));
  const int s = b.add_structured("car", ComponentKind::car, besag_structure(SlopeUnitGraph(2, {{0, 1}})),
                                 PCPrior{1.0, 0.01}, true);
  for (int i = 0; i < 8; ++i) {
    b.add_weight(i, f, 0, 1.0);
    b.add_weight(i, s, i % 2, 1.0);
  }
  const auto m = std::move(b).build(ModelId::intercept_only);
  const auto obs = Observations::poisson({0, 2, 1, 3, 0, 4, 2, 1}, 1.0);
  const auto dense = dense_posterior_oracle(m, obs);
  McmcOptions o;
  o.iterations = 300000;
  o.burn_in = 50000;
  o.seed = 21;
  const auto r = mcmc_oracle(m, obs, o);
  for (int j = 0; j < 3; ++j) {
    const double se = batch_se(r.latent_samples.col(j));
    CHECK(std::abs(r.latent_mean[j] - dense.latent_mean[j]) < 4.0 * se);
    CHECK(std::abs(r.latent_sd[j] / dense.latent_sd[j] - 1.0) < 0.05);
  }
  // every projected draw keeps the constraint
  CHECK((r.latent_samples.col(1) + r.latent_samples.col(2)).cwiseAbs().maxCoeff() < 1e-12);
}
