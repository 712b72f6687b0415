#include <doctest.h>

#include <cmath>
#include <random>

#include <boost/math/distributions/poisson.hpp>

#include "lgcp/error.hpp"
#include "lgcp/scoring.hpp"
#include "support.hpp"

using namespace lgcp;

namespace {

std::vector<double> poisson_cdf(double mean, int upto) {
  const boost::math::poisson_distribution<double> dist(mean);
  std::vector<double> cdf;
  for (int k = 0; k <= upto; ++k) cdf.push_back(boost::math::cdf(dist, k));
  return cdf;
}

}  // namespace

TEST_CASE("AUC examples") {
  CHECK(auc({0, 0, 1, 1}, {0.1, 0.2, 0.8, 0.9}) == 1.0);
  CHECK(auc({1, 1, 0, 0}, {0.1, 0.2, 0.8, 0.9}) == 0.0);
  CHECK(auc({0, 1}, {0.3, 0.3}) == 0.5);
  CHECK(auc({0, 1, 0, 1, 1}, {0.2, 0.2, 0.5, 0.9, 0.1}) == doctest::Approx(2.5 / 6.0));
  CHECK_THROWS_WITH_AS(auc({1, 1}, {0.1, 0.2}), "degenerate labels", InputError);
  CHECK_THROWS_WITH_AS(auc({0}, {0.1}), "degenerate labels", InputError);

  // invariance under increasing transformations
  CounterRng rng(3);
  std::vector<int> labels;
  std::vector<double> scores, transformed;
  for (int i = 0; i < 200; ++i) {
    labels.push_back(rng.uniform() < 0.3 ? 1 : 0);
    const double s = std::floor(10.0 * rng.uniform()) / 10.0 + 0.05 * labels.back();
    scores.push_back(s);
    transformed.push_back(std::exp(3.0 * s) - 7.0);
  }
  CHECK(auc(labels, scores) == auc(labels, transformed));
}

TEST_CASE("RSA and RSS") {
  Eigen::VectorXd y(2), l(2);
  y << 0, 1;
  l << 0.5, 0.5;
  const auto r = rsa_rss(y, l);
  CHECK(r.rsa == 1.0);
  CHECK(r.rss == 0.5);
  const auto zero = rsa_rss(y, y);
  CHECK(zero.rsa == 0.0);
  CHECK(zero.rss == 0.0);
  Eigen::VectorXd y3(3), l3(3);
  y3 << 4, 0, 2;
  l3 << 1.5, 0.25, 3.0;
  const auto a = rsa_rss(y3, l3);
  const auto b = rsa_rss(y3, y3 + 2.0 * (l3 - y3));
  CHECK(b.rsa == doctest::Approx(2.0 * a.rsa).epsilon(1e-15));
  CHECK(b.rss == doctest::Approx(4.0 * a.rss).epsilon(1e-15));
  CHECK_THROWS_AS(rsa_rss(y, l3), InputError);
}

TEST_CASE("count CRPS") {
  // truncated sum to k = 50 (mpmath, 30 digits)
  CHECK(std::abs(crps_from_cdf(poisson_cdf(1.0, 50), 0) - 0.4762223881973913) < 1e-12);
  CHECK(std::abs(crps_from_cdf(poisson_cdf(2.5, 79), 3) - 0.4576085204970714) < 1e-12);
  // Monte-Carlo draws from Poisson(1)
  std::mt19937_64 gen(11);
  std::poisson_distribution<long long> pois(1.0);
  std::vector<long long> draws(400000);
  for (auto& d : draws) d = pois(gen);
  CHECK(std::abs(crps_empirical(draws, 0) - 0.4762223881973913) < 3e-3);

  CHECK(crps_empirical({3, 3, 3}, 3) == 0.0);
  CHECK(crps_empirical({0}, 4) == 4.0);
  CHECK_THROWS_AS(crps_empirical({}, 1), InputError);

  // identity with E|X - y| - E|X - X'| / 2
  CounterRng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<long long> x(37);
    for (auto& v : x) v = static_cast<long long>(rng() % 12);
    const long long y = static_cast<long long>(rng() % 15);
    double e1 = 0.0, e2 = 0.0;
    for (auto a : x) {
      e1 += std::abs(static_cast<double>(a - y));
      for (auto b : x) e2 += std::abs(static_cast<double>(a - b));
    }
    const double n = static_cast<double>(x.size());
    CHECK(crps_empirical(x, y) == doctest::Approx(e1 / n - 0.5 * e2 / (n * n)).epsilon(1e-12));
  }

  // additivity over units
  Eigen::MatrixXd m(4, 2);
  m << 0, 2, 1, 3, 1, 2, 4, 0;
  Eigen::VectorXd y(2);
  y << 1, 5;
  CHECK(crps_counts(m, y) == doctest::Approx(crps_empirical({0, 1, 1, 4}, 1) + crps_empirical({2, 3, 2, 0}, 5)));
}

TEST_CASE("CRPS is proper on Poisson pairs") {
  std::mt19937_64 gen(21);
  const std::vector<std::pair<double, double>> pairs{{3.0, 4.0}, {3.0, 2.0}, {1.0, 1.5}, {6.0, 4.5}};
  for (const auto& [p, q] : pairs) {
    const auto cp = poisson_cdf(p, 80);
    const auto cq = poisson_cdf(q, 80);
    std::poisson_distribution<long long> draw(p);
    const int n = 20000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto y = draw(gen);
      const double d = crps_from_cdf(cq, y) - crps_from_cdf(cp, y);
      sum += d;
      sum2 += d * d;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    CHECK(mean > 3.0 * se);
  }
}

TEST_CASE("information criteria") {
  SUBCASE("point-mass posterior") {
    const auto obs = Observations::poisson({0, 2, 1, 1, 3}, 1.0);
    Eigen::VectorXd eta(5);
    eta << -0.4, 0.3, 0.1, 0.0, 0.9;
    InformationAccumulator acc(obs);
    for (int s = 0; s < 99; ++s) acc.add(eta);
    CHECK_THROWS_WITH_AS(acc.finish(eta), "insufficient samples for information criteria", InputError);
    acc.add(eta);
    const auto ic = acc.finish(eta);
    const double d = -2.0 * log_likelihood(obs, eta);
    CHECK(std::abs(ic.p_d) < 1e-12);
    CHECK(std::abs(ic.p_waic) < 1e-12);
    CHECK(ic.dic == doctest::Approx(d).epsilon(1e-14));
    CHECK(ic.waic == doctest::Approx(d).epsilon(1e-14));
  }

  SUBCASE("effective dimension of a conjugate regression") {
    const int k = 5, n = 40;
    LatentModelBuilder b(n);
    std::vector<std::string> labels;
    for (int j = 0; j < k; ++j) labels.push_back("b" + std::to_string(j));
    const int c = b.add_fixed("fixed", labels, Eigen::VectorXd::Zero(k), Eigen::VectorXd::Constant(k, 1e-6));
    CounterRng rng(13);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      b.add_weight(i, c, 0, 1.0);
      for (int j = 1; j < k; ++j) b.add_weight(i, c, j, 2.0 * rng.uniform() - 1.0);
      y[i] = rng.uniform() - 0.5;
    }
    const auto m = std::move(b).build(ModelId::intercept_only);
    const auto obs = Observations::gaussian(y, 2.0);
    const auto fit = explore_hyperparameters(m, obs);
    const auto ic = information_criteria(fit, obs, 50000, 77, 2);
    CHECK(std::abs(ic.p_d - k) < 0.1);
    CHECK(ic.p_waic > 0.0);
  }

  SUBCASE("streaming and stored sample sets agree") {
    const auto d = SpatialDomain(testing::small_table(24, 4, 1, {}, 5), testing::path_graph(4), 1.0);
    ModelConfig cfg;
    cfg.aspect_effect = false;
    const auto m = assemble(ModelId::M0, d, cfg);
    const auto obs = Observations::poisson(d.counts(), 1.0);
    const auto fit = explore_hyperparameters(m, obs);
    const auto s = sample_posterior(fit, 300, 6);
    const auto a = dic_waic(fit, s, obs);
    const auto b = information_criteria(fit, obs, 300, 6);
    CHECK(a.dic == doctest::Approx(b.dic).epsilon(1e-12));
    CHECK(a.waic == doctest::Approx(b.waic).epsilon(1e-12));
    // direct evaluation of the definitions
    double lppd = 0.0, pen = 0.0, dbar = 0.0;
    for (int i = 0; i < obs.size(); ++i) {
      Eigen::ArrayXd lp(300);
      for (int t = 0; t < 300; ++t) lp[t] = pointwise_log_likelihood(obs, i, s.predictor_draws(t, i));
      lppd += std::log(lp.exp().mean());
      pen += (lp - lp.mean()).square().sum() / 299.0;
      dbar -= 2.0 * lp.mean();
    }
    CHECK(a.waic == doctest::Approx(-2.0 * (lppd - pen)).epsilon(1e-10));
    CHECK(a.mean_deviance == doctest::Approx(dbar).epsilon(1e-10));
    CHECK(a.deviance_at_mean == doctest::Approx(-2.0 * log_likelihood(obs, fit.predictor_mean)).epsilon(1e-12));
  }
}

TEST_CASE("fold plans") {
  const auto two = make_fold_plan(4, 2, 1);
  CHECK(two.units(0).size() == 2);
  CHECK(two.units(1).size() == 2);
  for (int seed = 0; seed < 5; ++seed) {
    const auto plan = make_fold_plan(23, 10, static_cast<std::uint64_t>(seed));
    std::size_t lo = 100, hi = 0, total = 0;
    for (int f = 0; f < 10; ++f) {
      const auto u = plan.units(f);
      lo = std::min(lo, u.size());
      hi = std::max(hi, u.size());
      total += u.size();
    }
    CHECK(total == 23);
    CHECK(hi - lo <= 1);
    CHECK(make_fold_plan(23, 10, static_cast<std::uint64_t>(seed)).assignment == plan.assignment);
  }
  CHECK(make_fold_plan(23, 10, 1).assignment != make_fold_plan(23, 10, 2).assignment);
  CHECK_THROWS_WITH_AS(make_fold_plan(3, 4, 1), "more folds than slope units", InputError);
}

TEST_CASE("fold averaging skips undefined AUC") {
  ScoreRecord a, b;
  a.auc_grid = 0.6;
  b.auc_grid = NAN;
  a.crps_su = 2.0;
  b.crps_su = 5.0;
  const auto m = average_scores({a, b});
  CHECK(m.auc_grid == 0.6);
  CHECK(m.crps_su == 3.5);
  CHECK(m.fold == "aggregate");
}

TEST_CASE("cross-validation harness on a small domain") {
  const auto d = SpatialDomain(testing::small_table(48, 8, 1, {}, 31), testing::path_graph(8), 1.0);
  ModelConfig cfg;
  cfg.aspect_effect = false;
  CrossValidationOptions o;
  o.n_folds = 4;
  o.n_samples = 300;
  o.seed = 5;
  const auto r = cross_validate(ModelId::M0, d, cfg, o);
  REQUIRE(r.per_fold.size() == 4);
  for (const auto& f : r.per_fold) {
    CHECK(f.rsa_grid >= 0.0);
    CHECK(f.rss_su >= 0.0);
    CHECK(f.crps_grid >= 0.0);
    CHECK(f.crps_su >= 0.0);
    if (!std::isnan(f.auc_grid)) CHECK((f.auc_grid >= 0.0 && f.auc_grid <= 1.0));
    // slope-unit absolute error never exceeds the pixel one
    CHECK(f.rsa_su <= f.rsa_grid + 1e-12);
  }
  double mean = 0.0;
  for (const auto& f : r.per_fold) mean += f.crps_su / 4.0;
  CHECK(std::abs(r.aggregate.crps_su - mean) < 1e-12);

  o.threads = 3;
  const auto again = cross_validate(ModelId::M0, d, cfg, o);
  for (int f = 0; f < 4; ++f) {
    CHECK(again.per_fold[static_cast<std::size_t>(f)].crps_grid == r.per_fold[static_cast<std::size_t>(f)].crps_grid);
    CHECK(again.per_fold[static_cast<std::size_t>(f)].rss_su == r.per_fold[static_cast<std::size_t>(f)].rss_su);
  }
  o.n_folds = 9;
  CHECK_THROWS_WITH_AS(cross_validate(ModelId::M0, d, cfg, o), "more folds than slope units", InputError);
}
