#include "lgcp/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "lgcp/error.hpp"
#include "lgcp/parallel.hpp"
#include "lgcp/rng.hpp"

namespace lgcp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t tag) {
  CounterRng rng(seed, 0x5C0BE000ULL + tag);
  return rng();
}

double auc_or_nan(const std::vector<int>& labels, const std::vector<double>& scores) {
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(labels.size())) return kNaN;
  return auc(labels, scores);
}

}  // namespace

double auc(const std::vector<int>& labels, const std::vector<double>& scores) {
  if (labels.size() != scores.size()) throw InputError("labels and scores differ in length");
  const std::size_t n = labels.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }
  double n_pos = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw InputError("labels must be 0 or 1");
    if (labels[i] == 1) {
      n_pos += 1.0;
      rank_sum += rank[i];
    }
  }
  const double n_neg = static_cast<double>(n) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) throw InputError("degenerate labels");
  return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

RsaRss rsa_rss(const Eigen::VectorXd& y, const Eigen::VectorXd& lambda_hat) {
  if (y.size() != lambda_hat.size()) throw InputError("counts and predictions differ in length");
  const Eigen::ArrayXd r = (y - lambda_hat).array();
  return {r.abs().sum(), r.square().sum()};
}

double crps_from_cdf(const std::vector<double>& cdf, long long y) {
  double sum = 0.0;
  const long long end = std::max<long long>(static_cast<long long>(cdf.size()), y);
  for (long long k = 0; k < end; ++k) {
    const double f = k < static_cast<long long>(cdf.size()) ? cdf[static_cast<std::size_t>(k)] : 1.0;
    const double d = f - (k >= y ? 1.0 : 0.0);
    sum += d * d;
  }
  return sum;
}

double crps_empirical(std::vector<long long> draws, long long y) {
  if (draws.empty()) throw InputError("empty sample set");
  std::sort(draws.begin(), draws.end());
  const double n = static_cast<double>(draws.size());
  const long long last = std::max(draws.back(), y);
  double sum = 0.0;
  std::size_t below = 0;  // draws <= k
  for (long long k = 0; k <= last; ++k) {
    while (below < draws.size() && draws[below] <= k) ++below;
    const double d = static_cast<double>(below) / n - (k >= y ? 1.0 : 0.0);
    sum += d * d;
  }
  return sum;
}

double crps_counts(const Eigen::MatrixXd& draws, const Eigen::VectorXd& y) {
  if (draws.rows() == 0) throw InputError("empty sample set");
  if (draws.cols() != y.size()) throw InputError("draws and observations differ in units");
  double total = 0.0;
  std::vector<long long> column(static_cast<std::size_t>(draws.rows()));
  for (Eigen::Index j = 0; j < draws.cols(); ++j) {
    for (Eigen::Index s = 0; s < draws.rows(); ++s) column[static_cast<std::size_t>(s)] = std::llround(draws(s, j));
    total += crps_empirical(column, std::llround(y[j]));
  }
  return total;
}

InformationAccumulator::InformationAccumulator(const Observations& obs)
    : obs_(&obs),
      log_max_(Eigen::VectorXd::Constant(obs.size(), -std::numeric_limits<double>::infinity())),
      exp_sum_(Eigen::VectorXd::Zero(obs.size())),
      log_mean_(Eigen::VectorXd::Zero(obs.size())),
      log_m2_(Eigen::VectorXd::Zero(obs.size())) {}

void InformationAccumulator::add(const Eigen::VectorXd& predictor) {
  if (predictor.size() != obs_->size()) throw InputError("predictor draw does not cover the observations");
  ++n_;
  double deviance = 0.0;
  for (Eigen::Index i = 0; i < predictor.size(); ++i) {
    if (obs_->weight[i] == 0.0) continue;
    const double lp = pointwise_log_likelihood(*obs_, static_cast<int>(i), predictor[i]);
    deviance -= 2.0 * obs_->weight[i] * lp;
    if (lp > log_max_[i]) {
      exp_sum_[i] = exp_sum_[i] * std::exp(log_max_[i] - lp) + 1.0;
      log_max_[i] = lp;
    } else {
      exp_sum_[i] += std::exp(lp - log_max_[i]);
    }
    const double delta = lp - log_mean_[i];
    log_mean_[i] += delta / n_;
    log_m2_[i] += delta * (lp - log_mean_[i]);
  }
  deviance_sum_ += deviance;
}

InformationCriteria InformationAccumulator::finish(const Eigen::VectorXd& mean_predictor) const {
  if (n_ < 100) throw InputError("insufficient samples for information criteria");
  InformationCriteria ic;
  ic.mean_deviance = deviance_sum_ / n_;
  double at_mean = 0.0, lppd = 0.0, penalty = 0.0;
  for (Eigen::Index i = 0; i < obs_->size(); ++i) {
    const double w = obs_->weight[i];
    if (w == 0.0) continue;
    at_mean -= 2.0 * w * pointwise_log_likelihood(*obs_, static_cast<int>(i), mean_predictor[i]);
    lppd += w * (log_max_[i] + std::log(exp_sum_[i] / n_));
    penalty += w * log_m2_[i] / (n_ - 1);
  }
  ic.deviance_at_mean = at_mean;
  ic.p_d = ic.mean_deviance - at_mean;
  ic.dic = ic.mean_deviance + ic.p_d;
  ic.p_waic = penalty;
  ic.waic = -2.0 * (lppd - penalty);
  return ic;
}

InformationCriteria dic_waic(const PosteriorFit& fit, const PosteriorSampleSet& samples, const Observations& obs) {
  if (static_cast<int>(samples.pixels.size()) != obs.size())
    throw InputError("sample set does not cover the observations");
  InformationAccumulator acc(obs);
  Eigen::VectorXd eta(obs.size());
  for (int s = 0; s < samples.n_samples; ++s) {
    for (std::size_t p = 0; p < samples.pixels.size(); ++p)
      eta[samples.pixels[p]] = samples.predictor_draws(s, static_cast<Eigen::Index>(p));
    acc.add(eta);
  }
  return acc.finish(fit.predictor_mean);
}

InformationCriteria information_criteria(const PosteriorFit& fit, const Observations& obs, int n, std::uint64_t seed,
                                         int threads) {
  InformationAccumulator acc(obs);
  SamplingOptions options;
  options.threads = threads;
  options.keep_latent = false;
  for_each_sample(fit, n, seed, options, [&](const PosteriorDraw& d) { acc.add(d.predictor); });
  return acc.finish(fit.predictor_mean);
}

std::vector<int> FoldPlan::units(int fold) const {
  std::vector<int> out;
  for (std::size_t su = 0; su < assignment.size(); ++su)
    if (assignment[su] == fold) out.push_back(static_cast<int>(su));
  return out;
}

FoldPlan make_fold_plan(int n_su, int n_folds, std::uint64_t seed) {
  if (n_folds < 2) throw InputError("at least two folds are required");
  if (n_folds > n_su) throw InputError("more folds than slope units");
  std::vector<int> order(static_cast<std::size_t>(n_su));
  std::iota(order.begin(), order.end(), 0);
  CounterRng rng(seed, 0xF01DULL);
  for (int i = n_su - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.uniform() * (i + 1));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(std::min(j, i))]);
  }
  FoldPlan plan;
  plan.n_folds = n_folds;
  plan.seed = seed;
  plan.assignment.resize(static_cast<std::size_t>(n_su));
  for (int i = 0; i < n_su; ++i) plan.assignment[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i % n_folds;
  return plan;
}

ScoreRecord average_scores(const std::vector<ScoreRecord>& folds) {
  auto mean = [&](double ScoreRecord::*field) {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : folds) {
      if (std::isnan(r.*field)) continue;
      sum += r.*field;
      ++n;
    }
    return n > 0 ? sum / n : kNaN;
  };
  ScoreRecord out;
  out.fold = "aggregate";
  out.auc_grid = mean(&ScoreRecord::auc_grid);
  out.auc_su = mean(&ScoreRecord::auc_su);
  out.rsa_grid = mean(&ScoreRecord::rsa_grid);
  out.rsa_su = mean(&ScoreRecord::rsa_su);
  out.rss_grid = mean(&ScoreRecord::rss_grid);
  out.rss_su = mean(&ScoreRecord::rss_su);
  out.crps_grid = mean(&ScoreRecord::crps_grid);
  out.crps_su = mean(&ScoreRecord::crps_su);
  return out;
}

ScoreRecord score_units(const PosteriorFit& fit, const SpatialDomain& domain, const std::vector<int>& pixels,
                        int n_samples, std::uint64_t seed) {
  if (pixels.empty()) throw InputError("no pixels to score");
  const double c = fit.pixel_area;
  const auto m = static_cast<Eigen::Index>(pixels.size());
  Eigen::VectorXd y(m), lambda(m);
  for (Eigen::Index p = 0; p < m; ++p) {
    const int i = pixels[static_cast<std::size_t>(p)];
    y[p] = domain.pixels()[static_cast<std::size_t>(i)].count;
    double sum = 0.0;
    for (std::size_t k = 0; k < fit.theta_points.size(); ++k) {
      const auto& g = fit.theta_points[k];
      sum += fit.weights[static_cast<Eigen::Index>(k)] * std::exp(g.predictor[i] + 0.5 * g.predictor_sd[i] * g.predictor_sd[i]);
    }
    lambda[p] = c * sum;
  }

  // slope units covered by the pixels, in index order
  std::vector<int> su_of(static_cast<std::size_t>(m));
  std::vector<int> su_slot(static_cast<std::size_t>(domain.n_su()), -1);
  std::vector<int> units;
  for (Eigen::Index p = 0; p < m; ++p) su_of[static_cast<std::size_t>(p)] = domain.pixels()[static_cast<std::size_t>(pixels[static_cast<std::size_t>(p)])].su_index;
  std::vector<int> sorted = su_of;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (std::size_t u = 0; u < sorted.size(); ++u) su_slot[static_cast<std::size_t>(sorted[u])] = static_cast<int>(u);
  const auto n_units = static_cast<Eigen::Index>(sorted.size());

  Eigen::VectorXd y_su = Eigen::VectorXd::Zero(n_units), lambda_su = Eigen::VectorXd::Zero(n_units);
  for (Eigen::Index p = 0; p < m; ++p) {
    const int u = su_slot[static_cast<std::size_t>(su_of[static_cast<std::size_t>(p)])];
    y_su[u] += y[p];
    lambda_su[u] += lambda[p];
  }

  SamplingOptions options;
  options.pixels = pixels;
  options.keep_latent = false;
  const auto samples = sample_posterior(fit, n_samples, seed, options);
  const Eigen::MatrixXd draws = samples.count_draws.cast<double>();
  Eigen::MatrixXd draws_su = Eigen::MatrixXd::Zero(n_samples, n_units);
  for (Eigen::Index p = 0; p < m; ++p) draws_su.col(su_slot[static_cast<std::size_t>(su_of[static_cast<std::size_t>(p)])]) += draws.col(p);

  auto presence = [](const Eigen::VectorXd& counts, const Eigen::VectorXd& means, std::vector<int>& labels,
                     std::vector<double>& scores) {
    for (Eigen::Index i = 0; i < counts.size(); ++i) {
      labels.push_back(counts[i] >= 1.0 ? 1 : 0);
      scores.push_back(-std::expm1(-means[i]));
    }
  };
  ScoreRecord r;
  std::vector<int> labels;
  std::vector<double> scores;
  presence(y, lambda, labels, scores);
  r.auc_grid = auc_or_nan(labels, scores);
  labels.clear();
  scores.clear();
  presence(y_su, lambda_su, labels, scores);
  r.auc_su = auc_or_nan(labels, scores);
  const auto grid = rsa_rss(y, lambda);
  const auto su = rsa_rss(y_su, lambda_su);
  r.rsa_grid = grid.rsa;
  r.rss_grid = grid.rss;
  r.rsa_su = su.rsa;
  r.rss_su = su.rss;
  r.crps_grid = crps_counts(draws, y);
  r.crps_su = crps_counts(draws_su, y_su);
  return r;
}

ScoreReport cross_validate(ModelId id, const SpatialDomain& domain, const ModelConfig& config,
                           const CrossValidationOptions& options) {
  const FoldPlan plan = make_fold_plan(domain.n_su(), options.n_folds, options.seed);
  const auto model = std::make_shared<const LatentModel>(assemble(id, domain, config));
  const auto obs = Observations::poisson(domain.counts(), domain.pixel_area());

  std::vector<std::vector<int>> held_out(static_cast<std::size_t>(options.n_folds));
  for (int f = 0; f < options.n_folds; ++f) {
    for (int su : plan.units(f))
      for (int i : domain.su_members()[static_cast<std::size_t>(su)]) held_out[static_cast<std::size_t>(f)].push_back(i);
    auto& pix = held_out[static_cast<std::size_t>(f)];
    if (pix.empty()) throw InputError(fmt::format("fold {} has no pixels", f + 1));
    std::sort(pix.begin(), pix.end());
  }

  InferenceOptions inner = options.inference;
  inner.threads = 1;
  ScoreReport report;
  report.per_fold.resize(static_cast<std::size_t>(options.n_folds));
  parallel_for(static_cast<std::size_t>(options.n_folds), options.threads, [&](std::size_t f) {
    const auto masked = obs.masked(held_out[f]);
    const PosteriorFit fit = explore_hyperparameters(*model, masked, inner);
    ScoreRecord r = score_units(fit, domain, held_out[f], options.n_samples, derived_seed(options.seed, f));
    r.fold = std::to_string(f + 1);
    report.per_fold[f] = r;
  });
  report.aggregate = average_scores(report.per_fold);

  if (options.information) {
    const PosteriorFit fit = explore_hyperparameters(*model, obs, options.inference);
    report.information =
        information_criteria(fit, obs, options.n_samples, derived_seed(options.seed, 1u << 20), options.threads);
    report.has_information = true;
  }
  return report;
}

}  // namespace lgcp
