#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "lgcp/domain.hpp"
#include "lgcp/inference.hpp"
#include "lgcp/likelihood.hpp"
#include "lgcp/model.hpp"
#include "lgcp/sampler.hpp"

namespace lgcp {

/// Mann-Whitney statistic with midranks. Throws InputError("degenerate labels")
/// unless both classes are present.
double auc(const std::vector<int>& labels, const std::vector<double>& scores);

struct RsaRss {
  double rsa = 0.0;
  double rss = 0.0;
};
RsaRss rsa_rss(const Eigen::VectorXd& y, const Eigen::VectorXd& lambda_hat);

/// sum_{k=0}^{K} (F(k) - 1{k >= y})^2 for a CDF tabulated at k = 0..cdf.size()-1.
/// Terms past the table use F = 1.
double crps_from_cdf(const std::vector<double>& cdf, long long y);

/// Empirical CDF version for one unit; the sum runs to the larger of the
/// largest draw and y, beyond which every term is zero.
double crps_empirical(std::vector<long long> draws, long long y);

/// Sum over units (columns of `draws`, one row per sample).
double crps_counts(const Eigen::MatrixXd& draws, const Eigen::VectorXd& y);

struct InformationCriteria {
  double dic = 0.0;
  double waic = 0.0;
  double p_d = 0.0;  ///< effective number of parameters
  double p_waic = 0.0;
  double mean_deviance = 0.0;
  double deviance_at_mean = 0.0;
};

/// Streaming DIC/WAIC over predictor draws covering every pixel.
class InformationAccumulator {
 public:
  explicit InformationAccumulator(const Observations& obs);
  void add(const Eigen::VectorXd& predictor);
  int count() const { return n_; }
  /// `mean_predictor` is the predictor at the posterior-mean latent field.
  /// Throws InputError with fewer than 100 draws.
  InformationCriteria finish(const Eigen::VectorXd& mean_predictor) const;

 private:
  const Observations* obs_;
  int n_ = 0;
  double deviance_sum_ = 0.0;
  Eigen::VectorXd log_max_;   ///< running log-sum-exp of log p(y_i | x_s)
  Eigen::VectorXd exp_sum_;
  Eigen::VectorXd log_mean_;  ///< Welford mean and sum of squares of log p
  Eigen::VectorXd log_m2_;
};

InformationCriteria dic_waic(const PosteriorFit& fit, const PosteriorSampleSet& samples, const Observations& obs);

/// Draws n samples from the fit and returns its information criteria.
InformationCriteria information_criteria(const PosteriorFit& fit, const Observations& obs, int n, std::uint64_t seed,
                                         int threads = 1);

struct FoldPlan {
  int n_folds = 10;
  std::uint64_t seed = 0;
  std::vector<int> assignment;  ///< fold of each slope unit

  std::vector<int> units(int fold) const;
};

/// Shuffles the slope units and deals them to folds in turn. Throws
/// InputError("more folds than slope units") when n_folds > n_su.
FoldPlan make_fold_plan(int n_su, int n_folds, std::uint64_t seed);

struct ScoreRecord {
  std::string fold;
  double auc_grid = 0.0;
  double auc_su = 0.0;
  double rsa_grid = 0.0;
  double rsa_su = 0.0;
  double rss_grid = 0.0;
  double rss_su = 0.0;
  double crps_grid = 0.0;
  double crps_su = 0.0;
};

struct ScoreReport {
  std::vector<ScoreRecord> per_fold;
  ScoreRecord aggregate;
  bool has_information = false;
  InformationCriteria information;
};

/// Column means over folds; AUC columns skip folds where it is undefined (NaN).
ScoreRecord average_scores(const std::vector<ScoreRecord>& folds);

/// Eight scores for the pixels in `pixels` (and the slope units they cover)
/// against a fit that did not see them. lambda_hat comes from the mixture
/// (sum_k w_k C exp(mode + sd^2 / 2)); CRPS uses the sampled counts.
ScoreRecord score_units(const PosteriorFit& fit, const SpatialDomain& domain, const std::vector<int>& pixels,
                        int n_samples, std::uint64_t seed);

struct CrossValidationOptions {
  int n_folds = 10;
  int n_samples = 5000;
  std::uint64_t seed = 1;
  int threads = 1;
  bool information = false;  ///< also fit all data for DIC/WAIC
  InferenceOptions inference;
};

ScoreReport cross_validate(ModelId id, const SpatialDomain& domain, const ModelConfig& config,
                           const CrossValidationOptions& options);

}  // namespace lgcp
