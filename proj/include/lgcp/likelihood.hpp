#pragma once

#include <vector>

#include <Eigen/Core>

namespace lgcp {

/// Observation model. `gaussian` is the conjugate surrogate used by tests
/// (y_i ~ N(eta_i, 1/noise_precision)), for which the Laplace step is exact.
enum class Family { poisson, gaussian };

struct Observations {
  Family family = Family::poisson;
  Eigen::VectorXd y;
  Eigen::VectorXd weight;  ///< 1 observed, 0 held out
  double pixel_area = 1.0;
  double noise_precision = 1.0;

  static Observations poisson(const std::vector<int>& counts, double pixel_area);
  static Observations gaussian(Eigen::VectorXd y, double noise_precision);

  int size() const { return static_cast<int>(y.size()); }
  /// Copy with the given pixels held out (weight 0).
  Observations masked(const std::vector<int>& held_out) const;
};

/// Sum_i [y_i (x_i + ln C) - C e^{x_i} - ln y_i!]. Throws InputError on a
/// length mismatch or non-finite x_i.
double poisson_loglik(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double pixel_area);

/// Weighted log-likelihood with its gradient and negative second derivative
/// in the linear predictor.
struct LikelihoodTerms {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::VectorXd curvature;
};

LikelihoodTerms likelihood_terms(const Observations& obs, const Eigen::VectorXd& eta);
/// Value only; -inf when the predictor overflows.
double log_likelihood(const Observations& obs, const Eigen::VectorXd& eta);
/// Per-pixel log-likelihood ignoring weights.
double pointwise_log_likelihood(const Observations& obs, int i, double eta);

}  // namespace lgcp
