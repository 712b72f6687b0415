#pragma once

#include <memory>
#include <vector>

#include <Eigen/Core>

#include "lgcp/likelihood.hpp"
#include "lgcp/model.hpp"
#include "lgcp/sparse_cholesky.hpp"

namespace lgcp {

struct InferenceOptions {
  double newton_tolerance = 1e-8;  ///< max-norm of the gradient
  int newton_max_iterations = 50;
  int max_halvings = 30;
  double grid_step = 0.75;       ///< in standardized internal coordinates
  double drop_threshold = 5.0;   ///< log-density drop below the best point
  int max_hyperparameters = 6;
  int max_grid_points = 100000;
  double gradient_step = 1e-3;   ///< finite differences for the mode search
  double hessian_step = 0.02;    ///< finite differences for the curvature at the mode
  int threads = 1;
};

/// Gaussian approximation of pi(x | theta, y) at its mode, in the reduced
/// (constraint-free) coordinates z with x = T z.
struct GaussianApprox {
  Eigen::VectorXd theta;
  Eigen::VectorXd mode;          ///< x*
  Eigen::VectorXd reduced_mode;  ///< z*
  SparseMatrix precision_at_mode;  ///< Q_z + A_z^T D A_z
  std::shared_ptr<const SparseCholesky> factor;
  double log_likelihood = 0.0;           ///< at the mode
  double log_marginal_likelihood = 0.0;  ///< Laplace approximation of log p(y | theta)
  double log_evidence_contrib = 0.0;     ///< log p(theta) + log p(y | theta), natural scale
  double gradient_norm = 0.0;
  int iterations = 0;
  Eigen::VectorXd predictor;     ///< eta at the mode
  Eigen::VectorXd latent_sd;     ///< per latent coordinate (filled on request)
  Eigen::VectorXd predictor_sd;  ///< per pixel (filled on request)
};

/// Newton iterations on the conditional log-posterior. `start` (reduced
/// coordinates) defaults to the prior mean of the fixed effects and zeros.
/// Throws NumericalError when Newton fails.
GaussianApprox gaussian_approximation(const LatentModel& model, const Eigen::VectorXd& theta,
                                      const Observations& obs, const InferenceOptions& options = {},
                                      const Eigen::VectorXd* start = nullptr);

/// Fills latent_sd and predictor_sd by selected inversion.
void compute_marginal_sd(const LatentModel& model, GaussianApprox& approx, const Observations& obs);

/// Unnormalized log pi(theta | y) on the natural scale.
double log_posterior_theta(const LatentModel& model, const Eigen::VectorXd& theta, const Observations& obs,
                           const InferenceOptions& options = {});

/// Internal scale: log tau for precisions, identity for the interaction coefficient.
Eigen::VectorXd to_internal(const LatentModel& model, const Eigen::VectorXd& theta);
Eigen::VectorXd from_internal(const LatentModel& model, const Eigen::VectorXd& phi);
/// Log-Jacobian of from_internal at phi.
double internal_log_jacobian(const LatentModel& model, const Eigen::VectorXd& phi);

struct HyperMarginal {
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q50 = 0.0;
  double q975 = 0.0;
};

/// Hyperparameter posterior on a grid with mixed latent marginals.
struct PosteriorFit {
  std::shared_ptr<const LatentModel> model;
  double pixel_area = 1.0;
  std::vector<GaussianApprox> theta_points;
  Eigen::MatrixXd internal_points;  ///< one row per grid point
  Eigen::VectorXd log_density;      ///< unnormalized, internal scale
  Eigen::VectorXd weights;
  Eigen::VectorXd theta_mode;  ///< natural scale
  Eigen::VectorXd latent_mean;
  Eigen::VectorXd latent_sd;
  Eigen::VectorXd predictor_mean;
  Eigen::VectorXd predictor_sd;
  std::vector<HyperMarginal> hyper_marginals;

  /// Quantile of the Gaussian mixture marginal of latent coordinate j.
  double latent_quantile(int j, double p) const;
  double predictor_quantile(int i, double p) const;
};

/// Mode search, standardized grid exploration and mixing.
PosteriorFit explore_hyperparameters(const LatentModel& model, const Observations& obs,
                                     const InferenceOptions& options = {});

/// Mixing over a user-supplied grid of natural-scale theta values (rows),
/// weighted by log pi(theta | y).
PosteriorFit fit_on_grid(const LatentModel& model, const Observations& obs, const Eigen::MatrixXd& thetas,
                         const InferenceOptions& options = {});

/// x - Q^{-1} A^T (A Q^{-1} A^T)^{-1} A x; rows of `a` are the constraints.
Eigen::VectorXd condition_by_kriging(const Eigen::VectorXd& x, const SparseMatrix& q, const Eigen::MatrixXd& a);

/// Quantile of sum_k w_k N(mu_k, sd_k^2).
double mixture_quantile(const Eigen::VectorXd& weights, const Eigen::VectorXd& means, const Eigen::VectorXd& sds,
                        double p);

}  // namespace lgcp
