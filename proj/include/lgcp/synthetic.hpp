#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "lgcp/domain.hpp"
#include "lgcp/likelihood.hpp"
#include "lgcp/model.hpp"

namespace lgcp {

/// Rectangular pixel grid cut into a rectangular array of slope units with
/// rook adjacency between blocks.
struct GridSpec {
  int nx = 10;
  int ny = 10;
  int su_x = 2;  ///< slope-unit blocks along x
  int su_y = 2;
  int n_continuous = 1;
  std::vector<int> categorical_levels;
  double pixel_area = 1.0;
};

/// Generating configuration. `hyperparameters` follows the model's inventory
/// order; a precision of +inf switches its block off. `fixed_effects` follows
/// the labels of the "fixed" block (intercept, covariates, linear slope).
struct TruthConfig {
  ModelId model_id = ModelId::M0;
  ModelConfig model_config;
  GridSpec grid;
  Eigen::VectorXd hyperparameters;
  Eigen::VectorXd fixed_effects;
  std::uint64_t seed = 1;
};

struct SimulatedData {
  RawPixelTable raw;
  SlopeUnitGraph graph;
  SpatialDomain domain;
  Eigen::VectorXd latent;     ///< true latent vector in model order
  Eigen::VectorXd predictor;  ///< true log-intensities
  std::vector<std::string> latent_labels;
};

/// Covariates, slope-unit layout and adjacency of a grid (counts all zero).
RawPixelTable synthetic_covariates(const GridSpec& grid, std::uint64_t seed);
SlopeUnitGraph grid_adjacency(const GridSpec& grid);

/// Draws each structured block from its prior at the true precision (with a
/// sum-to-zero constraint, also for intrinsic blocks that are otherwise
/// unconstrained), forms the log-intensities and draws Poisson counts.
SimulatedData simulate_counts(const TruthConfig& truth);

inline constexpr int kDenseOracleMaxLatent = 3;
inline constexpr int kDenseOracleMaxHyper = 1;
inline constexpr int kMcmcOracleMaxLatent = 200;

struct DenseOracleOptions {
  int nodes = 25;             ///< quadrature nodes per latent axis
  double half_width = 8.0;    ///< in conditional standard deviations
  double hyper_lower = -6.0;  ///< internal-scale hyperparameter range; the
  double hyper_upper = 22.0;  ///< PC tail in log tau decays only like e^{-phi/2}
  int hyper_nodes = 281;
};

struct DenseOracleResult {
  Eigen::VectorXd latent_mean;
  Eigen::VectorXd latent_sd;
  Eigen::VectorXd hyper_internal;  ///< grid values
  Eigen::VectorXd hyper_weights;   ///< normalized, internal scale
  std::vector<Eigen::VectorXd> modes;  ///< conditional mode of x per grid value
};

/// Brute-force posterior by tensor-product quadrature of the exact joint
/// density (no Laplace step). Throws InputError when the model exceeds the
/// dimension caps or has improper prior directions.
DenseOracleResult dense_posterior_oracle(const LatentModel& model, const Observations& obs,
                                         const DenseOracleOptions& options = {});

struct McmcOptions {
  int iterations = 200000;
  int burn_in = 50000;  ///< adaptation happens only here
  int thin = 20;
  std::uint64_t seed = 1;
};

struct McmcResult {
  Eigen::MatrixXd latent_samples;  ///< thinned post-burn-in draws
  Eigen::MatrixXd hyper_samples;   ///< internal scale
  Eigen::VectorXd latent_mean;     ///< over all post-burn-in draws
  Eigen::VectorXd latent_sd;
  Eigen::VectorXd hyper_mean;
  double acceptance = 0.0;  ///< post-burn-in
};

/// Adaptive random-walk Metropolis on (x, internal theta). The proposal
/// covariance follows the chain during burn-in and its scale is tuned
/// towards acceptance 0.25; latent proposals are projected onto the
/// constraints. Throws NumericalError if post-burn-in acceptance is outside
/// [0.05, 0.8].
McmcResult mcmc_oracle(const LatentModel& model, const Observations& obs, const McmcOptions& options = {});

}  // namespace lgcp
