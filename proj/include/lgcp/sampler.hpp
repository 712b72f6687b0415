#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "lgcp/domain.hpp"
#include "lgcp/inference.hpp"

namespace lgcp {

/// One joint posterior draw. `predictor` and `counts` cover the requested
/// pixel subset in its order.
struct PosteriorDraw {
  int sample_id = 0;
  int theta_index = 0;
  Eigen::VectorXd latent;
  Eigen::VectorXd predictor;
  Eigen::VectorXi counts;
};

struct SamplingOptions {
  std::vector<int> pixels;  ///< empty: all pixels
  bool keep_latent = true;
  int threads = 1;
  int batch_size = 256;
};

struct PosteriorSampleSet {
  int n_samples = 0;
  std::uint64_t seed = 0;
  std::vector<int> pixels;
  std::vector<int> theta_index;
  Eigen::MatrixXd latent_draws;     ///< sample x latent (empty unless kept)
  Eigen::MatrixXd predictor_draws;  ///< sample x pixel
  Eigen::MatrixXi count_draws;      ///< sample x pixel
};

/// Three-stage sampling: theta index from the grid weights, latent field from
/// the Gaussian approximation at that point (constraints hold exactly through
/// the reduced basis), Poisson counts. Draw s uses CounterRng(seed, s), so
/// results do not depend on batching or thread count. The callback is called
/// in sample order.
void for_each_sample(const PosteriorFit& fit, int n, std::uint64_t seed, const SamplingOptions& options,
                     const std::function<void(const PosteriorDraw&)>& callback);

PosteriorSampleSet sample_posterior(const PosteriorFit& fit, int n, std::uint64_t seed,
                                    const SamplingOptions& options = {});

/// Per-sample slope-unit sums of pixel intensities C e^eta and counts.
struct SuAggregate {
  Eigen::MatrixXd intensity;  ///< sample x SU
  Eigen::MatrixXd counts;     ///< sample x SU
};

/// The sample set must cover every pixel of the domain.
SuAggregate aggregate_su(const PosteriorSampleSet& samples, const SpatialDomain& domain, double pixel_area);

}  // namespace lgcp
