#include "lgcp/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "lgcp/error.hpp"
#include "lgcp/parallel.hpp"
#include "lgcp/rng.hpp"

namespace lgcp {

void for_each_sample(const PosteriorFit& fit, int n, std::uint64_t seed, const SamplingOptions& options,
                     const std::function<void(const PosteriorDraw&)>& callback) {
  if (n < 1) throw InputError("number of samples must be positive");
  const LatentModel& model = *fit.model;
  std::vector<int> pixels = options.pixels;
  if (pixels.empty()) {
    pixels.resize(static_cast<std::size_t>(model.n_pixels()));
    std::iota(pixels.begin(), pixels.end(), 0);
  }
  for (int i : pixels)
    if (i < 0 || i >= model.n_pixels()) throw InputError(fmt::format("pixel index {} outside the model", i));

  std::vector<double> cumulative(fit.theta_points.size());
  std::partial_sum(fit.weights.data(), fit.weights.data() + fit.weights.size(), cumulative.begin());
  // incidence rows of the requested pixels per grid point (they differ only for M5)
  std::vector<RowSparseMatrix> incidence;
  if (model.incidence_depends_on_theta()) {
    for (const auto& g : fit.theta_points) incidence.push_back(model.incidence(g.theta));
  } else {
    incidence.push_back(model.incidence(fit.theta_points.front().theta));
  }
  const double c = fit.pixel_area;

  const int batch = std::max(1, options.batch_size);
  std::vector<PosteriorDraw> buffer(static_cast<std::size_t>(batch));
  for (int first = 0; first < n; first += batch) {
    const int count = std::min(batch, n - first);
    parallel_for(static_cast<std::size_t>(count), options.threads, [&](std::size_t b) {
      PosteriorDraw& d = buffer[b];
      d.sample_id = first + static_cast<int>(b);
      CounterRng rng(seed, static_cast<std::uint64_t>(d.sample_id));
      const double u = rng.uniform() * cumulative.back();
      const auto k = static_cast<int>(std::min<std::ptrdiff_t>(
          std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin(),
          static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
      d.theta_index = k;
      const GaussianApprox& g = fit.theta_points[static_cast<std::size_t>(k)];
      std::normal_distribution<double> normal;
      Eigen::VectorXd w(model.reduced_dim());
      for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = normal(rng);
      const Eigen::VectorXd z = g.reduced_mode + g.factor->sample_from_standard(w);
      d.latent = model.reduction() * z;
      const RowSparseMatrix& a = incidence[incidence.size() == 1 ? 0 : static_cast<std::size_t>(k)];
      d.predictor.resize(static_cast<Eigen::Index>(pixels.size()));
      d.counts.resize(static_cast<Eigen::Index>(pixels.size()));
      for (std::size_t p = 0; p < pixels.size(); ++p) {
        double eta = 0.0;
        for (RowSparseMatrix::InnerIterator it(a, pixels[p]); it; ++it) eta += it.value() * d.latent[it.col()];
        d.predictor[static_cast<Eigen::Index>(p)] = eta;
        const double mean = c * std::exp(eta);
        if (!std::isfinite(mean) || mean > 1e15)
          throw NumericalError(fmt::format("sampled intensity overflows at pixel {}", pixels[p]));
        std::poisson_distribution<long long> poisson(mean);
        d.counts[static_cast<Eigen::Index>(p)] = mean > 0.0 ? static_cast<int>(poisson(rng)) : 0;
      }
    });
    for (int b = 0; b < count; ++b) callback(buffer[static_cast<std::size_t>(b)]);
  }
}

PosteriorSampleSet sample_posterior(const PosteriorFit& fit, int n, std::uint64_t seed,
                                    const SamplingOptions& options) {
  PosteriorSampleSet set;
  set.n_samples = n;
  set.seed = seed;
  set.pixels = options.pixels;
  if (set.pixels.empty()) {
    set.pixels.resize(static_cast<std::size_t>(fit.model->n_pixels()));
    std::iota(set.pixels.begin(), set.pixels.end(), 0);
  }
  const auto m = static_cast<Eigen::Index>(set.pixels.size());
  if (options.keep_latent) set.latent_draws.resize(n, fit.model->total_dim());
  set.predictor_draws.resize(n, m);
  set.count_draws.resize(n, m);
  set.theta_index.resize(static_cast<std::size_t>(std::max(n, 0)));
  for_each_sample(fit, n, seed, options, [&](const PosteriorDraw& d) {
    if (options.keep_latent) set.latent_draws.row(d.sample_id) = d.latent.transpose();
    set.predictor_draws.row(d.sample_id) = d.predictor.transpose();
    set.count_draws.row(d.sample_id) = d.counts.transpose();
    set.theta_index[static_cast<std::size_t>(d.sample_id)] = d.theta_index;
  });
  return set;
}

SuAggregate aggregate_su(const PosteriorSampleSet& samples, const SpatialDomain& domain, double pixel_area) {
  if (static_cast<int>(samples.pixels.size()) != domain.n_grid())
    throw InputError("sample set does not cover the domain's pixels");
  SuAggregate out;
  out.intensity = Eigen::MatrixXd::Zero(samples.n_samples, domain.n_su());
  out.counts = Eigen::MatrixXd::Zero(samples.n_samples, domain.n_su());
  for (std::size_t p = 0; p < samples.pixels.size(); ++p) {
    const int su = domain.pixels()[static_cast<std::size_t>(samples.pixels[p])].su_index;
    const auto col = static_cast<Eigen::Index>(p);
    out.intensity.col(su).array() += pixel_area * samples.predictor_draws.col(col).array().exp();
    out.counts.col(su) += samples.count_draws.col(col).cast<double>();
  }
  return out;
}

}  // namespace lgcp
