#include "lgcp/likelihood.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "lgcp/error.hpp"

namespace lgcp {

namespace {

constexpr double kLogTwoPi = 1.8378770664093453;

}  // namespace

Observations Observations::poisson(const std::vector<int>& counts, double pixel_area) {
  if (!(pixel_area > 0.0)) throw InputError("pixel area must be positive");
  Observations obs;
  obs.family = Family::poisson;
  obs.y.resize(static_cast<Eigen::Index>(counts.size()));
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0) throw InputError("negative count");
    obs.y[static_cast<Eigen::Index>(i)] = counts[i];
  }
  obs.weight = Eigen::VectorXd::Ones(obs.y.size());
  obs.pixel_area = pixel_area;
  return obs;
}

Observations Observations::gaussian(Eigen::VectorXd y, double noise_precision) {
  if (!(noise_precision > 0.0)) throw InputError("noise precision must be positive");
  Observations obs;
  obs.family = Family::gaussian;
  obs.weight = Eigen::VectorXd::Ones(y.size());
  obs.y = std::move(y);
  obs.noise_precision = noise_precision;
  return obs;
}

Observations Observations::masked(const std::vector<int>& held_out) const {
  Observations out = *this;
  for (int i : held_out) {
    if (i < 0 || i >= size()) throw InputError("held-out pixel outside the observations");
    out.weight[i] = 0.0;
  }
  return out;
}

double poisson_loglik(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double pixel_area) {
  if (x.size() != y.size())
    throw InputError(fmt::format("predictor has {} entries, counts {}", x.size(), y.size()));
  const double log_c = std::log(pixel_area);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) throw InputError(fmt::format("non-finite log-intensity at pixel {}", i));
    sum += y[i] * (x[i] + log_c) - pixel_area * std::exp(x[i]) - std::lgamma(y[i] + 1.0);
  }
  return sum;
}

double pointwise_log_likelihood(const Observations& obs, int i, double eta) {
  const double y = obs.y[i];
  if (obs.family == Family::gaussian) {
    const double r = y - eta;
    return 0.5 * (std::log(obs.noise_precision) - kLogTwoPi) - 0.5 * obs.noise_precision * r * r;
  }
  return y * (eta + std::log(obs.pixel_area)) - obs.pixel_area * std::exp(eta) - std::lgamma(y + 1.0);
}

LikelihoodTerms likelihood_terms(const Observations& obs, const Eigen::VectorXd& eta) {
  const Eigen::Index n = eta.size();
  if (n != obs.y.size()) throw InputError("predictor length does not match the observations");
  LikelihoodTerms t;
  t.gradient.resize(n);
  t.curvature.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = obs.weight[i];
    if (w == 0.0) {
      t.gradient[i] = 0.0;
      t.curvature[i] = 0.0;
      continue;
    }
    if (obs.family == Family::gaussian) {
      t.gradient[i] = w * obs.noise_precision * (obs.y[i] - eta[i]);
      t.curvature[i] = w * obs.noise_precision;
    } else {
      const double mu = obs.pixel_area * std::exp(eta[i]);
      t.gradient[i] = w * (obs.y[i] - mu);
      t.curvature[i] = w * mu;
    }
    t.value += w * pointwise_log_likelihood(obs, static_cast<int>(i), eta[i]);
  }
  return t;
}

double log_likelihood(const Observations& obs, const Eigen::VectorXd& eta) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (obs.weight[i] == 0.0) continue;
    const double v = pointwise_log_likelihood(obs, static_cast<int>(i), eta[i]);
    if (!std::isfinite(v)) return -std::numeric_limits<double>::infinity();
    sum += obs.weight[i] * v;
  }
  return sum;
}

}  // namespace lgcp
