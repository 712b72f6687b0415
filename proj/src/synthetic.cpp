#include "lgcp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "lgcp/error.hpp"
#include "lgcp/gmrf.hpp"
#include "lgcp/inference.hpp"
#include "lgcp/rng.hpp"
#include "lgcp/sparse_cholesky.hpp"

namespace lgcp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int su_of(const GridSpec& g, int row, int col) {
  const int bx = col * g.su_x / g.nx;
  const int by = row * g.su_y / g.ny;
  return by * g.su_x + bx;
}

void check_grid(const GridSpec& g) {
  if (g.nx < 1 || g.ny < 1) throw InputError("grid dimensions must be positive");
  if (g.su_x < 1 || g.su_y < 1 || g.su_x > g.nx || g.su_y > g.ny)
    throw InputError("slope-unit blocks must fit in the grid");
  if (g.su_x * g.su_y < 2) throw InputError("at least two slope units are required");
  if (!(g.pixel_area > 0.0)) throw InputError("pixel area must be positive");
  for (int levels : g.categorical_levels)
    if (levels < 2) throw InputError("categorical covariates need at least two levels");
}

/// Constant-free log of the joint density in reduced coordinates.
struct ReducedTarget {
  Eigen::MatrixXd q;
  Eigen::VectorXd mu;
  Eigen::MatrixXd a;  ///< incidence times reduction
  const Observations* obs;

  double operator()(const Eigen::VectorXd& z) const {
    const Eigen::VectorXd d = z - mu;
    return -0.5 * d.dot(q * d) + log_likelihood(*obs, a * z);
  }
};

Eigen::VectorXd dense_mode(const ReducedTarget& t, Eigen::VectorXd z) {
  double f = t(z);
  for (int iter = 0; iter < 200; ++iter) {
    const auto terms = likelihood_terms(*t.obs, t.a * z);
    const Eigen::VectorXd g = -(t.q * (z - t.mu)) + t.a.transpose() * terms.gradient;
    if (g.cwiseAbs().maxCoeff() < 1e-10) return z;
    const Eigen::MatrixXd h = t.q + t.a.transpose() * terms.curvature.asDiagonal() * t.a;
    const Eigen::VectorXd step = h.ldlt().solve(g);
    double s = 1.0;
    for (int k = 0; k < 60; ++k, s *= 0.5) {
      const Eigen::VectorXd zn = z + s * step;
      const double fn = t(zn);
      if (std::isfinite(fn) && fn >= f) {
        z = zn;
        f = fn;
        break;
      }
    }
  }
  return z;
}

}  // namespace

RawPixelTable synthetic_covariates(const GridSpec& grid, std::uint64_t seed) {
  check_grid(grid);
  CounterRng rng(seed, 0);
  std::normal_distribution<double> normal;
  RawPixelTable raw;
  for (int c = 0; c < grid.n_continuous; ++c) raw.continuous_names.push_back("x" + std::to_string(c + 1));
  for (std::size_t k = 0; k < grid.categorical_levels.size(); ++k)
    raw.categorical_names.push_back("cat_" + std::to_string(k + 1));
  raw.continuous.resize(static_cast<std::size_t>(grid.n_continuous));
  raw.categorical.resize(grid.categorical_levels.size());
  for (int row = 0; row < grid.ny; ++row)
    for (int col = 0; col < grid.nx; ++col) {
      raw.pixel_id.push_back(static_cast<std::int64_t>(row) * grid.nx + col + 1);
      raw.su_id.push_back(su_of(grid, row, col) + 1);
      raw.count.push_back(0);
      for (auto& column : raw.continuous) column.push_back(normal(rng));
      for (std::size_t k = 0; k < grid.categorical_levels.size(); ++k)
        raw.categorical[k].push_back(static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(grid.categorical_levels[k])));
      raw.aspect.push_back(2.0 * std::numbers::pi * rng.uniform());
      raw.slope_raw.push_back(5.0 + 40.0 * rng.uniform());
      raw.line.push_back(0);
    }
  return raw;
}

SlopeUnitGraph grid_adjacency(const GridSpec& grid) {
  check_grid(grid);
  std::vector<std::pair<int, int>> edges;
  for (int by = 0; by < grid.su_y; ++by)
    for (int bx = 0; bx < grid.su_x; ++bx) {
      const int id = by * grid.su_x + bx;
      if (bx + 1 < grid.su_x) edges.emplace_back(id, id + 1);
      if (by + 1 < grid.su_y) edges.emplace_back(id, id + grid.su_x);
    }
  return SlopeUnitGraph(grid.su_x * grid.su_y, edges);
}

SimulatedData simulate_counts(const TruthConfig& truth) {
  RawPixelTable raw = synthetic_covariates(truth.grid, truth.seed);
  SlopeUnitGraph graph = grid_adjacency(truth.grid);
  const SpatialDomain layout(raw, graph, truth.grid.pixel_area);
  const LatentModel model = assemble(truth.model_id, layout, truth.model_config);

  const auto& hypers = model.hyperparameters();
  if (truth.hyperparameters.size() != model.n_hyper())
    throw InputError(fmt::format("model {} has {} hyperparameters, truth gives {}", to_string(truth.model_id),
                                 model.n_hyper(), truth.hyperparameters.size()));
  for (int h = 0; h < model.n_hyper(); ++h)
    if (hypers[static_cast<std::size_t>(h)].kind == HyperKind::precision && !(truth.hyperparameters[h] > 0.0))
      throw InputError(fmt::format("true {} must be positive", hypers[static_cast<std::size_t>(h)].name));
  const auto& fixed = model.component("fixed");
  if (truth.fixed_effects.size() != fixed.size)
    throw InputError(fmt::format("fixed block has {} coefficients, truth gives {}", fixed.size, truth.fixed_effects.size()));

  CounterRng rng(truth.seed, 1);
  std::normal_distribution<double> normal;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(model.total_dim());
  x.segment(fixed.offset, fixed.size) = truth.fixed_effects;
  for (const auto& c : model.components()) {
    if (!c.structure) continue;
    const double tau = truth.hyperparameters[c.hyper_index];
    Eigen::VectorXd w(c.size);
    for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = normal(rng);
    if (std::isinf(tau)) continue;
    const bool reduce = c.sum_to_zero || c.improper_dims > 0;
    const SparseMatrix t = reduce ? sum_to_zero_basis(c.size) : SparseMatrix();
    const SparseMatrix r = reduce ? SparseMatrix(t.transpose() * c.structure->entries * t) : c.structure->entries;
    const SparseCholesky chol(SparseMatrix(tau * c.scaling * r));
    const Eigen::VectorXd z = chol.sample_from_standard(w.head(r.rows()));
    x.segment(c.offset, c.size) = reduce ? Eigen::VectorXd(t * z) : z;
  }
  Eigen::VectorXd theta = truth.hyperparameters;
  for (Eigen::Index h = 0; h < theta.size(); ++h)
    if (std::isinf(theta[h])) theta[h] = 1.0;  // incidence ignores precisions
  const Eigen::VectorXd eta = model.incidence(theta) * x;

  CounterRng count_rng(truth.seed, 2);
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double mean = truth.grid.pixel_area * std::exp(eta[i]);
    if (!std::isfinite(mean) || mean > 1e9) throw InputError("simulated intensity is too large");
    std::poisson_distribution<long long> pois(mean);
    raw.count[static_cast<std::size_t>(i)] = mean > 0.0 ? pois(count_rng) : 0;
  }
  SpatialDomain domain(raw, graph, truth.grid.pixel_area);
  return SimulatedData{std::move(raw), std::move(graph), std::move(domain), std::move(x), eta, model.latent_labels()};
}

DenseOracleResult dense_posterior_oracle(const LatentModel& model, const Observations& obs,
                                         const DenseOracleOptions& options) {
  const int n = model.total_dim();
  const int d = model.reduced_dim();
  const int k = model.n_hyper();
  if (n > kDenseOracleMaxLatent || k > kDenseOracleMaxHyper)
    throw InputError(fmt::format("dense oracle supports at most {} latent dimensions and {} hyperparameter",
                                 kDenseOracleMaxLatent, kDenseOracleMaxHyper));
  if (model.improper_dims() > 0) throw InputError("dense oracle needs a proper prior");
  if (options.nodes < 3 || options.hyper_nodes < 2) throw InputError("too few quadrature nodes");

  const int n_theta = k == 0 ? 1 : options.hyper_nodes;
  const Eigen::MatrixXd t(model.reduction());
  const double du = 2.0 * options.half_width / (options.nodes - 1);
  std::vector<double> nodes(static_cast<std::size_t>(options.nodes));
  for (int j = 0; j < options.nodes; ++j) nodes[static_cast<std::size_t>(j)] = -options.half_width + j * du;
  long long total = 1;
  for (int j = 0; j < d; ++j) total *= options.nodes;

  DenseOracleResult out;
  out.hyper_internal.resize(n_theta);
  Eigen::VectorXd log_w(n_theta);
  Eigen::MatrixXd means(n, n_theta), second(n, n_theta);
  for (int h = 0; h < n_theta; ++h) {
    Eigen::VectorXd phi(k);
    double log_w_h = 0.0;
    if (k == 1) {
      phi[0] = options.hyper_lower + (options.hyper_upper - options.hyper_lower) * h / (n_theta - 1);
      out.hyper_internal[h] = phi[0];
      if (h == 0 || h == n_theta - 1) log_w_h = std::log(0.5);
    }
    const Eigen::VectorXd theta = from_internal(model, phi);
    ReducedTarget target{Eigen::MatrixXd(model.reduced_prior_precision(theta)), model.reduced_prior_mean(),
                         Eigen::MatrixXd(SparseMatrix(model.incidence(theta))) * t, &obs};
    const Eigen::LLT<Eigen::MatrixXd> prior_llt(target.q);
    if (prior_llt.info() != Eigen::Success) throw NumericalError("prior precision is not positive definite");
    const double prior_log_det = 2.0 * prior_llt.matrixL().toDenseMatrix().diagonal().array().log().sum();

    const Eigen::VectorXd zstar = dense_mode(target, target.mu);
    out.modes.push_back(t * zstar);
    const auto terms = likelihood_terms(obs, target.a * zstar);
    const Eigen::MatrixXd hess = target.q + target.a.transpose() * terms.curvature.asDiagonal() * target.a;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hess);
    const Eigen::MatrixXd s = eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal();
    const double log_det_s = -0.5 * eig.eigenvalues().array().log().sum();

    // along z = z* + S u the prior term is quadratic in u and the predictor affine
    const Eigen::MatrixXd b = target.a * s;
    const Eigen::VectorXd eta0 = target.a * zstar;
    const Eigen::MatrixXd ts = t * s;
    const Eigen::VectorXd x0 = t * zstar;
    const Eigen::MatrixXd qs = s.transpose() * target.q * s;
    const Eigen::VectorXd qg = s.transpose() * (target.q * (zstar - target.mu));
    double ll0 = 0.0;
    for (Eigen::Index i = 0; i < eta0.size(); ++i)
      if (obs.weight[i] != 0.0) ll0 += obs.weight[i] * pointwise_log_likelihood(obs, static_cast<int>(i), eta0[i]);

    // pixels with identical rows contribute only through pooled sums
    struct Group {
      Eigen::VectorXd row;
      double linear = 0.0;     ///< sum w y (Poisson) or sum w tau r (Gaussian)
      double curvature = 0.0;  ///< sum w C e^eta0 (Poisson) or sum w tau (Gaussian)
    };
    std::vector<Group> groups;
    for (Eigen::Index i = 0; i < eta0.size(); ++i) {
      const double w = obs.weight[i];
      if (w == 0.0) continue;
      const Eigen::VectorXd row = b.row(i).transpose();
      auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
        return (g.row - row).cwiseAbs().maxCoeff() <= 1e-13 * (1.0 + row.cwiseAbs().maxCoeff());
      });
      if (it == groups.end()) it = groups.insert(groups.end(), Group{row});
      if (obs.family == Family::poisson) {
        it->linear += w * obs.y[i];
        it->curvature += w * obs.pixel_area * std::exp(eta0[i]);
      } else {
        it->linear += w * obs.noise_precision * (obs.y[i] - eta0[i]);
        it->curvature += w * obs.noise_precision;
      }
    }

    double mass = 0.0;
    Eigen::VectorXd m1 = Eigen::VectorXd::Zero(n), m2 = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd u(d), x(n);
    for (long long idx = 0; idx < total; ++idx) {
      long long rest = idx;
      double node_w = 1.0;
      for (int j = 0; j < d; ++j) {
        const int pos = static_cast<int>(rest % options.nodes);
        rest /= options.nodes;
        u[j] = nodes[static_cast<std::size_t>(pos)];
        if (pos == 0 || pos == options.nodes - 1) node_w *= 0.5;
      }
      // log-likelihood difference to the mode, exact for both families
      double dll = 0.0;
      for (const auto& g : groups) {
        const double e = g.row.dot(u);
        dll += g.linear * e - g.curvature * (obs.family == Family::poisson ? std::expm1(e) : 0.5 * e * e);
      }
      const double f = -qg.dot(u) - 0.5 * u.dot(qs * u) + dll;
      if (!std::isfinite(f)) continue;
      const double p = node_w * std::exp(f);
      x.noalias() = x0 + ts * u;
      mass += p;
      m1 += p * x;
      m2 += p * x.cwiseProduct(x);
    }
    means.col(h) = m1 / mass;
    second.col(h) = m2 / mass;
    const Eigen::VectorXd dz = zstar - target.mu;
    const double f0 = -0.5 * dz.dot(target.q * dz) + ll0;
    const double log_evidence = f0 + std::log(mass) + log_det_s + d * std::log(du) + 0.5 * prior_log_det;
    log_w[h] = log_w_h + log_evidence + (k == 0 ? 0.0 : model.log_prior_theta(theta) + internal_log_jacobian(model, phi));
  }
  const double top = log_w.maxCoeff();
  Eigen::VectorXd w = (log_w.array() - top).exp();
  w /= w.sum();
  out.hyper_weights = w;
  out.latent_mean = means * w;
  const Eigen::VectorXd ex2 = second * w;
  out.latent_sd = (ex2 - out.latent_mean.cwiseProduct(out.latent_mean)).cwiseMax(0.0).cwiseSqrt();
  return out;
}

McmcResult mcmc_oracle(const LatentModel& model, const Observations& obs, const McmcOptions& options) {
  const int n = model.total_dim();
  const int k = model.n_hyper();
  if (n > kMcmcOracleMaxLatent)
    throw InputError(fmt::format("MCMC oracle supports at most {} latent dimensions", kMcmcOracleMaxLatent));
  if (options.iterations <= options.burn_in || options.burn_in < 1000 || options.thin < 1)
    throw InputError("MCMC needs iterations > burn-in >= 1000 and thin >= 1");
  const int dim = n + k;

  // orthogonal projector onto the constraints, column by column through kriging
  std::vector<Eigen::VectorXd> rows;
  for (const auto& c : model.components())
    if (c.sum_to_zero) {
      Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
      r.segment(c.offset, c.size).setOnes();
      rows.push_back(r);
    }
  Eigen::MatrixXd constraints(static_cast<Eigen::Index>(rows.size()), n);
  for (std::size_t r = 0; r < rows.size(); ++r) constraints.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
  SparseMatrix eye(n, n);
  eye.setIdentity();
  Eigen::MatrixXd projector(n, n);
  for (int j = 0; j < n; ++j)
    projector.col(j) = condition_by_kriging(Eigen::VectorXd::Unit(n, j), eye, constraints);

  auto log_target = [&](const Eigen::VectorXd& state) {
    const Eigen::VectorXd phi = state.tail(k);
    const Eigen::VectorXd theta = from_internal(model, phi);
    for (Eigen::Index h = 0; h < theta.size(); ++h)
      if (!std::isfinite(theta[h]) || theta[h] <= 0.0) {
        if (model.hyperparameters()[static_cast<std::size_t>(h)].kind == HyperKind::precision) return -kInf;
      }
    const Eigen::VectorXd x = state.head(n);
    const double ll = log_likelihood(obs, model.incidence(theta) * x);
    if (!std::isfinite(ll)) return -kInf;
    return ll + log_prior_latent(model, x, theta) + model.log_prior_theta(theta) + internal_log_jacobian(model, phi);
  };

  Eigen::VectorXd state(dim);
  state.head(n) = projector * model.initial_latent();
  state.tail(k) = to_internal(model, model.default_theta());
  double current = log_target(state);
  if (!std::isfinite(current)) throw NumericalError("MCMC start has zero density");

  CounterRng rng(options.seed, 0);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd chol = Eigen::MatrixXd::Identity(dim, dim) * (0.1 / std::sqrt(static_cast<double>(dim)));
  double log_scale = 0.0;
  const int adapt_from = options.burn_in / 5;
  Eigen::VectorXd run_mean = Eigen::VectorXd::Zero(dim);
  Eigen::MatrixXd run_m2 = Eigen::MatrixXd::Zero(dim, dim);
  int run_n = 0, window_accept = 0, window = 0, updates = 0;

  const int kept = (options.iterations - options.burn_in) / options.thin;
  McmcResult out;
  out.latent_samples.resize(kept, n);
  out.hyper_samples.resize(kept, k);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim), sum2 = Eigen::VectorXd::Zero(dim);
  long long accepted_after = 0;
  Eigen::VectorXd eps(dim);
  for (int it = 0; it < options.iterations; ++it) {
    for (int j = 0; j < dim; ++j) eps[j] = normal(rng);
    Eigen::VectorXd proposal = state + std::exp(log_scale) * (chol * eps);
    proposal.head(n) = projector * proposal.head(n);
    const double value = log_target(proposal);
    const double u = rng.uniform();
    const bool accept = std::isfinite(value) && std::log(u) < value - current;
    if (accept) {
      state = proposal;
      current = value;
    }
    if (it < options.burn_in) {
      window_accept += accept ? 1 : 0;
      ++window;
      if (it >= adapt_from) {
        ++run_n;
        const Eigen::VectorXd delta = state - run_mean;
        run_mean += delta / run_n;
        run_m2 += delta * (state - run_mean).transpose();
      }
      if (window == 100) {
        ++updates;
        log_scale += (static_cast<double>(window_accept) / window - 0.25) / std::pow(updates, 0.6);
        window = 0;
        window_accept = 0;
        if (run_n > 2 * dim + 100) {
          const Eigen::MatrixXd cov =
              (2.38 * 2.38 / dim) * (run_m2 / (run_n - 1) + 1e-8 * Eigen::MatrixXd::Identity(dim, dim));
          const Eigen::LLT<Eigen::MatrixXd> llt(cov);
          if (llt.info() == Eigen::Success) chol = llt.matrixL();
        }
      }
      continue;
    }
    if (accept) ++accepted_after;
    sum += state;
    sum2 += state.cwiseProduct(state);
    const int post = it - options.burn_in;
    if (post % options.thin == 0 && post / options.thin < kept) {
      out.latent_samples.row(post / options.thin) = state.head(n).transpose();
      out.hyper_samples.row(post / options.thin) = state.tail(k).transpose();
    }
  }
  const double m = options.iterations - options.burn_in;
  out.acceptance = static_cast<double>(accepted_after) / m;
  if (out.acceptance < 0.05 || out.acceptance > 0.8)
    throw NumericalError(fmt::format("MCMC acceptance rate {:.3f} outside [0.05, 0.8]", out.acceptance));
  const Eigen::VectorXd mean = sum / m;
  const Eigen::VectorXd var = (sum2 / m - mean.cwiseProduct(mean)).cwiseMax(0.0);
  out.latent_mean = mean.head(n);
  out.latent_sd = var.head(n).cwiseSqrt();
  out.hyper_mean = mean.tail(k);
  return out;
}

}  // namespace lgcp
