#include "lgcp/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include "lgcp/error.hpp"
#include "lgcp/parallel.hpp"

namespace lgcp {

namespace {

constexpr double kLogTwoPi = 1.8378770664093453;
constexpr double kInf = std::numeric_limits<double>::infinity();

/// Reduced incidence A T and the fixed zero-valued sparsity template of the
/// Newton precision Q_z + A_z^T D A_z.
struct Design {
  SparseMatrix a;
  SparseMatrix pattern;
};

Design make_design(const LatentModel& model, const Eigen::VectorXd& theta, const SparseMatrix& q) {
  Design d;
  d.a = SparseMatrix(model.incidence(theta)) * model.reduction();
  std::vector<Triplet> band;
  for (const auto& c : model.components())
    if (c.sum_to_zero)
      for (int j = 1; j < c.reduced_size; ++j) {
        band.emplace_back(c.reduced_offset + j, c.reduced_offset + j - 1, 0.0);
        band.emplace_back(c.reduced_offset + j - 1, c.reduced_offset + j, 0.0);
      }
  const int n = model.reduced_dim();
  SparseMatrix b(n, n);
  b.setFromTriplets(band.begin(), band.end());
  SparseMatrix identity(n, n);
  identity.setIdentity();
  d.pattern = SparseMatrix(d.a.transpose() * d.a) + q + b + identity;
  d.pattern.makeCompressed();
  d.pattern.coeffs().setZero();
  return d;
}

double prior_quadratic(const SparseMatrix& q, const Eigen::VectorXd& z, const Eigen::VectorXd& mu) {
  const Eigen::VectorXd d = z - mu;
  return d.dot(q * d);
}

/// Weighted discrete marginal with midpoint-interpolated CDF.
HyperMarginal discrete_marginal(const Eigen::VectorXd& internal, const Eigen::VectorXd& weights, bool log_scale) {
  const Eigen::Index n = internal.size();
  auto natural = [&](double v) { return log_scale ? std::exp(v) : v; };
  HyperMarginal m;
  double second = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    m.mean += weights[k] * natural(internal[k]);
    second += weights[k] * natural(internal[k]) * natural(internal[k]);
  }
  m.sd = std::sqrt(std::max(0.0, second - m.mean * m.mean));

  std::map<double, double> mass;
  for (Eigen::Index k = 0; k < n; ++k) mass[internal[k]] += weights[k];
  std::vector<double> value, mid;
  double cumulative = 0.0;
  for (auto [v, w] : mass) {
    value.push_back(v);
    mid.push_back(cumulative + 0.5 * w);
    cumulative += w;
  }
  auto quantile = [&](double p) {
    if (value.size() == 1 || p <= mid.front()) return natural(value.front());
    if (p >= mid.back()) return natural(value.back());
    const auto it = std::upper_bound(mid.begin(), mid.end(), p);
    const auto hi = static_cast<std::size_t>(it - mid.begin());
    const double t = (p - mid[hi - 1]) / (mid[hi] - mid[hi - 1]);
    return natural(value[hi - 1] + t * (value[hi] - value[hi - 1]));
  };
  m.q025 = quantile(0.025);
  m.q50 = quantile(0.5);
  m.q975 = quantile(0.975);
  return m;
}

void assemble_mixture(PosteriorFit& fit, const Observations& obs, int threads) {
  const LatentModel& model = *fit.model;
  fit.pixel_area = obs.pixel_area;
  const auto n_points = fit.theta_points.size();
  parallel_for(n_points, threads, [&](std::size_t k) { compute_marginal_sd(model, fit.theta_points[k], obs); });

  const double top = fit.log_density.maxCoeff();
  fit.weights = (fit.log_density.array() - top).exp();
  fit.weights /= fit.weights.sum();

  const int dim = model.total_dim();
  const int n_pix = model.n_pixels();
  Eigen::VectorXd lm = Eigen::VectorXd::Zero(dim), l2 = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd pm = Eigen::VectorXd::Zero(n_pix), p2 = Eigen::VectorXd::Zero(n_pix);
  for (std::size_t k = 0; k < n_points; ++k) {
    const auto& g = fit.theta_points[k];
    const double w = fit.weights[static_cast<Eigen::Index>(k)];
    lm += w * g.mode;
    l2.array() += w * (g.latent_sd.array().square() + g.mode.array().square());
    pm += w * g.predictor;
    p2.array() += w * (g.predictor_sd.array().square() + g.predictor.array().square());
  }
  fit.latent_mean = lm;
  fit.latent_sd = (l2.array() - lm.array().square()).max(0.0).sqrt();
  fit.predictor_mean = pm;
  fit.predictor_sd = (p2.array() - pm.array().square()).max(0.0).sqrt();

  Eigen::Index best = 0;
  fit.log_density.maxCoeff(&best);
  fit.theta_mode = fit.theta_points[static_cast<std::size_t>(best)].theta;
  fit.hyper_marginals.clear();
  for (int j = 0; j < model.n_hyper(); ++j) {
    const bool log_scale = model.hyperparameters()[j].kind == HyperKind::precision;
    fit.hyper_marginals.push_back(discrete_marginal(fit.internal_points.col(j), fit.weights, log_scale));
  }
}

}  // namespace

GaussianApprox gaussian_approximation(const LatentModel& model, const Eigen::VectorXd& theta,
                                      const Observations& obs, const InferenceOptions& options,
                                      const Eigen::VectorXd* start) {
  model.check_theta(theta);
  if (obs.size() != model.n_pixels())
    throw InputError(fmt::format("{} observations for a model of {} pixels", obs.size(), model.n_pixels()));
  const SparseMatrix q = model.reduced_prior_precision(theta);
  const Eigen::VectorXd mu = model.reduced_prior_mean();
  const Design design = make_design(model, theta, q);
  const SparseMatrix& a = design.a;

  Eigen::VectorXd z = start != nullptr ? *start : model.reduce(model.initial_latent());
  if (z.size() != model.reduced_dim()) throw InputError("Newton start has the wrong dimension");
  Eigen::VectorXd eta = a * z;
  auto objective = [&](const Eigen::VectorXd& zz, const Eigen::VectorXd& ee) {
    return -0.5 * prior_quadratic(q, zz, mu) + log_likelihood(obs, ee);
  };
  double f = objective(z, eta);
  if (!std::isfinite(f)) throw NumericalError("conditional log-posterior is not finite at the Newton start");

  std::unique_ptr<SparseCholesky> chol;
  SparseMatrix h;
  LikelihoodTerms terms;
  double gnorm = kInf;
  int iter = 0;
  for (;; ++iter) {
    terms = likelihood_terms(obs, eta);
    const Eigen::VectorXd g = -(q * (z - mu)) + a.transpose() * terms.gradient;
    gnorm = g.cwiseAbs().maxCoeff();
    h = SparseMatrix(a.transpose() * terms.curvature.asDiagonal() * a) + q + design.pattern;
    if (chol)
      chol->refactorize(h);
    else
      chol = std::make_unique<SparseCholesky>(h);
    if (gnorm < options.newton_tolerance) break;
    if (iter >= options.newton_max_iterations)
      throw NumericalError(fmt::format("Newton iterations did not converge after {} iterations (gradient norm {:.3g})",
                                       iter, gnorm));
    const Eigen::VectorXd step = chol->solve(g);
    const double decrement = g.dot(step);
    if (decrement <= 1e-10 * (1.0 + std::abs(f))) {
      // objective changes are below rounding; the quadratic model is exact enough
      z += step;
      eta = a * z;
      f = objective(z, eta);
      continue;
    }
    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= options.max_halvings; ++halving, t *= 0.5) {
      const Eigen::VectorXd zn = z + t * step;
      const Eigen::VectorXd en = a * zn;
      const double fn = objective(zn, en);
      if (std::isfinite(fn) && fn >= f) {
        z = zn;
        eta = en;
        f = fn;
        accepted = true;
        break;
      }
    }
    if (!accepted) throw NumericalError(fmt::format("Newton step halving exhausted (gradient norm {:.3g})", gnorm));
  }

  GaussianApprox out;
  out.theta = theta;
  out.reduced_mode = z;
  out.mode = model.reduction() * z;
  out.predictor = eta;
  out.precision_at_mode = h;
  out.gradient_norm = gnorm;
  out.iterations = iter;
  out.log_likelihood = terms.value;
  out.log_marginal_likelihood = 0.5 * model.improper_dims() * kLogTwoPi + 0.5 * model.reduced_prior_log_det(theta) -
                                0.5 * prior_quadratic(q, z, mu) + terms.value - 0.5 * chol->log_determinant();
  out.log_evidence_contrib = model.log_prior_theta(theta) + out.log_marginal_likelihood;
  out.factor = std::shared_ptr<const SparseCholesky>(std::move(chol));
  return out;
}

void compute_marginal_sd(const LatentModel& model, GaussianApprox& approx, const Observations& obs) {
  (void)obs;
  const SelectedInverse s = approx.factor->selected_inverse();
  approx.latent_sd.resize(model.total_dim());
  for (const auto& c : model.components()) {
    const int r = c.reduced_offset;
    for (int j = 0; j < c.size; ++j) {
      double v = 0.0;
      if (!c.sum_to_zero) {
        v = s(r + j, r + j);
      } else if (j == 0) {
        v = s(r, r);
      } else if (j == c.size - 1) {
        v = s(r + j - 1, r + j - 1);
      } else {
        v = s(r + j, r + j) + s(r + j - 1, r + j - 1) - 2.0 * s(r + j, r + j - 1);
      }
      approx.latent_sd[c.offset + j] = std::sqrt(std::max(0.0, v));
    }
  }
  const RowSparseMatrix a = RowSparseMatrix(SparseMatrix(model.incidence(approx.theta)) * model.reduction());
  approx.predictor_sd.resize(model.n_pixels());
  std::vector<std::pair<Eigen::Index, double>> row;
  for (int i = 0; i < model.n_pixels(); ++i) {
    row.clear();
    for (RowSparseMatrix::InnerIterator it(a, i); it; ++it) row.emplace_back(it.col(), it.value());
    approx.predictor_sd[i] = std::sqrt(std::max(0.0, s.quadratic_form(row)));
  }
}

double log_posterior_theta(const LatentModel& model, const Eigen::VectorXd& theta, const Observations& obs,
                           const InferenceOptions& options) {
  return gaussian_approximation(model, theta, obs, options).log_evidence_contrib;
}

Eigen::VectorXd to_internal(const LatentModel& model, const Eigen::VectorXd& theta) {
  model.check_theta(theta);
  Eigen::VectorXd phi(theta.size());
  for (int k = 0; k < model.n_hyper(); ++k)
    phi[k] = model.hyperparameters()[k].kind == HyperKind::precision ? std::log(theta[k]) : theta[k];
  return phi;
}

Eigen::VectorXd from_internal(const LatentModel& model, const Eigen::VectorXd& phi) {
  if (phi.size() != model.n_hyper()) throw InputError("internal hyperparameter vector has the wrong dimension");
  Eigen::VectorXd theta(phi.size());
  for (int k = 0; k < model.n_hyper(); ++k)
    theta[k] = model.hyperparameters()[k].kind == HyperKind::precision ? std::exp(phi[k]) : phi[k];
  return theta;
}

double internal_log_jacobian(const LatentModel& model, const Eigen::VectorXd& phi) {
  double sum = 0.0;
  for (int k = 0; k < model.n_hyper(); ++k)
    if (model.hyperparameters()[k].kind == HyperKind::precision) sum += phi[k];
  return sum;
}

PosteriorFit explore_hyperparameters(const LatentModel& model, const Observations& obs,
                                     const InferenceOptions& options) {
  const int k = model.n_hyper();
  if (k > options.max_hyperparameters)
    throw InputError(fmt::format("model {} has {} hyperparameters; the limit is {}", to_string(model.model_id()), k,
                                 options.max_hyperparameters));
  PosteriorFit fit;
  fit.model = std::make_shared<const LatentModel>(model);

  auto evaluate = [&](const Eigen::VectorXd& phi, const Eigen::VectorXd* start) -> std::optional<GaussianApprox> {
    try {
      GaussianApprox g = gaussian_approximation(model, from_internal(model, phi), obs, options, start);
      if (!std::isfinite(g.log_evidence_contrib)) return std::nullopt;
      return g;
    } catch (const NumericalError&) {
      return std::nullopt;
    }
  };
  auto density = [&](const GaussianApprox& g, const Eigen::VectorXd& phi) {
    return g.log_evidence_contrib + internal_log_jacobian(model, phi);
  };

  if (k == 0) {
    fit.theta_points.push_back(gaussian_approximation(model, Eigen::VectorXd(0), obs, options));
    fit.internal_points.resize(1, 0);
    fit.log_density = Eigen::VectorXd::Constant(1, fit.theta_points[0].log_evidence_contrib);
    assemble_mixture(fit, obs, options.threads);
    return fit;
  }

  // ---- mode search: BFGS on psi = -log density, central-difference gradients
  Eigen::VectorXd phi = to_internal(model, model.default_theta());
  std::optional<GaussianApprox> anchor = evaluate(phi, nullptr);
  if (!anchor) throw NumericalError("hyperparameter mode search failed: no Gaussian approximation at the start");
  double psi = -density(*anchor, phi);

  auto psi_at = [&](const std::vector<Eigen::VectorXd>& points, const Eigen::VectorXd& start) {
    std::vector<double> out(points.size(), kInf);
    parallel_for(points.size(), options.threads, [&](std::size_t i) {
      if (auto g = evaluate(points[i], &start)) out[i] = -density(*g, points[i]);
    });
    return out;
  };
  auto gradient = [&](const Eigen::VectorXd& at, const Eigen::VectorXd& start) {
    const double hstep = options.gradient_step;
    std::vector<Eigen::VectorXd> points;
    for (int j = 0; j < k; ++j) {
      points.push_back(at + hstep * Eigen::VectorXd::Unit(k, j));
      points.push_back(at - hstep * Eigen::VectorXd::Unit(k, j));
    }
    const auto v = psi_at(points, start);
    Eigen::VectorXd g(k);
    for (int j = 0; j < k; ++j) {
      if (!std::isfinite(v[2 * j]) || !std::isfinite(v[2 * j + 1]))
        throw NumericalError("hyperparameter mode search failed: gradient evaluation");
      g[j] = (v[2 * j] - v[2 * j + 1]) / (2.0 * hstep);
    }
    return g;
  };

  Eigen::VectorXd grad = gradient(phi, anchor->reduced_mode);
  Eigen::MatrixXd inverse_hessian = Eigen::MatrixXd::Identity(k, k);
  bool converged = false;
  for (int it = 0; it < 200; ++it) {
    if (grad.cwiseAbs().maxCoeff() < 1e-4) {
      converged = true;
      break;
    }
    Eigen::VectorXd p = -inverse_hessian * grad;
    if (p.dot(grad) >= 0.0) {
      inverse_hessian.setIdentity();
      p = -grad;
    }
    const double longest = p.cwiseAbs().maxCoeff();
    if (longest > 2.0) p *= 2.0 / longest;
    double t = 1.0;
    std::optional<GaussianApprox> trial;
    Eigen::VectorXd phi_new;
    double psi_new = kInf;
    for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
      phi_new = phi + t * p;
      trial = evaluate(phi_new, &anchor->reduced_mode);
      if (trial) {
        psi_new = -density(*trial, phi_new);
        if (psi_new <= psi + 1e-4 * t * grad.dot(p)) break;
      }
      trial.reset();
    }
    if (!trial) {
      // no decrease along the search direction: accept the current point if it is flat enough
      converged = grad.cwiseAbs().maxCoeff() < 1e-2;
      break;
    }
    const Eigen::VectorXd s = phi_new - phi;
    const Eigen::VectorXd grad_new = gradient(phi_new, trial->reduced_mode);
    const Eigen::VectorXd y = grad_new - grad;
    const double sy = s.dot(y);
    if (sy > 1e-12) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd i_k = Eigen::MatrixXd::Identity(k, k);
      inverse_hessian = (i_k - rho * s * y.transpose()) * inverse_hessian * (i_k - rho * y * s.transpose()) +
                        rho * s * s.transpose();
    }
    const double change = psi - psi_new;
    phi = phi_new;
    psi = psi_new;
    grad = grad_new;
    anchor = std::move(trial);
    if (change < 1e-10 && s.cwiseAbs().maxCoeff() < 1e-7) {
      converged = grad.cwiseAbs().maxCoeff() < 1e-2;
      break;
    }
  }
  if (!converged) throw NumericalError("hyperparameter mode search failed to converge");

  // ---- curvature at the mode
  const Eigen::VectorXd start = anchor->reduced_mode;
  const double hh = options.hessian_step;
  std::vector<Eigen::VectorXd> points;
  for (int i = 0; i < k; ++i) {
    points.push_back(phi + hh * Eigen::VectorXd::Unit(k, i));
    points.push_back(phi - hh * Eigen::VectorXd::Unit(k, i));
  }
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      for (int si : {1, -1})
        for (int sj : {1, -1})
          points.push_back(phi + hh * (si * Eigen::VectorXd::Unit(k, i) + sj * Eigen::VectorXd::Unit(k, j)));
  const auto v = psi_at(points, start);
  if (std::any_of(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }))
    throw NumericalError("hyperparameter curvature evaluation failed near the mode");
  Eigen::MatrixXd hess(k, k);
  std::size_t next = 2 * static_cast<std::size_t>(k);
  for (int i = 0; i < k; ++i) hess(i, i) = (v[2 * i] - 2.0 * psi + v[2 * i + 1]) / (hh * hh);
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      hess(i, j) = hess(j, i) = (v[next] - v[next + 1] - v[next + 2] + v[next + 3]) / (4.0 * hh * hh);
      next += 4;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hess);
  Eigen::VectorXd lambda = eig.eigenvalues();
  for (Eigen::Index i = 0; i < k; ++i)
    if (!(lambda[i] > 1e-8)) lambda[i] = 1.0;  // flat or non-convex direction: unit scale
  const Eigen::MatrixXd map = eig.eigenvectors() * lambda.cwiseSqrt().cwiseInverse().asDiagonal();

  // ---- flood fill of the standardized lattice
  struct Node {
    std::vector<int> index;
    Eigen::VectorXd phi;
    std::optional<GaussianApprox> approx;
    double log_density = -kInf;
  };
  std::map<std::vector<int>, bool> visited;
  std::vector<Node> frontier(1);
  frontier[0].index.assign(static_cast<std::size_t>(k), 0);
  visited[frontier[0].index] = true;
  std::vector<Node> kept;
  double best = -psi;
  while (!frontier.empty()) {
    parallel_for(frontier.size(), options.threads, [&](std::size_t i) {
      Node& node = frontier[i];
      Eigen::VectorXd offset(k);
      for (int j = 0; j < k; ++j) offset[j] = options.grid_step * node.index[static_cast<std::size_t>(j)];
      node.phi = phi + map * offset;
      node.approx = evaluate(node.phi, &start);
      if (node.approx) node.log_density = density(*node.approx, node.phi);
    });
    std::vector<std::vector<int>> next_indices;
    for (auto& node : frontier) {
      if (!node.approx || node.log_density < best - options.drop_threshold) continue;
      best = std::max(best, node.log_density);
      for (int j = 0; j < k; ++j)
        for (int step : {1, -1}) {
          auto nb = node.index;
          nb[static_cast<std::size_t>(j)] += step;
          if (visited.emplace(nb, true).second) next_indices.push_back(nb);
        }
      kept.push_back(std::move(node));
    }
    if (visited.size() > static_cast<std::size_t>(options.max_grid_points))
      throw NumericalError(fmt::format("hyperparameter grid exceeded {} points", options.max_grid_points));
    std::sort(next_indices.begin(), next_indices.end());
    frontier.clear();
    for (auto& idx : next_indices) {
      Node node;
      node.index = std::move(idx);
      frontier.push_back(std::move(node));
    }
  }
  std::sort(kept.begin(), kept.end(), [](const Node& a, const Node& b) { return a.index < b.index; });
  std::erase_if(kept, [&](const Node& n) { return n.log_density < best - options.drop_threshold; });
  if (kept.empty()) throw NumericalError("all hyperparameter grid points were dropped");

  fit.internal_points.resize(static_cast<Eigen::Index>(kept.size()), k);
  fit.log_density.resize(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) {
    fit.internal_points.row(static_cast<Eigen::Index>(i)) = kept[i].phi.transpose();
    fit.log_density[static_cast<Eigen::Index>(i)] = kept[i].log_density;
    fit.theta_points.push_back(std::move(*kept[i].approx));
  }
  assemble_mixture(fit, obs, options.threads);
  return fit;
}

PosteriorFit fit_on_grid(const LatentModel& model, const Observations& obs, const Eigen::MatrixXd& thetas,
                         const InferenceOptions& options) {
  if (thetas.rows() < 1 || thetas.cols() != model.n_hyper())
    throw InputError(fmt::format("theta grid must have {} columns and at least one row", model.n_hyper()));
  PosteriorFit fit;
  fit.model = std::make_shared<const LatentModel>(model);
  const auto n = static_cast<std::size_t>(thetas.rows());
  std::vector<std::optional<GaussianApprox>> approx(n);
  parallel_for(n, options.threads, [&](std::size_t i) {
    approx[i] = gaussian_approximation(model, thetas.row(static_cast<Eigen::Index>(i)).transpose(), obs, options);
  });
  fit.internal_points.resize(thetas.rows(), thetas.cols());
  fit.log_density.resize(thetas.rows());
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const Eigen::VectorXd phi = to_internal(model, thetas.row(r).transpose());
    fit.internal_points.row(r) = phi.transpose();
    fit.log_density[r] = approx[i]->log_evidence_contrib + internal_log_jacobian(model, phi);
    fit.theta_points.push_back(std::move(*approx[i]));
  }
  assemble_mixture(fit, obs, options.threads);
  return fit;
}

double PosteriorFit::latent_quantile(int j, double p) const {
  if (j < 0 || j >= latent_mean.size()) throw InputError("latent index out of range");
  Eigen::VectorXd means(static_cast<Eigen::Index>(theta_points.size())), sds(means.size());
  for (std::size_t k = 0; k < theta_points.size(); ++k) {
    means[static_cast<Eigen::Index>(k)] = theta_points[k].mode[j];
    sds[static_cast<Eigen::Index>(k)] = theta_points[k].latent_sd[j];
  }
  return mixture_quantile(weights, means, sds, p);
}

double PosteriorFit::predictor_quantile(int i, double p) const {
  if (i < 0 || i >= predictor_mean.size()) throw InputError("pixel index out of range");
  Eigen::VectorXd means(static_cast<Eigen::Index>(theta_points.size())), sds(means.size());
  for (std::size_t k = 0; k < theta_points.size(); ++k) {
    means[static_cast<Eigen::Index>(k)] = theta_points[k].predictor[i];
    sds[static_cast<Eigen::Index>(k)] = theta_points[k].predictor_sd[i];
  }
  return mixture_quantile(weights, means, sds, p);
}

double mixture_quantile(const Eigen::VectorXd& weights, const Eigen::VectorXd& means, const Eigen::VectorXd& sds,
                        double p) {
  if (!(p > 0.0 && p < 1.0)) throw InputError("quantile level must lie in (0, 1)");
  if (weights.size() != means.size() || sds.size() != means.size() || means.size() == 0)
    throw InputError("mixture components have inconsistent sizes");
  auto cdf = [&](double v) {
    double sum = 0.0;
    for (Eigen::Index k = 0; k < means.size(); ++k) {
      if (sds[k] > 0.0)
        sum += weights[k] * 0.5 * std::erfc(-(v - means[k]) / (sds[k] * std::sqrt(2.0)));
      else
        sum += v >= means[k] ? weights[k] : 0.0;
    }
    return sum - p;
  };
  const double spread = std::max(sds.maxCoeff(), 1e-12);
  double lo = means.minCoeff() - 10.0 * spread;
  double hi = means.maxCoeff() + 10.0 * spread;
  if (cdf(lo) >= 0.0) return lo;
  if (cdf(hi) <= 0.0) return hi;
  boost::uintmax_t iterations = 200;
  const auto r = boost::math::tools::toms748_solve(cdf, lo, hi, boost::math::tools::eps_tolerance<double>(50),
                                                   iterations);
  return 0.5 * (r.first + r.second);
}

Eigen::VectorXd condition_by_kriging(const Eigen::VectorXd& x, const SparseMatrix& q, const Eigen::MatrixXd& a) {
  if (a.cols() != x.size() || q.rows() != x.size()) throw InputError("constraint dimensions do not match");
  if (a.rows() == 0) return x;
  const SparseCholesky chol(q);
  const Eigen::MatrixXd w = chol.solve(Eigen::MatrixXd(a.transpose()));
  const Eigen::MatrixXd s = a * w;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < a.rows()) throw InputError("constraint matrix is rank deficient");
  return x - w * s.ldlt().solve(a * x);
}

}  // namespace lgcp
