#include "lgcp/model.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "lgcp/error.hpp"

namespace lgcp {

namespace {

constexpr double kLogTwoPi = 1.8378770664093453;  // ln(2 pi)

std::vector<std::string> index_labels(int n, int first = 0) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(std::to_string(i + first));
  return out;
}

double quadratic(const SparseMatrix& r, const Eigen::VectorXd& v) { return v.dot(r * v); }

}  // namespace

ModelId parse_model_id(std::string_view text) {
  static constexpr std::pair<std::string_view, ModelId> table[] = {
      {"M0", ModelId::M0}, {"M1a", ModelId::M1a}, {"M1b", ModelId::M1b}, {"M2", ModelId::M2},
      {"M3", ModelId::M3}, {"M4", ModelId::M4},   {"M5", ModelId::M5},   {"intercept_only", ModelId::intercept_only}};
  for (auto [name, id] : table)
    if (name == text) return id;
  throw InputError(fmt::format("unknown model {}", text));
}

std::string_view to_string(ModelId id) {
  switch (id) {
    case ModelId::M0: return "M0";
    case ModelId::M1a: return "M1a";
    case ModelId::M1b: return "M1b";
    case ModelId::M2: return "M2";
    case ModelId::M3: return "M3";
    case ModelId::M4: return "M4";
    case ModelId::M5: return "M5";
    case ModelId::intercept_only: return "intercept_only";
  }
  return "?";
}

std::string_view to_string(ComponentKind kind) {
  switch (kind) {
    case ComponentKind::fixed: return "fixed";
    case ComponentKind::iid: return "iid";
    case ComponentKind::rw1: return "rw1";
    case ComponentKind::crw1: return "crw1";
    case ComponentKind::car: return "car";
    case ComponentKind::car_copy: return "car_copy";
  }
  return "?";
}

// ---- LatentModel ------------------------------------------------------------

const LatentComponent& LatentModel::component(std::string_view name) const {
  for (const auto& c : components_)
    if (c.name == name) return c;
  throw InputError(fmt::format("model has no component {}", name));
}

bool LatentModel::has_component(std::string_view name) const {
  return std::any_of(components_.begin(), components_.end(), [&](const auto& c) { return c.name == name; });
}

int LatentModel::constraint_count() const {
  int n = 0;
  for (const auto& c : components_)
    if (c.structure) n += static_cast<int>(c.structure->constraints.size());
  return n;
}

int LatentModel::improper_dims() const {
  int n = 0;
  for (const auto& c : components_) n += c.improper_dims;
  return n;
}

void LatentModel::check_theta(const Eigen::VectorXd& theta) const {
  if (theta.size() != n_hyper())
    throw InputError(fmt::format("hyperparameter vector has {} entries, model {} needs {}", theta.size(),
                                 to_string(id_), n_hyper()));
  for (int k = 0; k < n_hyper(); ++k) {
    if (hypers_[k].kind == HyperKind::precision && !(theta[k] > 0.0 && std::isfinite(theta[k])))
      throw InputError(fmt::format("precision {} must be positive and finite", hypers_[k].name));
    if (hypers_[k].kind == HyperKind::interaction && !std::isfinite(theta[k]))
      throw InputError("interaction coefficient must be finite");
  }
}

RowSparseMatrix LatentModel::incidence(const Eigen::VectorXd& theta) const {
  check_theta(theta);
  const double beta = interaction_component_ >= 0 ? theta[n_hyper() - 1] : 0.0;
  RowSparseMatrix a(n_pixels_, total_dim_);
  Eigen::VectorXi sizes(n_pixels_);
  for (int i = 0; i < n_pixels_; ++i) sizes[i] = row_start_[i + 1] - row_start_[i];
  a.reserve(sizes);
  for (int i = 0; i < n_pixels_; ++i)
    for (int e = row_start_[i]; e < row_start_[i + 1]; ++e)
      a.insert(i, entries_[e].column) = entries_[e].weight + beta * entries_[e].interaction;
  a.makeCompressed();
  return a;
}

std::vector<std::pair<int, double>> LatentModel::incidence_row(int pixel, const Eigen::VectorXd& theta) const {
  check_theta(theta);
  if (pixel < 0 || pixel >= n_pixels_)
    throw InputError(fmt::format("pixel index {} outside 0..{}", pixel, n_pixels_ - 1));
  const double beta = interaction_component_ >= 0 ? theta[n_hyper() - 1] : 0.0;
  std::vector<std::pair<int, double>> row;
  for (int e = row_start_[pixel]; e < row_start_[pixel + 1]; ++e)
    row.emplace_back(entries_[e].column, entries_[e].weight + beta * entries_[e].interaction);
  return row;
}

SparseMatrix LatentModel::reduced_prior_precision(const Eigen::VectorXd& theta) const {
  check_theta(theta);
  std::vector<Triplet> t;
  for (const auto& c : components_) {
    if (!c.structure) {
      for (int j = 0; j < c.size; ++j)
        t.emplace_back(c.reduced_offset + j, c.reduced_offset + j, c.fixed_prior_precisions[j]);
      continue;
    }
    const double s = theta[c.hyper_index] * c.scaling;
    for (int j = 0; j < c.reduced_structure.outerSize(); ++j)
      for (SparseMatrix::InnerIterator it(c.reduced_structure, j); it; ++it)
        t.emplace_back(c.reduced_offset + it.row(), c.reduced_offset + it.col(), s * it.value());
  }
  SparseMatrix q(reduced_dim_, reduced_dim_);
  q.setFromTriplets(t.begin(), t.end());
  return q;
}

Eigen::VectorXd LatentModel::reduced_prior_mean() const {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(reduced_dim_);
  for (const auto& c : components_)
    if (!c.structure) mu.segment(c.reduced_offset, c.size) = c.fixed_prior_means;
  return mu;
}

double LatentModel::reduced_prior_log_det(const Eigen::VectorXd& theta) const {
  check_theta(theta);
  double sum = 0.0;
  for (const auto& c : components_) {
    if (!c.structure) {
      sum += c.fixed_prior_precisions.array().log().sum();
      continue;
    }
    const int rank = c.reduced_size - c.improper_dims;
    sum += rank * std::log(theta[c.hyper_index] * c.scaling) + c.log_reduced_det;
  }
  return sum;
}

Eigen::VectorXd LatentModel::reduce(const Eigen::VectorXd& x) const {
  if (x.size() != total_dim_) throw InputError("latent vector has the wrong dimension");
  Eigen::VectorXd z(reduced_dim_);
  for (const auto& c : components_) {
    if (!c.sum_to_zero) {
      z.segment(c.reduced_offset, c.size) = x.segment(c.offset, c.size);
      continue;
    }
    double run = 0.0;
    for (int j = 0; j < c.reduced_size; ++j) {
      run += x[c.offset + j];
      z[c.reduced_offset + j] = run;
    }
  }
  return z;
}

double LatentModel::log_prior_theta(const Eigen::VectorXd& theta) const {
  check_theta(theta);
  double sum = 0.0;
  for (int k = 0; k < n_hyper(); ++k) {
    const auto& h = hypers_[k];
    if (h.kind == HyperKind::precision) {
      sum += pc_prior_log_density(theta[k], h.pc);
    } else {
      const double d = theta[k] - h.mean;
      sum += 0.5 * (std::log(h.precision) - kLogTwoPi) - 0.5 * h.precision * d * d;
    }
  }
  return sum;
}

Eigen::VectorXd LatentModel::default_theta() const {
  Eigen::VectorXd theta(n_hyper());
  for (int k = 0; k < n_hyper(); ++k) theta[k] = hypers_[k].kind == HyperKind::precision ? 1.0 : hypers_[k].mean;
  return theta;
}

Eigen::VectorXd LatentModel::initial_latent() const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(total_dim_);
  for (const auto& c : components_)
    if (!c.structure) x.segment(c.offset, c.size) = c.fixed_prior_means;
  return x;
}

std::vector<std::string> LatentModel::latent_labels() const {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(total_dim_));
  for (const auto& c : components_)
    for (const auto& l : c.labels) out.push_back(fmt::format("{}[{}]", c.name, l));
  return out;
}

// ---- builder ----------------------------------------------------------------

LatentModelBuilder::LatentModelBuilder(int n_pixels) {
  if (n_pixels < 1) throw InputError("model needs at least one pixel");
  model_.n_pixels_ = n_pixels;
  pending_.resize(static_cast<std::size_t>(n_pixels));
}

int LatentModelBuilder::add_fixed(std::string name, std::vector<std::string> labels, Eigen::VectorXd means,
                                  Eigen::VectorXd precisions) {
  const auto n = static_cast<int>(labels.size());
  if (n < 1 || means.size() != n || precisions.size() != n)
    throw InputError(fmt::format("fixed block {}: labels, means and precisions must have equal positive length", name));
  if ((precisions.array() <= 0.0).any()) throw InputError(fmt::format("fixed block {}: non-positive prior precision", name));
  LatentComponent c;
  c.name = std::move(name);
  c.kind = ComponentKind::fixed;
  c.size = n;
  c.labels = std::move(labels);
  c.fixed_prior_means = std::move(means);
  c.fixed_prior_precisions = std::move(precisions);
  c.offset = model_.total_dim_;
  c.reduced_offset = model_.reduced_dim_;
  c.reduced_size = n;
  model_.total_dim_ += n;
  model_.reduced_dim_ += n;
  model_.components_.push_back(std::move(c));
  return static_cast<int>(model_.components_.size()) - 1;
}

int LatentModelBuilder::add_structured(std::string name, ComponentKind kind, SparsePrecision structure, PCPrior prior,
                                       bool scale, std::vector<std::string> labels) {
  if (kind == ComponentKind::fixed) throw InputError("structured block cannot be of kind fixed");
  prior.rate();  // validates (u, alpha)
  const int n = static_cast<int>(structure.dimension());
  if (n < 1 || structure.entries.cols() != n) throw InputError(fmt::format("block {}: structure must be square", name));
  if (labels.empty()) labels = index_labels(n);
  if (static_cast<int>(labels.size()) != n) throw InputError(fmt::format("block {}: label count mismatch", name));

  LatentComponent c;
  c.name = std::move(name);
  c.kind = kind;
  c.size = n;
  c.labels = std::move(labels);
  c.hyper = prior;
  c.offset = model_.total_dim_;
  c.reduced_offset = model_.reduced_dim_;

  const std::size_t n_constraints = structure.constraints.size();
  if (n_constraints > 1 || (n_constraints == 1 && !structure.sum_to_zero_only()))
    throw InputError(fmt::format("block {}: only a single sum-to-zero constraint is supported", c.name));
  if (structure.rank_deficiency > 1) throw InputError(fmt::format("block {}: rank deficiency above 1", c.name));
  c.sum_to_zero = n_constraints == 1;
  c.improper_dims = structure.rank_deficiency - static_cast<int>(n_constraints);
  if (c.improper_dims < 0) c.improper_dims = 0;

  // Summaries of the constrained field; an improper block is summarized with
  // the sum-to-zero constraint that spans its null space.
  SparsePrecision constrained = structure;
  if (c.improper_dims > 0) constrained.constraints = {Eigen::VectorXd::Ones(n)};
  const ConstrainedSummary summary = summarize_constrained(constrained);
  if ((summary.variances.array() <= 0.0).any()) throw NumericalError("non-positive constrained variance");
  c.log_constrained_det = summary.log_determinant;
  c.scaling = scale ? std::exp(summary.variances.array().log().mean()) : 1.0;

  if (c.sum_to_zero) {
    if (n < 2) throw InputError(fmt::format("block {}: sum-to-zero needs two or more coordinates", c.name));
    const SparseMatrix t = sum_to_zero_basis(n);
    c.reduced_structure = SparseMatrix(t.transpose() * structure.entries * t);
    c.reduced_size = n - 1;
    c.log_reduced_det = c.log_constrained_det + std::log(static_cast<double>(n));
  } else {
    c.reduced_structure = structure.entries;
    c.reduced_size = n;
    c.log_reduced_det = c.log_constrained_det;  // pseudo-determinant when improper
  }
  c.reduced_structure.prune(0.0);
  c.structure = std::move(structure);

  HyperParameter h;
  h.name = "tau_" + c.name;
  h.kind = HyperKind::precision;
  h.component = static_cast<int>(model_.components_.size());
  h.pc = prior;
  c.hyper_index = static_cast<int>(model_.hypers_.size());
  model_.hypers_.push_back(h);

  model_.total_dim_ += n;
  model_.reduced_dim_ += c.reduced_size;
  model_.components_.push_back(std::move(c));
  return static_cast<int>(model_.components_.size()) - 1;
}

void LatentModelBuilder::add_weight(int pixel, int component, int index, double weight) {
  if (pixel < 0 || pixel >= model_.n_pixels_) throw InputError("weight references an unknown pixel");
  if (component < 0 || component >= static_cast<int>(model_.components_.size()))
    throw InputError("weight references an unknown component");
  const auto& c = model_.components_[component];
  if (index < 0 || index >= c.size) throw InputError(fmt::format("index {} outside block {}", index, c.name));
  if (weight != 0.0) pending_[pixel].emplace_back(c.offset + index, weight);
}

void LatentModelBuilder::add_interaction(int component, std::vector<double> covariate, double mean, double precision) {
  if (model_.interaction_component_ >= 0) throw InputError("only one interaction coefficient is supported");
  if (component < 0 || component >= static_cast<int>(model_.components_.size()))
    throw InputError("interaction references an unknown component");
  if (static_cast<int>(covariate.size()) != model_.n_pixels_) throw InputError("interaction covariate length mismatch");
  if (!(precision > 0.0)) throw InputError("interaction prior precision must be positive");
  model_.interaction_component_ = component;
  interaction_covariate_ = std::move(covariate);
  HyperParameter h;
  h.name = "beta";
  h.kind = HyperKind::interaction;
  h.component = component;
  h.mean = mean;
  h.precision = precision;
  model_.hypers_.push_back(h);
}

LatentModel LatentModelBuilder::build(ModelId id) && {
  LatentModel& m = model_;
  m.id_ = id;
  if (m.interaction_component_ >= 0 && m.hypers_.back().kind != HyperKind::interaction)
    throw InputError("interaction coefficient must be the last hyperparameter");

  const LatentComponent* coupled = m.interaction_component_ >= 0 ? &m.components_[m.interaction_component_] : nullptr;
  m.row_start_.assign(static_cast<std::size_t>(m.n_pixels_) + 1, 0);
  for (int i = 0; i < m.n_pixels_; ++i) {
    auto& row = pending_[i];
    std::sort(row.begin(), row.end());
    std::vector<LatentModel::Entry> merged;
    for (auto [col, w] : row) {
      if (!merged.empty() && merged.back().column == col)
        merged.back().weight += w;
      else
        merged.push_back({i, col, w, 0.0});
    }
    if (coupled != nullptr)
      for (auto& e : merged)
        if (e.column >= coupled->offset && e.column < coupled->offset + coupled->size)
          e.interaction = interaction_covariate_[i];
    m.entries_.insert(m.entries_.end(), merged.begin(), merged.end());
    m.row_start_[i + 1] = static_cast<int>(m.entries_.size());
  }

  std::vector<Triplet> t;
  for (const auto& c : m.components_) {
    if (c.sum_to_zero) {
      for (int j = 0; j < c.size - 1; ++j) {
        t.emplace_back(c.offset + j, c.reduced_offset + j, 1.0);
        t.emplace_back(c.offset + j + 1, c.reduced_offset + j, -1.0);
      }
    } else {
      for (int j = 0; j < c.size; ++j) t.emplace_back(c.offset + j, c.reduced_offset + j, 1.0);
    }
  }
  m.reduction_.resize(m.total_dim_, m.reduced_dim_);
  m.reduction_.setFromTriplets(t.begin(), t.end());
  return std::move(m);
}

// ---- assembly of the named models -------------------------------------------

LatentModel assemble(ModelId id, const SpatialDomain& domain, const ModelConfig& config) {
  const auto& pixels = domain.pixels();
  const int n = domain.n_grid();
  LatentModelBuilder b(n);

  const bool intercept_only = id == ModelId::intercept_only;
  const bool linear_slope = id == ModelId::M0 || id == ModelId::M1a || id == ModelId::M1b || id == ModelId::M3;
  const bool rw1_slope = id == ModelId::M2 || id == ModelId::M4 || id == ModelId::M5;
  const bool svr = id == ModelId::M3 || id == ModelId::M4;

  std::vector<std::string> labels{"intercept"};
  for (const auto& name : domain.continuous_names()) labels.push_back(name);
  if (linear_slope) labels.emplace_back("slope");
  if (intercept_only) labels.resize(1);
  const auto n_fixed = static_cast<Eigen::Index>(labels.size());
  Eigen::VectorXd means = Eigen::VectorXd::Constant(n_fixed, config.fixed_mean);
  Eigen::VectorXd precisions = Eigen::VectorXd::Constant(n_fixed, config.fixed_precision);
  means[0] = config.intercept_mean;
  precisions[0] = config.intercept_precision;
  const int fixed = b.add_fixed("fixed", labels, means, precisions);
  for (int i = 0; i < n; ++i) {
    b.add_weight(i, fixed, 0, 1.0);
    if (intercept_only) continue;
    const auto& p = pixels[i];
    for (std::size_t k = 0; k < p.continuous.size(); ++k) b.add_weight(i, fixed, static_cast<int>(k) + 1, p.continuous[k]);
    if (linear_slope) b.add_weight(i, fixed, static_cast<int>(n_fixed) - 1, p.slope_value);
  }
  if (intercept_only) return std::move(b).build(id);

  const auto& levels = domain.categorical_levels();
  for (std::size_t k = 0; k < levels.size(); ++k) {
    if (levels[k] < 2)
      throw InputError(fmt::format("categorical column {} needs at least two levels", domain.categorical_names()[k]));
    const int c = b.add_structured(domain.categorical_names()[k], ComponentKind::iid, iid_structure(levels[k], true),
                                   config.categorical, false);
    for (int i = 0; i < n; ++i) b.add_weight(i, c, pixels[i].categorical[k], 1.0);
  }

  if (config.aspect_effect) {
    const int c = b.add_structured("aspect", ComponentKind::crw1, rw1_structure(kAspectBins, true), config.aspect, true);
    for (int i = 0; i < n; ++i) b.add_weight(i, c, pixels[i].aspect_bin, 1.0);
  }

  if (rw1_slope) {
    const int c = b.add_structured("slope_rw1", ComponentKind::rw1, rw1_structure(kSlopeClasses, false),
                                   config.slope_rw1, true);
    for (int i = 0; i < n; ++i) b.add_weight(i, c, pixels[i].slope_class, 1.0);
  }

  const int n_su = domain.n_su();
  const auto su_labels = index_labels(n_su, 1);
  const int lse = b.add_structured("lse", ComponentKind::car, besag_structure(domain.su_graph()), config.lse, true, su_labels);
  for (int i = 0; i < n; ++i) b.add_weight(i, lse, pixels[i].su_index, 1.0);

  if (id == ModelId::M1a) {
    std::vector<std::string> pixel_labels;
    for (const auto& p : pixels) pixel_labels.push_back(std::to_string(p.pixel_id));
    const int c = b.add_structured("iid_grid", ComponentKind::iid, iid_structure(n, true), config.iid, false, pixel_labels);
    for (int i = 0; i < n; ++i) b.add_weight(i, c, i, 1.0);
  }
  if (id == ModelId::M1b) {
    const int c = b.add_structured("iid_su", ComponentKind::iid, iid_structure(n_su, true), config.iid, false, su_labels);
    for (int i = 0; i < n; ++i) b.add_weight(i, c, pixels[i].su_index, 1.0);
  }
  if (svr) {
    SparsePrecision s = besag_structure(domain.su_graph());
    if (!config.svr_sum_to_zero) s.constraints.clear();
    const int c = b.add_structured("svr", ComponentKind::car_copy, std::move(s), config.svr, true, su_labels);
    for (int i = 0; i < n; ++i) b.add_weight(i, c, pixels[i].su_index, pixels[i].slope_value);
  }
  if (id == ModelId::M5) {
    std::vector<double> slope(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) slope[i] = pixels[i].slope_value;
    b.add_interaction(lse, std::move(slope), config.beta_mean, config.beta_precision);
  }
  return std::move(b).build(id);
}

std::vector<std::pair<int, double>> incidence_row(const LatentModel& model, int pixel, const Eigen::VectorXd& theta) {
  return model.incidence_row(pixel, theta);
}

double log_prior_latent(const LatentModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& theta) {
  model.check_theta(theta);
  if (x.size() != model.total_dim()) throw InputError("latent vector has the wrong dimension");
  double sum = 0.0;
  for (const auto& c : model.components()) {
    const Eigen::VectorXd v = x.segment(c.offset, c.size);
    if (!c.structure) {
      const Eigen::ArrayXd d = v.array() - c.fixed_prior_means.array();
      const Eigen::ArrayXd& p = c.fixed_prior_precisions.array();
      sum += 0.5 * (p.log() - kLogTwoPi - p * d * d).sum();
      continue;
    }
    if (c.sum_to_zero) {
      const double violation = std::abs(v.sum());
      if (violation > 1e-8 * std::max(1.0, v.cwiseAbs().sum()))
        throw InputError(fmt::format("latent block {} violates its sum-to-zero constraint by {:.3g}", c.name, violation));
    }
    const int rank = c.size - static_cast<int>(c.structure->constraints.size()) - c.improper_dims;
    const double s = theta[c.hyper_index] * c.scaling;
    sum += 0.5 * rank * (std::log(s) - kLogTwoPi) + 0.5 * c.log_constrained_det -
           0.5 * s * quadratic(c.structure->entries, v);
  }
  return sum;
}

}  // namespace lgcp
