#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "lgcp/domain.hpp"
#include "lgcp/gmrf.hpp"

namespace lgcp {

enum class ModelId { M0, M1a, M1b, M2, M3, M4, M5, intercept_only };

/// Parses "M0", "M1a", ... Throws InputError("unknown model <text>").
ModelId parse_model_id(std::string_view text);
std::string_view to_string(ModelId id);

/// car_copy: a second CAR field on the slope-unit graph, entering the
/// predictor through covariate weights (space-varying regression).
enum class ComponentKind { fixed, iid, rw1, crw1, car, car_copy };

std::string_view to_string(ComponentKind kind);

/// Prior settings. Defaults: PC(1, 0.01) for categorical/aspect/slope/iid
/// blocks, PC(5, 0.01) for the latent spatial effect, PC(0.1, 0.01) for the
/// space-varying slope field; N(0, 1) fixed effects except the intercept
/// N(-2, 1); interaction coefficient N(1, 1/10).
struct ModelConfig {
  PCPrior categorical{1.0, 0.01};
  PCPrior aspect{1.0, 0.01};
  PCPrior slope_rw1{1.0, 0.01};
  PCPrior iid{1.0, 0.01};
  PCPrior lse{5.0, 0.01};
  PCPrior svr{0.1, 0.01};
  double intercept_mean = -2.0;
  double intercept_precision = 1.0;
  double fixed_mean = 0.0;
  double fixed_precision = 1.0;
  double beta_mean = 1.0;
  double beta_precision = 10.0;
  bool aspect_effect = true;
  bool svr_sum_to_zero = false;
};

struct LatentComponent {
  std::string name;
  ComponentKind kind = ComponentKind::fixed;
  int size = 0;
  std::optional<SparsePrecision> structure;  ///< none for fixed effects
  std::optional<PCPrior> hyper;
  Eigen::VectorXd fixed_prior_means;
  Eigen::VectorXd fixed_prior_precisions;
  std::vector<std::string> labels;

  int offset = 0;          ///< first coordinate in the latent vector
  int reduced_offset = 0;  ///< first coordinate in the constraint-free coordinates
  int reduced_size = 0;
  bool sum_to_zero = false;
  int improper_dims = 0;  ///< flat prior directions (intrinsic block without constraint)
  double scaling = 1.0;   ///< generalized-variance constant tau_0
  double log_constrained_det = 0.0;  ///< log det(V^T R V) (pseudo-determinant if improper)
  double log_reduced_det = 0.0;      ///< same for the reduced structure T^T R T
  SparseMatrix reduced_structure;    ///< T^T R T (R itself when unconstrained)
  int hyper_index = -1;
};

enum class HyperKind { precision, interaction };

struct HyperParameter {
  std::string name;
  HyperKind kind = HyperKind::precision;
  int component = -1;
  PCPrior pc;
  double mean = 0.0;       ///< interaction prior mean
  double precision = 1.0;  ///< interaction prior precision
};

using RowSparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Latent Gaussian model: ordered components, pixel incidence, constraints
/// and the hyperparameter inventory. Immutable once built.
class LatentModel {
 public:
  ModelId model_id() const { return id_; }
  const std::vector<LatentComponent>& components() const { return components_; }
  const LatentComponent& component(std::string_view name) const;
  bool has_component(std::string_view name) const;
  const std::vector<HyperParameter>& hyperparameters() const { return hypers_; }
  int n_hyper() const { return static_cast<int>(hypers_.size()); }
  int total_dim() const { return total_dim_; }
  int reduced_dim() const { return reduced_dim_; }
  int n_pixels() const { return n_pixels_; }
  int constraint_count() const;
  int improper_dims() const;

  /// True only when an interaction coefficient rescales incidence weights.
  bool incidence_depends_on_theta() const { return interaction_component_ >= 0; }

  /// Maps the latent vector to pixel log-intensities (n_pixels x total_dim).
  RowSparseMatrix incidence(const Eigen::VectorXd& theta) const;
  /// One row of the incidence matrix as (latent index, weight), sorted by index.
  std::vector<std::pair<int, double>> incidence_row(int pixel, const Eigen::VectorXd& theta) const;

  /// Block-diagonal T with x = T z; identity on unconstrained blocks.
  const SparseMatrix& reduction() const { return reduction_; }
  /// Prior precision in the reduced coordinates at theta (singular only
  /// along improper directions).
  SparseMatrix reduced_prior_precision(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd reduced_prior_mean() const;
  /// log pseudo-determinant of reduced_prior_precision(theta).
  double reduced_prior_log_det(const Eigen::VectorXd& theta) const;
  /// z with T z = x for x satisfying the constraints.
  Eigen::VectorXd reduce(const Eigen::VectorXd& x) const;

  /// Sum of hyperprior log densities on the natural scale (tau, beta).
  double log_prior_theta(const Eigen::VectorXd& theta) const;
  /// tau = 1 for precisions, prior mean for the interaction.
  Eigen::VectorXd default_theta() const;
  /// Initial latent vector: zeros except fixed effects at their prior means.
  Eigen::VectorXd initial_latent() const;
  /// Throws InputError on wrong dimension or non-positive precision.
  void check_theta(const Eigen::VectorXd& theta) const;

  /// "component[label]" for every latent coordinate.
  std::vector<std::string> latent_labels() const;

 private:
  friend class LatentModelBuilder;
  struct Entry {
    int pixel;
    int column;
    double weight;
    double interaction;  ///< weight gains beta * interaction
  };

  ModelId id_ = ModelId::M0;
  std::vector<LatentComponent> components_;
  std::vector<HyperParameter> hypers_;
  std::vector<Entry> entries_;  ///< sorted by (pixel, column)
  std::vector<int> row_start_;
  int interaction_component_ = -1;
  int total_dim_ = 0;
  int reduced_dim_ = 0;
  int n_pixels_ = 0;
  SparseMatrix reduction_;
};

/// Assembles arbitrary latent Gaussian models; used by `assemble` and by
/// tests that need tiny custom models.
class LatentModelBuilder {
 public:
  explicit LatentModelBuilder(int n_pixels);

  int add_fixed(std::string name, std::vector<std::string> labels, Eigen::VectorXd means,
                Eigen::VectorXd precisions);
  /// Adds a structured block with its own precision hyperparameter. When
  /// `scale` is set the precision is tau * tau_0 * R with tau_0 from
  /// scaling_constant; otherwise tau * R.
  int add_structured(std::string name, ComponentKind kind, SparsePrecision structure, PCPrior prior,
                     bool scale, std::vector<std::string> labels = {});
  void add_weight(int pixel, int component, int index, double weight);
  /// Weights of `component` become weight + beta * covariate[pixel]; adds the
  /// interaction coefficient beta ~ N(mean, 1/precision) as the last hyperparameter.
  void add_interaction(int component, std::vector<double> covariate, double mean, double precision);

  LatentModel build(ModelId id) &&;

 private:
  LatentModel model_;
  std::vector<std::vector<std::pair<int, double>>> pending_;  ///< per pixel (column, weight)
  std::vector<double> interaction_covariate_;
};

/// Builds the component list and incidence of M0..M5 (or intercept-only).
LatentModel assemble(ModelId id, const SpatialDomain& domain, const ModelConfig& config = {});

std::vector<std::pair<int, double>> incidence_row(const LatentModel& model, int pixel,
                                                  const Eigen::VectorXd& theta);

/// Log density of the latent vector on the constraint subspace (intrinsic
/// blocks without constraints use their improper density). Throws
/// InputError if x violates a constraint by more than 1e-8.
double log_prior_latent(const LatentModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& theta);

}  // namespace lgcp
