#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "lgcp/domain.hpp"
#include "lgcp/gmrf.hpp"
#include "lgcp/model.hpp"
#include "lgcp/rng.hpp"

#include <Eigen/Dense>

namespace lgcp::testing {

/// Path graph 1-2-...-n.
inline SlopeUnitGraph path_graph(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return SlopeUnitGraph(n, edges);
}

/// Small raw table: pixel i in slope unit i % n_su, random covariates.
inline RawPixelTable small_table(int n_pixels, int n_su, int n_continuous, std::vector<int> levels,
                                 std::uint64_t seed = 1) {
  CounterRng rng(seed);
  RawPixelTable raw;
  for (int c = 0; c < n_continuous; ++c) raw.continuous_names.push_back("x" + std::to_string(c + 1));
  for (std::size_t k = 0; k < levels.size(); ++k) raw.categorical_names.push_back("cat_" + std::to_string(k + 1));
  raw.continuous.resize(n_continuous);
  raw.categorical.resize(levels.size());
  for (int i = 0; i < n_pixels; ++i) {
    raw.pixel_id.push_back(100 + i);
    raw.su_id.push_back(i % n_su + 1);
    raw.count.push_back(static_cast<std::int64_t>(rng() % 3));
    for (auto& col : raw.continuous) col.push_back(rng.uniform());
    for (std::size_t k = 0; k < levels.size(); ++k) raw.categorical[k].push_back(i % levels[k]);
    raw.aspect.push_back(2.0 * std::numbers::pi * rng.uniform());
    raw.slope_raw.push_back(10.0 + 30.0 * rng.uniform());
  }
  return raw;
}

/// Two fixed effects, a 4-node CAR and a 3-level iid block on 12 pixels.
inline LatentModel mixed_model() {
  LatentModelBuilder b(12);
  Eigen::VectorXd means(2), prec(2);
  means << -1.0, 0.5;
  prec << 1.0, 2.0;
  const int f = b.add_fixed("fixed", {"intercept", "x"}, means, prec);
  std::vector<std::pair<int, int>> edges{{0, 1}, {1, 2}, {2, 3}, {0, 2}};
  const int car = b.add_structured("car", ComponentKind::car, besag_structure(SlopeUnitGraph(4, edges)), {}, true);
  const int iid = b.add_structured("cat", ComponentKind::iid, iid_structure(3, true), {}, false);
  for (int i = 0; i < 12; ++i) {
    b.add_weight(i, f, 0, 1.0);
    b.add_weight(i, f, 1, std::sin(1.0 + i));
    b.add_weight(i, car, i % 4, 1.0);
    b.add_weight(i, iid, i % 3, 1.0);
  }
  return std::move(b).build(ModelId::M0);
}

/// Dense covariance of the latent vector under the prior, from the
/// projector route of the structure module.
inline Eigen::MatrixXd dense_prior_covariance(const LatentModel& m, const Eigen::VectorXd& theta) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m.total_dim(), m.total_dim());
  for (const auto& c : m.components()) {
    if (!c.structure) {
      s.block(c.offset, c.offset, c.size, c.size) = c.fixed_prior_precisions.cwiseInverse().asDiagonal();
      continue;
    }
    s.block(c.offset, c.offset, c.size, c.size) =
        constrained_generalized_inverse(*c.structure) / (theta[c.hyper_index] * c.scaling);
  }
  return s;
}

inline Eigen::VectorXd prior_mean(const LatentModel& m) {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(m.total_dim());
  for (const auto& c : m.components())
    if (!c.structure) mu.segment(c.offset, c.size) = c.fixed_prior_means;
  return mu;
}

}  // namespace lgcp::testing
