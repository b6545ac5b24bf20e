#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

#include "aliasplan/world_models.hpp"

namespace aliasplan {

using GaussianComponent = PoseGaussian;

/// Association vectors applied so far, one per time step. Append-only.
struct AssociationHistory {
    std::vector<AssociationVector> steps;
};

struct HypothesisComponent {
    double weight = 0.0;
    GaussianComponent gaussian;
    AssociationHistory history;
};

/// Weighted set of Gaussian hypotheses over the robot pose. Weights sum to one.
class MixtureBelief {
  public:
    static constexpr double kWeightTolerance = 1e-9;

    MixtureBelief() = default;
    /// Validates weight normalisation and covariance definiteness.
    explicit MixtureBelief(std::vector<HypothesisComponent> components, std::size_t time = 0);

    [[nodiscard]] const std::vector<HypothesisComponent>& components() const { return components_; }
    [[nodiscard]] const HypothesisComponent& operator[](std::size_t j) const { return components_[j]; }
    [[nodiscard]] std::size_t size() const { return components_.size(); }
    [[nodiscard]] std::size_t time() const { return time_; }
    [[nodiscard]] std::vector<double> weights() const;
    [[nodiscard]] std::vector<PoseGaussian> gaussians() const;

  private:
    std::vector<HypothesisComponent> components_;
    std::size_t time_ = 0;
};

/// zeta(i, j): expected likelihood of the observation under realization i and
/// hypothesis j, together with the per-cell region feasibility used by the
/// likelihood upper bound.
struct ZetaTable {
    std::vector<AssociationVector> realizations;            // row labels
    Eigen::MatrixXd values;                                 // |L| x |M|
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> feasible;  // |L| x |M|

    [[nodiscard]] std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
    [[nodiscard]] std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
};

MixtureBelief predict(const World& world, const MixtureBelief& belief, ActionId u);

/// Propagates one Gaussian through the linearised motion model.
GaussianComponent predict_component(const World& world, const GaussianComponent& g, ActionId u);

/// Closed-form estimate of zeta for a propagated component: Gaussian marginal
/// likelihood of the stacked linearised measurement model times the uniform
/// association probability over the component's confidence region.
double zeta(const World& world, const GaussianComponent& component, const AssociationVector& beta,
            const ObservationSet& z);

/// Enumerates realizations against the propagated components and fills the table.
ZetaTable build_zeta_table(const World& world, std::span<const GaussianComponent> propagated,
                           const ObservationSet& z, std::size_t enumeration_cap = 10000);

/// eta = sum_i sum_j zeta(i, j) w_j.
double marginal_likelihood(std::span<const double> weights, const ZetaTable& table);

/// Posterior weights zeta(i, j) w_j / eta in (j, i) order.
std::vector<double> posterior_weights(std::span<const double> weights, const ZetaTable& table, double eta);

/// EKF measurement update of one component conditioned on `beta`.
GaussianComponent condition_component(const World& world, const GaussianComponent& g,
                                      const AssociationVector& beta, const ObservationSet& z);

struct UpdateResult {
    MixtureBelief belief;
    double eta = 0.0;
    ZetaTable zeta;
};

/// Predict, enumerate, weight and condition. Throws ObservationImpossible when eta == 0.
UpdateResult update(const World& world, const MixtureBelief& belief, ActionId u, const ObservationSet& z,
                    std::size_t enumeration_cap = 10000);

/// Drops components below `threshold` and renormalises. Keeps the heaviest
/// component when everything would be dropped.
MixtureBelief prune_and_renormalize(const MixtureBelief& belief, double threshold = 1e-3);

/// Shannon entropy in nats, 0 ln 0 = 0.
double weights_entropy(std::span<const double> weights);

}  // namespace aliasplan
