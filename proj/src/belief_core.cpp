#include "aliasplan/belief_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace aliasplan {

namespace {

struct StackedModel {
    Eigen::MatrixXd jacobian;   // 2n x 3
    Eigen::VectorXd residual;   // z - h(mean)
    Eigen::MatrixXd noise;      // block diagonal, 2n x 2n
};

StackedModel stack(const World& world, const GaussianComponent& g, const AssociationVector& beta,
                   const ObservationSet& z) {
    const auto n = static_cast<Eigen::Index>(z.size());
    const RobotPose pose(g.mean);
    StackedModel m;
    m.jacobian.resize(2 * n, 3);
    m.residual.resize(2 * n);
    m.noise = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& l = world.map.at(beta.ids[static_cast<std::size_t>(r)]);
        m.jacobian.middleRows<2>(2 * r) = measurement_jacobian(pose, l.position);
        m.residual.segment<2>(2 * r) =
            z.measurements[static_cast<std::size_t>(r)].z - predict_measurement(pose, l.position);
        m.noise.block<2, 2>(2 * r, 2 * r) = world.observation.noise;
    }
    return m;
}

bool region_feasible(const World& world, const ConfidenceRegion& region, const AssociationVector& beta) {
    return std::all_of(beta.ids.begin(), beta.ids.end(), [&](LandmarkId id) {
        return visible_from_region(world.observation, region, world.map.at(id).position);
    });
}

double zeta_cell(const World& world, const GaussianComponent& g, const AssociationVector& beta,
                 const ObservationSet& z, double association_count) {
    if (z.empty()) return 1.0;
    if (association_count <= 0.0) return 0.0;
    const StackedModel m = stack(world, g, beta, z);
    const Eigen::MatrixXd s = m.jacobian * g.covariance * m.jacobian.transpose() + m.noise;
    return gaussian_density(m.residual, s) / association_count;
}

void check_spd(const Eigen::Matrix3d& cov, const char* what) {
    Eigen::LLT<Eigen::Matrix3d> llt(cov);
    if (llt.info() != Eigen::Success) throw InvariantViolation(std::string(what) + " covariance lost positive definiteness");
}

}  // namespace

MixtureBelief::MixtureBelief(std::vector<HypothesisComponent> components, std::size_t time)
    : components_(std::move(components)), time_(time) {
    if (components_.empty()) throw ValidationError("belief needs at least one component");
    CompensatedSum total;
    for (const auto& c : components_) {
        if (!(c.weight >= 0.0 && c.weight <= 1.0 + kWeightTolerance))
            throw ValidationError("component weight outside [0, 1]");
        if (Eigen::LLT<Eigen::Matrix3d>(c.gaussian.covariance).info() != Eigen::Success)
            throw ValidationError("component covariance must be positive definite");
        total += c.weight;
    }
    if (std::abs(total.value() - 1.0) > kWeightTolerance)
        throw ValidationError("belief weights sum to " + std::to_string(total.value()) + ", expected 1");
}

std::vector<double> MixtureBelief::weights() const {
    std::vector<double> w;
    w.reserve(components_.size());
    for (const auto& c : components_) w.push_back(c.weight);
    return w;
}

std::vector<PoseGaussian> MixtureBelief::gaussians() const {
    std::vector<PoseGaussian> g;
    g.reserve(components_.size());
    for (const auto& c : components_) g.push_back(c.gaussian);
    return g;
}

GaussianComponent predict_component(const World& world, const GaussianComponent& g, ActionId u) {
    const RobotPose pose(g.mean);
    const Eigen::Matrix3d f = motion_jacobian(world.motion, pose, u);
    GaussianComponent out;
    out.mean = propagate_pose(world.motion, pose, u).vector();
    out.covariance = f * g.covariance * f.transpose() + world.motion.process_noise;
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
    check_spd(out.covariance, "propagated");
    return out;
}

MixtureBelief predict(const World& world, const MixtureBelief& belief, ActionId u) {
    std::vector<HypothesisComponent> out;
    out.reserve(belief.size());
    for (const auto& c : belief.components())
        out.push_back({c.weight, predict_component(world, c.gaussian, u), c.history});
    return MixtureBelief(std::move(out), belief.time());
}

double zeta(const World& world, const GaussianComponent& component, const AssociationVector& beta,
            const ObservationSet& z) {
    if (beta.size() != z.size()) throw ValidationError("association length does not match measurement count");
    const ConfidenceRegion region = confidence_region(component);
    if (!region_feasible(world, region, beta)) return 0.0;
    return zeta_cell(world, component, beta, z, count_feasible_associations(world, z, region));
}

ZetaTable build_zeta_table(const World& world, std::span<const GaussianComponent> propagated,
                           const ObservationSet& z, std::size_t enumeration_cap) {
    ZetaTable table;
    table.realizations = enumerate_associations(world, propagated, z, enumeration_cap);
    const auto rows = static_cast<Eigen::Index>(table.realizations.size());
    const auto cols = static_cast<Eigen::Index>(propagated.size());
    table.values = Eigen::MatrixXd::Zero(rows, cols);
    table.feasible.setConstant(rows, cols, false);

    for (Eigen::Index j = 0; j < cols; ++j) {
        const auto& g = propagated[static_cast<std::size_t>(j)];
        const ConfidenceRegion region = confidence_region(g);
        const double count = count_feasible_associations(world, z, region);
        for (Eigen::Index i = 0; i < rows; ++i) {
            const auto& beta = table.realizations[static_cast<std::size_t>(i)];
            if (!region_feasible(world, region, beta)) continue;
            table.feasible(i, j) = true;
            table.values(i, j) = zeta_cell(world, g, beta, z, count);
        }
    }
    return table;
}

double marginal_likelihood(std::span<const double> weights, const ZetaTable& table) {
    if (weights.size() != table.cols())
        throw ValidationError("zeta table has " + std::to_string(table.cols()) + " columns but belief has " +
                              std::to_string(weights.size()) + " components");
    CompensatedSum eta;
    for (std::size_t j = 0; j < table.cols(); ++j)
        for (std::size_t i = 0; i < table.rows(); ++i)
            eta += table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * weights[j];
    return eta.value();
}

std::vector<double> posterior_weights(std::span<const double> weights, const ZetaTable& table, double eta) {
    std::vector<double> out;
    out.reserve(table.rows() * table.cols());
    for (std::size_t j = 0; j < table.cols(); ++j)
        for (std::size_t i = 0; i < table.rows(); ++i)
            out.push_back(table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * weights[j] / eta);
    return out;
}

GaussianComponent condition_component(const World& world, const GaussianComponent& g,
                                      const AssociationVector& beta, const ObservationSet& z) {
    if (z.empty()) return g;
    const StackedModel m = stack(world, g, beta, z);
    const Eigen::MatrixXd pht = g.covariance * m.jacobian.transpose();
    const Eigen::MatrixXd s = m.jacobian * pht + m.noise;
    const Eigen::MatrixXd gain = s.ldlt().solve(pht.transpose()).transpose();  // 3 x 2n
    GaussianComponent out;
    out.mean = g.mean + gain * m.residual;
    out.mean.z() = normalize_angle(out.mean.z());
    const Eigen::Matrix3d ikh = Eigen::Matrix3d::Identity() - gain * m.jacobian;
    // Joseph form keeps the result symmetric positive definite.
    out.covariance = ikh * g.covariance * ikh.transpose() + gain * m.noise * gain.transpose();
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
    return out;
}

UpdateResult update(const World& world, const MixtureBelief& belief, ActionId u, const ObservationSet& z,
                    std::size_t enumeration_cap) {
    const MixtureBelief predicted = predict(world, belief, u);
    const std::vector<PoseGaussian> gaussians = predicted.gaussians();
    const std::vector<double> w = predicted.weights();

    UpdateResult result;
    result.zeta = build_zeta_table(world, gaussians, z, enumeration_cap);
    result.eta = marginal_likelihood(w, result.zeta);
    if (!(result.eta > 0.0))
        throw ObservationImpossible("observation has zero likelihood under every hypothesis");

    const std::vector<double> posterior = posterior_weights(w, result.zeta, result.eta);
    std::vector<HypothesisComponent> components;
    components.reserve(posterior.size());
    std::size_t k = 0;
    for (std::size_t j = 0; j < predicted.size(); ++j) {
        for (const auto& beta : result.zeta.realizations) {
            HypothesisComponent c;
            c.weight = posterior[k++];
            c.gaussian = condition_component(world, gaussians[j], beta, z);
            c.history = predicted[j].history;
            c.history.steps.push_back(beta);
            components.push_back(std::move(c));
        }
    }
    result.belief = MixtureBelief(std::move(components), belief.time() + 1);
    return result;
}

MixtureBelief prune_and_renormalize(const MixtureBelief& belief, double threshold) {
    if (!(threshold >= 0.0 && threshold < 1.0)) throw ValidationError("pruning threshold must lie in [0, 1)");
    std::vector<HypothesisComponent> kept;
    CompensatedSum mass;
    for (const auto& c : belief.components()) {
        if (c.weight < threshold) continue;
        kept.push_back(c);
        mass += c.weight;
    }
    if (kept.empty() || !(mass.value() > 0.0)) {
        const auto best = std::max_element(belief.components().begin(), belief.components().end(),
                                           [](const auto& a, const auto& b) { return a.weight < b.weight; });
        HypothesisComponent only = *best;
        only.weight = 1.0;
        return MixtureBelief({only}, belief.time());
    }
    for (auto& c : kept) c.weight /= mass.value();
    return MixtureBelief(std::move(kept), belief.time());
}

double weights_entropy(std::span<const double> weights) {
    CompensatedSum h;
    for (double w : weights) {
        if (w < 0.0) throw ValidationError("negative weight in entropy");
        h += -xlogx(w);
    }
    return std::max(0.0, h.value());
}

}  // namespace aliasplan
