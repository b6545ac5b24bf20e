#pragma once

#include <numbers>

#include "aliasplan/belief_core.hpp"

namespace aliasplan::testing {

// zeta = [[0.4, 0.1], [0.2, 0.3]], every cell feasible.
inline ZetaTable shared_table() {
    ZetaTable t;
    t.realizations = {AssociationVector{{1}}, AssociationVector{{2}}};
    t.values.resize(2, 2);
    t.values << 0.4, 0.1, 0.2, 0.3;
    t.feasible.setConstant(2, 2, true);
    return t;
}

inline ZetaTable table_from(const Eigen::MatrixXd& values) {
    ZetaTable t;
    for (Eigen::Index i = 0; i < values.rows(); ++i) t.realizations.push_back(AssociationVector{{static_cast<LandmarkId>(i)}});
    t.values = values;
    t.feasible = values.array() > 0.0;
    return t;
}

inline HypothesisComponent component(double w, Eigen::Vector3d mean, Eigen::Vector3d diag) {
    HypothesisComponent h;
    h.weight = w;
    h.gaussian.mean = mean;
    h.gaussian.covariance = diag.asDiagonal();
    return h;
}

// Full-circle sensor, range 10, R = 0.01 I, one action that does not move.
inline World open_world(std::vector<Landmark> landmarks) {
    World w;
    w.map = LandmarkMap(std::move(landmarks));
    w.motion.primitives = {{"STAY", 0.0, 0.0, 0.0}, {"RIGHT", 1.0, 0.0, 0.0}};
    w.motion.process_noise = Eigen::Matrix3d::Identity() * 0.01;
    w.observation.noise = Eigen::Matrix2d::Identity() * 0.01;
    w.observation.fov_range = 10.0;
    w.observation.fov_half_angle = std::numbers::pi;
    return w;
}

}  // namespace aliasplan::testing
