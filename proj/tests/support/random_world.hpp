#pragma once

#include <random>

#include "aliasplan/scenario.hpp"

namespace aliasplan::testing {

struct RandomPlanningCase {
    World world;
    MixtureBelief belief;
    std::vector<ActionId> actions;
};

// Small random world: up to 4 hypotheses, up to 3 actions, a handful of
// landmarks in two classes. Actions are occasionally duplicated.
inline RandomPlanningCase random_planning_case(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
    auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };

    RandomPlanningCase c;
    std::vector<Landmark> lms;
    const std::size_t n_lm = pick(2, 6);
    for (std::size_t k = 0; k < n_lm; ++k)
        lms.push_back({static_cast<LandmarkId>(k + 1), static_cast<ClassId>(pick(0, 1)), {uni(-10, 10), uni(-10, 10)}});
    c.world.map = LandmarkMap(std::move(lms));

    const std::size_t n_act = pick(1, 3);
    for (std::size_t a = 0; a < n_act; ++a) {
        if (a > 0 && u(rng) < 0.15) {
            c.world.motion.primitives.push_back(c.world.motion.primitives.back());
            continue;
        }
        c.world.motion.primitives.push_back({"A" + std::to_string(a), uni(-3, 3), uni(-3, 3), uni(-0.6, 0.6)});
    }
    c.world.motion.process_noise = Eigen::Vector3d(uni(0.001, 0.05), uni(0.001, 0.05), uni(1e-4, 1e-2)).asDiagonal();
    const double r = uni(0.01, 0.2);
    c.world.observation.noise = Eigen::Matrix2d::Identity() * r;
    c.world.observation.fov_range = uni(6.0, 15.0);
    c.world.observation.fov_half_angle = u(rng) < 0.3 ? std::numbers::pi : uni(0.6, 2.0);

    const std::size_t n_hyp = pick(1, 4);
    std::vector<double> w(n_hyp);
    double total = 0.0;
    for (auto& x : w) total += (x = -std::log(1.0 - u(rng)) + 1e-3);
    std::vector<HypothesisComponent> comps;
    for (std::size_t j = 0; j < n_hyp; ++j) {
        HypothesisComponent h;
        h.weight = w[j] / total;
        h.gaussian.mean = {uni(-8, 8), uni(-8, 8), uni(-3.1, 3.1)};
        h.gaussian.covariance = Eigen::Vector3d(uni(0.01, 0.5), uni(0.01, 0.5), uni(1e-4, 0.02)).asDiagonal();
        comps.push_back(h);
    }
    c.belief = MixtureBelief(std::move(comps));
    for (ActionId a = 0; a < n_act; ++a) c.actions.push_back(a);
    return c;
}

}  // namespace aliasplan::testing
