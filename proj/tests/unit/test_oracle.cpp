#include <doctest.h>

#include <sstream>

#include "../support/fixtures.hpp"
#include "../support/random_world.hpp"
#include "aliasplan/oracle/oracle.hpp"
#include "aliasplan/planner.hpp"

using namespace aliasplan;
using namespace aliasplan::testing;
using doctest::Approx;

TEST_CASE("oracle eta on the shared example") {
    CHECK(oracle::brute_force_eta(shared_table(), std::vector<double>{0.5, 0.5}) == Approx(0.5L));
}

TEST_CASE("oracle reports") {
    const auto r = oracle::compare("eta", 0.5L, 0.5L + 1e-12L);
    CHECK(r.within(1e-9L));
    CHECK_FALSE(oracle::compare("eta", 1.0L, 1.1L).within(1e-3L));
    std::ostringstream out;
    const std::vector<oracle::OracleReport> rows = {r};
    oracle::write_reports(out, rows);
    CHECK(out.str().find("eta") != std::string::npos);
}

TEST_CASE("production objective matches the independent oracle") {
    std::mt19937_64 rng(2024);
    for (int t = 0; t < 60; ++t) {
        const auto c = random_planning_case(rng);
        for (ActionId u : c.actions) {
            const auto set = sample_future_observations(c.world, c.belief, u, 6, t);
            std::vector<ObservationSet> zs;
            for (const auto& s : set.samples) zs.push_back(s.z);
            const auto ref = oracle::brute_force_objective(c.world, c.belief, u, zs);
            const double j = evaluate_objective_exact(c.world, c.belief, u, set);
            CHECK(oracle::compare("objective", ref.objective, j).abs_error <= 1e-9L * std::max(1.0L, ref.objective));
        }
    }
}

TEST_CASE("closed-form zeta against Monte Carlo over the component") {
    // One landmark of its class in view from the whole region, so the
    // association prior is 1 at every sampled pose.
    const World w = open_world({{1, 0, {4, 1}}, {2, 1, {-3, 2}}});
    PoseGaussian g;
    g.mean = {0.2, -0.1, 0.1};
    g.covariance = Eigen::Vector3d(0.004, 0.003, 2e-4).asDiagonal();
    ObservationSet z;
    z.measurements = {{predict_measurement(RobotPose(g.mean), {4, 1}) + Eigen::Vector2d(0.05, -0.04), 0}};
    const AssociationVector beta{{1}};
    const double closed = zeta(w, g, beta, z);
    const auto mc = oracle::mc_zeta(w, g, beta, z, 200000, 11);
    CHECK(mc.samples == 200000);
    CHECK(std::abs(mc.estimate - closed) <= 3.0 * mc.standard_error + 1e-3 * closed);
}

TEST_CASE("Monte Carlo zeta is zero for an unreachable landmark") {
    const World w = open_world({{1, 0, {4, 1}}, {2, 0, {400, 1}}});
    PoseGaussian g;
    g.covariance = Eigen::Vector3d(0.01, 0.01, 1e-3).asDiagonal();
    ObservationSet z;
    z.measurements = {{{4, 1}, 0}};
    CHECK(oracle::mc_zeta(w, g, {{2}}, z, 1000, 1).estimate == 0.0);
}
