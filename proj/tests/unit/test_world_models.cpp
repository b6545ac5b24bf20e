#include <doctest.h>

#include <numbers>
#include <random>

#include "../support/fixtures.hpp"
#include "aliasplan/world_models.hpp"

using namespace aliasplan;
using aliasplan::testing::open_world;
using doctest::Approx;

namespace {

World six_squares() {
    std::vector<Landmark> lms;
    for (LandmarkId k = 0; k < 6; ++k) lms.push_back({k + 1, 1, {5.0, 0.1 * k}});
    lms.push_back({20, 2, {-5.0, 0.0}});
    return open_world(std::move(lms));
}

PoseGaussian broad_at_origin() {
    PoseGaussian g;
    g.covariance = Eigen::Vector3d(1.0, 1.0, 0.01).asDiagonal();
    return g;
}

}  // namespace

TEST_CASE("propagate_pose applies the primitive in the body frame") {
    MotionModel m;
    m.primitives = {{"RIGHT", 1.0, 0.0, 0.0}};
    auto p = propagate_pose(m, RobotPose(0, 0, 0), 0);
    CHECK(p.x == Approx(1.0));
    CHECK(p.y == Approx(0.0));

    p = propagate_pose(m, RobotPose(0, 0, std::numbers::pi / 2), 0);
    CHECK(p.x == Approx(0.0).epsilon(1e-12));
    CHECK(p.y == Approx(1.0));
    CHECK(p.heading == Approx(std::numbers::pi / 2));

    p = propagate_pose(m, RobotPose(0, 0, 0), 0, Eigen::Vector3d(0.1, -0.05, 0.0));
    CHECK(p.x == Approx(1.1));
    CHECK(p.y == Approx(-0.05));

    CHECK_THROWS_AS(propagate_pose(m, RobotPose(), 3), ValidationError);
}

TEST_CASE("headings stay normalised") {
    RobotPose p(0, 0, 3 * std::numbers::pi);
    CHECK(p.heading == Approx(std::numbers::pi));
    CHECK(RobotPose(0, 0, -std::numbers::pi).heading == Approx(std::numbers::pi));
}

TEST_CASE("motion jacobian matches finite differences") {
    MotionModel m;
    m.primitives = {{"A", 1.3, -0.4, 0.2}};
    const RobotPose x(0.5, -1.0, 0.7);
    const Eigen::Matrix3d j = motion_jacobian(m, x, 0);
    const double h = 1e-6;
    for (int c = 0; c < 3; ++c) {
        Eigen::Vector3d d = Eigen::Vector3d::Zero();
        d[c] = h;
        const Eigen::Vector3d fp = propagate_pose(m, RobotPose(x.vector() + d), 0).vector();
        const Eigen::Vector3d fm = propagate_pose(m, RobotPose(x.vector() - d), 0).vector();
        const Eigen::Vector3d col = (fp - fm) / (2 * h);
        for (int r = 0; r < 3; ++r) CHECK(j(r, c) == Approx(col[r]).epsilon(1e-6));
    }
}

TEST_CASE("predict_measurement examples") {
    auto z = predict_measurement(RobotPose(0, 0, 0), {3, 4});
    CHECK(z.x() == Approx(3));
    CHECK(z.y() == Approx(4));
    z = predict_measurement(RobotPose(0, 0, std::numbers::pi / 2), {0, 2});
    CHECK(z.x() == Approx(2));
    CHECK(z.y() == Approx(0).epsilon(1e-12));
    z = predict_measurement(RobotPose(1, 1, 0), {4, 5});
    CHECK(z.x() == Approx(3));
    CHECK(z.y() == Approx(4));
}

TEST_CASE("measurement jacobian matches finite differences") {
    const RobotPose x(0.3, 0.2, -0.4);
    const Eigen::Vector2d l(4.0, 1.5);
    const auto j = measurement_jacobian(x, l);
    const double h = 1e-6;
    for (int c = 0; c < 3; ++c) {
        Eigen::Vector3d d = Eigen::Vector3d::Zero();
        d[c] = h;
        const Eigen::Vector2d col = (predict_measurement(RobotPose(x.vector() + d), l) -
                                     predict_measurement(RobotPose(x.vector() - d), l)) / (2 * h);
        for (int r = 0; r < 2; ++r) CHECK(j(r, c) == Approx(col[r]).epsilon(1e-6));
    }
}

TEST_CASE("joint measurement likelihood") {
    const World w = open_world({{1, 0, {3, 0}}, {2, 0, {0, 3}}});
    const RobotPose x(0, 0, 0);
    CHECK(joint_measurement_likelihood(w, {}, {}, x) == 1.0);

    ObservationSet z;
    z.measurements = {{predict_measurement(x, {3, 0}), 0}};
    CHECK(joint_measurement_likelihood(w, z, {{1}}, x) == Approx(15.9155).epsilon(1e-5));

    z.measurements.push_back({predict_measurement(x, {0, 3}), 0});
    CHECK(joint_measurement_likelihood(w, z, {{1, 2}}, x) == Approx(253.303).epsilon(1e-5));
    CHECK(joint_measurement_likelihood(w, z, {{2, 1}}, x) < 1e-100);

    CHECK_THROWS_AS(joint_measurement_likelihood(w, z, {{1}}, x), ValidationError);
}

TEST_CASE("out-of-view landmarks contribute zero likelihood") {
    World w = open_world({{1, 0, {30, 0}}});
    ObservationSet z;
    z.measurements = {{{30, 0}, 0}};
    CHECK(joint_measurement_likelihood(w, z, {{1}}, RobotPose()) == 0.0);
}

TEST_CASE("max joint likelihood is the product of peaks") {
    ObservationModel m;
    m.noise = Eigen::Matrix2d::Identity() * 0.01;
    CHECK(max_joint_likelihood(m, 0) == 1.0);
    CHECK(max_joint_likelihood(m, 1) == Approx(15.9155).epsilon(1e-5));
    CHECK(max_joint_likelihood(m, 2) == Approx(253.303).epsilon(1e-5));
    // A grid search over residuals never exceeds the peak.
    for (double dx = -0.2; dx <= 0.2; dx += 0.05)
        for (double dy = -0.2; dy <= 0.2; dy += 0.05)
            CHECK(gaussian_density(Eigen::Vector2d(dx, dy), m.noise) <= max_joint_likelihood(m, 1) * (1 + 1e-12));
}

TEST_CASE("field of view") {
    ObservationModel m;
    m.fov_range = 10.0;
    m.fov_half_angle = 0.5;
    CHECK(in_fov(m, RobotPose(), {5, 0}));
    CHECK_FALSE(in_fov(m, RobotPose(), {0, 5}));
    CHECK_FALSE(in_fov(m, RobotPose(), {11, 0}));
    CHECK(in_fov(m, RobotPose(0, 0, std::numbers::pi / 2), {0, 5}));
}

TEST_CASE("association feasibility bound") {
    const World w = open_world({{1, 0, {2, 0}}, {2, 0, {1e6, 0}}});
    PoseGaussian g;
    g.covariance = Eigen::Vector3d(1.0, 1.0, 0.01).asDiagonal();
    const std::vector<ConfidenceRegion> support = {confidence_region(g)};
    CHECK(association_feasibility_bound(w, {{2}}, support) == 0);
    CHECK(association_feasibility_bound(w, {}, support) == 1);
    CHECK(association_feasibility_bound(w, {{1}}, support) == 1);
}

TEST_CASE("region visibility never misses a pose that sees the landmark") {
    ObservationModel m;
    m.fov_range = 5.0;
    m.fov_half_angle = 0.4;
    PoseGaussian g;
    g.covariance = Eigen::Vector3d(0.2, 0.2, 0.01).asDiagonal();
    const ConfidenceRegion r = confidence_region(g);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 2000; ++t) {
        const Eigen::Vector2d l(8.0 * u(rng), 8.0 * u(rng));
        const RobotPose x(r.radius * 0.7 * u(rng), r.radius * 0.7 * u(rng), r.heading_halfwidth * u(rng));
        if (in_fov(m, x, l)) CHECK(visible_from_region(m, r, l));
    }
}

TEST_CASE("enumerate associations") {
    const World w = six_squares();
    const std::vector<PoseGaussian> comps = {broad_at_origin()};

    ObservationSet one_square;
    one_square.measurements = {{{5.0, 0.25}, 1}};
    CHECK(enumerate_associations(w, comps, one_square).size() == 6);

    ObservationSet circle;
    circle.measurements = {{{5.0, 0.25}, 7}};
    CHECK(enumerate_associations(w, comps, circle).empty());

    // Two squares and one class-2 landmark gated in.
    std::vector<Landmark> lms = {{1, 1, {5, 0}}, {2, 1, {5, 0.1}}, {3, 2, {-5, 0}}, {4, 1, {-5, 6}}};
    const World w2 = open_world(lms);
    ObservationSet mixed;
    mixed.measurements = {{{5.0, 0.05}, 1}, {{-5.0, 0.0}, 2}};
    const auto assoc = enumerate_associations(w2, comps, mixed);
    REQUIRE(assoc.size() == 2);
    CHECK(assoc[0].ids == std::vector<LandmarkId>{1, 3});
    CHECK(assoc[1].ids == std::vector<LandmarkId>{2, 3});
}

TEST_CASE("associations are injective") {
    const World w = six_squares();
    ObservationSet two;
    two.measurements = {{{5.0, 0.2}, 1}, {{5.0, 0.3}, 1}};
    const auto assoc = enumerate_associations(w, std::vector<PoseGaussian>{broad_at_origin()}, two);
    CHECK(assoc.size() == 30);
    for (const auto& a : assoc) CHECK(a.ids[0] != a.ids[1]);
}

TEST_CASE("enumeration cap names the cap") {
    const World w = six_squares();
    ObservationSet two;
    two.measurements = {{{5.0, 0.2}, 1}, {{5.0, 0.3}, 1}};
    try {
        (void)enumerate_associations(w, std::vector<PoseGaussian>{broad_at_origin()}, two, 10);
        FAIL("expected the cap to trigger");
    } catch (const EnumerationCapExceeded& e) {
        CHECK(e.cap == 10);
        CHECK(std::string(e.what()).find("10") != std::string::npos);
    }
}

TEST_CASE("feasible association count") {
    const World w = six_squares();
    ObservationSet z;
    z.measurements = {{{5.0, 0.2}, 1}, {{5.0, 0.3}, 1}};
    // 6 squares taken 2 at a time, ordered.
    CHECK(count_feasible_associations(w, z, RobotPose()) == 30.0);
    CHECK(count_feasible_associations(w, z, confidence_region(broad_at_origin())) == 30.0);
    CHECK(count_feasible_associations(w, {}, RobotPose()) == 1.0);
}

TEST_CASE("world validation") {
    CHECK_THROWS_AS(LandmarkMap({{1, 0, {0, 0}}, {1, 0, {1, 1}}}), ValidationError);
    ObservationModel m;
    m.noise = Eigen::Matrix2d::Zero();
    CHECK_THROWS_AS(m.validate(), ValidationError);
    m.noise = Eigen::Matrix2d::Identity();
    m.fov_half_angle = 4.0;
    CHECK_THROWS_AS(m.validate(), ValidationError);
}
