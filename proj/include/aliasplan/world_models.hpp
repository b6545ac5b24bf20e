#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "aliasplan/numeric.hpp"

namespace aliasplan {

using LandmarkId = std::uint32_t;
using ClassId = int;
using ActionId = std::size_t;

/// Relative-position sensor: measurements live in R^2.
inline constexpr int kMeasurementDim = 2;

/// chi^2 quantile at 0.99 for 2 degrees of freedom, -2 ln(0.01).
inline constexpr double kGateChi2 = 9.210340371976184;

/// Width of the pose confidence regions, in standard deviations.
inline constexpr double kRegionSigmas = 3.0;

struct RobotPose {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;  // (-pi, pi]

    RobotPose() = default;
    RobotPose(double px, double py, double h) : x(px), y(py), heading(normalize_angle(h)) {}
    explicit RobotPose(const Eigen::Vector3d& v) : RobotPose(v.x(), v.y(), v.z()) {}

    [[nodiscard]] Eigen::Vector3d vector() const { return {x, y, heading}; }
    [[nodiscard]] Eigen::Vector2d position() const { return {x, y}; }
};

struct Landmark {
    LandmarkId id = 0;
    ClassId cls = 0;
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
};

/// Known map. Ids are unique; lookups by a contained id always succeed.
class LandmarkMap {
  public:
    LandmarkMap() = default;
    explicit LandmarkMap(std::vector<Landmark> landmarks);

    [[nodiscard]] const std::vector<Landmark>& landmarks() const { return landmarks_; }
    [[nodiscard]] std::size_t size() const { return landmarks_.size(); }
    [[nodiscard]] bool contains(LandmarkId id) const { return index_.contains(id); }
    /// Throws ValidationError for an unknown id.
    [[nodiscard]] const Landmark& at(LandmarkId id) const;

  private:
    std::vector<Landmark> landmarks_;
    std::unordered_map<LandmarkId, std::size_t> index_;
};

struct MotionPrimitive {
    std::string name;
    double dx = 0.0;  // body frame
    double dy = 0.0;
    double dtheta = 0.0;
};

struct MotionModel {
    std::vector<MotionPrimitive> primitives;
    Eigen::Matrix3d process_noise = Eigen::Matrix3d::Identity() * 1e-4;  // world frame, additive

    [[nodiscard]] const MotionPrimitive& primitive(ActionId u) const;
    void validate() const;
};

struct ObservationModel {
    Eigen::Matrix2d noise = Eigen::Matrix2d::Identity() * 0.01;
    double fov_range = 10.0;
    double fov_half_angle = std::numbers::pi;

    void validate() const;
};

struct Measurement {
    Eigen::Vector2d z = Eigen::Vector2d::Zero();
    ClassId cls = 0;
};

struct ObservationSet {
    std::vector<Measurement> measurements;

    [[nodiscard]] std::size_t size() const { return measurements.size(); }
    [[nodiscard]] bool empty() const { return measurements.empty(); }
};

/// One landmark id per measurement, in measurement order.
struct AssociationVector {
    std::vector<LandmarkId> ids;

    [[nodiscard]] std::size_t size() const { return ids.size(); }
    auto operator<=>(const AssociationVector&) const = default;
};

/// Gaussian over (x, y, heading).
struct PoseGaussian {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Identity();
};

/// Over-approximation of the set of poses a component can plausibly occupy:
/// a disc around the mean position and a heading interval.
struct ConfidenceRegion {
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    double radius = 0.0;
    double heading = 0.0;
    double heading_halfwidth = 0.0;
};

struct World {
    LandmarkMap map;
    MotionModel motion;
    ObservationModel observation;
};

class EnumerationCapExceeded : public ValidationError {
  public:
    explicit EnumerationCapExceeded(std::size_t cap);
    std::size_t cap;
};

// --- motion -----------------------------------------------------------------

RobotPose propagate_pose(const MotionModel& model, const RobotPose& x, ActionId u,
                         const std::optional<Eigen::Vector3d>& noise_sample = std::nullopt);

/// d f / d x evaluated at `x` for primitive `u`.
Eigen::Matrix3d motion_jacobian(const MotionModel& model, const RobotPose& x, ActionId u);

// --- observation ------------------------------------------------------------

/// Landmark position expressed in the robot body frame.
Eigen::Vector2d predict_measurement(const RobotPose& x, const Eigen::Vector2d& landmark);

/// d h / d (x, y, heading).
Eigen::Matrix<double, 2, 3> measurement_jacobian(const RobotPose& x, const Eigen::Vector2d& landmark);

bool in_fov(const ObservationModel& model, const RobotPose& x, const Eigen::Vector2d& landmark);

/// Zero-mean Gaussian density of `residual` under covariance `cov`.
double gaussian_density(const Eigen::VectorXd& residual, const Eigen::MatrixXd& cov);

/// Product of per-measurement densities; 0 when an assigned landmark is out of view.
double joint_measurement_likelihood(const World& world, const ObservationSet& z,
                                    const AssociationVector& beta, const RobotPose& x);

/// Supremum of joint_measurement_likelihood over states and associations for n measurements.
double max_joint_likelihood(const ObservationModel& model, std::size_t n);

// --- feasibility --------------------------------------------------------------

ConfidenceRegion confidence_region(const PoseGaussian& g);

/// True when some pose in `region` sees `landmark`. Never false when such a pose exists.
bool visible_from_region(const ObservationModel& model, const ConfidenceRegion& region,
                         const Eigen::Vector2d& landmark);

/// 1 when every landmark in `beta` is visible from the union of `support`, else 0.
int association_feasibility_bound(const World& world, const AssociationVector& beta,
                                  std::span<const ConfidenceRegion> support);

/// Number of class-consistent injective association vectors for `z` whose
/// landmarks are visible from `region`.
double count_feasible_associations(const World& world, const ObservationSet& z,
                                   const ConfidenceRegion& region);

/// Same count evaluated with exact visibility at a single pose.
double count_feasible_associations(const World& world, const ObservationSet& z, const RobotPose& x);

/// Squared Mahalanobis distance of measurement `m` against landmark `l` seen from `g`.
double gate_distance(const World& world, const PoseGaussian& g, const Measurement& m, const Landmark& l);

/// All class-consistent injective association vectors that, for at least one
/// component, pass the per-measurement gate and are visible from that
/// component's confidence region. Sorted lexicographically, deduplicated.
std::vector<AssociationVector> enumerate_associations(const World& world,
                                                      std::span<const PoseGaussian> components,
                                                      const ObservationSet& z, std::size_t cap = 10000);

}  // namespace aliasplan
