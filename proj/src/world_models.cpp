#include "aliasplan/world_models.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace aliasplan {

namespace {

bool is_spd(const Eigen::MatrixXd& m) {
    if (!m.isApprox(m.transpose(), 1e-12)) return false;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    return llt.info() == Eigen::Success;
}

double falling_factorial(std::size_t m, std::size_t n) {
    if (n > m) return 0.0;
    double out = 1.0;
    for (std::size_t k = 0; k < n; ++k) out *= static_cast<double>(m - k);
    return out;
}

// Measurement count per class present in `z`.
std::map<ClassId, std::size_t> class_counts(const ObservationSet& z) {
    std::map<ClassId, std::size_t> counts;
    for (const auto& m : z.measurements) ++counts[m.cls];
    return counts;
}

}  // namespace

LandmarkMap::LandmarkMap(std::vector<Landmark> landmarks) : landmarks_(std::move(landmarks)) {
    if (landmarks_.empty()) throw ValidationError("landmark map must not be empty");
    for (std::size_t i = 0; i < landmarks_.size(); ++i) {
        const auto [it, inserted] = index_.emplace(landmarks_[i].id, i);
        if (!inserted) throw ValidationError("duplicate landmark id " + std::to_string(landmarks_[i].id));
    }
}

const Landmark& LandmarkMap::at(LandmarkId id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) throw ValidationError("unknown landmark id " + std::to_string(id));
    return landmarks_[it->second];
}

const MotionPrimitive& MotionModel::primitive(ActionId u) const {
    if (u >= primitives.size()) throw ValidationError("unknown action id " + std::to_string(u));
    return primitives[u];
}

void MotionModel::validate() const {
    if (!is_spd(process_noise)) throw ValidationError("process noise covariance must be symmetric positive definite");
}

void ObservationModel::validate() const {
    if (!is_spd(noise)) throw ValidationError("measurement noise covariance must be symmetric positive definite");
    if (!(fov_range > 0.0)) throw ValidationError("fov range must be positive");
    if (!(fov_half_angle > 0.0 && fov_half_angle <= std::numbers::pi))
        throw ValidationError("fov half-angle must lie in (0, pi]");
}

EnumerationCapExceeded::EnumerationCapExceeded(std::size_t c)
    : ValidationError("association enumeration exceeded the cap of " + std::to_string(c) + " realizations"),
      cap(c) {}

RobotPose propagate_pose(const MotionModel& model, const RobotPose& x, ActionId u,
                         const std::optional<Eigen::Vector3d>& noise_sample) {
    const auto& p = model.primitive(u);
    const double c = std::cos(x.heading);
    const double s = std::sin(x.heading);
    Eigen::Vector3d next(x.x + c * p.dx - s * p.dy, x.y + s * p.dx + c * p.dy, x.heading + p.dtheta);
    if (noise_sample) next += *noise_sample;
    return RobotPose(next);
}

Eigen::Matrix3d motion_jacobian(const MotionModel& model, const RobotPose& x, ActionId u) {
    const auto& p = model.primitive(u);
    const double c = std::cos(x.heading);
    const double s = std::sin(x.heading);
    Eigen::Matrix3d f = Eigen::Matrix3d::Identity();
    f(0, 2) = -s * p.dx - c * p.dy;
    f(1, 2) = c * p.dx - s * p.dy;
    return f;
}

Eigen::Vector2d predict_measurement(const RobotPose& x, const Eigen::Vector2d& landmark) {
    const double c = std::cos(x.heading);
    const double s = std::sin(x.heading);
    const Eigen::Vector2d d = landmark - x.position();
    return {c * d.x() + s * d.y(), -s * d.x() + c * d.y()};
}

Eigen::Matrix<double, 2, 3> measurement_jacobian(const RobotPose& x, const Eigen::Vector2d& landmark) {
    const double c = std::cos(x.heading);
    const double s = std::sin(x.heading);
    const Eigen::Vector2d h = predict_measurement(x, landmark);
    Eigen::Matrix<double, 2, 3> jac;
    jac << -c, -s, h.y(),
            s, -c, -h.x();
    return jac;
}

bool in_fov(const ObservationModel& model, const RobotPose& x, const Eigen::Vector2d& landmark) {
    const Eigen::Vector2d rel = predict_measurement(x, landmark);
    if (rel.norm() > model.fov_range) return false;
    if (model.fov_half_angle >= std::numbers::pi) return true;
    return std::abs(std::atan2(rel.y(), rel.x())) <= model.fov_half_angle;
}

double gaussian_density(const Eigen::VectorXd& residual, const Eigen::MatrixXd& cov) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw InvariantViolation("covariance is not positive definite");
    const Eigen::VectorXd w = llt.matrixL().solve(residual);
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < cov.rows(); ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
    const double k = static_cast<double>(residual.size());
    return std::exp(-0.5 * w.squaredNorm() - 0.5 * log_det - 0.5 * k * std::log(2.0 * std::numbers::pi));
}

double joint_measurement_likelihood(const World& world, const ObservationSet& z,
                                    const AssociationVector& beta, const RobotPose& x) {
    if (beta.size() != z.size())
        throw ValidationError("association length " + std::to_string(beta.size()) +
                              " does not match measurement count " + std::to_string(z.size()));
    double product = 1.0;
    for (std::size_t r = 0; r < z.size(); ++r) {
        const auto& l = world.map.at(beta.ids[r]);
        if (!in_fov(world.observation, x, l.position)) return 0.0;
        product *= gaussian_density(z.measurements[r].z - predict_measurement(x, l.position), world.observation.noise);
    }
    return product;
}

double max_joint_likelihood(const ObservationModel& model, std::size_t n) {
    const double peak =
        1.0 / (std::pow(2.0 * std::numbers::pi, kMeasurementDim / 2.0) * std::sqrt(model.noise.determinant()));
    return std::pow(peak, static_cast<double>(n));
}

ConfidenceRegion confidence_region(const PoseGaussian& g) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(g.covariance.topLeftCorner<2, 2>());
    const double lambda_max = std::max(0.0, es.eigenvalues().maxCoeff());
    ConfidenceRegion region;
    region.center = g.mean.head<2>();
    region.radius = kRegionSigmas * std::sqrt(lambda_max);
    region.heading = normalize_angle(g.mean.z());
    region.heading_halfwidth = kRegionSigmas * std::sqrt(std::max(0.0, g.covariance(2, 2)));
    return region;
}

bool visible_from_region(const ObservationModel& model, const ConfidenceRegion& region,
                         const Eigen::Vector2d& landmark) {
    const Eigen::Vector2d d = landmark - region.center;
    const double dist = d.norm();
    if (dist > model.fov_range + region.radius) return false;
    if (model.fov_half_angle >= std::numbers::pi || region.heading_halfwidth >= std::numbers::pi) return true;
    if (dist <= region.radius) return true;
    // Moving the pose inside the disc turns the bearing by at most asin(radius / dist).
    const double slack = std::asin(region.radius / dist);
    const double off = std::abs(normalize_angle(std::atan2(d.y(), d.x()) - region.heading));
    return off <= model.fov_half_angle + region.heading_halfwidth + slack;
}

int association_feasibility_bound(const World& world, const AssociationVector& beta,
                                  std::span<const ConfidenceRegion> support) {
    if (beta.ids.empty()) return 1;
    for (const auto& region : support) {
        const bool all = std::all_of(beta.ids.begin(), beta.ids.end(), [&](LandmarkId id) {
            return visible_from_region(world.observation, region, world.map.at(id).position);
        });
        if (all) return 1;
    }
    return 0;
}

double count_feasible_associations(const World& world, const ObservationSet& z, const ConfidenceRegion& region) {
    double count = 1.0;
    for (const auto& [cls, n] : class_counts(z)) {
        std::size_t m = 0;
        for (const auto& l : world.map.landmarks())
            if (l.cls == cls && visible_from_region(world.observation, region, l.position)) ++m;
        count *= falling_factorial(m, n);
    }
    return count;
}

double count_feasible_associations(const World& world, const ObservationSet& z, const RobotPose& x) {
    double count = 1.0;
    for (const auto& [cls, n] : class_counts(z)) {
        std::size_t m = 0;
        for (const auto& l : world.map.landmarks())
            if (l.cls == cls && in_fov(world.observation, x, l.position)) ++m;
        count *= falling_factorial(m, n);
    }
    return count;
}

double gate_distance(const World& world, const PoseGaussian& g, const Measurement& m, const Landmark& l) {
    const RobotPose pose(g.mean);
    const auto jac = measurement_jacobian(pose, l.position);
    const Eigen::Matrix2d s = jac * g.covariance * jac.transpose() + world.observation.noise;
    const Eigen::Vector2d r = m.z - predict_measurement(pose, l.position);
    return r.dot(s.ldlt().solve(r));
}

std::vector<AssociationVector> enumerate_associations(const World& world,
                                                      std::span<const PoseGaussian> components,
                                                      const ObservationSet& z, std::size_t cap) {
    std::set<AssociationVector> found;
    const std::size_t n = z.size();
    if (n == 0) return {AssociationVector{}};

    for (const auto& g : components) {
        const ConfidenceRegion region = confidence_region(g);
        std::vector<std::vector<LandmarkId>> candidates(n);
        bool any_empty = false;
        for (std::size_t r = 0; r < n; ++r) {
            for (const auto& l : world.map.landmarks()) {
                if (l.cls != z.measurements[r].cls) continue;
                if (!visible_from_region(world.observation, region, l.position)) continue;
                if (gate_distance(world, g, z.measurements[r], l) > kGateChi2) continue;
                candidates[r].push_back(l.id);
            }
            if (candidates[r].empty()) {
                any_empty = true;
                break;
            }
        }
        if (any_empty) continue;

        AssociationVector current;
        current.ids.resize(n);
        std::vector<LandmarkId> used;
        auto recurse = [&](auto&& self, std::size_t r) -> void {
            if (r == n) {
                found.insert(current);
                if (found.size() > cap) throw EnumerationCapExceeded(cap);
                return;
            }
            for (LandmarkId id : candidates[r]) {
                if (std::find(used.begin(), used.end(), id) != used.end()) continue;
                current.ids[r] = id;
                used.push_back(id);
                self(self, r + 1);
                used.pop_back();
            }
        };
        recurse(recurse, 0);
    }
    return {found.begin(), found.end()};
}

}  // namespace aliasplan
