#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "aliasplan/belief_core.hpp"
#include "aliasplan/planner.hpp"

namespace aliasplan {

struct PriorMode {
    PoseGaussian gaussian;
    double weight = 0.0;
};

/// Everything needed to run an episode: world, prior, ground truth and planner settings.
struct Scenario {
    std::string name;
    std::vector<std::string> classes;
    World world;
    std::vector<PriorMode> prior;
    RobotPose true_start;
    PlannerConfig planner;
    double prune_threshold = 1e-3;
    std::size_t max_steps = 100;
    double entropy_threshold = 0.05;  // nats

    [[nodiscard]] MixtureBelief initial_belief() const;
    /// Index of the prior mode whose mean is the true start pose.
    [[nodiscard]] std::size_t true_mode() const;
    /// Checks every invariant; throws ValidationError naming the field.
    void validate() const;
};

/// Parses a version-1 scenario document. `source` prefixes error messages.
Scenario parse_scenario(const std::string& text, const std::string& source = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path);
nlohmann::json scenario_to_json(const Scenario& scenario);

/// Path of a scenario shipped in the repository's scenarios/ directory.
std::filesystem::path bundled_scenario(const std::string& file_name);

}  // namespace aliasplan
