#pragma once

#include <filesystem>

#include <json.hpp>

#include "aliasplan/belief_core.hpp"

namespace aliasplan {

/// Structured-text checkpoint of a belief: means, row-major covariances,
/// weights and association histories.
nlohmann::json belief_to_json(const MixtureBelief& belief);
MixtureBelief belief_from_json(const nlohmann::json& doc);

void save_belief(const MixtureBelief& belief, const std::filesystem::path& path);
MixtureBelief load_belief(const std::filesystem::path& path);

}  // namespace aliasplan
