#pragma once

#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "aliasplan/scenario.hpp"

namespace aliasplan {

enum class Method { DaBsp, D2aBsp, D2aBspBudget };

/// Accepts "DA-BSP", "D2A-BSP" and "D2A-BSP-budget".
Method parse_method(const std::string& text);
std::string method_name(Method m);

/// Ground truth. The agent only ever receives the ObservationSet returned by
/// step(); the true pose and the true associations stay in here.
class WorldSimulator {
  public:
    WorldSimulator(World world, RobotPose start, std::uint64_t seed);

    ObservationSet step(ActionId u);
    [[nodiscard]] const RobotPose& true_pose() const { return pose_; }

  private:
    World world_;
    RobotPose pose_;
    std::mt19937_64 rng_;
};

/// Moves the true pose with sampled process noise and observes every visible
/// landmark with sampled measurement noise, in shuffled order.
std::pair<RobotPose, ObservationSet> step_world(const World& world, const RobotPose& pose, ActionId u,
                                                std::mt19937_64& rng);

struct EpisodeStep {
    std::size_t step = 0;
    ActionId action = 0;
    std::string action_name;
    bool guaranteed = false;
    std::size_t selection_size = 0;
    double entropy_before = 0.0;
    double entropy_after = 0.0;
    std::size_t components = 0;
    std::size_t measurements = 0;
    bool observation_rejected = false;  // zero likelihood under every hypothesis
    double planning_time_s = 0.0;  // wall clock
    double planning_cpu_s = 0.0;   // process CPU time, steadier on shared machines
};

struct EpisodeReport {
    Method method = Method::DaBsp;
    std::vector<EpisodeStep> steps;
    double final_entropy = 0.0;
    bool disambiguated = false;
    MixtureBelief final_belief;
    RobotPose final_true_pose;
    double total_planning_time_s = 0.0;
};

struct EpisodeOptions {
    std::size_t max_steps = 0;  // 0 keeps the scenario value
};

/// Plans with `method`, acts, observes, updates and prunes until the weight
/// entropy drops below the scenario threshold or max steps is reached.
EpisodeReport run_disambiguation(const Scenario& scenario, Method method, std::uint64_t seed,
                                 const EpisodeOptions& options = {});

/// Process CPU time in seconds.
double cpu_seconds();

/// Plans one session from `belief` with the given method.
PlanResult plan_once(const Scenario& scenario, const MixtureBelief& belief, Method method, std::uint64_t seed,
                     std::size_t step);

/// Per-step CSV without wall-clock columns, so equal seeds give equal bytes.
void write_episode_csv(std::ostream& out, const EpisodeReport& report);
void write_episode_timing_csv(std::ostream& out, const EpisodeReport& report);

}  // namespace aliasplan
