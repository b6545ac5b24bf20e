#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "aliasplan/belief_core.hpp"
#include "aliasplan/simplification.hpp"

namespace aliasplan {

enum class RefinementOrder { WeightDescending, Explicit };

struct PlannerConfig {
    std::optional<std::size_t> budget;  // Q, cap on |M_s| * |L|
    std::size_t n_obs_samples = 64;
    std::uint64_t rng_seed = 0;
    RefinementOrder order = RefinementOrder::WeightDescending;
    std::vector<std::size_t> explicit_order;  // used with RefinementOrder::Explicit
    std::size_t planning_step = 0;            // mixes into the sample streams
    std::size_t enumeration_cap = 10000;
    bool compute_exact = false;  // also fill ActionEvaluation::exact in bounded planners

    void validate() const;
};

struct ObservationSample {
    ObservationSet z;
    std::size_t hypothesis = 0;  // provenance
    RobotPose pose;
};

struct ObservationSampleSet {
    ActionId action = 0;
    std::vector<ObservationSample> samples;
};

struct ActionEvaluation {
    ActionId action = 0;
    std::optional<double> exact;
    BoundInterval interval;
    DistilledSelection selection;
    bool guaranteed = false;
};

struct RefinementTraceRow {
    std::size_t selection_size = 0;
    ActionId action = 0;
    double lb = 0.0;
    double ub = 0.0;
};

struct PlanResult {
    ActionId chosen = 0;
    bool guaranteed = false;
    std::vector<ActionEvaluation> evaluations;
    std::vector<RefinementTraceRow> trace;
    std::size_t usable_hypotheses = 0;
};

/// Relative tolerance under which two objective values count as tied.
inline constexpr double kTieTolerance = 1e-9;

/// Draws n future observation sets for action u from the original belief.
/// Stream k is seeded by (seed, step, k) only, so every action sees the same
/// random numbers.
ObservationSampleSet sample_future_observations(const World& world, const MixtureBelief& belief, ActionId u,
                                                std::size_t n, std::uint64_t seed, std::size_t step = 0);

/// Sample mean of the posterior weight entropy after a full update.
double evaluate_objective_exact(const World& world, const MixtureBelief& belief, ActionId u,
                                const ObservationSampleSet& samples, std::size_t enumeration_cap = 10000);

/// Sample mean of LB[eta] LB[H] / eta and UB[eta] UB[H] / eta.
BoundInterval evaluate_objective_bounds(const World& world, const MixtureBelief& belief,
                                        const DistilledSelection& selection, ActionId u,
                                        const ObservationSampleSet& samples, std::size_t enumeration_cap = 10000);

/// Order in which hypotheses enter the selection.
std::vector<std::size_t> refinement_order(std::span<const double> weights, const PlannerConfig& config);

/// Lowest index among the minimal values, treating values within kTieTolerance as equal.
std::size_t argmin_with_ties(std::span<const double> values);

/// Index of the action whose interval is certified to hold the minimum, if any.
std::optional<std::size_t> separated_action(std::span<const BoundInterval> intervals);

/// Full evaluation of every action (no simplification).
PlanResult select_action_exact(const World& world, const MixtureBelief& belief, std::span<const ActionId> actions,
                               const PlannerConfig& config);

/// Greedy distillation until one action is certified best or the selection is full.
PlanResult select_action_guaranteed(const World& world, const MixtureBelief& belief,
                                    std::span<const ActionId> actions, const PlannerConfig& config);

/// As select_action_guaranteed but never lets |M_s| * |L| exceed the budget.
PlanResult select_action_budgeted(const World& world, const MixtureBelief& belief,
                                  std::span<const ActionId> actions, const PlannerConfig& config);

std::vector<ActionId> all_actions(const World& world);

void write_plan_csv_header(std::ostream& out);
void write_plan_csv(std::ostream& out, std::size_t planning_step, const PlanResult& plan);

}  // namespace aliasplan
