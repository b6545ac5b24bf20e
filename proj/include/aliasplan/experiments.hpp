#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "aliasplan/simulation.hpp"

namespace aliasplan {

// --- bound fuzzing ------------------------------------------------------------

/// Random (zeta, w, subset) instance. Feasible cells satisfy 0 < zeta <= sigma,
/// infeasible ones are zero, and at least one positive-weight cell is feasible.
struct FuzzInstance {
    ZetaTable table;
    std::vector<double> weights;
    double sigma = 1.0;
    std::vector<std::size_t> selection;  // random non-empty subset in random order
};

FuzzInstance random_instance(std::mt19937_64& rng, std::size_t max_realizations = 8, std::size_t max_hypotheses = 6);

/// a <= b up to `rel` relative to the larger magnitude.
bool leq_rel(double a, double b, double rel);
/// Same with a floor of one nat on the scale, for entropies that may be zero.
bool leq_entropy(double a, double b, double rel);

struct VerifyReport {
    std::size_t instances = 0;
    std::size_t eta_violations = 0;
    std::size_t entropy_violations = 0;
    std::size_t identity_failures = 0;
    std::size_t split_failures = 0;
    std::size_t log_sum_failures = 0;
    std::size_t convergence_failures = 0;
    std::size_t refine_failures = 0;
    std::size_t eta_width_increases = 0;
    std::size_t entropy_width_increases = 0;  // logged only
    std::size_t uninformative = 0;
    double max_identity_error = 0.0;
    double max_refine_error = 0.0;

    [[nodiscard]] std::size_t hard_failures() const {
        return eta_violations + entropy_violations + identity_failures + split_failures + log_sum_failures +
               convergence_failures + refine_failures + eta_width_increases;
    }
};

/// Checks sandwich, identity, convergence and refinement consistency on n instances.
VerifyReport verify_bounds(std::size_t n, std::uint64_t seed);
void write_verify_csv(std::ostream& out, const VerifyReport& report);

// --- runtime experiment -------------------------------------------------------

/// Aliased world with `m0` identical rooms and one prior mode per room.
Scenario make_aliased_scenario(std::size_t m0, std::size_t n_obs_samples = 32);

struct RuntimeRow {
    std::size_t m0 = 0;
    Method method = Method::DaBsp;
    double mean_time_s = 0.0;  // process CPU time per planning session
    double std_time_s = 0.0;
    std::size_t sessions = 0;
};

struct RuntimeOptions {
    std::vector<std::size_t> m0 = {2, 4, 8};
    std::size_t seeds = 10;
    std::uint64_t base_seed = 1;
    std::size_t steps = 3;
    std::size_t n_obs_samples = 32;
};

std::vector<RuntimeRow> experiment_runtime(const RuntimeOptions& options);
void write_runtime_csv(std::ostream& out, const std::vector<RuntimeRow>& rows);

// --- budget experiment --------------------------------------------------------

struct BudgetRow {
    std::string section;  // "selection", "full" or "budgeted"
    std::string label;    // selection or refinement order, e.g. "{1}" or "order=1,0"
    ActionId action = 0;
    std::string action_name;
    BoundInterval interval;
    std::optional<double> exact;
    std::string verdict;
};

struct BudgetReport {
    std::vector<BudgetRow> rows;
    /// Per single-hypothesis selection: certified best action, if the intervals separate.
    std::vector<std::optional<ActionId>> selection_verdicts;
    ActionId exact_argmin = 0;
    PlanResult budgeted_true_first;   // refinement starts at the true mode
    PlanResult budgeted_other_first;  // refinement starts elsewhere
};

BudgetReport experiment_budget(const Scenario& scenario);
void write_budget_csv(std::ostream& out, const BudgetReport& report);

}  // namespace aliasplan
