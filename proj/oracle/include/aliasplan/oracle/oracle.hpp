#pragma once

// Reference implementations for tests. Everything here is recomputed from the
// model definitions in extended precision; no production routine is called.

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "aliasplan/belief_core.hpp"

namespace aliasplan::oracle {

struct OracleReport {
    std::string quantity;
    long double reference = 0.0L;
    long double candidate = 0.0L;
    long double abs_error = 0.0L;
    long double rel_error = 0.0L;

    [[nodiscard]] bool within(long double rel_tol) const { return rel_error <= rel_tol; }
};

OracleReport compare(std::string quantity, long double reference, long double candidate);
void write_reports(std::ostream& out, std::span<const OracleReport> reports);

/// Double sum over hypotheses then realizations, in reverse order, in long double.
long double brute_force_eta(const ZetaTable& zeta, std::span<const double> weights);

struct ObjectiveOracle {
    long double objective = 0.0L;
    std::vector<std::vector<long double>> posteriors;  // per sample, (j, i) order
};

/// Full-belief objective for the given observation samples: independent
/// prediction, exhaustive association enumeration, zeta, posterior and entropy.
ObjectiveOracle brute_force_objective(const World& world, const MixtureBelief& belief, ActionId u,
                                      std::span<const ObservationSet> samples);

struct MonteCarloEstimate {
    double estimate = 0.0;
    double standard_error = 0.0;
    std::size_t samples = 0;
};

/// Monte-Carlo zeta over poses drawn from `component`, with the association
/// prior evaluated at each sampled pose.
MonteCarloEstimate mc_zeta(const World& world, const PoseGaussian& component, const AssociationVector& beta,
                           const ObservationSet& z, std::size_t k, std::uint64_t seed);

}  // namespace aliasplan::oracle
