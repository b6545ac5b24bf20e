#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include "aliasplan/belief_core.hpp"

namespace aliasplan {

/// Ordered subset of hypothesis indices kept for planning, with its prior mass.
struct DistilledSelection {
    std::vector<std::size_t> selected;
    std::size_t total = 0;  // |M|
    double mass = 0.0;      // sum of the selected prior weights

    /// Validates indices (non-empty, in range, unique) and sums the mass.
    static DistilledSelection make(std::span<const double> weights, std::vector<std::size_t> selected);

    [[nodiscard]] std::size_t complement_size() const { return total - selected.size(); }
    [[nodiscard]] bool contains(std::size_t j) const;
    [[nodiscard]] bool is_full() const { return selected.size() == total; }
};

struct LikelihoodBounds {
    double eta_s = 0.0;
    double lb = 0.0;
    double ub = 0.0;
    double sigma_alpha_term = 0.0;  // sigma * sum_i alpha_i
};

struct EntropyBounds {
    double h_s = 0.0;
    double gamma = 0.0;
    double lb = 0.0;
    double ub = 0.0;
    /// Set when the selected hypotheses explain nothing (eta lower bound is
    /// zero); the bounds are then the trivial [0, ln(|L| |M|)].
    bool uninformative = false;
};

struct BoundInterval {
    double lb = 0.0;
    double ub = 0.0;
};

/// Restricts the belief to the selection and renormalises the weights.
MixtureBelief make_simplified(const MixtureBelief& belief, const DistilledSelection& selection);

/// w_j / mass for j in the selection, in selection order.
std::vector<double> simplified_weights(std::span<const double> weights, const DistilledSelection& selection);

/// eta^s = sum_i sum_{j in M_s} zeta(i, j) w^s_j; `simplified` is aligned with `selection.selected`.
double eta_simplified(const DistilledSelection& selection, const ZetaTable& table,
                      std::span<const double> simplified);

/// Entropy of the simplified posterior (weights zeta w^s / eta^s).
double simplified_entropy(const DistilledSelection& selection, const ZetaTable& table,
                          std::span<const double> simplified, double eta_s);

/// alpha_i = 1 when realization i is visible from some unselected hypothesis
/// with positive weight.
std::vector<int> complement_alphas(const ZetaTable& table, std::span<const double> weights,
                                   const DistilledSelection& selection);

/// Unselected hypotheses with positive weight.
std::size_t effective_complement_size(std::span<const double> weights, const DistilledSelection& selection);

LikelihoodBounds eta_bounds(double eta_s, double w_ms, double sigma, std::span<const int> alphas);

/// Entropy of the full posterior, assembled from the simplified quantities
/// and the unselected terms. Throws ValidationError when eta == 0.
double entropy_identity(const DistilledSelection& selection, const ZetaTable& table,
                        std::span<const double> weights, double eta, double eta_s, double h_s);

struct EntropyBoundInputs {
    double eta_s = 0.0;
    double h_s = 0.0;
    double w_ms = 1.0;
    double eta_lb = 0.0;
    double eta_ub = 0.0;
    std::size_t realization_count = 1;  // |L|
    std::size_t hypothesis_count = 1;   // |M|
    std::size_t complement_size = 0;    // |not M_s|
    double zeta_selected_mass = 0.0;    // sum_{i, j in M_s} zeta w^s = eta^s
};

EntropyBounds entropy_bounds(const EntropyBoundInputs& in);

/// Both bound pairs computed directly from the table for one selection.
struct SelectionBoundsResult {
    DistilledSelection selection;
    LikelihoodBounds likelihood;
    EntropyBounds entropy;
};

SelectionBoundsResult compute_bounds(const ZetaTable& table, std::span<const double> weights, double sigma,
                                     std::vector<std::size_t> selected);

/// Incrementally refined bounds for one observation. Adding a hypothesis
/// costs O(|L|): the selected mass, the selected likelihood mass, its
/// x ln x sum and the per-realization complement support are cached.
class IncrementalBounds {
  public:
    IncrementalBounds(const ZetaTable& table, std::span<const double> weights, double sigma, std::size_t first);

    /// Adds hypothesis `j`; throws ValidationError if it is already selected.
    SelectionBoundsResult refine(std::size_t j);

    [[nodiscard]] const DistilledSelection& selection() const { return selection_; }
    [[nodiscard]] LikelihoodBounds likelihood() const;
    [[nodiscard]] EntropyBounds entropy() const;
    [[nodiscard]] SelectionBoundsResult current() const { return {selection_, likelihood(), entropy()}; }

  private:
    // Sums are kept in units of 2^-scale_ to avoid subnormal intermediates.
    [[nodiscard]] LikelihoodBounds scaled_likelihood() const;

    const ZetaTable* table_;
    std::vector<double> weights_;
    int scale_;
    double sigma_;
    DistilledSelection selection_;
    CompensatedSum mass_;
    CompensatedSum selected_likelihood_;  // sum zeta w_j over selected cells = eta^s * w_ms
    CompensatedSum selected_xlogx_;       // sum (zeta w_j scaled) ln(zeta w_j)
    std::vector<int> complement_support_;
    std::size_t alpha_count_ = 0;
    std::size_t complement_ = 0;
};

struct BoundTraceRow {
    std::size_t selection_size = 0;
    double eta_lb = 0.0;
    double eta_ub = 0.0;
    double h_lb = 0.0;
    double h_ub = 0.0;
};

void write_bound_trace_csv(std::ostream& out, std::span<const BoundTraceRow> rows);

}  // namespace aliasplan
