#include "aliasplan/simplification.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <string>

namespace aliasplan {

namespace {

double cell(const ZetaTable& t, std::size_t i, std::size_t j) {
    return t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

bool feasible(const ZetaTable& t, std::size_t i, std::size_t j) {
    return t.feasible(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

// Power-of-two exponent that moves the largest likelihood near 2^900, so sums
// of tiny cells stay out of the subnormal range. Scaling by 2^k is exact.
int scale_exponent(const ZetaTable& t, double sigma) {
    double m = sigma;
    if (t.values.size() > 0) m = std::max(m, t.values.maxCoeff());
    if (!(m > 0.0) || !std::isfinite(m)) return 0;
    return 900 - std::ilogb(m);
}

LikelihoodBounds unscale(LikelihoodBounds b, int k) {
    b.eta_s = std::ldexp(b.eta_s, -k);
    b.lb = std::ldexp(b.lb, -k);
    b.ub = std::ldexp(b.ub, -k);
    b.sigma_alpha_term = std::ldexp(b.sigma_alpha_term, -k);
    return b;
}

// Resolves rounding-level inversions; anything larger is a real bug.
void order_pair(double& lb, double& ub, const char* what) {
    if (lb <= ub) return;
    if (approx_equal(lb, ub, 1e-10)) {
        ub = lb;
        return;
    }
    throw InvariantViolation(std::string(what) + " bounds inverted: lb=" + std::to_string(lb) +
                             " ub=" + std::to_string(ub));
}

}  // namespace

DistilledSelection DistilledSelection::make(std::span<const double> weights, std::vector<std::size_t> selected) {
    if (selected.empty()) throw ValidationError("selection must not be empty");
    DistilledSelection s;
    s.total = weights.size();
    CompensatedSum mass;
    std::vector<bool> seen(weights.size(), false);
    for (std::size_t j : selected) {
        if (j >= weights.size()) throw ValidationError("selection index " + std::to_string(j) + " out of range");
        if (seen[j]) throw ValidationError("selection index " + std::to_string(j) + " repeated");
        seen[j] = true;
        mass += weights[j];
    }
    s.selected = std::move(selected);
    s.mass = mass.value();
    return s;
}

bool DistilledSelection::contains(std::size_t j) const {
    return std::find(selected.begin(), selected.end(), j) != selected.end();
}

MixtureBelief make_simplified(const MixtureBelief& belief, const DistilledSelection& selection) {
    if (selection.selected.empty()) throw ValidationError("selection must not be empty");
    if (!(selection.mass > 0.0)) throw ValidationError("selection carries no prior mass");
    std::vector<HypothesisComponent> comps;
    comps.reserve(selection.selected.size());
    for (std::size_t j : selection.selected) {
        if (j >= belief.size()) throw ValidationError("selection index out of range");
        HypothesisComponent c = belief[j];
        c.weight /= selection.mass;
        comps.push_back(std::move(c));
    }
    return MixtureBelief(std::move(comps), belief.time());
}

std::vector<double> simplified_weights(std::span<const double> weights, const DistilledSelection& selection) {
    std::vector<double> out;
    out.reserve(selection.selected.size());
    for (std::size_t j : selection.selected) out.push_back(selection.mass > 0.0 ? weights[j] / selection.mass : 0.0);
    return out;
}

double eta_simplified(const DistilledSelection& selection, const ZetaTable& table,
                      std::span<const double> simplified) {
    if (simplified.size() != selection.selected.size()) throw ValidationError("simplified weights misaligned");
    CompensatedSum eta;
    for (std::size_t k = 0; k < selection.selected.size(); ++k) {
        const std::size_t j = selection.selected[k];
        if (j >= table.cols()) throw ValidationError("zeta table does not cover the selection");
        for (std::size_t i = 0; i < table.rows(); ++i) eta += cell(table, i, j) * simplified[k];
    }
    return eta.value();
}

double simplified_entropy(const DistilledSelection& selection, const ZetaTable& table,
                          std::span<const double> simplified, double eta_s) {
    if (!(eta_s > 0.0)) return 0.0;
    std::vector<double> posterior;
    posterior.reserve(table.rows() * selection.selected.size());
    for (std::size_t k = 0; k < selection.selected.size(); ++k)
        for (std::size_t i = 0; i < table.rows(); ++i)
            posterior.push_back(cell(table, i, selection.selected[k]) * simplified[k] / eta_s);
    return weights_entropy(posterior);
}

std::vector<int> complement_alphas(const ZetaTable& table, std::span<const double> weights,
                                   const DistilledSelection& selection) {
    std::vector<int> alphas(table.rows(), 0);
    for (std::size_t j = 0; j < table.cols(); ++j) {
        if (selection.contains(j) || !(weights[j] > 0.0)) continue;
        for (std::size_t i = 0; i < table.rows(); ++i)
            if (feasible(table, i, j)) alphas[i] = 1;
    }
    return alphas;
}

std::size_t effective_complement_size(std::span<const double> weights, const DistilledSelection& selection) {
    std::size_t n = 0;
    for (std::size_t j = 0; j < weights.size(); ++j)
        if (weights[j] > 0.0 && !selection.contains(j)) ++n;
    return n;
}

LikelihoodBounds eta_bounds(double eta_s, double w_ms, double sigma, std::span<const int> alphas) {
    if (eta_s < 0.0) throw ValidationError("eta^s must be non-negative");
    if (!(w_ms >= 0.0 && w_ms <= 1.0 + 1e-12)) throw ValidationError("selected mass must lie in [0, 1]");
    long alpha_sum = 0;
    for (int a : alphas) alpha_sum += a;
    LikelihoodBounds b;
    b.eta_s = eta_s;
    b.sigma_alpha_term = sigma * static_cast<double>(alpha_sum);
    b.lb = eta_s * w_ms;
    b.ub = b.lb + std::max(0.0, 1.0 - w_ms) * b.sigma_alpha_term;
    return b;
}

double entropy_identity(const DistilledSelection& selection, const ZetaTable& table,
                        std::span<const double> weights, double eta, double eta_s, double h_s) {
    if (!(eta > 0.0)) throw ValidationError("entropy identity needs eta > 0");
    const double w_ms = selection.mass;
    // Sum_{i, j in M_s} zeta w^s equals eta^s; keep it explicit as written.
    CompensatedSum selected_mass;
    CompensatedSum unselected;
    for (std::size_t j = 0; j < table.cols(); ++j) {
        const bool in = selection.contains(j);
        for (std::size_t i = 0; i < table.rows(); ++i) {
            if (in) {
                if (w_ms > 0.0) selected_mass += cell(table, i, j) * weights[j] / w_ms;
            } else {
                unselected += xlogx(cell(table, i, j) * weights[j] / eta);
            }
        }
    }
    const double simplified_part = eta_s > 0.0 ? eta_s * (h_s - std::log(eta_s)) : 0.0;
    const double log_ratio = w_ms > 0.0 ? std::log(w_ms / eta) : 0.0;
    // Entropies are non-negative; only rounding can push the sum below zero.
    return std::max(0.0, (w_ms / eta) * (simplified_part - selected_mass.value() * log_ratio) - unselected.value());
}

namespace {
// ln(x / y) from mantissas and exponents: no overflow, and no cancellation
// between two large logs when x and y are scaled.
double log_ratio(double x, double y) {
    int ex = 0;
    int ey = 0;
    const double mx = std::frexp(x, &ex);
    const double my = std::frexp(y, &ey);
    return std::log(mx / my) + static_cast<double>(ex - ey) * std::numbers::ln2;
}
}  // namespace

EntropyBounds entropy_bounds(const EntropyBoundInputs& in) {
    if (in.eta_lb > in.eta_ub * (1.0 + 1e-12)) throw ValidationError("eta lower bound exceeds upper bound");
    EntropyBounds b;
    b.h_s = in.h_s;
    if (!(in.eta_lb > 0.0)) {
        b.uninformative = true;
        b.gamma = 1.0;
        b.lb = 0.0;
        b.ub = std::log(static_cast<double>(std::max<std::size_t>(1, in.realization_count * in.hypothesis_count)));
        return b;
    }
    const double a = in.eta_s * in.w_ms;
    b.gamma = std::clamp(1.0 - a / in.eta_ub, 0.0, 1.0);
    double tail = 0.0;
    if (in.complement_size > 0 && b.gamma > 0.0) {
        const double cells = static_cast<double>(in.realization_count) * static_cast<double>(in.complement_size);
        tail = -b.gamma * std::log(b.gamma / cells);
    }

    if (in.eta_lb == a && in.zeta_selected_mass == in.eta_s) {
        // Same expressions with the ln(eta^s) terms cancelled, so a degenerate
        // posterior gives exactly zero instead of rounding noise.
        b.lb = (a / in.eta_ub) * in.h_s;
        b.ub = in.h_s + log_ratio(in.eta_ub, a) + tail;
    } else {
        const double head = in.h_s - std::log(in.eta_s);
        b.lb = (a / in.eta_ub) * head -
               (in.w_ms / in.eta_ub) * in.zeta_selected_mass * log_ratio(in.w_ms, in.eta_lb);
        b.ub = (a / in.eta_lb) * head -
               (in.w_ms / in.eta_lb) * in.zeta_selected_mass * log_ratio(in.w_ms, in.eta_ub) + tail;
    }
    b.lb = std::max(0.0, b.lb);
    order_pair(b.lb, b.ub, "entropy");
    return b;
}

SelectionBoundsResult compute_bounds(const ZetaTable& table, std::span<const double> weights, double sigma,
                                     std::vector<std::size_t> selected) {
    SelectionBoundsResult r;
    r.selection = DistilledSelection::make(weights, std::move(selected));
    const int k = scale_exponent(table, sigma);
    ZetaTable scaled = table;
    scaled.values *= std::ldexp(1.0, k);
    const double scaled_sigma = std::ldexp(sigma, k);
    const auto ws = simplified_weights(weights, r.selection);
    const double eta_s = eta_simplified(r.selection, scaled, ws);
    const double h_s = simplified_entropy(r.selection, scaled, ws, eta_s);
    const auto alphas = complement_alphas(table, weights, r.selection);
    const LikelihoodBounds lik = eta_bounds(eta_s, r.selection.mass, scaled_sigma, alphas);
    r.entropy = entropy_bounds({.eta_s = eta_s,
                                .h_s = h_s,
                                .w_ms = r.selection.mass,
                                .eta_lb = lik.lb,
                                .eta_ub = lik.ub,
                                .realization_count = table.rows(),
                                .hypothesis_count = table.cols(),
                                .complement_size = effective_complement_size(weights, r.selection),
                                .zeta_selected_mass = eta_s});
    r.likelihood = unscale(lik, k);
    return r;
}

IncrementalBounds::IncrementalBounds(const ZetaTable& table, std::span<const double> weights, double sigma,
                                     std::size_t first)
    : table_(&table), weights_(weights.begin(), weights.end()), scale_(scale_exponent(table, sigma)),
      sigma_(std::ldexp(sigma, scale_)) {
    if (weights_.size() != table.cols()) throw ValidationError("zeta table misaligned with weights");
    selection_.total = weights_.size();
    complement_support_.assign(table.rows(), 0);
    for (std::size_t j = 0; j < table.cols(); ++j) {
        if (!(weights_[j] > 0.0)) continue;
        ++complement_;
        for (std::size_t i = 0; i < table.rows(); ++i)
            if (feasible(table, i, j)) ++complement_support_[i];
    }
    for (int c : complement_support_)
        if (c > 0) ++alpha_count_;
    refine(first);
}

SelectionBoundsResult IncrementalBounds::refine(std::size_t j) {
    if (j >= weights_.size()) throw ValidationError("hypothesis index " + std::to_string(j) + " out of range");
    if (selection_.contains(j)) throw ValidationError("hypothesis " + std::to_string(j) + " already selected");
    const double w = weights_[j];
    selection_.selected.push_back(j);
    mass_ += w;
    selection_.mass = mass_.value();
    for (std::size_t i = 0; i < table_->rows(); ++i) {
        const double v = std::ldexp(cell(*table_, i, j), scale_) * w;
        selected_likelihood_ += v;
        if (v > 0.0) selected_xlogx_ += v * (std::log(cell(*table_, i, j)) + std::log(w));
    }
    if (w > 0.0) {
        --complement_;
        for (std::size_t i = 0; i < table_->rows(); ++i) {
            if (!feasible(*table_, i, j)) continue;
            if (--complement_support_[i] == 0) --alpha_count_;
        }
    }
    return current();
}

LikelihoodBounds IncrementalBounds::likelihood() const { return unscale(scaled_likelihood(), scale_); }

LikelihoodBounds IncrementalBounds::scaled_likelihood() const {
    LikelihoodBounds b;
    const double w_ms = selection_.mass;
    const double a = selected_likelihood_.value();
    b.eta_s = w_ms > 0.0 ? a / w_ms : 0.0;
    b.sigma_alpha_term = sigma_ * static_cast<double>(alpha_count_);
    b.lb = b.eta_s * w_ms;
    b.ub = b.lb + std::max(0.0, 1.0 - w_ms) * b.sigma_alpha_term;
    return b;
}

EntropyBounds IncrementalBounds::entropy() const {
    const LikelihoodBounds lik = scaled_likelihood();
    const double a = selected_likelihood_.value();
    // H^s = ln A - (sum v ln v) / A with v = zeta w_j and A = sum v.
    // The log of A is taken in unscaled units without forming 2^-k A.
    double h_s = 0.0;
    if (a > 0.0) {
        int e = 0;
        const double m = std::frexp(a, &e);
        const double log_a = std::log(m) + static_cast<double>(e - scale_) * std::numbers::ln2;
        h_s = std::max(0.0, log_a - selected_xlogx_.value() / a);
    }
    return entropy_bounds({.eta_s = lik.eta_s,
                           .h_s = h_s,
                           .w_ms = selection_.mass,
                           .eta_lb = lik.lb,
                           .eta_ub = lik.ub,
                           .realization_count = table_->rows(),
                           .hypothesis_count = table_->cols(),
                           .complement_size = complement_,
                           .zeta_selected_mass = lik.eta_s});
}

void write_bound_trace_csv(std::ostream& out, std::span<const BoundTraceRow> rows) {
    out << "selection_size,eta_lb,eta_ub,h_lb,h_ub\n";
    out << std::setprecision(17);
    for (const auto& r : rows)
        out << r.selection_size << ',' << r.eta_lb << ',' << r.eta_ub << ',' << r.h_lb << ',' << r.h_ub << '\n';
}

}  // namespace aliasplan
