#include "aliasplan/planner.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <random>

namespace aliasplan {

namespace {

constexpr int kMaxNoiseDraws = 64;
constexpr int kMaxPoseDraws = 256;

std::mt19937_64 sample_stream(std::uint64_t seed, std::size_t step, std::size_t k) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(k), 0x5eedu};
    return std::mt19937_64(seq);
}

std::size_t draw_index(std::span<const double> weights, double u) {
    CompensatedSum cum;
    std::size_t last_positive = 0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        if (!(weights[j] > 0.0)) continue;
        last_positive = j;
        cum += weights[j];
        if (u < cum.value()) return j;
    }
    return last_positive;
}

// Pose within the 3-sigma ellipsoid of g, so that whatever it sees is also
// visible from g's confidence region.
Eigen::Vector3d draw_truncated(const PoseGaussian& g, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    const Eigen::Matrix3d chol = g.covariance.llt().matrixL();
    for (;;) {
        const Eigen::Vector3d e(normal(rng), normal(rng), normal(rng));
        if (e.squaredNorm() <= kRegionSigmas * kRegionSigmas) return g.mean + chol * e;
    }
}

std::optional<ObservationSet> draw_observation(const World& world, const PoseGaussian& g, const RobotPose& x,
                                               std::mt19937_64& rng) {
    std::vector<const Landmark*> visible;
    for (const auto& l : world.map.landmarks())
        if (in_fov(world.observation, x, l.position)) visible.push_back(&l);
    std::shuffle(visible.begin(), visible.end(), rng);

    std::normal_distribution<double> normal;
    const Eigen::Matrix2d chol = world.observation.noise.llt().matrixL();
    ObservationSet z;
    for (const Landmark* l : visible) {
        const Eigen::Vector2d clean = predict_measurement(x, l->position);
        bool accepted = false;
        for (int attempt = 0; attempt < kMaxNoiseDraws && !accepted; ++attempt) {
            const Measurement m{clean + chol * Eigen::Vector2d(normal(rng), normal(rng)), l->cls};
            if (gate_distance(world, g, m, *l) <= kGateChi2) {
                z.measurements.push_back(m);
                accepted = true;
            }
        }
        if (!accepted) return std::nullopt;
    }
    return z;
}

struct SampleBounds {
    ZetaTable table;
    double eta = 0.0;
    double sigma = 1.0;
};

SampleBounds prepare_sample(const World& world, std::span<const PoseGaussian> propagated,
                            std::span<const double> weights, const ObservationSet& z, std::size_t cap) {
    SampleBounds s;
    s.table = build_zeta_table(world, propagated, z, cap);
    s.eta = marginal_likelihood(weights, s.table);
    if (!(s.eta > 0.0)) throw ObservationImpossible("sampled observation has zero likelihood");
    s.sigma = max_joint_likelihood(world.observation, z.size());
    return s;
}

BoundInterval combine(std::span<const SampleBounds> samples, std::span<const IncrementalBounds> bounds) {
    CompensatedSum lb;
    CompensatedSum ub;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const LikelihoodBounds lik = bounds[k].likelihood();
        const EntropyBounds ent = bounds[k].entropy();
        lb += lik.lb * ent.lb / samples[k].eta;
        ub += lik.ub * ent.ub / samples[k].eta;
    }
    const double n = static_cast<double>(samples.size());
    BoundInterval out{lb.value() / n, ub.value() / n};
    if (out.lb > out.ub) {
        if (!approx_equal(out.lb, out.ub, 1e-10)) throw InvariantViolation("objective bounds inverted");
        out.ub = out.lb;
    }
    return out;
}

bool tied(double a, double b) { return approx_equal(a, b, kTieTolerance); }

PlanResult plan_with_bounds(const World& world, const MixtureBelief& belief, std::span<const ActionId> actions,
                            const PlannerConfig& config, bool use_budget) {
    config.validate();
    if (actions.empty()) throw ValidationError("no candidate actions");
    const std::vector<double> weights = belief.weights();
    const std::vector<std::size_t> order = refinement_order(weights, config);

    std::vector<ObservationSampleSet> sample_sets;
    std::vector<std::vector<SampleBounds>> prepared(actions.size());
    std::size_t max_realizations = 1;
    for (std::size_t a = 0; a < actions.size(); ++a) {
        sample_sets.push_back(sample_future_observations(world, belief, actions[a], config.n_obs_samples,
                                                         config.rng_seed, config.planning_step));
        const std::vector<PoseGaussian> propagated = predict(world, belief, actions[a]).gaussians();
        prepared[a].reserve(config.n_obs_samples);
        for (const auto& s : sample_sets[a].samples) {
            prepared[a].push_back(prepare_sample(world, propagated, weights, s.z, config.enumeration_cap));
            max_realizations = std::max(max_realizations, prepared[a].back().table.rows());
        }
    }

    PlanResult result;
    result.usable_hypotheses = belief.size();
    if (use_budget) {
        if (!config.budget) throw ValidationError("budgeted planning needs a budget Q");
        result.usable_hypotheses = std::clamp<std::size_t>(*config.budget / max_realizations, 1, belief.size());
    }

    std::vector<std::vector<IncrementalBounds>> bounds(actions.size());
    for (std::size_t a = 0; a < actions.size(); ++a) {
        bounds[a].reserve(prepared[a].size());
        for (const auto& s : prepared[a]) bounds[a].emplace_back(s.table, weights, s.sigma, order.front());
    }

    std::vector<BoundInterval> intervals(actions.size());
    std::size_t used = 1;
    for (;;) {
        for (std::size_t a = 0; a < actions.size(); ++a) {
            intervals[a] = combine(prepared[a], bounds[a]);
            result.trace.push_back({used, actions[a], intervals[a].lb, intervals[a].ub});
        }
        if (const auto best = separated_action(intervals)) {
            result.chosen = *best;
            result.guaranteed = true;
            break;
        }
        if (used == belief.size()) {
            // Bounds have collapsed onto the exact values.
            std::vector<double> mid;
            for (const auto& iv : intervals) mid.push_back(0.5 * (iv.lb + iv.ub));
            result.chosen = argmin_with_ties(mid);
            result.guaranteed = true;
            break;
        }
        if (used == result.usable_hypotheses) {
            std::vector<double> ubs;
            for (const auto& iv : intervals) ubs.push_back(iv.ub);
            result.chosen = argmin_with_ties(ubs);
            result.guaranteed = false;
            break;
        }
        for (auto& per_action : bounds)
            for (auto& b : per_action) b.refine(order[used]);
        ++used;
    }

    for (std::size_t a = 0; a < actions.size(); ++a) {
        ActionEvaluation ev;
        ev.action = actions[a];
        ev.interval = intervals[a];
        ev.selection = bounds[a].front().selection();
        ev.guaranteed = result.guaranteed && a == result.chosen;
        if (config.compute_exact)
            ev.exact = evaluate_objective_exact(world, belief, actions[a], sample_sets[a], config.enumeration_cap);
        result.evaluations.push_back(std::move(ev));
    }
    result.chosen = actions[result.chosen];
    return result;
}

}  // namespace

void PlannerConfig::validate() const {
    if (n_obs_samples == 0) throw ValidationError("n_obs_samples must be at least 1");
    if (budget && *budget == 0) throw ValidationError("budget Q must be positive");
    if (enumeration_cap == 0) throw ValidationError("enumeration cap must be positive");
}

ObservationSampleSet sample_future_observations(const World& world, const MixtureBelief& belief, ActionId u,
                                                std::size_t n, std::uint64_t seed, std::size_t step) {
    const MixtureBelief predicted = predict(world, belief, u);
    const std::vector<double> weights = predicted.weights();
    ObservationSampleSet out;
    out.action = u;
    out.samples.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::mt19937_64 rng = sample_stream(seed, step, k);
        std::uniform_real_distribution<double> uniform(0.0, 1.0);
        ObservationSample s;
        s.hypothesis = draw_index(weights, uniform(rng));
        const PoseGaussian& g = predicted[s.hypothesis].gaussian;
        std::optional<ObservationSet> z;
        for (int attempt = 0; attempt < kMaxPoseDraws && !z; ++attempt) {
            s.pose = RobotPose(draw_truncated(g, rng));
            z = draw_observation(world, g, s.pose, rng);
        }
        if (!z) {
            // Noise-free view from the component mean always passes its own gate.
            s.pose = RobotPose(g.mean);
            ObservationSet clean;
            for (const auto& l : world.map.landmarks())
                if (in_fov(world.observation, s.pose, l.position))
                    clean.measurements.push_back({predict_measurement(s.pose, l.position), l.cls});
            z = std::move(clean);
        }
        s.z = std::move(*z);
        out.samples.push_back(std::move(s));
    }
    return out;
}

double evaluate_objective_exact(const World& world, const MixtureBelief& belief, ActionId u,
                                const ObservationSampleSet& samples, std::size_t enumeration_cap) {
    if (samples.samples.empty()) throw ValidationError("no observation samples");
    CompensatedSum total;
    for (const auto& s : samples.samples) {
        const UpdateResult r = update(world, belief, u, s.z, enumeration_cap);
        total += weights_entropy(r.belief.weights());
    }
    return total.value() / static_cast<double>(samples.samples.size());
}

BoundInterval evaluate_objective_bounds(const World& world, const MixtureBelief& belief,
                                        const DistilledSelection& selection, ActionId u,
                                        const ObservationSampleSet& samples, std::size_t enumeration_cap) {
    if (samples.samples.empty()) throw ValidationError("no observation samples");
    if (selection.total != belief.size()) throw ValidationError("selection does not match the belief");
    const std::vector<double> weights = belief.weights();
    const std::vector<PoseGaussian> propagated = predict(world, belief, u).gaussians();
    CompensatedSum lb;
    CompensatedSum ub;
    for (const auto& s : samples.samples) {
        const SampleBounds sb = prepare_sample(world, propagated, weights, s.z, enumeration_cap);
        const SelectionBoundsResult r = compute_bounds(sb.table, weights, sb.sigma, selection.selected);
        lb += r.likelihood.lb * r.entropy.lb / sb.eta;
        ub += r.likelihood.ub * r.entropy.ub / sb.eta;
    }
    const double n = static_cast<double>(samples.samples.size());
    BoundInterval out{lb.value() / n, ub.value() / n};
    if (out.lb > out.ub) {
        if (!approx_equal(out.lb, out.ub, 1e-10)) throw InvariantViolation("objective bounds inverted");
        out.ub = out.lb;
    }
    return out;
}

std::vector<std::size_t> refinement_order(std::span<const double> weights, const PlannerConfig& config) {
    if (config.order == RefinementOrder::Explicit) {
        std::vector<std::size_t> order = config.explicit_order;
        std::vector<bool> seen(weights.size(), false);
        for (std::size_t j : order) {
            if (j >= weights.size() || seen[j]) throw ValidationError("refinement order is not a permutation");
            seen[j] = true;
        }
        // Unlisted hypotheses follow in weight order.
        PlannerConfig rest;
        for (std::size_t j : refinement_order(weights, rest))
            if (!seen[j]) order.push_back(j);
        return order;
    }
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
    return order;
}

std::size_t argmin_with_ties(std::span<const double> values) {
    if (values.empty()) throw ValidationError("argmin of an empty range");
    std::size_t best = 0;
    for (std::size_t a = 1; a < values.size(); ++a)
        if (values[a] < values[best] && !tied(values[a], values[best])) best = a;
    return best;
}

std::optional<std::size_t> separated_action(std::span<const BoundInterval> intervals) {
    for (std::size_t a = 0; a < intervals.size(); ++a) {
        bool ok = true;
        for (std::size_t b = 0; b < intervals.size() && ok; ++b) {
            if (b == a) continue;
            if (!(intervals[a].ub <= intervals[b].lb)) ok = false;
            // A lower-indexed rival wins ties, so it must be beaten by a clear margin.
            else if (b < a && tied(intervals[a].ub, intervals[b].lb)) ok = false;
        }
        if (ok) return a;
    }
    return std::nullopt;
}

PlanResult select_action_exact(const World& world, const MixtureBelief& belief, std::span<const ActionId> actions,
                               const PlannerConfig& config) {
    config.validate();
    if (actions.empty()) throw ValidationError("no candidate actions");
    PlanResult result;
    result.usable_hypotheses = belief.size();
    std::vector<double> values;
    std::vector<std::size_t> all(belief.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const DistilledSelection full = DistilledSelection::make(belief.weights(), all);
    for (ActionId u : actions) {
        const auto samples =
            sample_future_observations(world, belief, u, config.n_obs_samples, config.rng_seed, config.planning_step);
        const double j = evaluate_objective_exact(world, belief, u, samples, config.enumeration_cap);
        values.push_back(j);
        result.evaluations.push_back({u, j, {j, j}, full, false});
        result.trace.push_back({belief.size(), u, j, j});
    }
    const std::size_t best = argmin_with_ties(values);
    result.evaluations[best].guaranteed = true;
    result.chosen = actions[best];
    result.guaranteed = true;
    return result;
}

PlanResult select_action_guaranteed(const World& world, const MixtureBelief& belief,
                                    std::span<const ActionId> actions, const PlannerConfig& config) {
    return plan_with_bounds(world, belief, actions, config, false);
}

PlanResult select_action_budgeted(const World& world, const MixtureBelief& belief,
                                  std::span<const ActionId> actions, const PlannerConfig& config) {
    return plan_with_bounds(world, belief, actions, config, true);
}

std::vector<ActionId> all_actions(const World& world) {
    std::vector<ActionId> out(world.motion.primitives.size());
    std::iota(out.begin(), out.end(), ActionId{0});
    return out;
}

void write_plan_csv_header(std::ostream& out) {
    out << "planning_step,action,lb,ub,exact,selection_size,guaranteed\n";
}

void write_plan_csv(std::ostream& out, std::size_t planning_step, const PlanResult& plan) {
    const auto precision = out.precision(17);
    for (const auto& ev : plan.evaluations) {
        out << planning_step << ',' << ev.action << ',' << ev.interval.lb << ',' << ev.interval.ub << ',';
        if (ev.exact) out << *ev.exact;
        out << ',' << ev.selection.selected.size() << ',' << (ev.guaranteed ? 1 : 0) << '\n';
    }
    out.precision(precision);
}

}  // namespace aliasplan
