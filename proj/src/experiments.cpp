#include "aliasplan/experiments.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>

namespace aliasplan {

namespace {

bool close_rel(double a, double b, double rel) {
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + 1e-300;
}

double posterior_entropy(const FuzzInstance& in, double eta) {
    return weights_entropy(posterior_weights(in.weights, in.table, eta));
}

}  // namespace

bool leq_rel(double a, double b, double rel) { return a <= b + rel * std::max(std::abs(a), std::abs(b)) + 1e-300; }

bool leq_entropy(double a, double b, double rel) { return a <= b + rel * std::max({std::abs(a), std::abs(b), 1.0}); }

FuzzInstance random_instance(std::mt19937_64& rng, std::size_t max_realizations, std::size_t max_hypotheses) {
    std::uniform_int_distribution<std::size_t> rows_dist(1, max_realizations);
    std::uniform_int_distribution<std::size_t> cols_dist(1, max_hypotheses);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> power(1, 6);

    FuzzInstance in;
    const std::size_t rows = rows_dist(rng);
    const std::size_t cols = cols_dist(rng);
    in.sigma = std::exp(-3.0 + 8.0 * unit(rng));

    in.weights.resize(cols);
    for (auto& w : in.weights) w = unit(rng) < 0.15 ? 0.0 : -std::log(1.0 - unit(rng));
    if (std::all_of(in.weights.begin(), in.weights.end(), [](double w) { return w == 0.0; })) in.weights[0] = 1.0;
    CompensatedSum total;
    for (double w : in.weights) total += w;
    for (auto& w : in.weights) w /= total.value();

    in.table.realizations.resize(rows);
    for (std::size_t i = 0; i < rows; ++i) in.table.realizations[i].ids = {static_cast<LandmarkId>(i)};
    in.table.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    in.table.feasible.setConstant(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols), false);
    const double density = 0.2 + 0.8 * unit(rng);
    for (Eigen::Index i = 0; i < in.table.values.rows(); ++i)
        for (Eigen::Index j = 0; j < in.table.values.cols(); ++j) {
            if (unit(rng) >= density) continue;
            in.table.feasible(i, j) = true;
            // Feasible cells may still carry a vanishing likelihood.
            // Also a few cells near the bottom of the double range.
            const double r = unit(rng);
            if (r < 0.05)
                in.table.values(i, j) = 0.0;
            else if (r < 0.1)
                in.table.values(i, j) = in.sigma;
            else if (r < 0.15)
                in.table.values(i, j) = in.sigma * std::exp(-600.0 - 140.0 * unit(rng));
            else
                in.table.values(i, j) = in.sigma * std::pow(unit(rng), power(rng));
        }

    // Guarantee eta > 0.
    std::vector<std::size_t> positive;
    for (std::size_t j = 0; j < cols; ++j)
        if (in.weights[j] > 0.0) positive.push_back(j);
    const auto j = static_cast<Eigen::Index>(positive[std::uniform_int_distribution<std::size_t>(0, positive.size() - 1)(rng)]);
    const auto i = static_cast<Eigen::Index>(std::uniform_int_distribution<std::size_t>(0, rows - 1)(rng));
    in.table.feasible(i, j) = true;
    in.table.values(i, j) = std::max(in.table.values(i, j), in.sigma * (0.01 + 0.99 * unit(rng)));

    std::vector<std::size_t> perm(cols);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    const std::size_t k = std::uniform_int_distribution<std::size_t>(1, cols)(rng);
    in.selection.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(k));
    return in;
}

VerifyReport verify_bounds(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    VerifyReport rep;
    constexpr double kSandwich = 1e-9;
    constexpr double kExact = 1e-12;

    for (std::size_t t = 0; t < n; ++t) {
        const FuzzInstance in = random_instance(rng);
        ++rep.instances;
        const double eta = marginal_likelihood(in.weights, in.table);
        const double h = posterior_entropy(in, eta);

        const SelectionBoundsResult r = compute_bounds(in.table, in.weights, in.sigma, in.selection);
        if (r.entropy.uninformative) ++rep.uninformative;
        if (!leq_rel(r.likelihood.lb, eta, kSandwich) || !leq_rel(eta, r.likelihood.ub, kSandwich))
            ++rep.eta_violations;
        if (!leq_entropy(r.entropy.lb, h, kSandwich) || !leq_entropy(h, r.entropy.ub, kSandwich)) ++rep.entropy_violations;

        const double ident = entropy_identity(r.selection, in.table, in.weights, eta, r.likelihood.eta_s, r.entropy.h_s);
        const double ident_err = std::abs(ident - h) / std::max(std::abs(h), 1.0);
        rep.max_identity_error = std::max(rep.max_identity_error, ident_err);
        if (!(ident_err <= kSandwich)) ++rep.identity_failures;

        // eta = eta^s w_ms + unselected mass; also the log-sum step on the unselected terms.
        CompensatedSum rest;
        CompensatedSum rest_xlogx;
        for (std::size_t j = 0; j < in.weights.size(); ++j) {
            if (r.selection.contains(j)) continue;
            for (std::size_t i = 0; i < in.table.rows(); ++i) {
                const double v = in.table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * in.weights[j];
                rest += v;
                rest_xlogx += xlogx(v / eta);
            }
        }
        if (!close_rel(r.likelihood.eta_s * r.selection.mass + rest.value(), eta, kExact)) ++rep.split_failures;
        const double gamma_true = std::clamp(rest.value() / eta, 0.0, 1.0);
        const std::size_t comp = effective_complement_size(in.weights, r.selection);
        if (comp > 0 && gamma_true > 0.0) {
            const double rhs = gamma_true * std::log(gamma_true / static_cast<double>(in.table.rows() * comp));
            if (!leq_rel(rhs, rest_xlogx.value(), kSandwich) && !(std::abs(rhs - rest_xlogx.value()) <= 1e-12))
                ++rep.log_sum_failures;
        }

        // Full set collapses the bounds.
        std::vector<std::size_t> all(in.weights.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        const SelectionBoundsResult full = compute_bounds(in.table, in.weights, in.sigma, all);
        if (!close_rel(full.likelihood.lb, eta, kExact) || !close_rel(full.likelihood.ub, eta, kExact) ||
            !approx_equal(full.entropy.lb, h, kExact) || !approx_equal(full.entropy.ub, h, kExact))
            ++rep.convergence_failures;

        // Incremental refinement along a random order equals recomputation.
        std::vector<std::size_t> order = all;
        std::shuffle(order.begin(), order.end(), rng);
        IncrementalBounds inc(in.table, in.weights, in.sigma, order.front());
        for (std::size_t k = 1; k <= order.size(); ++k) {
            if (k > 1) inc.refine(order[k - 1]);
            const SelectionBoundsResult scratch = compute_bounds(
                in.table, in.weights, in.sigma, {order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k)});
            const LikelihoodBounds l = inc.likelihood();
            const EntropyBounds e = inc.entropy();
            const double err = std::max({std::abs(l.lb - scratch.likelihood.lb) / std::max(std::abs(scratch.likelihood.lb), 1e-300),
                                         std::abs(l.ub - scratch.likelihood.ub) / std::max(std::abs(scratch.likelihood.ub), 1e-300),
                                         std::abs(e.lb - scratch.entropy.lb) / std::max(std::abs(scratch.entropy.lb), 1.0),
                                         std::abs(e.ub - scratch.entropy.ub) / std::max(std::abs(scratch.entropy.ub), 1.0)});
            rep.max_refine_error = std::max(rep.max_refine_error, err);
            if (!(err <= kExact) || e.uninformative != scratch.entropy.uninformative) ++rep.refine_failures;
        }

        // Width along the weight-descending order.
        std::vector<std::size_t> greedy = refinement_order(in.weights, PlannerConfig{});
        IncrementalBounds g(in.table, in.weights, in.sigma, greedy.front());
        double eta_width = g.likelihood().ub - g.likelihood().lb;
        double h_width = g.entropy().ub - g.entropy().lb;
        for (std::size_t k = 1; k < greedy.size(); ++k) {
            g.refine(greedy[k]);
            const double ew = g.likelihood().ub - g.likelihood().lb;
            const double hw = g.entropy().ub - g.entropy().lb;
            if (!leq_rel(ew, eta_width, kExact) && ew - eta_width > 1e-300) ++rep.eta_width_increases;
            if (!leq_entropy(hw, h_width, kExact)) ++rep.entropy_width_increases;
            eta_width = ew;
            h_width = hw;
        }
    }
    return rep;
}

void write_verify_csv(std::ostream& out, const VerifyReport& r) {
    out << "instances,eta_violations,entropy_violations,identity_failures,split_failures,log_sum_failures,"
           "convergence_failures,refine_failures,eta_width_increases,entropy_width_increases,uninformative,"
           "max_identity_error,max_refine_error\n";
    const auto precision = out.precision(6);
    out << r.instances << ',' << r.eta_violations << ',' << r.entropy_violations << ',' << r.identity_failures << ','
        << r.split_failures << ',' << r.log_sum_failures << ',' << r.convergence_failures << ','
        << r.refine_failures << ',' << r.eta_width_increases << ',' << r.entropy_width_increases << ','
        << r.uninformative << ',' << r.max_identity_error << ',' << r.max_refine_error << '\n';
    out.precision(precision);
}

Scenario make_aliased_scenario(std::size_t m0, std::size_t n_obs_samples) {
    if (m0 == 0) throw ValidationError("M0 must be positive");
    constexpr double kSpacing = 60.0;
    Scenario s;
    s.name = "aliased-" + std::to_string(m0);
    s.classes = {"cone", "post"};
    std::vector<Landmark> lms;
    LandmarkId id = 0;
    const std::vector<std::tuple<ClassId, double, double>> room = {
        {0, 4.0, 2.0}, {0, 4.0, -2.0}, {0, 7.0, 0.0}, {1, 5.0, 4.0}, {1, 5.0, -4.0}, {1, 9.0, 1.0}};
    for (std::size_t k = 0; k < m0; ++k)
        for (const auto& [cls, dx, dy] : room)
            lms.push_back({id++, cls, {kSpacing * static_cast<double>(k) + dx, dy}});
    s.world.map = LandmarkMap(std::move(lms));
    s.world.motion.primitives = {{"FORWARD", 2.0, 0.0, 0.0}, {"LEFT", 0.0, 2.0, 0.0}, {"RIGHT", 0.0, -2.0, 0.0}};
    s.world.motion.process_noise = Eigen::Vector3d(0.01, 0.01, 0.0005).asDiagonal();
    s.world.observation.noise = Eigen::Matrix2d::Identity() * 0.05;
    s.world.observation.fov_range = 10.0;
    s.world.observation.fov_half_angle = 1.0;
    for (std::size_t k = 0; k < m0; ++k) {
        PriorMode m;
        m.gaussian.mean = {kSpacing * static_cast<double>(k), 0.0, 0.0};
        m.gaussian.covariance = Eigen::Vector3d(0.25, 0.25, 0.0025).asDiagonal();
        m.weight = 1.0 / static_cast<double>(m0);
        s.prior.push_back(m);
    }
    s.true_start = RobotPose(s.prior.front().gaussian.mean);
    s.planner.n_obs_samples = n_obs_samples;
    s.max_steps = 3;
    s.validate();
    return s;
}

std::vector<RuntimeRow> experiment_runtime(const RuntimeOptions& options) {
    constexpr Method kMethods[] = {Method::DaBsp, Method::D2aBsp};
    std::vector<RuntimeRow> rows;
    for (std::size_t m0 : options.m0) {
        const Scenario scenario = make_aliased_scenario(m0, options.n_obs_samples);
        // Warm caches and allocators before anything is timed.
        (void)plan_once(scenario, scenario.initial_belief(), Method::DaBsp, options.base_seed, 0);

        std::vector<double> times[2];
        for (std::size_t s = 0; s < options.seeds; ++s) {
            // Both methods run on the same seed back to back so machine load hits them alike.
            for (std::size_t k = 0; k < 2; ++k) {
                const EpisodeReport rep =
                    run_disambiguation(scenario, kMethods[k], options.base_seed + s, {.max_steps = options.steps});
                for (const auto& step : rep.steps) times[k].push_back(step.planning_cpu_s);
                if (rep.steps.empty()) {
                    // Already certain (M0 = 1): still time one session from the prior.
                    const double c0 = cpu_seconds();
                    (void)plan_once(scenario, scenario.initial_belief(), kMethods[k], options.base_seed + s, 0);
                    times[k].push_back(cpu_seconds() - c0);
                }
            }
        }
        for (std::size_t k = 0; k < 2; ++k) {
            RuntimeRow row;
            row.m0 = m0;
            row.method = kMethods[k];
            row.sessions = times[k].size();
            const double n = static_cast<double>(times[k].size());
            row.mean_time_s = std::accumulate(times[k].begin(), times[k].end(), 0.0) / n;
            double var = 0.0;
            for (double t : times[k]) var += (t - row.mean_time_s) * (t - row.mean_time_s);
            row.std_time_s = times[k].size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
            rows.push_back(row);
        }
    }
    return rows;
}

void write_runtime_csv(std::ostream& out, const std::vector<RuntimeRow>& rows) {
    out << "M0,method,mean_time_s,std_time_s,sessions\n";
    const auto precision = out.precision(9);
    for (const auto& r : rows)
        out << r.m0 << ',' << method_name(r.method) << ',' << r.mean_time_s << ',' << r.std_time_s << ','
            << r.sessions << '\n';
    out.precision(precision);
}

BudgetReport experiment_budget(const Scenario& scenario) {
    scenario.validate();
    if (!scenario.planner.budget) throw ValidationError("budget experiment needs planner.budget in the scenario");
    const MixtureBelief belief = scenario.initial_belief();
    const std::vector<ActionId> actions = all_actions(scenario.world);
    const PlannerConfig& cfg = scenario.planner;
    auto name = [&](ActionId u) { return scenario.world.motion.primitive(u).name; };

    std::vector<ObservationSampleSet> samples;
    for (ActionId u : actions)
        samples.push_back(sample_future_observations(scenario.world, belief, u, cfg.n_obs_samples, cfg.rng_seed));

    BudgetReport rep;
    std::vector<double> exact;
    for (std::size_t a = 0; a < actions.size(); ++a)
        exact.push_back(evaluate_objective_exact(scenario.world, belief, actions[a], samples[a], cfg.enumeration_cap));
    rep.exact_argmin = actions[argmin_with_ties(exact)];

    const std::vector<double> weights = belief.weights();
    for (std::size_t j = 0; j < belief.size(); ++j) {
        const DistilledSelection sel = DistilledSelection::make(weights, {j});
        std::vector<BoundInterval> intervals;
        for (std::size_t a = 0; a < actions.size(); ++a)
            intervals.push_back(
                evaluate_objective_bounds(scenario.world, belief, sel, actions[a], samples[a], cfg.enumeration_cap));
        const auto best = separated_action(intervals);
        rep.selection_verdicts.push_back(best ? std::optional<ActionId>(actions[*best]) : std::nullopt);
        const std::string verdict = best ? "separated:" + name(actions[*best]) : "overlap";
        for (std::size_t a = 0; a < actions.size(); ++a)
            rep.rows.push_back({"selection", "{" + std::to_string(j) + "}", actions[a], name(actions[a]), intervals[a],
                                exact[a], verdict});
    }
    for (std::size_t a = 0; a < actions.size(); ++a)
        rep.rows.push_back({"full", "all", actions[a], name(actions[a]), {exact[a], exact[a]}, exact[a],
                            "argmin:" + name(rep.exact_argmin)});

    const std::size_t truth = scenario.true_mode();
    auto budgeted = [&](bool true_first) {
        PlannerConfig c = cfg;
        c.order = RefinementOrder::Explicit;
        c.explicit_order.clear();
        if (true_first) c.explicit_order.push_back(truth);
        for (std::size_t j = 0; j < belief.size(); ++j)
            if (j != truth) c.explicit_order.push_back(j);
        if (!true_first) c.explicit_order.push_back(truth);
        c.compute_exact = true;
        PlanResult r = select_action_budgeted(scenario.world, belief, actions, c);
        std::string label = "order=";
        for (std::size_t k = 0; k < c.explicit_order.size(); ++k)
            label += (k ? ";" : "") + std::to_string(c.explicit_order[k]);
        const std::string verdict = (r.guaranteed ? "guaranteed:" : "not-guaranteed:") + name(r.chosen);
        for (const auto& ev : r.evaluations)
            rep.rows.push_back({"budgeted", label, ev.action, name(ev.action), ev.interval, ev.exact, verdict});
        return r;
    };
    rep.budgeted_true_first = budgeted(true);
    rep.budgeted_other_first = budgeted(false);
    return rep;
}

void write_budget_csv(std::ostream& out, const BudgetReport& report) {
    out << "section,label,action,action_name,lb,ub,exact,verdict\n";
    const auto precision = out.precision(17);
    for (const auto& r : report.rows) {
        out << r.section << ',' << r.label << ',' << r.action << ',' << r.action_name << ',' << r.interval.lb << ','
            << r.interval.ub << ',';
        if (r.exact) out << *r.exact;
        out << ',' << r.verdict << '\n';
    }
    out.precision(precision);
}

}  // namespace aliasplan
