#include "aliasplan/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <iomanip>

namespace aliasplan {

Method parse_method(const std::string& text) {
    if (text == "DA-BSP") return Method::DaBsp;
    if (text == "D2A-BSP") return Method::D2aBsp;
    if (text == "D2A-BSP-budget") return Method::D2aBspBudget;
    throw ValidationError("unknown method '" + text + "' (expected DA-BSP, D2A-BSP or D2A-BSP-budget)");
}

std::string method_name(Method m) {
    switch (m) {
        case Method::DaBsp: return "DA-BSP";
        case Method::D2aBsp: return "D2A-BSP";
        case Method::D2aBspBudget: return "D2A-BSP-budget";
    }
    return "?";
}

std::pair<RobotPose, ObservationSet> step_world(const World& world, const RobotPose& pose, ActionId u,
                                                std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    const Eigen::Matrix3d q = world.motion.process_noise.llt().matrixL();
    const Eigen::Vector3d w = q * Eigen::Vector3d(normal(rng), normal(rng), normal(rng));
    const RobotPose next = propagate_pose(world.motion, pose, u, w);

    std::vector<const Landmark*> visible;
    for (const auto& l : world.map.landmarks())
        if (in_fov(world.observation, next, l.position)) visible.push_back(&l);
    std::shuffle(visible.begin(), visible.end(), rng);

    const Eigen::Matrix2d r = world.observation.noise.llt().matrixL();
    ObservationSet z;
    for (const Landmark* l : visible)
        z.measurements.push_back(
            {predict_measurement(next, l->position) + r * Eigen::Vector2d(normal(rng), normal(rng)), l->cls});
    return {next, z};
}

WorldSimulator::WorldSimulator(World world, RobotPose start, std::uint64_t seed)
    : world_(std::move(world)), pose_(start) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x3017du};
    rng_.seed(seq);
}

ObservationSet WorldSimulator::step(ActionId u) {
    auto [next, z] = step_world(world_, pose_, u, rng_);
    pose_ = next;
    return z;
}

double cpu_seconds() {
    timespec ts{};
    clock_gettime(CLOCK_PROCESS_CPUTIME_ID, &ts);
    return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

PlanResult plan_once(const Scenario& scenario, const MixtureBelief& belief, Method method, std::uint64_t seed,
                     std::size_t step) {
    PlannerConfig config = scenario.planner;
    config.rng_seed = seed;
    config.planning_step = step;
    const std::vector<ActionId> actions = all_actions(scenario.world);
    switch (method) {
        case Method::DaBsp: return select_action_exact(scenario.world, belief, actions, config);
        case Method::D2aBsp: return select_action_guaranteed(scenario.world, belief, actions, config);
        case Method::D2aBspBudget:
            if (!config.budget) throw ValidationError("D2A-BSP-budget needs planner.budget in the scenario");
            return select_action_budgeted(scenario.world, belief, actions, config);
    }
    throw ValidationError("unknown method");
}

EpisodeReport run_disambiguation(const Scenario& scenario, Method method, std::uint64_t seed,
                                 const EpisodeOptions& options) {
    scenario.validate();
    const std::size_t max_steps = options.max_steps ? options.max_steps : scenario.max_steps;
    WorldSimulator sim(scenario.world, scenario.true_start, seed);
    MixtureBelief belief = scenario.initial_belief();

    EpisodeReport report;
    report.method = method;
    for (std::size_t step = 0; step < max_steps; ++step) {
        const double h = weights_entropy(belief.weights());
        if (h < scenario.entropy_threshold) break;

        EpisodeStep rec;
        rec.step = step;
        rec.entropy_before = h;
        const auto t0 = std::chrono::steady_clock::now();
        const double c0 = cpu_seconds();
        const PlanResult plan = plan_once(scenario, belief, method, seed, step);
        rec.planning_cpu_s = cpu_seconds() - c0;
        rec.planning_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        rec.action = plan.chosen;
        rec.action_name = scenario.world.motion.primitive(plan.chosen).name;
        rec.guaranteed = plan.guaranteed;
        for (const auto& ev : plan.evaluations)
            if (ev.action == plan.chosen) rec.selection_size = ev.selection.selected.size();

        const ObservationSet z = sim.step(plan.chosen);
        rec.measurements = z.size();
        try {
            belief = update(scenario.world, belief, plan.chosen, z, scenario.planner.enumeration_cap).belief;
        } catch (const ObservationImpossible&) {
            // An outlier no hypothesis can explain; keep the motion update only.
            belief = predict(scenario.world, belief, plan.chosen);
            rec.observation_rejected = true;
        }
        belief = prune_and_renormalize(belief, scenario.prune_threshold);
        rec.entropy_after = weights_entropy(belief.weights());
        rec.components = belief.size();
        report.total_planning_time_s += rec.planning_time_s;
        report.steps.push_back(rec);
    }
    report.final_entropy = weights_entropy(belief.weights());
    report.disambiguated = report.final_entropy < scenario.entropy_threshold;
    report.final_belief = std::move(belief);
    report.final_true_pose = sim.true_pose();
    return report;
}

void write_episode_csv(std::ostream& out, const EpisodeReport& report) {
    const auto precision = out.precision(17);
    out << "method,step,action,action_name,guaranteed,selection_size,entropy_before,entropy_after,components,"
           "measurements,observation_rejected\n";
    for (const auto& s : report.steps)
        out << method_name(report.method) << ',' << s.step << ',' << s.action << ',' << s.action_name << ','
            << (s.guaranteed ? 1 : 0) << ',' << s.selection_size << ',' << s.entropy_before << ','
            << s.entropy_after << ',' << s.components << ',' << s.measurements << ','
            << (s.observation_rejected ? 1 : 0) << '\n';
    out.precision(precision);
}

void write_episode_timing_csv(std::ostream& out, const EpisodeReport& report) {
    const auto precision = out.precision(9);
    out << "method,step,planning_time_s,planning_cpu_s\n";
    for (const auto& s : report.steps)
        out << method_name(report.method) << ',' << s.step << ',' << s.planning_time_s << ',' << s.planning_cpu_s
            << '\n';
    out.precision(precision);
}

}  // namespace aliasplan
