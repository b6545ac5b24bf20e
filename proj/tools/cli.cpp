#include "aliasplan/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include "aliasplan/belief_io.hpp"
#include "aliasplan/experiments.hpp"

namespace aliasplan {

namespace {

// Writes to --out when given, otherwise to the command's stdout.
class Sink {
  public:
    Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
        if (path.empty()) return;
        file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
        if (!*file_) throw ValidationError("cannot write " + path);
        stream_ = file_.get();
    }
    std::ostream& operator*() { return *stream_; }

  private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* stream_;
};

std::vector<std::size_t> parse_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(item, &used);
            if (used != item.size() || v <= 0) throw std::invalid_argument(item);
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw ValidationError("--m0 expects a comma separated list of positive integers, got '" + text + "'");
        }
    }
    if (out.empty()) throw ValidationError("--m0 must not be empty");
    return out;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Data-association aware belief space planning", "aliasplan"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string method = "D2A-BSP";
    std::uint64_t seed = 0;
    std::string out_path;
    std::string timing_path;
    std::size_t max_steps = 0;
    auto* simulate = app.add_subcommand("simulate", "Run one disambiguation episode");
    simulate->add_option("scenario", scenario_path, "Scenario file")->required();
    simulate->add_option("--method", method, "DA-BSP, D2A-BSP or D2A-BSP-budget");
    simulate->add_option("--seed", seed, "Random seed");
    simulate->add_option("--out", out_path, "Per-step CSV (stdout when omitted)");
    simulate->add_option("--timing-out", timing_path, "Planning wall time per step");
    simulate->add_option("--max-steps", max_steps, "Override the scenario step limit");

    std::string belief_path;
    auto* plan = app.add_subcommand("plan", "Plan one step from a saved belief");
    plan->add_option("scenario", scenario_path, "Scenario file")->required();
    plan->add_option("--belief", belief_path, "Belief file (scenario prior when omitted)");
    plan->add_option("--method", method, "DA-BSP, D2A-BSP or D2A-BSP-budget");
    plan->add_option("--seed", seed, "Random seed");
    plan->add_option("--out", out_path, "Plan CSV (stdout when omitted)");

    std::string m0_text = "2,4,8";
    RuntimeOptions runtime;
    auto* exp_runtime = app.add_subcommand("experiment-runtime", "Planning time against the number of prior modes");
    exp_runtime->add_option("--m0", m0_text, "Comma separated mode counts");
    exp_runtime->add_option("--seeds", runtime.seeds, "Seeds per mode count");
    exp_runtime->add_option("--seed", runtime.base_seed, "First seed");
    exp_runtime->add_option("--steps", runtime.steps, "Planning sessions per episode");
    exp_runtime->add_option("--samples", runtime.n_obs_samples, "Observation samples per action");
    exp_runtime->add_option("--out", out_path, "CSV (stdout when omitted)");

    auto* exp_budget = app.add_subcommand("experiment-budget", "Intervals under a hard budget");
    exp_budget->add_option("--scenario", scenario_path, "Scenario file (bundled two_room_budget when omitted)");
    exp_budget->add_option("--out", out_path, "CSV (stdout when omitted)");

    std::size_t instances = 10000;
    auto* verify = app.add_subcommand("verify-bounds", "Fuzz the likelihood and entropy bounds");
    verify->add_option("--instances", instances, "Number of random instances");
    verify->add_option("--seed", seed, "Random seed");
    verify->add_option("--out", out_path, "CSV (stdout when omitted)");

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try {
        app.parse(argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*simulate) {
            const Scenario scenario = load_scenario(scenario_path);
            const EpisodeReport report =
                run_disambiguation(scenario, parse_method(method), seed, {.max_steps = max_steps});
            Sink sink(out_path, out);
            write_episode_csv(*sink, report);
            if (!timing_path.empty()) {
                Sink timing(timing_path, out);
                write_episode_timing_csv(*timing, report);
            }
        } else if (*plan) {
            const Scenario scenario = load_scenario(scenario_path);
            const MixtureBelief belief = belief_path.empty() ? scenario.initial_belief() : load_belief(belief_path);
            const PlanResult result = plan_once(scenario, belief, parse_method(method), seed, belief.time());
            Sink sink(out_path, out);
            write_plan_csv_header(*sink);
            write_plan_csv(*sink, belief.time(), result);
            if (!out_path.empty())
                out << "chosen " << scenario.world.motion.primitive(result.chosen).name
                    << (result.guaranteed ? " (guaranteed)" : " (not guaranteed)") << '\n';
        } else if (*exp_runtime) {
            runtime.m0 = parse_list(m0_text);
            const auto rows = experiment_runtime(runtime);
            Sink sink(out_path, out);
            write_runtime_csv(*sink, rows);
        } else if (*exp_budget) {
            const Scenario scenario =
                load_scenario(scenario_path.empty() ? bundled_scenario("two_room_budget.scenario") : std::filesystem::path(scenario_path));
            const BudgetReport report = experiment_budget(scenario);
            Sink sink(out_path, out);
            write_budget_csv(*sink, report);
        } else if (*verify) {
            if (instances == 0) throw ValidationError("--instances must be positive");
            const VerifyReport report = verify_bounds(instances, seed);
            Sink sink(out_path, out);
            write_verify_csv(*sink, report);
            if (report.hard_failures() > 0) {
                err << "bound verification failed on " << report.hard_failures() << " checks\n";
                return 2;
            }
        }
    } catch (const InvariantViolation& e) {
        err << "internal error: " << e.what() << '\n';
        return 2;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const ObservationImpossible& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace aliasplan
