#include "aliasplan/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#ifndef ALIASPLAN_SCENARIO_DIR
#define ALIASPLAN_SCENARIO_DIR "scenarios"
#endif

namespace aliasplan {

namespace {

using nlohmann::json;

class Reader {
  public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const std::string& path, const std::string& what) const {
        throw ValidationError(source_ + ": field '" + path + "': " + what);
    }

    const json& field(const json& obj, const std::string& key, const std::string& path) const {
        if (!obj.is_object()) fail(path, "expected an object");
        const auto it = obj.find(key);
        if (it == obj.end()) fail(join(path, key), "missing");
        return *it;
    }

    double number(const json& v, const std::string& path) const {
        if (!v.is_number()) fail(path, "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) fail(path, "must be finite");
        return d;
    }

    double number(const json& obj, const std::string& key, const std::string& path) const {
        return number(field(obj, key, path), join(path, key));
    }

    double number_or(const json& obj, const std::string& key, const std::string& path, double fallback) const {
        return obj.contains(key) ? number(obj, key, path) : fallback;
    }

    std::uint64_t unsigned_int(const json& v, const std::string& path) const {
        if (!v.is_number_integer() || v.get<long long>() < 0) fail(path, "expected a non-negative integer");
        return v.get<std::uint64_t>();
    }

    const json& array(const json& v, const std::string& path, std::size_t expected = 0) const {
        if (!v.is_array()) fail(path, "expected an array");
        if (expected != 0 && v.size() != expected)
            fail(path, "expected " + std::to_string(expected) + " entries, got " + std::to_string(v.size()));
        return v;
    }

    template <int N>
    Eigen::Matrix<double, N, N> matrix(const json& v, const std::string& path) const {
        array(v, path, N * N);
        Eigen::Matrix<double, N, N> m;
        for (int r = 0; r < N; ++r)
            for (int c = 0; c < N; ++c)
                m(r, c) = number(v[static_cast<std::size_t>(r * N + c)], path + "[" + std::to_string(r * N + c) + "]");
        return m;
    }

    Eigen::Vector3d pose(const json& v, const std::string& path) const {
        array(v, path, 3);
        return {number(v[0], path + "[0]"), number(v[1], path + "[1]"), number(v[2], path + "[2]")};
    }

    static std::string join(const std::string& path, const std::string& key) {
        return path.empty() ? key : path + "." + key;
    }

    static std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

  private:
    std::string source_;
};

bool symmetric_positive_definite(const Eigen::MatrixXd& m) {
    if (!m.isApprox(m.transpose(), 1e-12)) return false;
    return Eigen::LLT<Eigen::MatrixXd>(m).info() == Eigen::Success;
}

json row_major(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
    return out;
}

}  // namespace

MixtureBelief Scenario::initial_belief() const {
    std::vector<HypothesisComponent> comps;
    for (const auto& p : prior) comps.push_back({p.weight, p.gaussian, {}});
    return MixtureBelief(std::move(comps));
}

std::size_t Scenario::true_mode() const {
    std::size_t found = prior.size();
    std::size_t matches = 0;
    for (std::size_t j = 0; j < prior.size(); ++j) {
        const Eigen::Vector3d d = prior[j].gaussian.mean - true_start.vector();
        if (d.head<2>().norm() <= 1e-6 && std::abs(normalize_angle(d.z())) <= 1e-6) {
            found = j;
            ++matches;
        }
    }
    if (matches != 1)
        throw ValidationError("field 'true_start': must coincide with exactly one prior mode mean, matched " +
                              std::to_string(matches));
    return found;
}

void Scenario::validate() const {
    if (classes.empty()) throw ValidationError("field 'classes': at least one class required");
    for (const auto& l : world.map.landmarks())
        if (l.cls < 0 || static_cast<std::size_t>(l.cls) >= classes.size())
            throw ValidationError("field 'landmarks': landmark " + std::to_string(l.id) + " has unknown class " +
                                  std::to_string(l.cls));
    if (world.motion.primitives.empty()) throw ValidationError("field 'actions': at least one action required");
    try {
        world.motion.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(std::string("field 'process_noise': ") + e.what());
    }
    try {
        world.observation.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(std::string("field 'measurement_noise'/'fov': ") + e.what());
    }
    if (prior.empty()) throw ValidationError("field 'prior': at least one mode required");
    CompensatedSum total;
    for (std::size_t j = 0; j < prior.size(); ++j) {
        if (!(prior[j].weight >= 0.0 && prior[j].weight <= 1.0))
            throw ValidationError("field 'prior[" + std::to_string(j) + "].weight': must lie in [0, 1]");
        if (!symmetric_positive_definite(prior[j].gaussian.covariance))
            throw ValidationError("field 'prior[" + std::to_string(j) +
                                  "].covariance': must be symmetric positive definite");
        total += prior[j].weight;
    }
    if (std::abs(total.value() - 1.0) > MixtureBelief::kWeightTolerance)
        throw ValidationError("field 'prior weights': sum to " + std::to_string(total.value()) + ", expected 1");
    (void)true_mode();
    if (!(prune_threshold >= 0.0 && prune_threshold < 1.0))
        throw ValidationError("field 'prune_threshold': must lie in [0, 1)");
    if (max_steps == 0) throw ValidationError("field 'max_steps': must be positive");
    if (!(entropy_threshold > 0.0)) throw ValidationError("field 'entropy_threshold': must be positive");
    try {
        planner.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(std::string("field 'planner': ") + e.what());
    }
    if (planner.order == RefinementOrder::Explicit)
        for (std::size_t j : planner.explicit_order)
            if (j >= prior.size())
                throw ValidationError("field 'planner.refinement_order': index " + std::to_string(j) + " out of range");
}

Scenario parse_scenario(const std::string& text, const std::string& source) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        // Byte offsets are 1-based and point just past the offending character.
        const std::size_t at = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        std::size_t line = 1;
        std::size_t column = 1;
        for (std::size_t i = 0; i < at; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw ValidationError(source + ":" + std::to_string(line) + ":" + std::to_string(column) +
                              ": malformed scenario: " + e.what());
    }

    const Reader rd(source);
    Scenario s;
    if (!doc.is_object()) rd.fail("", "document must be an object");
    if (rd.unsigned_int(rd.field(doc, "version", ""), "version") != 1) rd.fail("version", "only version 1 is supported");
    s.name = doc.value("name", std::string("unnamed"));

    const json& classes = rd.array(rd.field(doc, "classes", ""), "classes");
    for (std::size_t i = 0; i < classes.size(); ++i) {
        if (!classes[i].is_string()) rd.fail(Reader::index("classes", i), "expected a string");
        s.classes.push_back(classes[i].get<std::string>());
    }

    std::vector<Landmark> landmarks;
    const json& lms = rd.array(rd.field(doc, "landmarks", ""), "landmarks");
    for (std::size_t i = 0; i < lms.size(); ++i) {
        const std::string p = Reader::index("landmarks", i);
        Landmark l;
        l.id = static_cast<LandmarkId>(rd.unsigned_int(rd.field(lms[i], "id", p), p + ".id"));
        l.cls = static_cast<ClassId>(rd.unsigned_int(rd.field(lms[i], "class", p), p + ".class"));
        l.position = {rd.number(lms[i], "x", p), rd.number(lms[i], "y", p)};
        landmarks.push_back(l);
    }
    try {
        s.world.map = LandmarkMap(std::move(landmarks));
    } catch (const ValidationError& e) {
        rd.fail("landmarks", e.what());
    }

    const json& acts = rd.array(rd.field(doc, "actions", ""), "actions");
    for (std::size_t i = 0; i < acts.size(); ++i) {
        const std::string p = Reader::index("actions", i);
        MotionPrimitive m;
        const json& name = rd.field(acts[i], "name", p);
        if (!name.is_string()) rd.fail(p + ".name", "expected a string");
        m.name = name.get<std::string>();
        m.dx = rd.number(acts[i], "dx", p);
        m.dy = rd.number(acts[i], "dy", p);
        m.dtheta = rd.number_or(acts[i], "dtheta", p, 0.0);
        s.world.motion.primitives.push_back(m);
    }
    s.world.motion.process_noise = rd.matrix<3>(rd.field(doc, "process_noise", ""), "process_noise");
    s.world.observation.noise = rd.matrix<2>(rd.field(doc, "measurement_noise", ""), "measurement_noise");
    const json& fov = rd.field(doc, "fov", "");
    s.world.observation.fov_range = rd.number(fov, "range", "fov");
    s.world.observation.fov_half_angle = rd.number(fov, "half_angle", "fov");

    const json& prior = rd.array(rd.field(doc, "prior", ""), "prior");
    for (std::size_t i = 0; i < prior.size(); ++i) {
        const std::string p = Reader::index("prior", i);
        PriorMode m;
        m.gaussian.mean = rd.pose(rd.field(prior[i], "mean", p), p + ".mean");
        m.gaussian.mean.z() = normalize_angle(m.gaussian.mean.z());
        m.gaussian.covariance = rd.matrix<3>(rd.field(prior[i], "covariance", p), p + ".covariance");
        m.weight = rd.number(prior[i], "weight", p);
        s.prior.push_back(m);
    }
    s.true_start = RobotPose(rd.pose(rd.field(doc, "true_start", ""), "true_start"));

    if (doc.contains("planner")) {
        const json& pl = doc["planner"];
        if (!pl.is_object()) rd.fail("planner", "expected an object");
        if (pl.contains("n_obs_samples"))
            s.planner.n_obs_samples = rd.unsigned_int(pl["n_obs_samples"], "planner.n_obs_samples");
        if (pl.contains("budget") && !pl["budget"].is_null())
            s.planner.budget = rd.unsigned_int(pl["budget"], "planner.budget");
        if (pl.contains("seed")) s.planner.rng_seed = rd.unsigned_int(pl["seed"], "planner.seed");
        if (pl.contains("enumeration_cap"))
            s.planner.enumeration_cap = rd.unsigned_int(pl["enumeration_cap"], "planner.enumeration_cap");
        if (pl.contains("refinement_order")) {
            const json& order = pl["refinement_order"];
            if (order.is_string()) {
                if (order.get<std::string>() != "weight-descending")
                    rd.fail("planner.refinement_order", "expected \"weight-descending\" or an index list");
            } else {
                rd.array(order, "planner.refinement_order");
                s.planner.order = RefinementOrder::Explicit;
                for (std::size_t i = 0; i < order.size(); ++i)
                    s.planner.explicit_order.push_back(
                        rd.unsigned_int(order[i], Reader::index("planner.refinement_order", i)));
            }
        }
    }
    s.prune_threshold = rd.number_or(doc, "prune_threshold", "", s.prune_threshold);
    if (doc.contains("max_steps")) s.max_steps = rd.unsigned_int(doc["max_steps"], "max_steps");
    s.entropy_threshold = rd.number_or(doc, "entropy_threshold", "", s.entropy_threshold);

    try {
        s.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(source + ": " + e.what());
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open scenario file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_scenario(text.str(), path.string());
}

json scenario_to_json(const Scenario& s) {
    json doc;
    doc["version"] = 1;
    doc["name"] = s.name;
    doc["classes"] = s.classes;
    doc["landmarks"] = json::array();
    for (const auto& l : s.world.map.landmarks())
        doc["landmarks"].push_back({{"id", l.id}, {"class", l.cls}, {"x", l.position.x()}, {"y", l.position.y()}});
    doc["actions"] = json::array();
    for (const auto& p : s.world.motion.primitives)
        doc["actions"].push_back({{"name", p.name}, {"dx", p.dx}, {"dy", p.dy}, {"dtheta", p.dtheta}});
    doc["process_noise"] = row_major(s.world.motion.process_noise);
    doc["measurement_noise"] = row_major(s.world.observation.noise);
    doc["fov"] = {{"range", s.world.observation.fov_range}, {"half_angle", s.world.observation.fov_half_angle}};
    doc["prior"] = json::array();
    for (const auto& p : s.prior)
        doc["prior"].push_back({{"mean", {p.gaussian.mean.x(), p.gaussian.mean.y(), p.gaussian.mean.z()}},
                                {"covariance", row_major(p.gaussian.covariance)},
                                {"weight", p.weight}});
    doc["true_start"] = {s.true_start.x, s.true_start.y, s.true_start.heading};
    json pl;
    pl["n_obs_samples"] = s.planner.n_obs_samples;
    pl["seed"] = s.planner.rng_seed;
    pl["enumeration_cap"] = s.planner.enumeration_cap;
    if (s.planner.budget) pl["budget"] = *s.planner.budget;
    if (s.planner.order == RefinementOrder::Explicit)
        pl["refinement_order"] = s.planner.explicit_order;
    else
        pl["refinement_order"] = "weight-descending";
    doc["planner"] = pl;
    doc["prune_threshold"] = s.prune_threshold;
    doc["max_steps"] = s.max_steps;
    doc["entropy_threshold"] = s.entropy_threshold;
    return doc;
}

std::filesystem::path bundled_scenario(const std::string& file_name) {
    return std::filesystem::path(ALIASPLAN_SCENARIO_DIR) / file_name;
}

}  // namespace aliasplan
