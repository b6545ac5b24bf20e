#include "aliasplan/belief_io.hpp"

#include <fstream>

namespace aliasplan {

namespace {

nlohmann::json row_major(const Eigen::Matrix3d& m) {
    nlohmann::json out = nlohmann::json::array();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out.push_back(m(r, c));
    return out;
}

}  // namespace

nlohmann::json belief_to_json(const MixtureBelief& belief) {
    nlohmann::json doc;
    doc["version"] = 1;
    doc["time"] = belief.time();
    auto& comps = doc["components"] = nlohmann::json::array();
    for (const auto& c : belief.components()) {
        nlohmann::json jc;
        jc["weight"] = c.weight;
        jc["mean"] = {c.gaussian.mean.x(), c.gaussian.mean.y(), c.gaussian.mean.z()};
        jc["covariance"] = row_major(c.gaussian.covariance);
        auto& hist = jc["history"] = nlohmann::json::array();
        for (const auto& step : c.history.steps) hist.push_back(step.ids);
        comps.push_back(std::move(jc));
    }
    return doc;
}

MixtureBelief belief_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("version").get<int>() != 1) throw ValidationError("unsupported belief version");
        std::vector<HypothesisComponent> comps;
        for (const auto& jc : doc.at("components")) {
            HypothesisComponent c;
            c.weight = jc.at("weight").get<double>();
            const auto mean = jc.at("mean").get<std::vector<double>>();
            const auto cov = jc.at("covariance").get<std::vector<double>>();
            if (mean.size() != 3 || cov.size() != 9) throw ValidationError("belief component has wrong dimensions");
            c.gaussian.mean = Eigen::Vector3d(mean[0], mean[1], mean[2]);
            for (int r = 0; r < 3; ++r)
                for (int k = 0; k < 3; ++k) c.gaussian.covariance(r, k) = cov[static_cast<std::size_t>(3 * r + k)];
            if (jc.contains("history"))
                for (const auto& step : jc.at("history"))
                    c.history.steps.push_back(AssociationVector{step.get<std::vector<LandmarkId>>()});
            comps.push_back(std::move(c));
        }
        return MixtureBelief(std::move(comps), doc.value("time", std::size_t{0}));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed belief: ") + e.what());
    }
}

void save_belief(const MixtureBelief& belief, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << belief_to_json(belief).dump(2) << '\n';
}

MixtureBelief load_belief(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    try {
        return belief_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

}  // namespace aliasplan
