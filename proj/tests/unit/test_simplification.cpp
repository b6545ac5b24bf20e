#include <doctest.h>

#include <random>

#include "../support/fixtures.hpp"
#include "aliasplan/experiments.hpp"
#include "aliasplan/simplification.hpp"

using namespace aliasplan;
using namespace aliasplan::testing;
using doctest::Approx;

namespace {

const std::vector<double> kHalf = {0.5, 0.5};

MixtureBelief three_modes() {
    return MixtureBelief({component(0.5, {0, 0, 0}, {1, 1, 1}), component(0.3, {1, 0, 0}, {1, 1, 1}),
                          component(0.2, {2, 0, 0}, {1, 1, 1})});
}

}  // namespace

TEST_CASE("selection validation") {
    CHECK_THROWS_AS(DistilledSelection::make(kHalf, {}), ValidationError);
    CHECK_THROWS_AS(DistilledSelection::make(kHalf, {2}), ValidationError);
    CHECK_THROWS_AS(DistilledSelection::make(kHalf, {0, 0}), ValidationError);
    const auto s = DistilledSelection::make(kHalf, {1});
    CHECK(s.mass == 0.5);
    CHECK(s.complement_size() == 1);
    CHECK(s.contains(1));
    CHECK_FALSE(s.is_full());
}

TEST_CASE("make_simplified") {
    const MixtureBelief b = three_modes();
    const MixtureBelief all = make_simplified(b, DistilledSelection::make(b.weights(), {0, 1, 2}));
    CHECK(all.weights() == b.weights());

    const MixtureBelief two({component(0.5, {0, 0, 0}, {1, 1, 1}), component(0.5, {1, 0, 0}, {1, 1, 1})});
    const MixtureBelief one = make_simplified(two, DistilledSelection::make(two.weights(), {0}));
    REQUIRE(one.size() == 1);
    CHECK(one[0].weight == 1.0);

    const MixtureBelief tail = make_simplified(b, DistilledSelection::make(b.weights(), {1, 2}));
    REQUIRE(tail.size() == 2);
    CHECK(tail[0].weight == Approx(0.6));
    CHECK(tail[1].weight == Approx(0.4));
    const auto ws = simplified_weights(std::vector<double>{0.5, 0.3, 0.2}, DistilledSelection::make(b.weights(), {0, 1}));
    CHECK(ws[0] == Approx(0.625));
    CHECK(ws[1] == Approx(0.375));
}

TEST_CASE("simplified likelihood") {
    const ZetaTable t = shared_table();
    const auto first = DistilledSelection::make(kHalf, {0});
    CHECK(eta_simplified(first, t, simplified_weights(kHalf, first)) == Approx(0.6));
    const auto both = DistilledSelection::make(kHalf, {0, 1});
    CHECK(eta_simplified(both, t, simplified_weights(kHalf, both)) == Approx(0.5));
    Eigen::MatrixXd z(2, 2);
    z << 0.4, 0.0, 0.2, 0.0;
    const auto second = DistilledSelection::make(kHalf, {1});
    CHECK(eta_simplified(second, table_from(z), simplified_weights(kHalf, second)) == 0.0);
}

TEST_CASE("eta bounds") {
    const std::vector<int> a1 = {1, 1};
    const auto b = eta_bounds(0.6, 0.5, 1.0, a1);
    CHECK(b.lb == Approx(0.3));
    CHECK(b.ub == Approx(1.3));
    CHECK(b.lb <= 0.5);
    CHECK(0.5 <= b.ub);

    const auto full = eta_bounds(0.5, 1.0, 7.0, a1);
    CHECK(full.lb == full.ub);
    CHECK(full.lb == Approx(0.5));

    const std::vector<int> none = {0, 0};
    const auto closed = eta_bounds(0.6, 0.5, 1.0, none);
    CHECK(closed.lb == closed.ub);
}

TEST_CASE("complement alphas ignore zero-weight and infeasible cells") {
    ZetaTable t = shared_table();
    t.feasible(1, 1) = false;
    const auto alphas = complement_alphas(t, kHalf, DistilledSelection::make(kHalf, {0}));
    CHECK(alphas == std::vector<int>{1, 0});
    const std::vector<double> w = {1.0, 0.0};
    CHECK(complement_alphas(t, w, DistilledSelection::make(w, {0})) == std::vector<int>{0, 0});
    CHECK(effective_complement_size(w, DistilledSelection::make(w, {0})) == 0);
}

TEST_CASE("entropy identity") {
    const ZetaTable t = shared_table();
    const auto s = DistilledSelection::make(kHalf, {0});
    const auto ws = simplified_weights(kHalf, s);
    const double eta_s = eta_simplified(s, t, ws);
    const double h_s = simplified_entropy(s, t, ws, eta_s);
    CHECK(h_s == Approx(weights_entropy(std::vector<double>{2.0 / 3.0, 1.0 / 3.0})));
    const double h = entropy_identity(s, t, kHalf, 0.5, eta_s, h_s);
    CHECK(h == Approx(1.27985).epsilon(1e-5));
    CHECK(h == Approx(weights_entropy(std::vector<double>{0.4, 0.2, 0.1, 0.3})).epsilon(1e-12));

    const auto all = DistilledSelection::make(kHalf, {0, 1});
    const auto wa = simplified_weights(kHalf, all);
    const double ea = eta_simplified(all, t, wa);
    CHECK(entropy_identity(all, t, kHalf, 0.5, ea, simplified_entropy(all, t, wa, ea)) == Approx(h).epsilon(1e-12));

    Eigen::MatrixXd one(1, 1);
    one << 0.8;
    const std::vector<double> w1 = {1.0};
    const auto s1 = DistilledSelection::make(w1, {0});
    CHECK(entropy_identity(s1, table_from(one), w1, 0.8, 0.8, 0.0) == 0.0);
    CHECK_THROWS_AS(entropy_identity(s, t, kHalf, 0.0, eta_s, h_s), ValidationError);
}

TEST_CASE("entropy bounds for the shared example") {
    const double h_s = weights_entropy(std::vector<double>{2.0 / 3.0, 1.0 / 3.0});
    const auto b = entropy_bounds({.eta_s = 0.6,
                                   .h_s = h_s,
                                   .w_ms = 0.5,
                                   .eta_lb = 0.3,
                                   .eta_ub = 1.3,
                                   .realization_count = 2,
                                   .hypothesis_count = 2,
                                   .complement_size = 1,
                                   .zeta_selected_mass = 0.6});
    CHECK(b.lb == Approx(0.1469).epsilon(1e-3));
    CHECK(b.ub == Approx(2.8378).epsilon(1e-4));
    CHECK(b.lb <= 1.27985);
    CHECK(1.27985 <= b.ub);
    CHECK_FALSE(b.uninformative);
}

TEST_CASE("entropy bounds collapse at the full selection") {
    const auto b = entropy_bounds({.eta_s = 0.5,
                                   .h_s = 1.27985,
                                   .w_ms = 1.0,
                                   .eta_lb = 0.5,
                                   .eta_ub = 0.5,
                                   .realization_count = 2,
                                   .hypothesis_count = 2,
                                   .complement_size = 0,
                                   .zeta_selected_mass = 0.5});
    CHECK(b.gamma == 0.0);
    CHECK(b.lb == Approx(1.27985));
    CHECK(b.ub == Approx(1.27985));
}

TEST_CASE("gamma zero drops the tail term") {
    // UB[eta] equals eta^s w^{m,s}: the complement has no support.
    const auto b = entropy_bounds({.eta_s = 0.6,
                                   .h_s = 0.5,
                                   .w_ms = 0.5,
                                   .eta_lb = 0.3,
                                   .eta_ub = 0.3,
                                   .realization_count = 2,
                                   .hypothesis_count = 2,
                                   .complement_size = 1,
                                   .zeta_selected_mass = 0.6});
    CHECK(b.gamma == 0.0);
    CHECK(std::isfinite(b.ub));
    CHECK(b.ub == Approx(0.5));
}

TEST_CASE("uninformative selection gives the trivial enclosure") {
    const auto b = entropy_bounds({.eta_s = 0.0,
                                   .h_s = 0.0,
                                   .w_ms = 0.5,
                                   .eta_lb = 0.0,
                                   .eta_ub = 1.0,
                                   .realization_count = 3,
                                   .hypothesis_count = 2,
                                   .complement_size = 1,
                                   .zeta_selected_mass = 0.0});
    CHECK(b.uninformative);
    CHECK(b.lb == 0.0);
    CHECK(b.ub == Approx(std::log(6.0)));
}

TEST_CASE("compute_bounds on the shared example") {
    const auto r = compute_bounds(shared_table(), kHalf, 1.0, {0});
    CHECK(r.likelihood.lb == Approx(0.3));
    CHECK(r.likelihood.ub == Approx(1.3));
    CHECK(r.entropy.lb == Approx(0.1469).epsilon(1e-3));
    CHECK(r.entropy.ub == Approx(2.8378).epsilon(1e-4));
}

TEST_CASE("incremental refinement") {
    const ZetaTable t = shared_table();
    IncrementalBounds inc(t, kHalf, 1.0, 0);
    CHECK(inc.likelihood().lb == Approx(0.3));
    CHECK(inc.likelihood().ub == Approx(1.3));
    const auto r = inc.refine(1);
    CHECK(r.likelihood.lb == Approx(0.5).epsilon(1e-12));
    CHECK(r.likelihood.ub == Approx(0.5).epsilon(1e-12));
    CHECK(r.entropy.lb == Approx(1.27985).epsilon(1e-5));
    CHECK(r.entropy.ub == Approx(r.entropy.lb).epsilon(1e-12));
    CHECK(inc.selection().is_full());
    CHECK_THROWS_AS(inc.refine(1), ValidationError);
    CHECK_THROWS_AS(inc.refine(5), ValidationError);
}

TEST_CASE("refining with a zero-weight hypothesis changes nothing") {
    Eigen::MatrixXd z(2, 3);
    z << 0.4, 0.1, 0.9, 0.2, 0.3, 0.7;
    const ZetaTable t = table_from(z);
    const std::vector<double> w = {0.5, 0.5, 0.0};
    IncrementalBounds inc(t, w, 1.0, 0);
    const auto before = inc.current();
    const auto after = inc.refine(2);
    CHECK(after.likelihood.lb == before.likelihood.lb);
    CHECK(after.likelihood.ub == before.likelihood.ub);
    CHECK(after.entropy.lb == before.entropy.lb);
    CHECK(after.entropy.ub == before.entropy.ub);
}

TEST_CASE("tiny likelihoods stay finite") {
    Eigen::MatrixXd z(2, 2);
    z << 1e-318, 0.5, 0.0, 0.25;
    const ZetaTable t = table_from(z);
    IncrementalBounds inc(t, kHalf, 1.0, 0);
    const auto e = inc.entropy();
    CHECK(std::isfinite(e.ub));
    const auto scratch = compute_bounds(t, kHalf, 1.0, {0});
    CHECK(e.ub == Approx(scratch.entropy.ub).epsilon(1e-12));
}

TEST_CASE("fuzzed sandwich and refinement") {
    const VerifyReport r = verify_bounds(2000, 5);
    CHECK(r.instances == 2000);
    CHECK(r.hard_failures() == 0);
}

TEST_CASE("log-sum step on random instances") {
    std::mt19937_64 rng(17);
    for (int t = 0; t < 500; ++t) {
        const FuzzInstance in = random_instance(rng);
        const double eta = marginal_likelihood(in.weights, in.table);
        const auto sel = DistilledSelection::make(in.weights, in.selection);
        const auto r = compute_bounds(in.table, in.weights, in.sigma, in.selection);
        double s = 0.0;
        double gamma_true = 0.0;
        for (std::size_t j = 0; j < in.weights.size(); ++j) {
            if (sel.contains(j)) continue;
            for (std::size_t i = 0; i < in.table.rows(); ++i) {
                const double p = in.table.values(Eigen::Index(i), Eigen::Index(j)) * in.weights[j] / eta;
                s += xlogx(p);
                gamma_true += p;
            }
        }
        const std::size_t comp = effective_complement_size(in.weights, sel);
        if (comp == 0 || gamma_true <= 0.0) continue;
        const double rhs = gamma_true * std::log(gamma_true / double(in.table.rows() * comp));
        CHECK(s >= rhs - 1e-9 * std::max(1.0, std::abs(rhs)));
        CHECK(r.entropy.gamma >= gamma_true - 1e-9);
    }
}

TEST_CASE("bound trace csv") {
    std::ostringstream out;
    const std::vector<BoundTraceRow> rows = {{1, 0.3, 1.3, 0.1, 2.8}};
    write_bound_trace_csv(out, rows);
    CHECK(out.str().rfind("selection_size,eta_lb,eta_ub,h_lb,h_ub\n1,", 0) == 0);
}
