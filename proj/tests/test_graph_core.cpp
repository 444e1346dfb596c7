#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "generators.hpp"
#include "gridsec/measured_graph.hpp"
#include "gridsec/observability.hpp"

using namespace gridsec;
using namespace gridsec::test;

namespace {

std::map<std::string, std::string> mapping_by_id(const FeasibleMeasuredTree& tree, const Case& c) {
    std::map<std::string, std::string> out;
    for (const auto& em : tree.edges)
        out[c.net.branches()[em.branch].id] = c.meas.meter(em.meter).id;
    return out;
}

}  // namespace

TEST_CASE("measured subnetworks on the 14-bus fixture") {
    const Case c = load_case("case14.json", "meas14.json");

    SUBCASE("single flow meter") {
        const SubNetwork s = c.mg.measured_subnetwork(meter_rows(c.meas, {"r6"}));
        CHECK(s.vertices == std::vector<BusId>{5, 6});
        REQUIRE(s.edges.size() == 1);
        CHECK(c.net.branches()[s.edges[0]].id == "e10");
    }
    SUBCASE("flow plus injection union") {
        const SubNetwork s = c.mg.measured_subnetwork(meter_rows(c.meas, {"r6", "r12"}));
        CHECK(s.vertices == std::vector<BusId>{1, 2, 5, 6});
        std::vector<std::string> ids;
        for (int e : s.edges) ids.push_back(c.net.branches()[e].id);
        CHECK(ids == std::vector<std::string>{"e1", "e2", "e10"});
    }
    SUBCASE("empty set") {
        const SubNetwork s = c.mg.measured_subnetwork({});
        CHECK(s.vertices.empty());
        CHECK(s.edges.empty());
    }
    SUBCASE("monotone under meter-set inclusion") {
        std::mt19937_64 rng(41);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<int> small, large;
            for (int m = 0; m < c.meas.meter_count(); ++m) {
                const bool in_large = rng() % 2;
                if (in_large) large.push_back(m);
                if (in_large && rng() % 2) small.push_back(m);
            }
            const SubNetwork a = c.mg.measured_subnetwork(small);
            const SubNetwork b = c.mg.measured_subnetwork(large);
            CHECK(std::includes(b.vertices.begin(), b.vertices.end(), a.vertices.begin(),
                                a.vertices.end()));
            CHECK(std::includes(b.edges.begin(), b.edges.end(), a.edges.begin(), a.edges.end()));
        }
    }
    SUBCASE("exactly two unmeasured lines") {
        const SubNetwork full = c.mg.measured_full();
        CHECK(full.vertices.size() == 14);
        CHECK(full.edges.size() == 18);
        std::vector<std::string> unmeasured;
        for (size_t e = 0; e < c.net.branches().size(); ++e)
            if (!std::binary_search(full.edges.begin(), full.edges.end(), static_cast<int>(e)))
                unmeasured.push_back(c.net.branches()[e].id);
        CHECK(unmeasured == std::vector<std::string>{"e6", "e18"});
    }
}

TEST_CASE("feasible tree for the appendix basic measurement set") {
    const Case c = load_case("case14.json", "meas14.json");
    const auto basic = meter_rows(c.meas, {"r1", "r6", "r12", "r14"});

    for (TreeBackend backend : {TreeBackend::MatroidIntersection, TreeBackend::MaxFlow}) {
        CAPTURE(static_cast<int>(backend));
        const auto tree = construct_feasible_tree(c.mg, basic, 1, backend);
        REQUIRE(tree.has_value());
        CHECK(tree->vertices == std::vector<BusId>{1, 2, 4, 5, 6});
        const auto map = mapping_by_id(*tree, c);
        CHECK(map.at("e1") == "r1");
        CHECK(map.at("e10") == "r6");
        CHECK(map.at("e2") == "r12");
        CHECK(map.at("e7") == "r14");
        std::string why;
        CHECK(validate_tree(c.mg, *tree, &why));
    }
}

TEST_CASE("single flow meter on a reference branch gives a one-edge tree") {
    const Case c = load_case("case14.json", "meas14.json");
    const auto tree = construct_feasible_tree(c.mg, meter_rows(c.meas, {"r1"}), 1);
    REQUIRE(tree.has_value());
    CHECK(tree->edge_count() == 1);
    CHECK(tree->vertices == std::vector<BusId>{1, 2});
    CHECK(c.net.branches()[tree->edges[0].branch].id == "e1");
}

TEST_CASE("descendant identification on the pruning walkthrough tree") {
    const Case c = load_case("case13_prune.json", "meas13_prune.json");
    StateSet all;
    for (BusId b : c.net.buses())
        if (b != 1) all.push_back(b);
    const auto basic = basic_measurement_set(c.jac, meters_within(c.jac, all), all, 0);
    REQUIRE(basic.has_value());
    REQUIRE(basic->size() == 12);  // every meter is needed
    const auto tree = construct_feasible_tree(c.mg, *basic, 1);
    REQUIRE(tree.has_value());

    CHECK(tree->children.at(4) == std::vector<BusId>{6, 7});
    CHECK(tree->descendants.at(4) == std::vector<BusId>{6, 7, 8, 9, 10, 11, 12, 13});
    CHECK(tree->descendants.at(1) == std::vector<BusId>{2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13});
    CHECK(tree->children.at(5).empty());
    CHECK(tree->descendants.at(5).empty());
    // The walkthrough mapping: [4,6] and [9,11] carry the injection meters.
    const auto map = mapping_by_id(*tree, c);
    CHECK(map.at("e46") == "i6");
    CHECK(map.at("e911") == "i11");
    CHECK(map.count("e67") == 0);
}

TEST_CASE("solver-produced basic sets always yield valid trees") {
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 120; ++trial) {
        const int buses = 4 + static_cast<int>(rng() % 10);
        const PowerNetwork net = random_connected_network(rng, buses, buses + 3);
        const MeasurementPlacement meas =
            random_observable_placement(rng, net, buses, buses / 2 + 1);
        const Jacobian jac = build_jacobian(net, meas);
        const MeasuredGraph mg(net, meas);
        StateSet s;
        for (BusId b : net.state_buses()) s.push_back(b);
        const auto basic = basic_measurement_set(jac, meters_within(jac, s), s, rng());
        REQUIRE(basic.has_value());
        const auto tree = construct_feasible_tree(mg, *basic, net.reference());
        REQUIRE(tree.has_value());
        std::string why;
        CHECK_MESSAGE(validate_tree(mg, *tree, &why), why);
        CHECK(tree->edge_count() == static_cast<int>(basic->size()));
        // Observability of the mapped meters is the cross-module invariant.
        std::vector<int> mapped;
        for (const auto& em : tree->edges) mapped.push_back(em.meter);
        CHECK(is_observable_subnetwork(jac, mg, mapped));
    }
}

TEST_CASE("tree validator rejects corrupted trees") {
    const Case c = load_case("case14.json", "meas14.json");
    const auto basic = meter_rows(c.meas, {"r1", "r6", "r12", "r14"});
    auto tree = construct_feasible_tree(c.mg, basic, 1);
    REQUIRE(tree.has_value());

    FeasibleMeasuredTree broken = *tree;
    broken.edges[0].meter = broken.edges[1].meter;  // duplicate mapping
    std::string why;
    CHECK_FALSE(validate_tree(c.mg, broken, &why));
}
