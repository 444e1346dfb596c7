#include <doctest.h>

#include <set>
#include <random>

#include "fixtures.hpp"
#include "generators.hpp"
#include "gridsec/milp.hpp"
#include "gridsec/sve.hpp"

using namespace gridsec;
using namespace gridsec::test;

TEST_CASE("instance structure on the 14-bus fixture") {
    const Case c = load_case("case14.json", "meas14.json");
    const MmsaInstance inst = build_instance(c.mg, {8, 12});
    CHECK(inst.num_arcs() == 40);  // two arcs per line, unmeasured lines included
    CHECK(inst.w == doctest::Approx(40 + 19 + 2 + 1));
    const LinearProgram lp = instance_lp(inst);
    int x_vars = 0;
    for (const auto& name : lp.var_names)
        if (name.rfind("x_", 0) == 0) ++x_vars;
    CHECK(x_vars == 40);
    CHECK_THROWS(build_instance(c.mg, {1}));    // reference bus
    CHECK_THROWS(build_instance(c.mg, {99}));   // unknown bus
}

TEST_CASE("exact solve on the 14-bus fixture matches the published size") {
    const Case c = load_case("case14.json", "meas14.json");
    const MmsaInstance inst = build_instance(c.mg, {8, 12});
    const MilpSolution sol = solve_exact(inst);
    REQUIRE(sol.feasible);
    CHECK(sol.optimal);
    CHECK(sol.arc_count == 8);
    CHECK(sol.root_lp <= sol.objective + 1e-9);  // LP relaxation bounds the optimum
    CHECK(sol.root_dual <= sol.arc_count);       // so does the dual-ascent bound
    const ProtectionPlan plan = extract_plan(inst, sol, c.jac);
    CHECK(plan.meter_count() == 8);
    std::string why;
    CHECK(validate_tree(c.mg, *plan.tree, &why));
}

TEST_CASE("extraction of the published 14-bus solution maps e2 and e12 to injections") {
    const Case c = load_case("case14.json", "meas14.json");
    const MmsaInstance inst = build_instance(c.mg, {8, 12});
    // The known optimal assignment: injections r12 and r18 carry e2 and e12,
    // flow meters carry the rest.
    MilpSolution sol;
    sol.feasible = true;
    sol.optimal = true;
    for (const auto& [branch, meter] :
         {std::pair{"e1", "r1"}, std::pair{"e2", "r12"}, std::pair{"e7", "r3"},
          std::pair{"e8", "r4"}, std::pair{"e10", "r6"}, std::pair{"e12", "r18"},
          std::pair{"e14", "r8"}, std::pair{"e19", "r10"}}) {
        sol.edge_meters.push_back(
            {*c.net.branch_index(branch), *c.meas.meter_index(meter)});
    }
    sol.arc_count = 8;
    sol.injection_count = 2;
    sol.objective = 8 + 2 / inst.w;
    const ProtectionPlan plan = extract_plan(inst, sol, c.jac);
    CHECK(plan.meter_ids ==
          std::vector<std::string>{"r1", "r3", "r4", "r6", "r8", "r10", "r12", "r18"});
    std::string why;
    CHECK(validate_tree(c.mg, *plan.tree, &why));
    CHECK(plan.tree->vertices == std::vector<BusId>{1, 2, 4, 5, 6, 7, 8, 12, 13});
}

TEST_CASE("empty target set solves to the empty plan") {
    const Case c = load_case("case14.json", "meas14.json");
    const MmsaInstance inst = build_instance(c.mg, {});
    const MilpSolution sol = solve_exact(inst);
    REQUIRE(sol.feasible);
    CHECK(sol.objective == doctest::Approx(0.0));
    CHECK(sol.arc_count == 0);
    const ProtectionPlan plan = extract_plan(inst, sol, c.jac);
    CHECK(plan.meter_count() == 0);
}

TEST_CASE("all-flow triangle with an adjacent target uses one arc") {
    const Case c = load_case("case3_triangle.json", "meas3_triangle.json");
    const MmsaInstance inst = build_instance(c.mg, {2});
    const MilpSolution sol = solve_exact(inst);
    REQUIRE(sol.feasible);
    CHECK(sol.arc_count == 1);
    CHECK(sol.injection_count == 0);
    const ProtectionPlan plan = extract_plan(inst, sol, c.jac);
    CHECK(plan.meter_ids == std::vector<std::string>{"r1"});
}

TEST_CASE("MILP equals SVE on random small systems") {
    std::mt19937_64 rng(59);
    int tested = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const int buses = 4 + static_cast<int>(rng() % 5);
        const PowerNetwork net = random_connected_network(rng, buses, buses + 2, false);
        const MeasurementPlacement meas =
            random_observable_placement(rng, net, buses / 2 + 2, buses / 2);
        const Jacobian jac = build_jacobian(net, meas);
        const MeasuredGraph mg(net, meas);
        const StateSet d = random_targets(rng, net, 1 + rng() % 3);
        const ProtectionPlan sve = solve_sve(jac, mg, d);
        const MmsaInstance inst = build_instance(mg, d);
        MilpLimits lim;
        lim.compute_root_lp = (trial % 5 == 0);
        const MilpSolution sol = solve_exact(inst, lim);
        REQUIRE(sol.feasible);
        REQUIRE(sol.optimal);
        const ProtectionPlan milp = extract_plan(inst, sol, jac);
        CHECK(milp.meter_count() == sve.meter_count());
        // Secondary-objective dominance: the arc count is the meter count and
        // never moves to accommodate the z term.
        CHECK(sol.arc_count == sve.meter_count());
        if (lim.compute_root_lp) CHECK(sol.root_lp <= sol.objective + 1e-9);
        std::string why;
        if (milp.tree->edge_count() > 0) CHECK_MESSAGE(validate_tree(mg, *milp.tree, &why), why);
        ++tested;
    }
    CHECK(tested == 60);
}

TEST_CASE("antiparallel cut is removable without changing the optimum") {
    const Case c = load_case("case14.json", "meas14.json");
    MmsaOptions with, without;
    without.antiparallel_cut = false;
    const MilpSolution a = solve_exact(build_instance(c.mg, {8, 12}, with));
    const MilpSolution b = solve_exact(build_instance(c.mg, {8, 12}, without));
    CHECK(a.arc_count == b.arc_count);
    // The cut only tightens the relaxation.
    CHECK(a.root_lp >= b.root_lp - 1e-9);
}

TEST_CASE("PMU instances never map injections onto pseudo edges") {
    const Case c = load_case("case7_pmu.json", "meas7_pmu.json");
    const PmuAugmentation aug = augment_with_pmus(c.net, c.meas);
    const Jacobian jac = build_jacobian(aug.network, aug.placement);
    const MeasuredGraph mg(aug.network, aug.placement);

    const MmsaInstance inst = build_instance(mg, {7});
    for (const auto& zv : inst.zvars) CHECK_FALSE(aug.network.branches()[zv.edge].pseudo);

    const MilpSolution sol = solve_exact(inst);
    REQUIRE(sol.feasible);
    const ProtectionPlan plan = extract_plan(inst, sol, jac);
    CHECK(plan.meter_ids == std::vector<std::string>{"f57", "p5"});
    CHECK(plan.pmu_meter_ids == std::vector<std::string>{"p5"});
}

TEST_CASE("incremental protection pins the prior tree") {
    const Case c = load_case("case14.json", "meas14.json");

    const MmsaInstance first = build_instance(c.mg, {8});
    const MilpSolution sol1 = solve_exact(first);
    REQUIRE(sol1.feasible);
    const ProtectionPlan plan1 = extract_plan(first, sol1, c.jac);
    CHECK(plan1.meter_count() == 4);  // 1-2-4-7-8 over flow-metered lines

    FixedTree ft;
    ft.root = 1;
    for (const auto& em : plan1.tree->edges)
        ft.edges.push_back({c.net.branches()[em.branch].id, c.meas.meter(em.meter).id});
    MmsaOptions opt;
    opt.fixed_tree = ft;
    const MmsaInstance second = build_instance(c.mg, {12}, opt);
    const MilpSolution sol2 = solve_exact(second);
    REQUIRE(sol2.feasible);
    const ProtectionPlan plan2 = extract_plan(second, sol2, c.jac);

    // The grown tree contains the prior tree as a subgraph.
    std::set<int> grown;
    for (const auto& em : plan2.tree->edges) grown.insert(em.branch);
    for (const auto& em : plan1.tree->edges) CHECK(grown.count(em.branch) == 1);
    // And protects both target sets together.
    const auto rows = meter_rows(c.meas, plan2.meter_ids);
    CHECK(is_protected(c.jac, rows, {8, 12}));
    // Sanity inequality against the one-shot optimum.
    const MilpSolution oneshot = solve_exact(build_instance(c.mg, {8, 12}));
    CHECK(plan2.meter_count() >= oneshot.arc_count);
}

TEST_CASE("node budget exhaustion is reported, not silently wrong") {
    const Case c = load_case("case14.json", "meas14.json");
    const MmsaInstance inst = build_instance(c.mg, {8, 12});
    MilpLimits lim;
    lim.node_budget = 1;
    lim.compute_root_lp = false;
    const MilpSolution sol = solve_exact(inst, lim);
    CHECK_FALSE(sol.optimal);
}

TEST_CASE("infeasible instances raise") {
    // Single flow meter away from the reference: target unreachable.
    const PowerNetwork net = PowerNetwork::parse_case(fixture_text("case3_triangle.json"));
    const MeasurementPlacement meas = MeasurementPlacement::parse(
        R"({"format":1,"flow":[{"id":"r1","branch":"e3"}]})", net);
    const MeasuredGraph mg(net, meas);
    CHECK_THROWS_AS(solve_exact(build_instance(mg, {3})), InfeasibleError);
}

TEST_CASE("LP dump contains the paper constraint blocks") {
    const Case c = load_case("case3_triangle.json", "meas3_triangle.json");
    const MmsaInstance inst = build_instance(c.mg, {2});
    const std::string text = dump_lp(inst);
    CHECK(text.find("cap_1_2") != std::string::npos);
    CHECK(text.find("meter_1_2") != std::string::npos);
    CHECK(text.find("flow_2") != std::string::npos);
    CHECK(text.find("Binary") != std::string::npos);
}

TEST_CASE("random extraction passes the tree invariants") {
    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 40; ++trial) {
        const PowerNetwork net = random_connected_network(rng, 8, 11);
        const MeasurementPlacement meas = random_observable_placement(rng, net, 6, 4);
        const Jacobian jac = build_jacobian(net, meas);
        const MeasuredGraph mg(net, meas);
        const StateSet d = random_targets(rng, net, 2);
        MilpLimits lim;
        lim.compute_root_lp = false;
        const MmsaInstance inst = build_instance(mg, d);
        const MilpSolution sol = solve_exact(inst, lim);
        REQUIRE(sol.feasible);
        const ProtectionPlan plan = extract_plan(inst, sol, jac);
        std::string why;
        if (plan.tree->edge_count() > 0) CHECK_MESSAGE(validate_tree(mg, *plan.tree, &why), why);
        CHECK(is_protected(jac, meter_rows(meas, plan.meter_ids), d));
    }
}
