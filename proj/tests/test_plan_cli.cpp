#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "fixtures.hpp"
#include "gridsec/milp.hpp"
#include "gridsec/plan.hpp"
#include "gridsec/sve.hpp"

using namespace gridsec;
using namespace gridsec::test;

namespace {

struct CliResult {
    int exit_code;
    std::string out;
};

CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string(GRIDSEC_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
    const int status = pclose(pipe);
    return CliResult{WEXITSTATUS(status), out};
}

std::string tmp_path(const std::string& name) {
    return std::string("/tmp/gridsec_test_") + name;
}

}  // namespace

TEST_CASE("plan JSON round trip re-verifies from the file alone") {
    const Case c = load_case("case14.json", "meas14.json");
    ProtectionPlan plan = solve_sve(c.jac, c.mg, {8, 12});
    plan.verification = verify_protection(c.jac, c.meas, plan.meter_ids, plan.targets);
    REQUIRE(plan.verification.verified());

    const std::string text = plan_to_json(plan, c.mg);
    const LoadedPlan loaded = plan_from_json(text);
    CHECK(loaded.method == "sve");
    CHECK(loaded.targets == StateSet{8, 12});
    CHECK(loaded.meter_ids == plan.meter_ids);
    CHECK(loaded.status == "verified");
    REQUIRE(loaded.has_tree);
    CHECK(loaded.tree_edges.size() == 8);

    // The recheck uses nothing but the loaded ids.
    const VerificationRecord again =
        verify_protection(c.jac, c.meas, loaded.meter_ids, loaded.targets);
    CHECK(again.verified());
}

TEST_CASE("cli jacobian reproduces the published 5-bus matrix in CSV") {
    const CliResult res = run_cli("jacobian --case " + fixture_path("case5.json") + " --meas " +
                                  fixture_path("meas5.json"));
    REQUIRE(res.exit_code == 0);
    const std::string expected =
        "meter,2,3,4,5\n"
        "r1,-1,0,0,0\n"
        "r2,1,0,-1,0\n"
        "r3,0,-1,0,1\n"
        "r4,0,0,1,-1\n"
        "r5,-1,2,0,-1\n"
        "r6,-1,0,2,-1\n";
    CHECK(res.out == expected);
}

TEST_CASE("cli jacobian json format") {
    const CliResult res = run_cli("jacobian --format json --case " + fixture_path("case5.json") +
                                  " --meas " + fixture_path("meas5.json"));
    REQUIRE(res.exit_code == 0);
    CHECK(res.out.find("\"rows\"") != std::string::npos);
    CHECK(res.out.find("\"r6\"") != std::string::npos);
}

TEST_CASE("cli protect verifies and reports") {
    const std::string plan_file = tmp_path("plan14.json");
    const CliResult res =
        run_cli("protect --method milp -D 8,12 --case " + fixture_path("case14.json") +
                " --meas " + fixture_path("meas14.json") + " --out " + plan_file);
    CHECK(res.exit_code == 0);
    const LoadedPlan plan = plan_from_json(slurp(plan_file));
    CHECK(plan.meter_ids.size() == 8);
    CHECK(plan.status == "verified");
    std::remove(plan_file.c_str());
}

TEST_CASE("cli protect agreement between methods") {
    for (const char* method : {"sve", "milp", "tph"}) {
        CAPTURE(method);
        const CliResult res = run_cli(std::string("protect --method ") + method +
                                      " -D 8,12 --seed 1 --k 5 --case " +
                                      fixture_path("case14.json") + " --meas " +
                                      fixture_path("meas14.json"));
        CHECK(res.exit_code == 0);
        CHECK(res.out.find("\"status\": \"verified\"") != std::string::npos);
    }
}

TEST_CASE("cli attack emits a certificate or none") {
    SUBCASE("unprotected network yields an attack with matching residuals") {
        const CliResult res = run_cli("attack --target 5 --case " + fixture_path("case5.json") +
                                      " --meas " + fixture_path("meas5.json"));
        REQUIRE(res.exit_code == 0);
        CHECK(res.out.find("\"c\"") != std::string::npos);
        CHECK(res.out.find("residual_demo") != std::string::npos);
    }
    SUBCASE("protected target yields none") {
        const CliResult res = run_cli("attack --target 2 --meters r1 --case " +
                                      fixture_path("case5.json") + " --meas " +
                                      fixture_path("meas5.json"));
        REQUIRE(res.exit_code == 0);
        CHECK(res.out == "none\n");
    }
}

TEST_CASE("cli tree emits the appendix mapping") {
    const CliResult res = run_cli("tree --meters r1,r6,r12,r14 --case " +
                                  fixture_path("case14.json") + " --meas " +
                                  fixture_path("meas14.json"));
    REQUIRE(res.exit_code == 0);
    CHECK(res.out.find("\"root\": 1") != std::string::npos);
    CHECK(res.out.find("\"edge\": \"e7\"") != std::string::npos);
    CHECK(res.out.find("\"meter\": \"r14\"") != std::string::npos);
}

TEST_CASE("cli incremental protection grows the prior tree") {
    const std::string first = tmp_path("plan_first.json");
    const std::string second = tmp_path("plan_second.json");
    CliResult res = run_cli("protect --method milp -D 8 --case " + fixture_path("case14.json") +
                            " --meas " + fixture_path("meas14.json") + " --out " + first);
    REQUIRE(res.exit_code == 0);
    res = run_cli("protect --method milp -D 12 --incremental " + first + " --case " +
                  fixture_path("case14.json") + " --meas " + fixture_path("meas14.json") +
                  " --out " + second);
    REQUIRE(res.exit_code == 0);
    const LoadedPlan p1 = plan_from_json(slurp(first));
    const LoadedPlan p2 = plan_from_json(slurp(second));
    for (const auto& e : p1.tree_edges)
        CHECK(std::find(p2.tree_edges.begin(), p2.tree_edges.end(), e) != p2.tree_edges.end());
    std::remove(first.c_str());
    std::remove(second.c_str());
}

TEST_CASE("cli pmu walkthrough returns the PMU plus the boundary flow meter") {
    const CliResult res = run_cli("protect --method milp -D 7 --case " +
                                  fixture_path("case7_pmu.json") + " --meas " +
                                  fixture_path("meas7_pmu.json"));
    REQUIRE(res.exit_code == 0);
    CHECK(res.out.find("\"f57\"") != std::string::npos);
    CHECK(res.out.find("\"p5\"") != std::string::npos);
    CHECK(res.out.find("\"meter_count\": 2") != std::string::npos);
}

TEST_CASE("cli bench produces the CSV table") {
    const CliResult res = run_cli("bench --sizes 1,2 --trials 2 --methods sve,milp --case " +
                                  fixture_path("case14.json") + " --meas " +
                                  fixture_path("meas14.json"));
    REQUIRE(res.exit_code == 0);
    CHECK(res.out.find("case,size,trial,seed,method,k,p_size,optimal,nodes,vertices_examined,"
                       "wall_ms") != std::string::npos);
    // 2 sizes x 2 trials x 2 methods = 8 data rows.
    int lines = 0;
    for (char ch : res.out)
        if (ch == '\n') ++lines;
    CHECK(lines >= 9);
}

TEST_CASE("cli input errors exit with code 2") {
    CHECK(run_cli("jacobian --case /nonexistent.json --meas /nonexistent.json").exit_code == 2);
    const CliResult res = run_cli("protect --method milp -D 1 --case " +
                                  fixture_path("case14.json") + " --meas " +
                                  fixture_path("meas14.json"));
    CHECK(res.exit_code == 2);  // reference bus is not a valid target
}
