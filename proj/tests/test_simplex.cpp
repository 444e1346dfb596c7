#include <doctest.h>

#include "gridsec/simplex.hpp"

using namespace gridsec;

TEST_CASE("simplex solves a small LP with known optimum") {
    // min -x - 2y  s.t.  x + y <= 4, x <= 2, y <= 3, x,y >= 0  -> (1, 3), obj -7
    LinearProgram lp;
    const int x = lp.add_var("x", -1.0);
    const int y = lp.add_var("y", -2.0);
    lp.add_row({{{x, 1.0}, {y, 1.0}}, LinearProgram::LE, 4.0, "cap"});
    lp.add_row({{{x, 1.0}}, LinearProgram::LE, 2.0, "ubx"});
    lp.add_row({{{y, 1.0}}, LinearProgram::LE, 3.0, "uby"});
    const LpResult res = solve_lp(lp);
    REQUIRE(res.status == LpStatus::Optimal);
    CHECK(res.objective == doctest::Approx(-7.0));
    CHECK(res.x[x] == doctest::Approx(1.0));
    CHECK(res.x[y] == doctest::Approx(3.0));
}

TEST_CASE("simplex handles equality rows via phase one") {
    // min x + y  s.t.  x + y = 2, x - y >= 1  -> (1.5, 0.5), obj 2
    LinearProgram lp;
    const int x = lp.add_var("x", 1.0);
    const int y = lp.add_var("y", 1.0);
    lp.add_row({{{x, 1.0}, {y, 1.0}}, LinearProgram::EQ, 2.0, "sum"});
    lp.add_row({{{x, 1.0}, {y, -1.0}}, LinearProgram::GE, 1.0, "gap"});
    const LpResult res = solve_lp(lp);
    REQUIRE(res.status == LpStatus::Optimal);
    CHECK(res.objective == doctest::Approx(2.0));
    CHECK(res.x[x] == doctest::Approx(1.5));
    CHECK(res.x[y] == doctest::Approx(0.5));
}

TEST_CASE("simplex reports infeasibility") {
    LinearProgram lp;
    const int x = lp.add_var("x", 1.0);
    lp.add_row({{{x, 1.0}}, LinearProgram::GE, 3.0, "lo"});
    lp.add_row({{{x, 1.0}}, LinearProgram::LE, 1.0, "hi"});
    CHECK(solve_lp(lp).status == LpStatus::Infeasible);
}

TEST_CASE("simplex reports unboundedness") {
    LinearProgram lp;
    const int x = lp.add_var("x", -1.0);
    lp.add_row({{{x, -1.0}}, LinearProgram::LE, 0.0, "noop"});
    CHECK(solve_lp(lp).status == LpStatus::Unbounded);
}

TEST_CASE("LP text writer emits a parseable document") {
    LinearProgram lp;
    const int x = lp.add_var("x_a", 1.0);
    const int z = lp.add_var("z_b", 0.5);
    lp.add_row({{{x, 1.0}, {z, -1.0}}, LinearProgram::LE, 1.0, "c0"});
    const std::string text = write_lp_format(lp, {x});
    CHECK(text.find("Minimize") != std::string::npos);
    CHECK(text.find("Subject To") != std::string::npos);
    CHECK(text.find("c0: 1 x_a - 1 z_b <= 1") != std::string::npos);
    CHECK(text.find("Binary") != std::string::npos);
    CHECK(text.find("End") != std::string::npos);
}
