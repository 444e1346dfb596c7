#include <doctest.h>

#include <numeric>
#include <random>

#include "gridsec/linalg.hpp"

using namespace gridsec;

namespace {

Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    Matrix m(static_cast<int>(rows.size()), rows.empty() ? 0 : static_cast<int>(rows[0].size()));
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < rows[i].size(); ++j) m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    return m;
}

std::vector<int> iota_vec(int n) {
    std::vector<int> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

}  // namespace

TEST_CASE("rank of simple matrices") {
    const Matrix m = from_rows({{1, 0, 0}, {0, 1, 0}, {1, 1, 0}});
    CHECK(rank_of(m, iota_vec(3), iota_vec(3)) == 2);
    CHECK(rank_of(m, std::vector<int>{}, iota_vec(3)) == 0);
    CHECK(rank_of(m, iota_vec(3), std::vector<int>{}) == 0);

    const std::vector<int> first_two{0, 1};
    CHECK(rank_of(m, first_two, iota_vec(3)) == 2);
}

TEST_CASE("rref identifies pivots and free columns") {
    const Matrix m = from_rows({{1, 2, 3}, {2, 4, 6}});
    const Rref r = rref(m);
    REQUIRE(r.pivot_cols.size() == 1);
    CHECK(r.pivot_cols[0] == 0);
    CHECK(r.m(0, 1) == doctest::Approx(2.0));
    CHECK(r.m(0, 2) == doctest::Approx(3.0));
}

TEST_CASE("solve_linear round trip") {
    const Matrix a = from_rows({{4, 1}, {1, 3}});
    const std::vector<double> b{1.0, 2.0};
    const auto x = solve_linear(a, b);
    CHECK(4 * x[0] + x[1] == doctest::Approx(1.0));
    CHECK(x[0] + 3 * x[1] == doctest::Approx(2.0));

    const Matrix sing = from_rows({{1, 1}, {2, 2}});
    CHECK_THROWS(solve_linear(sing, b));
}

TEST_CASE("rational arithmetic normalizes and detects overflow") {
    const Rat a(2, 4);
    CHECK(a.num == 1);
    CHECK(a.den == 2);
    const Rat b(1, 3);
    CHECK((a + b) == Rat(5, 6));
    CHECK((a * b) == Rat(1, 6));
    CHECK((a - a).zero());
    CHECK((Rat(1) / Rat(4)) == Rat(1, 4));

    CHECK(Rat::from_decimal(0.25) == Rat(1, 4));
    CHECK(Rat::from_decimal(0.3) == Rat(3, 10));
    CHECK(Rat::from_decimal(7.0) == Rat(7));
}

TEST_CASE("exact rank agrees with floating rank on random unit matrices") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const int rows = 1 + static_cast<int>(rng() % 8);
        const int cols = 1 + static_cast<int>(rng() % 8);
        Matrix m(rows, cols);
        RatMatrix rm(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) {
                const int v = static_cast<int>(rng() % 5) - 2;
                m(i, j) = v;
                rm(i, j) = Rat(v);
            }
        CHECK(rank_of(m, iota_vec(rows), iota_vec(cols)) == rank_exact(rm));
    }
}
