#include "rmab/milp.hpp"

#include <doctest.h>

#include <cmath>
#include <optional>
#include <random>

using namespace rmab;
using lp::Sense;

TEST_CASE("knapsack needs branching") {
    // max 5a + 4b + 3c st 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8, binary.
    lp::Model m;
    m.maximize = true;
    for (double c : {5.0, 4.0, 3.0}) m.add_column(c, 0.0, 1.0);
    m.add_row(std::vector<std::pair<int, double>>{{0, 2}, {1, 3}, {2, 1}}, Sense::le, 5);
    m.add_row(std::vector<std::pair<int, double>>{{0, 4}, {1, 1}, {2, 2}}, Sense::le, 11);
    m.add_row(std::vector<std::pair<int, double>>{{0, 3}, {1, 4}, {2, 2}}, Sense::le, 8);
    const auto r = milp::solve(m, std::vector<bool>(3, true));
    REQUIRE(r.status == lp::Status::optimal);
    CHECK(r.objective == doctest::Approx(9.0));
    CHECK(milp::is_integral(r.x, std::vector<bool>(3, true), 1e-9));
}

TEST_CASE("fractional root is branched") {
    // max x + y st 2x + 2y <= 3, binary: LP gives 1.5, integer optimum 1.
    lp::Model m;
    m.maximize = true;
    m.add_column(1.0, 0.0, 1.0);
    m.add_column(1.0, 0.0, 1.0);
    m.add_row(std::vector<std::pair<int, double>>{{0, 2}, {1, 2}}, Sense::le, 3);
    const std::vector<bool> ints(2, true);
    const auto r = milp::solve(m, ints);
    REQUIRE(r.status == lp::Status::optimal);
    CHECK_FALSE(r.root_integral);
    CHECK(r.objective == doctest::Approx(1.0));
    // Tie-break prefers y among the two optimal integer points.
    const std::vector<double> prefer_y{1.0, 0.0};
    const auto t = milp::solve(m, ints, prefer_y);
    CHECK(t.x[1] == doctest::Approx(1.0));
    CHECK(t.x[0] == doctest::Approx(0.0));
}

TEST_CASE("infeasible integer program") {
    // 2x = 1 has an LP solution but no integer one.
    lp::Model m;
    m.add_column(1.0, 0.0, 1.0);
    m.add_row(std::vector<std::pair<int, double>>{{0, 2}}, Sense::eq, 1);
    CHECK(milp::solve(m, {true}).status == lp::Status::infeasible);
}

TEST_CASE("random small integer programs match enumeration") {
    std::mt19937_64 gen(5);
    std::uniform_int_distribution<int> coef(-4, 6);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + trial % 3;
        lp::Model m;
        m.maximize = true;
        for (int j = 0; j < n; ++j) m.add_column(coef(gen), 0.0, 2.0);
        for (int r = 0; r < 2; ++r) {
            std::vector<std::pair<int, double>> terms;
            for (int j = 0; j < n; ++j) terms.push_back({j, static_cast<double>(coef(gen))});
            m.add_row(terms, Sense::le, coef(gen) + 4);
        }
        std::optional<double> best;
        std::vector<double> x(n, 0.0);
        const int total = static_cast<int>(std::pow(3, n));
        for (int code = 0; code < total; ++code) {
            int c = code;
            for (int j = 0; j < n; ++j) {
                x[j] = c % 3;
                c /= 3;
            }
            if (m.max_violation(x) > 1e-9) continue;
            const double v = m.evaluate(x);
            if (!best || v > *best) best = v;
        }
        const auto r = milp::solve(m, std::vector<bool>(n, true));
        if (!best) {
            CHECK(r.status == lp::Status::infeasible);
        } else {
            REQUIRE(r.status == lp::Status::optimal);
            CHECK(r.objective == doctest::Approx(*best));
        }
    }
}
