#include "problem_gen.hpp"
#include "rmab/planner.hpp"

#include <doctest.h>

#include <cmath>

using namespace rmab;
using rmab::testing::Mode;

namespace {

LookaheadProblem two_by_two(Frequency f) {
    auto p = LookaheadProblem::uniform(2, 2, 1, f);
    p.index = {{5, 1}, {4, 3}};
    return p;
}

}  // namespace

TEST_CASE("exactly once: hand-enumerated assignment") {
    const auto plan = solve_exactly_once(two_by_two(Frequency::exactly(1)));
    REQUIRE(plan.feasible());
    CHECK(plan.objective == doctest::Approx(8.0));
    CHECK(plan.action == std::vector<std::vector<int>>{{1, 0}, {0, 1}});
}

TEST_CASE("exactly once: pigeonhole infeasibility") {
    auto p = LookaheadProblem::uniform(3, 2, 2, Frequency::exactly(1));
    for (auto& row : p.eligible) row = {true, false};
    const auto plan = solve_plan(p);
    CHECK(plan.status == PlanStatus::infeasible);
    CHECK(plan.diagnostic.find("budget") != std::string::npos);
    CHECK(brute_force_plan(p).status == PlanStatus::infeasible);
}

TEST_CASE("exactly once: equal indices use the deterministic tie-break") {
    auto p = LookaheadProblem::uniform(3, 3, 1, Frequency::exactly(1));
    for (auto& row : p.index) row = {2.0, 2.0, 2.0};
    const auto plan = solve_plan(p);
    REQUIRE(plan.feasible());
    CHECK(plan.action == std::vector<std::vector<int>>{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    p.budget = {3, 3, 3};
    CHECK(solve_plan(p).action == std::vector<std::vector<int>>{{1, 0, 0}, {1, 0, 0}, {1, 0, 0}});
}

TEST_CASE("at most once") {
    SUBCASE("zero indices give the empty plan") {
        const auto plan = solve_at_most_once(LookaheadProblem::uniform(3, 4, 2, Frequency::at_most(1)));
        REQUIRE(plan.feasible());
        CHECK(plan.objective == 0.0);
        for (int t = 0; t < 4; ++t) CHECK(plan.pulls_at(t) == 0);
    }
    SUBCASE("same plan as exactly once when coverage is optimal") {
        const auto plan = solve_at_most_once(two_by_two(Frequency::at_most(1)));
        CHECK(plan.objective == doctest::Approx(8.0));
        CHECK(plan.action == std::vector<std::vector<int>>{{1, 0}, {0, 1}});
    }
    SUBCASE("top-k in a single step") {
        auto p = LookaheadProblem::uniform(3, 1, 2, Frequency::at_most(1));
        p.index = {{5}, {4}, {3}};
        const auto plan = solve_plan(p);
        CHECK(plan.objective == doctest::Approx(9.0));
        CHECK(plan.action == std::vector<std::vector<int>>{{1}, {1}, {0}});
    }
}

TEST_CASE("multipull") {
    SUBCASE("post-pull index caps the later pull") {
        auto p = LookaheadProblem::uniform(1, 2, 1, Frequency::between(2, 2));
        p.index = {{2.0, 3.0}};
        p.post_pull = {{{0.0, 1.0}, {0.0, 0.0}}};
        CHECK(pattern_value(p, 0, {0, 1}) == doctest::Approx(3.0));
        const auto plan = solve_with_multipull(p);
        REQUIRE(plan.feasible());
        CHECK(plan.objective == doctest::Approx(3.0));
    }
    SUBCASE("large post-pull gain earns a second pull") {
        auto p = LookaheadProblem::uniform(2, 4, 2, Frequency::at_most(2));
        p.index = {{1, 2, 3, 4}, {0.5, 0.5, 0.5, 0.5}};
        p.post_pull.assign(2, std::vector<std::vector<double>>(4, std::vector<double>(4, 0.0)));
        for (int t = 0; t < 4; ++t) {
            for (int s = t + 1; s < 4; ++s) p.post_pull[0][t][s] = p.index[0][s] * 0.9;
        }
        const auto want = brute_force_plan(p);
        for (const auto& plan : {solve_plan(p), solve_with_multipull(p), solve_patterns(p)}) {
            REQUIRE(plan.feasible());
            CHECK(plan.objective == doctest::Approx(want.objective));
            CHECK(plan.steps(0).size() == 2);
        }
    }
    SUBCASE("no slack reduces to exactly once") {
        std::mt19937_64 gen(8);
        std::uniform_real_distribution<double> u(0.0, 5.0);
        auto p = LookaheadProblem::uniform(4, 4, 1, Frequency::between(1, 2));
        for (auto& row : p.index) {
            for (double& w : row) w = u(gen);
        }
        p.post_pull.assign(4, std::vector<std::vector<double>>(4, std::vector<double>(4, 5.0)));
        auto once = p;
        once.post_pull.clear();
        for (auto& f : once.frequency) f = Frequency::exactly(1);
        const auto a = solve_plan(p);
        const auto b = solve_exactly_once(once);
        CHECK(a.action == b.action);
        CHECK(a.objective == doctest::Approx(b.objective));
    }
}

TEST_CASE("fairness groups") {
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    SUBCASE("whole population is vacuous") {
        auto p = LookaheadProblem::uniform(4, 3, 2, Frequency::exactly(1));
        for (auto& row : p.index) {
            for (double& w : row) w = u(gen);
        }
        const auto fair = add_fairness(p, {{{0, 1, 2, 3}, 1.0}});
        CHECK(solve_plan(fair).action == solve_plan(p).action);
    }
    SUBCASE("share beyond one arm's pulls is infeasible") {
        auto p = LookaheadProblem::uniform(3, 3, 1, Frequency::exactly(1));
        const auto plan = solve_plan(add_fairness(p, {{{1}, 0.4}}));
        CHECK(plan.status == PlanStatus::infeasible);
    }
    SUBCASE("half share binds exactly") {
        auto p = LookaheadProblem::uniform(4, 4, 1, Frequency::exactly(1));
        const auto plan = solve_plan(add_fairness(p, {{{0, 1}, 0.5}}));
        REQUIRE(plan.feasible());
        CHECK(plan.steps(0).size() + plan.steps(1).size() == 2);
    }
    CHECK_THROWS_AS(add_fairness(LookaheadProblem::uniform(1, 1, 1, Frequency::exactly(1)), {{{0}, 1.5}}),
                    std::invalid_argument);
}

TEST_CASE("brute force: single arm single step") {
    auto p = LookaheadProblem::uniform(1, 1, 1, Frequency::at_most(1));
    p.index = {{0.0}};
    CHECK(brute_force_plan(p).action == std::vector<std::vector<int>>{{0}});
    p.index = {{0.7}};
    CHECK(brute_force_plan(p).action == std::vector<std::vector<int>>{{1}});
    p.index = {{0.0}};
    p.frequency = {Frequency::exactly(1)};
    CHECK(brute_force_plan(p).action == std::vector<std::vector<int>>{{1}});
}

TEST_CASE("solvers agree with brute force on random problems") {
    std::mt19937_64 gen(2024);
    for (Mode mode : {Mode::exactly_once, Mode::at_most_once, Mode::multipull}) {
        for (int trial = 0; trial < 60; ++trial) {
            const auto p = testing::random_problem(gen, mode);
            const auto want = brute_force_plan(p);
            const auto got = solve_plan(p);
            REQUIRE(got.status == want.status);
            if (!want.feasible()) continue;
            CHECK(testing::same_objective(got.objective, want.objective));
            CHECK(validate_plan(p, got).empty());
            if (mode != Mode::multipull) {
                const auto bm = solve_b_matching(p);
                REQUIRE(bm.feasible());
                CHECK(testing::same_objective(bm.objective, want.objective));
            } else {
                const auto big_m = solve_with_multipull(p);
                REQUIRE(big_m.feasible());
                CHECK(testing::same_objective(big_m.objective, want.objective));
            }
        }
    }
}

TEST_CASE("assignment relaxation is integral") {
    std::mt19937_64 gen(77);
    int solved = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = testing::random_problem(gen, trial % 2 ? Mode::at_most_once : Mode::exactly_once);
        const auto lp = solve_relaxation(p);
        if (lp.status != lp::Status::optimal) continue;
        ++solved;
        for (double x : lp.x) CHECK(std::min(std::abs(x), std::abs(1.0 - x)) < 1e-9);
    }
    CHECK(solved > 50);
}

TEST_CASE("objective is nondecreasing in the budget") {
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 40; ++trial) {
        auto p = testing::random_problem(gen, trial % 2 ? Mode::at_most_once : Mode::multipull);
        std::optional<double> prev;
        for (int k = 1; k <= 4; ++k) {
            p.budget.assign(p.num_steps, k);
            const auto plan = solve_plan(p);
            if (!plan.feasible()) continue;
            if (prev) CHECK(plan.objective >= *prev - 1e-9);
            prev = plan.objective;
        }
    }
}

TEST_CASE("uniform shift of the indices shifts the exactly-once objective") {
    std::mt19937_64 gen(6);
    for (int trial = 0; trial < 40; ++trial) {
        const auto p = testing::random_problem(gen, Mode::exactly_once);
        const auto base = solve_plan(p);
        if (!base.feasible()) continue;
        auto shifted = p;
        for (auto& row : shifted.index) {
            for (double& w : row) w += 1.75;
        }
        const auto plan = solve_plan(shifted);
        REQUIRE(plan.feasible());
        CHECK(plan.objective == doctest::Approx(base.objective + 1.75 * p.num_arms));
        CHECK(plan.action == base.action);
    }
}

TEST_CASE("validator catches broken plans") {
    auto p = two_by_two(Frequency::exactly(1));
    auto plan = solve_plan(p);
    plan.action[0][1] = 1;
    const auto issues = validate_plan(p, plan);
    CHECK_FALSE(issues.empty());
}

TEST_CASE("slots must be matched one pull each") {
    CHECK(slots_admit({{0, 1}, {1, 2}}, {1, 2}));
    CHECK(slots_admit({{0, 1}, {1, 2}}, {0, 1}));
    CHECK_FALSE(slots_admit({{0, 1}, {1, 2}}, {0, 0}));
    CHECK_FALSE(slots_admit({{0, 1}}, {0, 1}));
    auto p = LookaheadProblem::uniform(1, 4, 1, Frequency::between(1, 2));
    p.index = {{1, 2, 3, 4}};
    p.post_pull.assign(1, std::vector<std::vector<double>>(4, std::vector<double>(4, 5.0)));
    p.slots = {{{0, 1}, {1, 2}}};
    const auto plan = solve_plan(p);
    REQUIRE(plan.feasible());
    CHECK(plan.steps(0) == std::vector<int>{1, 2});
}

TEST_CASE("greedy step") {
    CHECK(greedy_whittle_step({0.5, 0.9, 0.1}, 1) == std::vector<int>{1});
    CHECK(greedy_whittle_step({0.0, 0.0, 0.0, 0.0}, 2) == std::vector<int>{0, 1});
    CHECK(greedy_whittle_step({0.3, 0.2}, 5) == std::vector<int>{0, 1});
}
