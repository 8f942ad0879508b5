#include "rmab/encoding.hpp"
#include "rmab/parallel.hpp"
#include "rmab/whittle.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace rmab;

namespace {

const TransitionKernel kSym{0.9, 0.1, 0.1, 0.9};

/// Value of a fixed policy from the Bellman equations solved as a dense
/// linear system.
Eigen::VectorXd policy_value(const ArmMDP& mdp, double gamma, double m, const std::vector<int>& pi) {
    const int n = mdp.num_states();
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd r(n);
    for (int s = 0; s < n; ++s) {
        const auto& row = pi[s] ? mdp.active[s] : mdp.passive[s];
        r(s) = mdp.reward[s] + (pi[s] ? 0.0 : m);
        for (auto [to, p] : row) a(s, to) -= gamma * p;
    }
    return a.partialPivLu().solve(r);
}

std::array<double, 2> q_from(const ArmMDP& mdp, double gamma, double m, const Eigen::VectorXd& v, int s) {
    std::array<double, 2> q{mdp.reward[s] + m, mdp.reward[s]};
    for (auto [to, p] : mdp.passive[s]) q[0] += gamma * p * v(to);
    for (auto [to, p] : mdp.active[s]) q[1] += gamma * p * v(to);
    return q;
}

/// Optimal Q by enumerating every deterministic policy (small MDPs only).
QTable enumerated_q(const ArmMDP& mdp, double gamma, double m) {
    const int n = mdp.num_states();
    Eigen::VectorXd best;
    for (int code = 0; code < (1 << n); ++code) {
        std::vector<int> pi(n);
        for (int s = 0; s < n; ++s) pi[s] = (code >> s) & 1;
        const auto v = policy_value(mdp, gamma, m, pi);
        if (best.size() == 0) best = v;
        else best = best.cwiseMax(v);
    }
    QTable q(n);
    for (int s = 0; s < n; ++s) q[s] = q_from(mdp, gamma, m, best, s);
    return q;
}

/// Optimal Q by Howard iteration on the dense linear system.
QTable howard_q(const ArmMDP& mdp, double gamma, double m) {
    const int n = mdp.num_states();
    std::vector<int> pi(n, 0);
    for (int it = 0; it < 1000; ++it) {
        const auto v = policy_value(mdp, gamma, m, pi);
        bool changed = false;
        for (int s = 0; s < n; ++s) {
            const auto q = q_from(mdp, gamma, m, v, s);
            const int want = q[1] > q[0] + 1e-12 ? 1 : 0;
            if (want != pi[s]) {
                pi[s] = want;
                changed = true;
            }
        }
        if (!changed) {
            QTable out(n);
            for (int s = 0; s < n; ++s) out[s] = q_from(mdp, gamma, m, v, s);
            return out;
        }
    }
    throw std::runtime_error("oracle policy iteration did not converge");
}

bool oracle_passive(const ArmMDP& mdp, double gamma, double m, int state) {
    const auto q = howard_q(mdp, gamma, m);
    return q[state][0] >= q[state][1] - 1e-12;
}

/// Smallest grid subsidy at which passive is optimal: a coarse scan at step
/// 1e-2 locates the crossing, a fine scan at step 1e-4 resolves it.
double grid_scan_index(const ArmMDP& mdp, double gamma, int state) {
    const double hi = 1.0 / (1.0 - gamma);
    double coarse = hi;
    for (double m = 0.0; m <= hi + 1e-12; m += 1e-2) {
        if (oracle_passive(mdp, gamma, m, state)) {
            coarse = m;
            break;
        }
    }
    for (double m = std::max(0.0, coarse - 1e-2); m <= coarse + 1e-12; m += 1e-4) {
        if (oracle_passive(mdp, gamma, m, state)) return m;
    }
    return coarse;
}

ArmMDP absorbing_reward_one() {
    ArmMDP mdp;
    mdp.reward = {1.0};
    mdp.passive = {{{0, 1.0}}};
    mdp.active = {{{0, 1.0}}};
    return mdp;
}

}  // namespace

TEST_CASE("Q values of a single absorbing state") {
    const auto mdp = absorbing_reward_one();
    for (const auto& q : {value_iteration_q(mdp, 0.95, 0.0), policy_iteration_q(mdp, 0.95, 0.0)}) {
        CHECK(q[0][0] == doctest::Approx(20.0).epsilon(1e-8));
        CHECK(q[0][1] == doctest::Approx(20.0).epsilon(1e-8));
    }
}

TEST_CASE("large subsidy makes passive optimal everywhere") {
    const auto mdp = chain_mdp(build_belief_chain(kSym));
    const auto q = value_iteration_q(mdp, 0.95, 100.0);
    for (const auto& row : q) CHECK(row[0] > row[1]);
}

TEST_CASE("Q values match the linear-system oracle") {
    const auto chain = build_belief_chain(kSym, 1e-4, 3);
    REQUIRE(chain.size() == 3);
    const auto mdp = chain_mdp(chain);
    for (double m : {0.0, 0.05, 0.2, 1.0}) {
        const auto want = enumerated_q(mdp, 0.95, m);
        const auto vi = value_iteration_q(mdp, 0.95, m);
        const auto pi = policy_iteration_q(mdp, 0.95, m);
        for (int s = 0; s < 3; ++s) {
            for (int a = 0; a < 2; ++a) {
                CHECK(std::abs(vi[s][a] - want[s][a]) < 1e-7);
                CHECK(std::abs(pi[s][a] - want[s][a]) < 1e-9);
            }
        }
    }
}

TEST_CASE("policy iteration agrees with value iteration on random chains") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const auto chain = build_belief_chain(TransitionKernel::from_fail_rates(u(gen), u(gen)), 1e-4, 30);
        const auto mdp = chain_mdp(chain);
        const double m = u(gen) * 3.0;
        const auto vi = value_iteration_q(mdp, 0.95, m);
        const auto pi = policy_iteration_q(mdp, 0.95, m);
        for (int s = 0; s < mdp.num_states(); ++s) {
            CHECK(std::abs(vi[s][0] - pi[s][0]) < 1e-7);
            CHECK(std::abs(vi[s][1] - pi[s][1]) < 1e-7);
        }
    }
}

TEST_CASE("index of a state whose actions coincide is zero") {
    const auto mdp = absorbing_reward_one();
    CHECK(whittle_index(mdp, 0) == 0.0);
    const auto table = index_table(chain_mdp(build_belief_chain({1.0, 0.0, 0.0, 1.0})));
    REQUIRE(table.size() == 1);
    CHECK(table[0] == 0.0);
}

TEST_CASE("chain indices match the grid-scan oracle") {
    const auto chain = build_belief_chain(kSym);
    const auto mdp = chain_mdp(chain);
    const auto table = index_table(mdp);
    REQUIRE(table.size() == chain.size());
    SUBCASE("tail") {
        CHECK(std::abs(table[chain.tail()] - grid_scan_index(mdp, 0.95, chain.tail())) < 1e-3);
    }
    SUBCASE("head") {
        // A pull at the head still moves the next belief from p11 to 1, so
        // the head index is positive unless the passing state is absorbing.
        const double oracle = grid_scan_index(mdp, 0.95, 0);
        CHECK(std::abs(table[0] - oracle) < 1e-3);
        CHECK(table[0] > 0.0);
    }
    SUBCASE("nondecreasing along a decreasing chain") {
        for (int s = 0; s + 1 < table.size(); ++s) CHECK(table[s] <= table[s + 1] + 1e-6);
    }
}

TEST_CASE("bisection output brackets the switch point") {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const auto mdp = chain_mdp(build_belief_chain(TransitionKernel::from_fail_rates(u(gen), u(gen)), 1e-4, 40));
        IndexOptions opt;
        for (int s = 0; s < mdp.num_states(); s += 3) {
            const double w = whittle_index(mdp, s, opt);
            if (mdp.actions_coincide(s)) continue;
            const auto below = value_iteration_q(mdp, opt.gamma, w - opt.tolerance);
            const auto above = value_iteration_q(mdp, opt.gamma, w + opt.tolerance);
            CHECK(below[s][0] < below[s][1] + 1e-8);
            CHECK(above[s][0] >= above[s][1] - 1e-8);
        }
    }
}

TEST_CASE("tighter tolerance refines the index") {
    const auto mdp = chain_mdp(build_belief_chain(kSym));
    const auto coarse = index_table(mdp, {0.95, 1e-5});
    const auto fine = index_table(mdp, {0.95, 1e-6});
    for (int s = 0; s < coarse.size(); ++s) CHECK(std::abs(coarse[s] - fine[s]) <= 1e-5 + 1e-6);
}

TEST_CASE("parallel and serial tables are bitwise equal") {
    const auto mdp = chain_mdp(build_belief_chain({0.8, 0.2, 0.05, 0.95}));
    const auto serial = index_table(mdp);
    std::vector<double> par(static_cast<std::size_t>(mdp.num_states()));
    parallel_for(mdp.num_states(), 4, [&](int s) { par[s] = whittle_index(mdp, s); });
    CHECK(par == serial.index);
}

TEST_CASE("forecasts") {
    const auto chain = build_belief_chain(kSym);
    const auto table = index_table(chain_mdp(chain));
    const auto at_tail = forecast_indices(chain, chain.tail(), table, 12);
    for (double w : at_tail.index) CHECK(w == at_tail.index.front());
    const auto f = forecast_indices(chain, 2, table, 12);
    for (int t = 0; t + 1 < 12; ++t) {
        CHECK(f.index[t] == table[chain.clamp(2 + t)]);
        CHECK(f.post_pull[t][t + 1] == table[0]);
    }
    CHECK_THROWS_AS(forecast_indices(chain, chain.size(), table, 3), std::out_of_range);
}

TEST_CASE("indexability") {
    const double gamma = 0.95;
    const auto grid = subsidy_grid(0.0, 1.0 / (1.0 - gamma), 1e-3);
    CHECK(grid.size() == 20001);
    SUBCASE("coinciding actions") {
        const auto r = check_indexability(absorbing_reward_one(), gamma, grid);
        CHECK(r.indexable);
        CHECK(r.violations.empty());
    }
    SUBCASE("restore-to-pass chain") {
        CHECK(check_indexability(chain_mdp(build_belief_chain(kSym)), gamma, grid).indexable);
    }
    SUBCASE("window-encoded arm") {
        const auto enc = encode_action_window(build_belief_chain(kSym, 1e-4, 5), {3, 2}, 12, 1);
        CHECK(check_indexability(enc.mdp, gamma, grid).indexable);
    }
    SUBCASE("passive sets grow with the subsidy") {
        const auto mdp = chain_mdp(build_belief_chain({0.7, 0.3, 0.2, 0.8}));
        std::vector<bool> prev(static_cast<std::size_t>(mdp.num_states()), false);
        for (double m = 0.0; m <= 20.0; m += 0.05) {
            const auto cur = passive_set(value_iteration_q(mdp, gamma, m));
            for (int s = 0; s < mdp.num_states(); ++s) CHECK((!prev[s] || cur[s]));
            prev = cur;
        }
    }
}

TEST_CASE("index cache") {
    IndexCache cache;
    const auto chain = build_belief_chain(kSym);
    IndexCache::Key key;
    key.kernel = kSym;
    const auto& a = cache.chain_table(chain, key);
    const auto& b = cache.chain_table(chain, key);
    CHECK(&a == &b);
    CHECK(cache.size() == 1);
    key.gamma = 0.9;
    const auto& c = cache.chain_table(chain, key);
    CHECK(&c != &a);
    CHECK(cache.size() == 2);
    CHECK(a.index == index_table(chain_mdp(chain)).index);
}
