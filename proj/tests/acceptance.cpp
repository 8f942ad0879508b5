// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include "problem_gen.hpp"

#include "rmab/encoding.hpp"
#include "rmab/planner.hpp"
#include "rmab/simulate.hpp"
#include "rmab/whittle.hpp"
#include "rmab/window_opt.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace rmab;
using testing::Mode;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o) {
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << id << "  " << name << ": " << o.detail << std::endl;
    if (!o.pass) ++failures;
}

std::string fmt(double v, int digits = 4) {
    std::ostringstream s;
    s.precision(digits);
    s << std::fixed << v;
    return s.str();
}

// --- 1 -------------------------------------------------------------------

Outcome planner_oracle() {
    const auto start = Clock::now();
    std::mt19937_64 gen(20240601);
    const Mode modes[] = {Mode::exactly_once, Mode::at_most_once, Mode::multipull};
    int agree = 0, infeasible = 0, with_groups = 0, total = 0;
    std::string first_mismatch;
    for (int trial = 0; trial < 300; ++trial) {
        auto p = testing::random_problem(gen, modes[trial % 3]);
        if (trial % 2 == 1) {
            // Fairness on a random subset of arms.
            FairnessGroup g;
            for (int i = 0; i < p.num_arms; ++i) {
                if (std::bernoulli_distribution(0.5)(gen)) g.arms.push_back(i);
            }
            if (g.arms.empty()) g.arms.push_back(0);
            g.lambda = std::uniform_real_distribution<double>(0.0, 0.6)(gen);
            p = add_fairness(std::move(p), {g});
            ++with_groups;
        }
        ++total;
        const auto want = brute_force_plan(p);
        const auto got = solve_plan(p);
        bool ok = got.status == want.status;
        if (ok && want.feasible()) {
            ok = testing::same_objective(got.objective, want.objective) && validate_plan(p, got).empty();
        } else if (ok) {
            ++infeasible;
        }
        if (ok) ++agree;
        else if (first_mismatch.empty()) first_mismatch = " first mismatch at trial " + std::to_string(trial);
    }
    const double secs = seconds_since(start);
    Outcome o;
    o.pass = agree == total && secs < 60.0;
    o.detail = std::to_string(agree) + "/" + std::to_string(total) + " agree (" + std::to_string(infeasible) +
               " infeasible on both, " + std::to_string(with_groups) + " with fairness), " + fmt(secs, 1) + " s" +
               first_mismatch;
    return o;
}

// --- 2 -------------------------------------------------------------------

Outcome relaxation_integrality() {
    const auto start = Clock::now();
    std::mt19937_64 gen(424242);
    std::uniform_int_distribution<int> arms(1, 50), steps(1, 12), extra(0, 3);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    std::bernoulli_distribution blocked(0.15);
    int solved = 0, integral = 0, attempts = 0;
    double worst = 0.0;
    while (solved < 200 && attempts < 5000) {
        ++attempts;
        const int n = arms(gen);
        const int T = steps(gen);
        const bool exact = attempts % 2 == 0;
        const int k = (n + T - 1) / T + extra(gen);
        auto p = LookaheadProblem::uniform(n, T, k, exact ? Frequency::exactly(1) : Frequency::at_most(1));
        for (int i = 0; i < n; ++i) {
            for (int t = 0; t < T; ++t) {
                p.index[i][t] = u(gen);
                p.eligible[i][t] = !blocked(gen);
            }
        }
        const auto lp = solve_relaxation(p);
        if (lp.status != lp::Status::optimal) continue;
        ++solved;
        double dev = 0.0;
        for (double x : lp.x) dev = std::max(dev, std::min(std::abs(x), std::abs(1.0 - x)));
        worst = std::max(worst, dev);
        if (dev <= 1e-9) ++integral;
    }
    const double secs = seconds_since(start);
    Outcome o;
    o.pass = solved == 200 && integral == solved && secs < 60.0;
    o.detail = std::to_string(integral) + "/" + std::to_string(solved) + " relaxations integral (max deviation " +
               std::to_string(worst) + "), " + fmt(secs, 1) + " s";
    return o;
}

// --- 3 -------------------------------------------------------------------

Outcome encoded_indexability() {
    const auto start = Clock::now();
    const auto inst = generate_synthetic_instance(100, 31);
    std::mt19937_64 gen(31);
    const auto grid = subsidy_grid(0.0, 1.0 / (1.0 - inst.gamma), 1e-3);
    int indexable = 0;
    long violations = 0;
    double max_outside = 0.0;
    long states = 0;
    for (const auto& arm : inst.arms) {
        const int len = std::uniform_int_distribution<int>(1, 3)(gen);
        const int first = std::uniform_int_distribution<int>(1, inst.period - len + 1)(gen);
        const auto chain = build_belief_chain(arm.kernel, kDefaultChainTolerance, inst.horizon);
        const auto enc = encode_action_window(chain, {first, len}, inst.period, 1);
        states += enc.num_states();
        const auto r = check_indexability(enc.mdp, inst.gamma, grid);
        violations += static_cast<long>(r.violations.size());
        if (r.indexable) ++indexable;
        IndexOptions io;
        io.gamma = inst.gamma;
        const auto table = index_table(enc.mdp, io);
        max_outside = std::max(max_outside, zero_outside_window_check(enc, table).max_ineligible_index);
    }
    const double secs = seconds_since(start);
    Outcome o;
    o.pass = indexable == 100 && max_outside <= 1e-6 && secs < 600.0;
    o.detail = std::to_string(indexable) + "/100 arms indexable, " + std::to_string(violations) +
               " violations on " + std::to_string(grid.size()) + " subsidies, " + std::to_string(states) +
               " encoded states, max out-of-window index " + std::to_string(max_outside) + ", " + fmt(secs, 1) +
               " s";
    return o;
}

// --- 4 -------------------------------------------------------------------

Outcome encoding_blowup() {
    const auto chain = build_belief_chain({0.9, 0.1, 0.1, 0.9}, 1e-4, 5);
    const auto enc = encode_action_window(chain, {3, 2}, 12, 1);
    bool consistent = true;
    for (int s = 0; s < enc.num_states(); ++s) {
        const auto& st = enc.states[s];
        consistent = consistent && enc.state_id(st) == s && st.pulls_left <= 1 &&
                     (st.pulls_left == 0 || enc.window.contains(st.timer));
    }
    // Beliefs advance deterministically here, so from the period starts
    // alone a head belief only appears after an in-window pull.
    std::vector<char> seen(static_cast<std::size_t>(enc.num_states()), 0);
    std::queue<int> todo;
    for (int s = 0; s < enc.num_states(); ++s) {
        if (enc.states[s].timer == 1) {
            seen[s] = 1;
            todo.push(s);
        }
    }
    while (!todo.empty()) {
        const int s = todo.front();
        todo.pop();
        for (const auto* rows : {&enc.mdp.passive, &enc.mdp.active}) {
            for (const auto& [to, prob] : (*rows)[s]) {
                if (prob > 0.0 && !seen[to]) {
                    seen[to] = 1;
                    todo.push(to);
                }
            }
        }
    }
    const int from_starts = static_cast<int>(std::count(seen.begin(), seen.end(), 1));
    Outcome o;
    o.pass = chain.size() == 5 && enc.num_states() == 70 && enc.num_states() == 14 * chain.size() && consistent;
    o.detail = "chain " + std::to_string(chain.size()) + ", encoded " + std::to_string(enc.num_states()) +
               " timing-belief states (factor " + fmt(static_cast<double>(enc.num_states()) / chain.size(), 1) +
               "); " + std::to_string(from_starts) + " visited from period-start states of this chain";
    return o;
}

// --- independent trace audit ----------------------------------------------

struct AuditTally {
    long runs = 0;
    long surprise_runs = 0;
    /// Lower-bound misses in runs with surprises.
    long surprise_shortfalls = 0;
    long recorded_shortfalls = 0;
    long budget = 0;
    long window = 0;
    long frequency = 0;
    long internal = 0;

    long total() const { return budget + window + frequency + internal; }
};

AuditTally audit_tally;

bool pulls_fit_windows(const std::vector<int>& steps, std::vector<ActionWindow> windows) {
    if (steps.size() > windows.size()) return false;
    std::sort(windows.begin(), windows.end(), [](const ActionWindow& a, const ActionWindow& b) {
        return a.start != b.start ? a.start < b.start : a.length < b.length;
    });
    std::vector<int> order(windows.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = static_cast<int>(k);
    do {
        bool ok = true;
        for (std::size_t k = 0; k < steps.size() && ok; ++k) ok = windows[order[k]].contains(steps[k]);
        if (ok) return true;
    } while (std::next_permutation(order.begin(), order.end()));
    return false;
}

/// Scheduled pulls must sit in distinct windows of their period, never
/// exceed the upper bound counting earlier surprises, and together with
/// surprises meet the lower bound. Surprises plus pulls respect the budget.
void audit_trace(const SimulationTrace& tr, const PolicyConfig& cfg) {
    ++audit_tally.runs;
    const bool surprised = tr.total_surprises() > 0;
    if (surprised) ++audit_tally.surprise_runs;
    audit_tally.internal += static_cast<long>(tr.audit.size());
    audit_tally.recorded_shortfalls += tr.excused_shortfalls;
    for (int t = 0; t < tr.horizon; ++t) {
        int used = 0;
        for (int i = 0; i < tr.num_arms; ++i) used += tr.action[t][i] + tr.surprise[t][i];
        if (used > tr.budget) ++audit_tally.budget;
    }
    if (cfg.is_null()) return;
    for (int p = 0; p * tr.period < tr.horizon; ++p) {
        for (int i = 0; i < tr.num_arms; ++i) {
            std::vector<int> scheduled;
            int seen = 0;
            for (int tau = 1; tau <= tr.period; ++tau) {
                const int t = p * tr.period + tau - 1;
                if (tr.surprise[t][i]) ++seen;
                if (!tr.action[t][i]) continue;
                if (seen >= cfg.frequency.hi) ++audit_tally.frequency;
                ++seen;
                scheduled.push_back(tau);
            }
            if (seen < cfg.frequency.lo) {
                ++audit_tally.frequency;
                if (surprised) ++audit_tally.surprise_shortfalls;
            }
            if (!pulls_fit_windows(scheduled, tr.windows[p][i])) ++audit_tally.window;
        }
    }
}

// --- 5 -------------------------------------------------------------------

constexpr int kSeeds = 5;
constexpr int kArms = 100;

struct SeedRuns {
    Instance instance;
    IndexCache cache;
    std::map<std::string, double> reward;
};

std::vector<std::unique_ptr<SeedRuns>> seeds;

RunOptions options_for(SeedRuns& s) {
    RunOptions o;
    o.cache = &s.cache;
    return o;
}

Outcome policy_ordering() {
    const auto start = Clock::now();
    const std::vector<std::string> slugs = {"opt-opt-b12-15", "opt-opt-eq1", "rdm-opt-eq1", "rdm-ip-eq1",
                                            "opt-opt-le1"};
    std::map<std::string, double> mean;
    std::vector<std::string> broken;
    for (int seed = 1; seed <= kSeeds; ++seed) {
        auto s = std::make_unique<SeedRuns>();
        s->instance = generate_synthetic_instance(kArms, static_cast<std::uint64_t>(seed));
        for (const auto& slug : slugs) {
            const auto cfg = PolicyConfig::parse(slug);
            const auto tr = run_policy(s->instance, cfg, static_cast<std::uint64_t>(seed), options_for(*s));
            audit_trace(tr, cfg);
            s->reward[slug] = tr.reward;
            mean[slug] += tr.reward / kSeeds;
        }
        const auto& r = s->reward;
        std::cout << "      seed " << seed;
        for (const auto& slug : slugs) std::cout << "  " << slug << " " << fmt(r.at(slug), 2);
        std::cout << std::endl;
        const auto check = [&](const std::string& hi, const std::string& lo) {
            if (r.at(hi) < r.at(lo)) {
                broken.push_back("seed " + std::to_string(seed) + ": " + hi + " " + fmt(r.at(hi), 2) + " < " + lo +
                                 " " + fmt(r.at(lo), 2));
            }
        };
        check("opt-opt-b12-15", "opt-opt-eq1");
        check("opt-opt-eq1", "rdm-opt-eq1");
        check("rdm-opt-eq1", "rdm-ip-eq1");
        check("opt-opt-le1", "opt-opt-eq1");
        seeds.push_back(std::move(s));
    }
    const double best = std::max({mean["opt-opt-b12-15"], mean["opt-opt-eq1"], mean["opt-opt-le1"]});
    const double improvement = 100.0 * (best - mean["rdm-ip-eq1"]) / mean["rdm-ip-eq1"];
    const double secs = seconds_since(start);
    Outcome o;
    o.pass = broken.empty() && improvement > 0.0 && secs < 900.0;
    std::ostringstream d;
    d << "means";
    for (const auto& slug : slugs) d << ' ' << slug << '=' << fmt(mean[slug], 2);
    d << "; best over rdm-ip-eq1 " << fmt(improvement, 3) << "%; " << broken.size() << " per-seed inversions";
    for (const auto& b : broken) d << " [" << b << "]";
    d << "; " << fmt(secs, 1) << " s";
    o.detail = d.str();
    return o;
}

// --- 6 -------------------------------------------------------------------

Outcome surprise_robustness() {
    const auto start = Clock::now();
    const std::vector<std::string> slugs = {"opt-opt-eq1", "rdm-ip-eq1", "opt-opt-le1"};
    std::map<std::string, double> drop;
    for (int seed = 1; seed <= kSeeds; ++seed) {
        auto& s = *seeds[seed - 1];
        for (const auto& slug : slugs) {
            const auto cfg = PolicyConfig::parse(slug);
            const auto r = run_with_surprises(s.instance, cfg, 0.01, static_cast<std::uint64_t>(seed), options_for(s));
            audit_trace(r.base, cfg);
            audit_trace(r.surprised, cfg);
            drop[slug] += r.drop_percent / kSeeds;
            std::cout << "      seed " << seed << "  " << slug << " drop " << fmt(r.drop_percent, 3) << "%  surprises "
                      << r.surprised.total_surprises() << "  infeasible replans " << r.surprised.infeasible_replans
                      << std::endl;
        }
    }
    const bool ordered = drop["opt-opt-eq1"] <= drop["rdm-ip-eq1"];
    const bool small = drop["opt-opt-le1"] < 1.0;
    Outcome o;
    o.pass = ordered && small;
    o.detail = "mean drop opt-opt-eq1 " + fmt(drop["opt-opt-eq1"], 3) + "% vs rdm-ip-eq1 " +
               fmt(drop["rdm-ip-eq1"], 3) + "% (" + (ordered ? "ok" : "violated") + "); opt-opt-le1 " +
               fmt(drop["opt-opt-le1"], 3) + "% (" + (small ? "< 1%" : ">= 1%") + "); " +
               fmt(seconds_since(start), 1) + " s";
    return o;
}

// --- 7 -------------------------------------------------------------------

Outcome noise_sensitivity() {
    const auto start = Clock::now();
    const std::vector<std::string> slugs = {"opt-opt-eq1", "opt-ip-eq1"};
    const double sigmas[] = {0.05, 0.20};
    std::map<std::string, std::array<double, 2>> diff;
    for (int seed = 1; seed <= kSeeds; ++seed) {
        auto& s = *seeds[seed - 1];
        for (const auto& slug : slugs) {
            const auto cfg = PolicyConfig::parse(slug);
            auto clean_it = s.reward.find(slug);
            double clean = 0.0;
            if (clean_it != s.reward.end()) {
                clean = clean_it->second;
            } else {
                const auto tr = run_policy(s.instance, cfg, static_cast<std::uint64_t>(seed), options_for(s));
                audit_trace(tr, cfg);
                clean = s.reward[slug] = tr.reward;
            }
            for (int k = 0; k < 2; ++k) {
                const auto noisy = perturb_parameters(s.instance, sigmas[k], static_cast<std::uint64_t>(seed));
                RunOptions o = options_for(s);
                o.planning = &noisy;
                const auto tr = run_policy(s.instance, cfg, static_cast<std::uint64_t>(seed), o);
                audit_trace(tr, cfg);
                diff[slug][k] += (tr.reward - clean) / kSeeds;
                std::cout << "      seed " << seed << "  " << slug << " sigma " << sigmas[k] << " diff "
                          << fmt(tr.reward - clean, 3) << std::endl;
            }
        }
    }
    Outcome o;
    std::ostringstream d;
    for (const auto& slug : slugs) {
        const auto& v = diff[slug];
        const bool negative = v[0] < 0.0 && v[1] < 0.0;
        const bool trend = v[1] < v[0];
        o.pass = o.pass && negative && trend;
        d << slug << " mean diff " << fmt(v[0], 3) << " @0.05, " << fmt(v[1], 3) << " @0.20 ("
          << (negative ? "negative" : "not negative") << ", " << (trend ? "worse at 0.20" : "not worse at 0.20")
          << "); ";
    }
    d << fmt(seconds_since(start), 1) << " s";
    o.detail = d.str();
    return o;
}

// --- 8 -------------------------------------------------------------------

Outcome anonymity_lp() {
    const auto dist = solve_window_lp(build_window_lp(std::vector<int>(12, 834), 2));
    double worst = 0.0;
    for (int t = 1; t < 11; ++t) {
        worst = std::max(worst, std::abs(dist.f[t][t - 1] - 0.5));
        worst = std::max(worst, std::abs(dist.f[t][t] - 0.5));
    }
    const bool edges = std::abs(dist.f[0][0] - 1.0) <= 1e-9 && std::abs(dist.f[11][10] - 1.0) <= 1e-9;

    VirtualSequence seq;
    const int n = 10000;
    seq.action.assign(n, std::vector<int>(12, 0));
    std::mt19937_64 gen(8);
    for (auto& row : seq.action) row[gen() % 12] = 1;
    const auto sampled = sample_windows(solve_window_lp(build_window_lp(seq.counts(), 2)), seq, 8);
    int contained = 0;
    for (int i = 0; i < n; ++i) {
        const int t = static_cast<int>(std::find(seq.action[i].begin(), seq.action[i].end(), 1) - seq.action[i].begin());
        if (sampled[i].size() == 1 && sampled[i][0].contains(t + 1) && sampled[i][0].length == 2) ++contained;
    }
    Outcome o;
    o.pass = std::abs(dist.objective) <= 1e-9 && worst <= 1e-9 && edges && contained == n;
    o.detail = "objective " + std::to_string(dist.objective) + ", max |f - 0.5| on interior steps " +
               std::to_string(worst) + ", " + std::to_string(contained) + "/" + std::to_string(n) +
               " sampled windows contain the virtual step";
    return o;
}

// --- 9 -------------------------------------------------------------------

Outcome null_closed_form() {
    const auto inst = generate_synthetic_instance(50, 909);
    const auto tr = run_policy(inst, PolicyConfig::null_policy(), 1);
    double total = 0.0, worst_arm = 0.0;
    for (int i = 0; i < inst.num_arms(); ++i) {
        const auto& k = inst.arms[i].kernel;
        const double rho = k.p11 - k.p01;
        const int T = inst.horizon;
        double want = T;
        if (std::abs(1.0 - rho) > 1e-15) {
            const double b_inf = k.p01 / (1.0 - rho);
            want = T * b_inf + (1.0 - b_inf) * (1.0 - std::pow(rho, T)) / (1.0 - rho);
        }
        double got = 0.0;
        for (int t = 0; t < tr.horizon; ++t) got += tr.belief[t][i];
        worst_arm = std::max(worst_arm, std::abs(got - want));
        total += want;
    }
    const double gap = std::abs(tr.reward - total);
    Outcome o;
    o.pass = gap <= 1e-9 && worst_arm <= 1e-9;
    std::ostringstream d;
    d << "total gap " << gap << ", worst per-arm gap " << worst_arm << " over 50 arms";
    o.detail = d.str();
    return o;
}

// --- 10 ------------------------------------------------------------------

Outcome constraint_audit() {
    Outcome o;
    o.pass = audit_tally.total() == 0 && audit_tally.runs > 0;
    o.detail = std::to_string(audit_tally.runs) + " runs audited; violations: budget " +
               std::to_string(audit_tally.budget) + ", window " + std::to_string(audit_tally.window) +
               ", frequency " + std::to_string(audit_tally.frequency) + " (" +
               std::to_string(audit_tally.surprise_shortfalls) + " lower-bound misses in " +
               std::to_string(audit_tally.surprise_runs) + " runs with surprises; simulator recorded " +
               std::to_string(audit_tally.recorded_shortfalls) + " excused shortfalls), simulator log " +
               std::to_string(audit_tally.internal);
    return o;
}

void run(int id, const std::string& name, const std::function<Outcome()>& body) {
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail = std::string("threw: ") + e.what();
    }
    report(id, name, o);
}

}  // namespace

int main() {
    const auto start = Clock::now();
    run(1, "planner matches brute force", planner_oracle);
    run(2, "assignment relaxation integral", relaxation_integrality);
    run(3, "encoded arms indexable", encoded_indexability);
    run(4, "encoded state count", encoding_blowup);
    run(5, "policy ordering", policy_ordering);
    run(6, "surprise robustness", surprise_robustness);
    run(7, "noise sensitivity", noise_sensitivity);
    run(8, "anonymity window LP", anonymity_lp);
    run(9, "null policy closed form", null_closed_form);
    run(10, "constraint audit", constraint_audit);
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << " in "
              << fmt(seconds_since(start), 1) << " s" << std::endl;
    return failures == 0 ? 0 : 1;
}
