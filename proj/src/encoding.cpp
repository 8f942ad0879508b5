#include "rmab/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

namespace rmab {

int EncodedMDP::state_id(const EncodedState& s) const {
    const int L = chain.size();
    if (s.belief_pos < 0 || s.belief_pos >= L || s.timer < 1 || s.timer > period || s.pulls_left < 0 ||
        s.pulls_left > allowance) {
        return -1;
    }
    return lookup[(static_cast<std::size_t>(s.timer - 1) * (allowance + 1) + s.pulls_left) * L + s.belief_pos];
}

bool EncodedMDP::can_act(const EncodedState& s) const {
    return window.contains(s.timer) && s.pulls_left > 0;
}

int EncodedMDP::counter_on_entry(int timer, int carried) const {
    if (timer == window.start) return allowance;
    if (window.contains(timer)) return carried;
    return 0;
}

EncodedMDP encode_action_window(const BeliefChain& chain, ActionWindow window, int period, int allowance) {
    if (period < 1) throw std::invalid_argument("period must be at least 1");
    if (window.length < 1 || window.start < 1 || window.last() > period) {
        throw std::invalid_argument("window [" + std::to_string(window.start) + ", " + std::to_string(window.last()) +
                                    "] does not fit in a period of " + std::to_string(period));
    }
    if (allowance < 1) throw std::invalid_argument("window allowance must be at least 1");

    EncodedMDP enc;
    enc.chain = chain;
    enc.window = window;
    enc.period = period;
    enc.allowance = allowance;
    const int L = chain.size();
    enc.lookup.assign(static_cast<std::size_t>(period) * (allowance + 1) * L, -1);
    for (int timer = 1; timer <= period; ++timer) {
        const int max_counter = window.contains(timer) ? allowance : 0;
        for (int c = 0; c <= max_counter; ++c) {
            for (int j = 0; j < L; ++j) {
                enc.lookup[(static_cast<std::size_t>(timer - 1) * (allowance + 1) + c) * L + j] = enc.num_states();
                enc.states.push_back({j, timer, c});
            }
        }
    }
    for (const auto& s : enc.states) {
        const int next_timer = s.timer % period + 1;
        const EncodedState passive{chain.successor(s.belief_pos), next_timer,
                                   enc.counter_on_entry(next_timer, s.pulls_left)};
        const EncodedState active =
            enc.can_act(s) ? EncodedState{0, next_timer, enc.counter_on_entry(next_timer, s.pulls_left - 1)} : passive;
        enc.mdp.reward.push_back(chain.beliefs[s.belief_pos]);
        enc.mdp.passive.push_back({{enc.state_id(passive), 1.0}});
        enc.mdp.active.push_back({{enc.state_id(active), 1.0}});
    }
    return enc;
}

SleepEncodedMDP encode_sleep(const BeliefChain& chain, int sleep) {
    if (sleep < 0) throw std::invalid_argument("sleep length must be nonnegative");
    SleepEncodedMDP enc;
    enc.sleep = sleep;
    enc.chain_size = chain.size();
    for (int d = 0; d <= sleep; ++d) {
        for (int j = 0; j < chain.size(); ++j) enc.states.push_back({j, d});
    }
    for (const auto& s : enc.states) {
        const int passive = enc.state_id({chain.successor(s.belief_pos), s.countdown > 0 ? s.countdown - 1 : 0});
        const int active = s.countdown == 0 ? enc.state_id({0, sleep}) : passive;
        enc.mdp.reward.push_back(chain.beliefs[s.belief_pos]);
        enc.mdp.passive.push_back({{passive, 1.0}});
        enc.mdp.active.push_back({{active, 1.0}});
    }
    return enc;
}

namespace {

template <class Blocked>
ZeroIndexReport check_zero(int n, const IndexTable& table, double tol, Blocked&& blocked) {
    if (table.size() != n) throw std::invalid_argument("index table does not match the encoded arm");
    ZeroIndexReport report;
    for (int s = 0; s < n; ++s) {
        if (!blocked(s)) continue;
        report.max_ineligible_index = std::max(report.max_ineligible_index, std::abs(table[s]));
        if (std::abs(table[s]) > tol) report.violating_states.push_back(s);
    }
    report.ok = report.violating_states.empty();
    return report;
}

}  // namespace

ZeroIndexReport zero_outside_window_check(const EncodedMDP& enc, const IndexTable& table, double tol) {
    return check_zero(enc.num_states(), table, tol, [&](int s) { return !enc.can_act(enc.states[s]); });
}

ZeroIndexReport zero_outside_window_check(const SleepEncodedMDP& enc, const IndexTable& table, double tol) {
    return check_zero(static_cast<int>(enc.states.size()), table, tol,
                      [&](int s) { return enc.states[s].countdown > 0; });
}

void dump_encoded(std::ostream& out, const EncodedMDP& enc) {
    out << "window " << enc.window.start << '-' << enc.window.last() << " period " << enc.period << " allowance "
        << enc.allowance << " states " << enc.num_states() << '\n';
    for (int id = 0; id < enc.num_states(); ++id) {
        const auto& s = enc.states[id];
        out << id << " (b" << s.belief_pos << ",t" << s.timer << ",m" << s.pulls_left << ") reward "
            << enc.mdp.reward[id] << " passive->" << enc.mdp.passive[id].front().first << " active->"
            << enc.mdp.active[id].front().first << '\n';
    }
}

}  // namespace rmab
