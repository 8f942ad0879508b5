#pragma once

#include "rmab/arm_model.hpp"
#include "rmab/whittle.hpp"

#include <iosfwd>
#include <vector>

namespace rmab {

/// Chain position, step within the period (1..P) and pulls still allowed in
/// the current window.
struct EncodedState {
    int belief_pos = 0;
    int timer = 1;
    int pulls_left = 0;

    friend bool operator==(const EncodedState&, const EncodedState&) = default;
};

/// Arm MDP augmented with a period timer and a per-window pull counter. All
/// timer and counter transitions are deterministic.
struct EncodedMDP {
    ArmMDP mdp;
    std::vector<EncodedState> states;
    BeliefChain chain;
    ActionWindow window;
    int period = 12;
    int allowance = 1;

    int num_states() const { return static_cast<int>(states.size()); }
    /// State id, or -1 if the combination is not part of the state space.
    int state_id(const EncodedState& s) const;
    /// Active and passive differ in `s` (inside the window with pulls left).
    bool can_act(const EncodedState& s) const;
    /// Counter value on arriving at `timer` with `carried` pulls left.
    int counter_on_entry(int timer, int carried) const;

    /// Dense (timer, counter, position) -> state id map, -1 where absent.
    std::vector<int> lookup;
};

EncodedMDP encode_action_window(const BeliefChain& chain, ActionWindow window, int period, int allowance = 1);

struct SleepState {
    int belief_pos = 0;
    int countdown = 0;
};

/// Arm MDP in which every pull blocks further pulls for `sleep` steps.
struct SleepEncodedMDP {
    ArmMDP mdp;
    std::vector<SleepState> states;
    int sleep = 0;

    int state_id(const SleepState& s) const { return s.countdown * chain_size + s.belief_pos; }
    int chain_size = 0;
};

SleepEncodedMDP encode_sleep(const BeliefChain& chain, int sleep);

struct ZeroIndexReport {
    bool ok = true;
    std::vector<int> violating_states;
    double max_ineligible_index = 0.0;
};

/// Checks that every state where acting has no effect has index <= tol.
ZeroIndexReport zero_outside_window_check(const EncodedMDP& encoded, const IndexTable& table, double tol = 1e-6);
ZeroIndexReport zero_outside_window_check(const SleepEncodedMDP& encoded, const IndexTable& table,
                                          double tol = 1e-6);

/// Text listing of states and transitions, one state per line.
void dump_encoded(std::ostream& out, const EncodedMDP& encoded);

}  // namespace rmab
