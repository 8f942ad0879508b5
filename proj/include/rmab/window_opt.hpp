#pragma once

#include "rmab/arm_model.hpp"
#include "rmab/lp.hpp"
#include "rmab/planner.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace rmab {

/// Planned inspections of one period under a window covering the whole
/// period. action[i][t], t 0-based within the period.
struct VirtualSequence {
    std::vector<std::vector<int>> action;

    int num_arms() const { return static_cast<int>(action.size()); }
    int period() const { return action.empty() ? 0 : static_cast<int>(action.front().size()); }
    std::vector<int> counts() const;
};

/// Runs the planner with every step eligible. Returns an empty optional
/// when the planner reports infeasibility.
std::optional<VirtualSequence> simulate_virtual_sequence(LookaheadProblem problem,
                                                         const PlannerOptions& options = {});

struct WindowLp {
    struct Var {
        int t;      // virtual step, 0-based
        int start;  // window start, 0-based
        int col;
    };
    lp::Model model;
    std::vector<Var> vars;
    std::vector<int> counts;
    int window_len = 1;
};

/// Variables f[t][s] for every step with a positive count and every start s
/// with s <= t <= s + W - 1 whose window fits in the period. The objective
/// sums |g[t][s] - g[t][s']| over ordered pairs of starts, g = c[t] * f.
WindowLp build_window_lp(const std::vector<int>& counts, int window_len);

struct WindowDistribution {
    int period = 0;
    int window_len = 1;
    /// f[t][s], 0-based; rows of steps with zero count are all zero.
    std::vector<std::vector<double>> f;
    std::vector<int> counts;
    double objective = 0.0;

    double g(int t, int s) const { return counts[t] * f[t][s]; }
};

WindowDistribution solve_window_lp(const WindowLp& lp);

/// Draws, for every virtual inspection, a window start from f[t][.] using a
/// per-arm stream keyed by (seed, arm). Windows are 1-based; an arm gets one
/// window per virtual inspection, in step order.
std::vector<std::vector<ActionWindow>> sample_windows(const WindowDistribution& dist, const VirtualSequence& seq,
                                                      std::uint64_t seed);

}  // namespace rmab
