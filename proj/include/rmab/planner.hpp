#pragma once

#include "rmab/arm_model.hpp"
#include "rmab/lp.hpp"
#include "rmab/milp.hpp"

#include <string>
#include <vector>

namespace rmab {

/// Inclusive range of lookahead steps (0-based) that admits one pull.
struct StepRange {
    int first = 0;
    int last = 0;

    bool contains(int t) const { return t >= first && t <= last; }
    friend bool operator==(const StepRange&, const StepRange&) = default;
};

/// Requires the arms in `arms` to receive at least a `lambda` share of all
/// pulls in the plan.
struct FairnessGroup {
    std::vector<int> arms;
    double lambda = 0.0;
};

/// One lookahead planning problem. Steps are 0-based within the lookahead.
struct LookaheadProblem {
    int num_arms = 0;
    int num_steps = 0;
    /// Forecast index of each arm at each step when it has not been pulled
    /// earlier in the lookahead.
    std::vector<std::vector<double>> index;
    /// post_pull[i][t][u], u > t: index of arm i at step u after a pull at
    /// step t. When empty, later pulls are valued at `index`.
    std::vector<std::vector<std::vector<double>>> post_pull;
    std::vector<int> budget;
    std::vector<std::vector<bool>> eligible;
    std::vector<Frequency> frequency;
    /// Per arm, when non-empty: every pull must be matched to a distinct slot.
    std::vector<std::vector<StepRange>> slots;
    std::vector<FairnessGroup> groups;
    /// Treat lower frequency bounds as a priority instead of a hard row: each
    /// pull that counts toward an arm's lower bound earns a bonus larger
    /// than any index total.
    bool soft_lower_bounds = false;

    /// All-zero indices, all steps eligible, budget k everywhere.
    static LookaheadProblem uniform(int num_arms, int num_steps, int k, Frequency frequency);

    bool pullable(int arm, int t) const;
    bool has_post_pull() const { return !post_pull.empty(); }
    int max_hi() const;
    void validate() const;
};

enum class PlanStatus { optimal, infeasible };

struct LookaheadPlan {
    PlanStatus status = PlanStatus::infeasible;
    std::vector<std::vector<int>> action;
    /// Sum of effective indices of the pulls (bonuses excluded).
    double objective = 0.0;
    std::string diagnostic;
    bool root_integral = false;
    long nodes = 0;

    bool feasible() const { return status == PlanStatus::optimal; }
    std::vector<int> steps(int arm) const;
    int pulls_at(int t) const;
};

const char* to_string(PlanStatus status);

/// Effective value of one arm's pulls: the first pull earns its forecast
/// index, each later pull the smaller of its forecast and every post-pull
/// index implied by the earlier pulls.
double pattern_value(const LookaheadProblem& problem, int arm, const std::vector<int>& steps);
double plan_value(const LookaheadProblem& problem, const std::vector<std::vector<int>>& action);

/// True when the sorted `steps` can be matched one-to-one into `slots`.
bool slots_admit(const std::vector<StepRange>& slots, const std::vector<int>& steps);

/// Independent check of every constraint; returns one message per problem.
std::vector<std::string> validate_plan(const LookaheadProblem& problem, const LookaheadPlan& plan);

/// Names the first aggregate shortfall (per-arm or per step range) that
/// makes the lower frequency bounds unsatisfiable.
std::string infeasibility_diagnostic(const LookaheadProblem& problem);

struct PlannerOptions {
    milp::Options milp;
    /// Pattern formulation is used while the total column count stays below.
    long max_pattern_columns = 400'000;
};

/// Dispatches on the frequency bounds: assignment model for at most one pull
/// per arm, pattern model otherwise.
LookaheadPlan solve_plan(const LookaheadProblem& problem, const PlannerOptions& options = {});

LookaheadPlan solve_exactly_once(const LookaheadProblem& problem, const PlannerOptions& options = {});
LookaheadPlan solve_at_most_once(const LookaheadProblem& problem, const PlannerOptions& options = {});

/// Pull variables plus effective-index variables v[i][t] bounded by the
/// forecast, by M * a[i][t], and by M * (1 - a[i][s]) + post_pull[i][s][t]
/// for every earlier step s. M is the largest index plus one.
LookaheadPlan solve_with_multipull(const LookaheadProblem& problem, const PlannerOptions& options = {});

/// One column per feasible set of pull steps of each arm.
LookaheadPlan solve_patterns(const LookaheadProblem& problem, const PlannerOptions& options = {});

/// Min-cost flow on the arm/step bipartite graph. Only for problems with at
/// most one pull per arm and no fairness groups.
LookaheadPlan solve_b_matching(const LookaheadProblem& problem);

/// LP relaxation of the assignment model, solved once without branching.
lp::Solution solve_relaxation(const LookaheadProblem& problem);

/// Exhaustive search over per-arm pull sets, pruned by the step budgets.
/// Throws std::length_error once the search visits more than
/// `max_candidates` nodes.
LookaheadPlan brute_force_plan(const LookaheadProblem& problem, long max_candidates = 50'000'000);

LookaheadProblem add_fairness(LookaheadProblem problem, const std::vector<FairnessGroup>& groups);

/// Arms with the k largest indices, ties to the lower arm id; sorted by id.
std::vector<int> greedy_whittle_step(const std::vector<double>& indices, int k);

}  // namespace rmab
