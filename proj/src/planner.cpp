#include "rmab/planner.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace rmab {

const char* to_string(PlanStatus status) {
    return status == PlanStatus::optimal ? "optimal" : "infeasible";
}

LookaheadProblem LookaheadProblem::uniform(int num_arms, int num_steps, int k, Frequency frequency) {
    LookaheadProblem p;
    p.num_arms = num_arms;
    p.num_steps = num_steps;
    p.index.assign(static_cast<std::size_t>(num_arms), std::vector<double>(static_cast<std::size_t>(num_steps), 0.0));
    p.budget.assign(static_cast<std::size_t>(num_steps), k);
    p.eligible.assign(static_cast<std::size_t>(num_arms), std::vector<bool>(static_cast<std::size_t>(num_steps), true));
    p.frequency.assign(static_cast<std::size_t>(num_arms), frequency);
    p.slots.assign(static_cast<std::size_t>(num_arms), {});
    return p;
}

bool LookaheadProblem::pullable(int arm, int t) const {
    if (!eligible[arm][t]) return false;
    const auto& s = slots[arm];
    if (s.empty()) return true;
    return std::any_of(s.begin(), s.end(), [&](const StepRange& r) { return r.contains(t); });
}

int LookaheadProblem::max_hi() const {
    int hi = 0;
    for (const auto& f : frequency) hi = std::max(hi, f.hi);
    return hi;
}

void LookaheadProblem::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("lookahead problem: " + what); };
    if (num_arms < 0 || num_steps < 0) fail("negative dimensions");
    const auto n = static_cast<std::size_t>(num_arms);
    const auto T = static_cast<std::size_t>(num_steps);
    if (index.size() != n || eligible.size() != n || frequency.size() != n || slots.size() != n) {
        fail("per-arm tables do not match the arm count");
    }
    if (budget.size() != T) fail("budget does not match the step count");
    for (int b : budget) {
        if (b < 0) fail("negative budget");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (index[i].size() != T || eligible[i].size() != T) fail("index or mask row has the wrong length");
        for (double w : index[i]) {
            if (!std::isfinite(w)) fail("non-finite index");
        }
        if (frequency[i].lo < 0 || frequency[i].lo > frequency[i].hi) fail("inconsistent frequency bounds");
        for (const auto& r : slots[i]) {
            if (r.first < 0 || r.last >= num_steps || r.first > r.last) fail("slot outside the lookahead");
        }
    }
    if (!post_pull.empty()) {
        if (post_pull.size() != n) fail("post-pull table does not match the arm count");
        for (const auto& arm : post_pull) {
            if (arm.size() != T) fail("post-pull table has the wrong shape");
            for (const auto& row : arm) {
                if (row.size() != T) fail("post-pull table has the wrong shape");
            }
        }
    }
    for (const auto& g : groups) {
        if (!(g.lambda >= 0.0 && g.lambda <= 1.0)) fail("fairness share outside [0,1]");
        for (int a : g.arms) {
            if (a < 0 || a >= num_arms) fail("fairness group names an unknown arm");
        }
    }
}

std::vector<int> LookaheadPlan::steps(int arm) const {
    std::vector<int> out;
    for (std::size_t t = 0; t < action[arm].size(); ++t) {
        if (action[arm][t]) out.push_back(static_cast<int>(t));
    }
    return out;
}

int LookaheadPlan::pulls_at(int t) const {
    int c = 0;
    for (const auto& row : action) c += row[t];
    return c;
}

double pattern_value(const LookaheadProblem& p, int arm, const std::vector<int>& steps) {
    double total = 0.0;
    for (std::size_t k = 0; k < steps.size(); ++k) {
        double v = p.index[arm][steps[k]];
        if (p.has_post_pull()) {
            for (std::size_t j = 0; j < k; ++j) v = std::min(v, p.post_pull[arm][steps[j]][steps[k]]);
        }
        total += v;
    }
    return total;
}

double plan_value(const LookaheadProblem& p, const std::vector<std::vector<int>>& action) {
    double total = 0.0;
    for (int i = 0; i < p.num_arms; ++i) {
        std::vector<int> steps;
        for (int t = 0; t < p.num_steps; ++t) {
            if (action[i][t]) steps.push_back(t);
        }
        total += pattern_value(p, i, steps);
    }
    return total;
}

bool slots_admit(const std::vector<StepRange>& slots, const std::vector<int>& steps) {
    if (steps.size() > slots.size()) return false;
    std::vector<int> owner(slots.size(), -1);
    std::function<bool(int, std::vector<char>&)> augment = [&](int k, std::vector<char>& seen) {
        for (std::size_t s = 0; s < slots.size(); ++s) {
            if (seen[s] || !slots[s].contains(steps[k])) continue;
            seen[s] = 1;
            if (owner[s] < 0 || augment(owner[s], seen)) {
                owner[s] = k;
                return true;
            }
        }
        return false;
    };
    for (std::size_t k = 0; k < steps.size(); ++k) {
        std::vector<char> seen(slots.size(), 0);
        if (!augment(static_cast<int>(k), seen)) return false;
    }
    return true;
}

std::vector<std::string> validate_plan(const LookaheadProblem& p, const LookaheadPlan& plan) {
    std::vector<std::string> issues;
    if (!plan.feasible()) return issues;
    if (static_cast<int>(plan.action.size()) != p.num_arms) {
        issues.push_back("plan has the wrong number of arms");
        return issues;
    }
    long total = 0;
    std::vector<int> per_arm(static_cast<std::size_t>(p.num_arms), 0);
    for (int i = 0; i < p.num_arms; ++i) {
        if (static_cast<int>(plan.action[i].size()) != p.num_steps) {
            issues.push_back("arm " + std::to_string(i) + ": plan row has the wrong length");
            return issues;
        }
        for (int t = 0; t < p.num_steps; ++t) {
            const int a = plan.action[i][t];
            if (a != 0 && a != 1) issues.push_back("arm " + std::to_string(i) + ": non-binary action");
            if (a && !p.pullable(i, t)) {
                issues.push_back("arm " + std::to_string(i) + " pulled at ineligible step " + std::to_string(t));
            }
            per_arm[i] += a;
        }
        total += per_arm[i];
        if (per_arm[i] > p.frequency[i].hi) issues.push_back("arm " + std::to_string(i) + ": too many pulls");
        if (!p.soft_lower_bounds && per_arm[i] < p.frequency[i].lo) {
            issues.push_back("arm " + std::to_string(i) + ": too few pulls");
        }
        if (!p.slots[i].empty() && !slots_admit(p.slots[i], plan.steps(i))) {
            issues.push_back("arm " + std::to_string(i) + ": pulls do not fit its windows");
        }
    }
    for (int t = 0; t < p.num_steps; ++t) {
        if (plan.pulls_at(t) > p.budget[t]) issues.push_back("budget exceeded at step " + std::to_string(t));
    }
    for (std::size_t g = 0; g < p.groups.size(); ++g) {
        double in_group = 0.0;
        for (int a : p.groups[g].arms) in_group += per_arm[a];
        if (in_group < p.groups[g].lambda * static_cast<double>(total) - 1e-9) {
            issues.push_back("fairness group " + std::to_string(g) + " below its share");
        }
    }
    const double value = plan_value(p, plan.action);
    if (std::abs(value - plan.objective) > 1e-9 * (1.0 + std::abs(value))) {
        issues.push_back("reported objective does not match the plan");
    }
    return issues;
}

std::string infeasibility_diagnostic(const LookaheadProblem& p) {
    const int T = p.num_steps;
    std::vector<std::vector<int>> cum(static_cast<std::size_t>(p.num_arms), std::vector<int>(static_cast<std::size_t>(T) + 1, 0));
    for (int i = 0; i < p.num_arms; ++i) {
        for (int t = 0; t < T; ++t) cum[i][t + 1] = cum[i][t] + (p.pullable(i, t) ? 1 : 0);
        const int lo = p.frequency[i].lo;
        if (lo > cum[i][T]) {
            return "arm " + std::to_string(i) + " needs " + std::to_string(lo) + " pulls but has " +
                   std::to_string(cum[i][T]) + " eligible steps";
        }
        if (!p.slots[i].empty() && lo > static_cast<int>(p.slots[i].size())) {
            return "arm " + std::to_string(i) + " needs " + std::to_string(lo) + " pulls but has " +
                   std::to_string(p.slots[i].size()) + " windows";
        }
    }
    if (!p.soft_lower_bounds) {
        for (int len = 1; len <= T; ++len) {
            for (int a = 0; a + len <= T; ++a) {
                const int b = a + len;  // steps [a, b)
                long demand = 0;
                long capacity = 0;
                for (int t = a; t < b; ++t) capacity += p.budget[t];
                for (int i = 0; i < p.num_arms; ++i) {
                    const int outside = cum[i][T] - (cum[i][b] - cum[i][a]);
                    demand += std::max(0, p.frequency[i].lo - outside);
                }
                if (demand > capacity) {
                    return "steps " + std::to_string(a + 1) + ".." + std::to_string(b) + " must hold " +
                           std::to_string(demand) + " pulls but the budget allows " + std::to_string(capacity);
                }
            }
        }
    }
    if (!p.groups.empty()) return "fairness shares cannot be met together with the frequency bounds";
    return "no aggregate capacity shortfall found";
}

namespace {

double max_index(const LookaheadProblem& p) {
    double m = 0.0;
    for (const auto& row : p.index) {
        for (double w : row) m = std::max(m, std::abs(w));
    }
    for (const auto& arm : p.post_pull) {
        for (const auto& row : arm) {
            for (double w : row) m = std::max(m, std::abs(w));
        }
    }
    return m;
}

long pull_bound(const LookaheadProblem& p) {
    long pulls = 0;
    for (const auto& f : p.frequency) pulls += std::min(f.hi, p.num_steps);
    return pulls;
}

// Secondary cost of pulling arm i at step t: a large constant per pull so
// that fewer pulls win, then the assignment that pairs low arm ids with
// early steps.
struct TieBreak {
    double big;
    int n;
    explicit TieBreak(const LookaheadProblem& p)
        : big(static_cast<double>(std::max(1L, pull_bound(p))) * p.num_arms * p.num_steps + 1.0), n(p.num_arms) {}
    double operator()(int i, int t) const { return big + static_cast<double>(n - i) * (t + 1); }
};

double coverage_bonus(const LookaheadProblem& p) {
    return static_cast<double>(std::max(1L, pull_bound(p))) * max_index(p) + 1.0;
}

LookaheadPlan empty_plan(const LookaheadProblem& p) {
    LookaheadPlan plan;
    plan.action.assign(static_cast<std::size_t>(p.num_arms), std::vector<int>(static_cast<std::size_t>(p.num_steps), 0));
    return plan;
}

LookaheadPlan infeasible_plan(const LookaheadProblem& p) {
    LookaheadPlan plan = empty_plan(p);
    plan.status = PlanStatus::infeasible;
    plan.diagnostic = infeasibility_diagnostic(p);
    return plan;
}

LookaheadPlan checked(const LookaheadProblem& p, LookaheadPlan plan) {
    plan.objective = plan_value(p, plan.action);
    const auto issues = validate_plan(p, plan);
    if (!issues.empty()) throw std::logic_error("planner produced an invalid plan: " + issues.front());
    return plan;
}

void add_fairness_rows(lp::Model& m, const LookaheadProblem& p,
                       const std::function<void(const std::function<void(int col, int arm, double pulls)>&)>& each) {
    for (const auto& g : p.groups) {
        std::vector<char> member(static_cast<std::size_t>(p.num_arms), 0);
        for (int a : g.arms) member[a] = 1;
        const int row = m.add_row(lp::Sense::ge, 0.0);
        each([&](int col, int arm, double pulls) {
            m.add_coef(row, col, pulls * ((member[arm] ? 1.0 : 0.0) - g.lambda));
        });
    }
}

struct PullVar {
    int arm;
    int t;
    int col;
};

struct AssignmentModel {
    lp::Model model;
    std::vector<PullVar> vars;
    std::vector<double> secondary;
};

AssignmentModel build_assignment(const LookaheadProblem& p) {
    if (p.max_hi() > 1) throw std::invalid_argument("assignment model needs at most one pull per arm");
    AssignmentModel am;
    auto& m = am.model;
    m.maximize = true;
    const TieBreak tie(p);
    const double bonus = p.soft_lower_bounds ? coverage_bonus(p) : 0.0;
    for (int i = 0; i < p.num_arms; ++i) {
        if (p.frequency[i].hi == 0) continue;
        for (int t = 0; t < p.num_steps; ++t) {
            if (!p.pullable(i, t)) continue;
            const double c = p.index[i][t] + (p.frequency[i].lo >= 1 ? bonus : 0.0);
            am.vars.push_back({i, t, m.add_column(c, 0.0, 1.0)});
            am.secondary.push_back(tie(i, t));
        }
    }
    std::vector<int> step_row(static_cast<std::size_t>(p.num_steps));
    for (int t = 0; t < p.num_steps; ++t) step_row[t] = m.add_row(lp::Sense::le, p.budget[t]);
    std::vector<int> arm_row(static_cast<std::size_t>(p.num_arms), -1);
    std::vector<int> arm_lo_row(static_cast<std::size_t>(p.num_arms), -1);
    for (int i = 0; i < p.num_arms; ++i) {
        const auto f = p.frequency[i];
        if (f.hi == 0) continue;
        if (!p.soft_lower_bounds && f.lo == f.hi) {
            arm_row[i] = m.add_row(lp::Sense::eq, f.hi);
        } else {
            arm_row[i] = m.add_row(lp::Sense::le, f.hi);
            if (!p.soft_lower_bounds && f.lo > 0) arm_lo_row[i] = m.add_row(lp::Sense::ge, f.lo);
        }
    }
    for (const auto& v : am.vars) {
        m.add_coef(step_row[v.t], v.col, 1.0);
        m.add_coef(arm_row[v.arm], v.col, 1.0);
        if (arm_lo_row[v.arm] >= 0) m.add_coef(arm_lo_row[v.arm], v.col, 1.0);
    }
    add_fairness_rows(m, p, [&](const auto& emit) {
        for (const auto& v : am.vars) emit(v.col, v.arm, 1.0);
    });
    return am;
}

LookaheadPlan run_milp(const LookaheadProblem& p, const lp::Model& m, const std::vector<bool>& integer,
                       const std::vector<double>& secondary, const PlannerOptions& opt,
                       const std::function<void(const std::vector<double>&, LookaheadPlan&)>& extract) {
    const auto res = milp::solve(m, integer, secondary, opt.milp);
    if (res.status == lp::Status::infeasible) return infeasible_plan(p);
    if (res.status != lp::Status::optimal) {
        throw std::runtime_error(std::string("planner: solver stopped with status ") + lp::to_string(res.status));
    }
    LookaheadPlan plan = empty_plan(p);
    plan.status = PlanStatus::optimal;
    plan.root_integral = res.root_integral;
    plan.nodes = res.nodes;
    extract(res.x, plan);
    return checked(p, std::move(plan));
}

LookaheadPlan solve_assignment(const LookaheadProblem& p, const PlannerOptions& opt) {
    const auto am = build_assignment(p);
    std::vector<bool> integer(static_cast<std::size_t>(am.model.num_cols()), true);
    return run_milp(p, am.model, integer, am.secondary, opt, [&](const std::vector<double>& x, LookaheadPlan& plan) {
        for (const auto& v : am.vars) {
            if (x[v.col] > 0.5) plan.action[v.arm][v.t] = 1;
        }
    });
}

// All pull sets of one arm with lo <= size <= hi that fit its slots, in
// order of size then lexicographic; the empty set is not listed.
std::vector<std::vector<int>> arm_patterns(const LookaheadProblem& p, int arm, int lo, long limit) {
    std::vector<int> steps;
    for (int t = 0; t < p.num_steps; ++t) {
        if (p.pullable(arm, t)) steps.push_back(t);
    }
    const int hi = std::min<int>(p.frequency[arm].hi, static_cast<int>(steps.size()));
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    std::function<void(std::size_t, int)> rec = [&](std::size_t from, int size) {
        if (static_cast<int>(cur.size()) == size) {
            if (p.slots[arm].empty() || slots_admit(p.slots[arm], cur)) {
                out.push_back(cur);
                if (static_cast<long>(out.size()) > limit) throw std::length_error("too many pull patterns");
            }
            return;
        }
        for (std::size_t k = from; k < steps.size(); ++k) {
            cur.push_back(steps[k]);
            rec(k + 1, size);
            cur.pop_back();
        }
    };
    for (int size = std::max(1, lo); size <= hi; ++size) rec(0, size);
    return out;
}

bool slots_disjoint(const std::vector<StepRange>& slots) {
    for (std::size_t a = 0; a < slots.size(); ++a) {
        for (std::size_t b = a + 1; b < slots.size(); ++b) {
            if (slots[a].first <= slots[b].last && slots[b].first <= slots[a].last) return false;
        }
    }
    return true;
}

}  // namespace

LookaheadPlan solve_patterns(const LookaheadProblem& p, const PlannerOptions& opt) {
    p.validate();
    lp::Model m;
    m.maximize = true;
    const TieBreak tie(p);
    const double bonus = p.soft_lower_bounds ? coverage_bonus(p) : 0.0;
    struct Column {
        int arm;
        std::vector<int> steps;
    };
    std::vector<Column> cols;
    std::vector<double> secondary;
    std::vector<int> step_row(static_cast<std::size_t>(p.num_steps));
    for (int t = 0; t < p.num_steps; ++t) step_row[t] = m.add_row(lp::Sense::le, p.budget[t]);
    long remaining = opt.max_pattern_columns;
    for (int i = 0; i < p.num_arms; ++i) {
        const auto f = p.frequency[i];
        const int lo = p.soft_lower_bounds ? 0 : f.lo;
        auto patterns = arm_patterns(p, i, lo, remaining);
        remaining -= static_cast<long>(patterns.size());
        if (patterns.empty() && lo == 0) continue;
        const int row = m.add_row(lo == 0 ? lp::Sense::le : lp::Sense::eq, 1.0);
        for (auto& s : patterns) {
            const double c = pattern_value(p, i, s) + bonus * std::min<int>(static_cast<int>(s.size()), f.lo);
            const int col = m.add_column(c, 0.0, 1.0);
            m.add_coef(row, col, 1.0);
            double sec = 0.0;
            for (int t : s) {
                m.add_coef(step_row[t], col, 1.0);
                sec += tie(i, t);
            }
            secondary.push_back(sec);
            cols.push_back({i, std::move(s)});
        }
    }
    add_fairness_rows(m, p, [&](const auto& emit) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            emit(static_cast<int>(c), cols[c].arm, static_cast<double>(cols[c].steps.size()));
        }
    });
    std::vector<bool> integer(static_cast<std::size_t>(m.num_cols()), true);
    return run_milp(p, m, integer, secondary, opt, [&](const std::vector<double>& x, LookaheadPlan& plan) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (x[c] > 0.5) {
                for (int t : cols[c].steps) plan.action[cols[c].arm][t] = 1;
            }
        }
    });
}

LookaheadPlan solve_with_multipull(const LookaheadProblem& p, const PlannerOptions& opt) {
    p.validate();
    if (p.max_hi() > 2) throw std::invalid_argument("multipull model supports at most two pulls per arm");
    for (const auto& s : p.slots) {
        if (!slots_disjoint(s)) throw std::invalid_argument("multipull model needs disjoint windows");
    }
    for (const auto& row : p.index) {
        for (double w : row) {
            if (w < 0.0) throw std::invalid_argument("multipull model needs nonnegative indices");
        }
    }
    const double big_m = max_index(p) + 1.0;
    const TieBreak tie(p);
    const double bonus = p.soft_lower_bounds ? coverage_bonus(p) : 0.0;
    lp::Model m;
    m.maximize = true;
    std::vector<PullVar> pulls;
    std::vector<int> value_col;
    std::vector<double> secondary;
    std::vector<bool> integer;
    std::vector<std::vector<int>> col_of(static_cast<std::size_t>(p.num_arms),
                                         std::vector<int>(static_cast<std::size_t>(p.num_steps), -1));
    for (int i = 0; i < p.num_arms; ++i) {
        if (p.frequency[i].hi == 0) continue;
        for (int t = 0; t < p.num_steps; ++t) {
            if (!p.pullable(i, t)) continue;
            const int a = m.add_column(0.0, 0.0, 1.0);
            const int v = m.add_column(1.0, -big_m, p.index[i][t]);
            pulls.push_back({i, t, a});
            value_col.push_back(v);
            col_of[i][t] = a;
            secondary.push_back(tie(i, t));
            secondary.push_back(0.0);
            integer.push_back(true);
            integer.push_back(false);
            const int r = m.add_row(lp::Sense::le, 0.0);
            m.add_coef(r, v, 1.0);
            m.add_coef(r, a, -big_m);
        }
    }
    if (p.has_post_pull()) {
        for (std::size_t k = 0; k < pulls.size(); ++k) {
            const auto& later = pulls[k];
            for (int s = 0; s < later.t; ++s) {
                const int a = col_of[later.arm][s];
                if (a < 0) continue;
                const int r = m.add_row(lp::Sense::le, big_m + p.post_pull[later.arm][s][later.t]);
                m.add_coef(r, value_col[k], 1.0);
                m.add_coef(r, a, big_m);
            }
        }
    }
    for (int t = 0; t < p.num_steps; ++t) {
        const int r = m.add_row(lp::Sense::le, p.budget[t]);
        for (const auto& v : pulls) {
            if (v.t == t) m.add_coef(r, v.col, 1.0);
        }
    }
    for (int i = 0; i < p.num_arms; ++i) {
        const auto f = p.frequency[i];
        const bool hard_lo = !p.soft_lower_bounds && f.lo > 0;
        const int hi_row = m.add_row(lp::Sense::le, f.hi);
        const int lo_row = hard_lo ? m.add_row(lp::Sense::ge, f.lo) : -1;
        int bonus_row = -1;
        if (p.soft_lower_bounds && f.lo > 0) {
            const int y = m.add_column(bonus, 0.0, f.lo);
            secondary.push_back(0.0);
            integer.push_back(false);
            bonus_row = m.add_row(lp::Sense::le, 0.0);
            m.add_coef(bonus_row, y, 1.0);
        }
        for (const auto& v : pulls) {
            if (v.arm != i) continue;
            m.add_coef(hi_row, v.col, 1.0);
            if (lo_row >= 0) m.add_coef(lo_row, v.col, 1.0);
            if (bonus_row >= 0) m.add_coef(bonus_row, v.col, -1.0);
        }
        if (hard_lo && std::none_of(pulls.begin(), pulls.end(), [&](const PullVar& v) { return v.arm == i; })) {
            return infeasible_plan(p);
        }
        for (const auto& slot : p.slots[i]) {
            const int r = m.add_row(lp::Sense::le, 1.0);
            for (const auto& v : pulls) {
                if (v.arm == i && slot.contains(v.t)) m.add_coef(r, v.col, 1.0);
            }
        }
    }
    add_fairness_rows(m, p, [&](const auto& emit) {
        for (const auto& v : pulls) emit(v.col, v.arm, 1.0);
    });
    return run_milp(p, m, integer, secondary, opt, [&](const std::vector<double>& x, LookaheadPlan& plan) {
        for (const auto& v : pulls) {
            if (x[v.col] > 0.5) plan.action[v.arm][v.t] = 1;
        }
    });
}

LookaheadPlan solve_plan(const LookaheadProblem& p, const PlannerOptions& opt) {
    p.validate();
    if (p.max_hi() <= 1) return solve_assignment(p, opt);
    try {
        return solve_patterns(p, opt);
    } catch (const std::length_error&) {
        return solve_with_multipull(p, opt);
    }
}

LookaheadPlan solve_exactly_once(const LookaheadProblem& p, const PlannerOptions& opt) {
    p.validate();
    for (const auto& f : p.frequency) {
        if (f != Frequency::exactly(1)) throw std::invalid_argument("solve_exactly_once needs exactly(1) for every arm");
    }
    return solve_assignment(p, opt);
}

LookaheadPlan solve_at_most_once(const LookaheadProblem& p, const PlannerOptions& opt) {
    p.validate();
    for (const auto& f : p.frequency) {
        if (f != Frequency::at_most(1)) throw std::invalid_argument("solve_at_most_once needs at_most(1) for every arm");
    }
    return solve_assignment(p, opt);
}

lp::Solution solve_relaxation(const LookaheadProblem& p) {
    p.validate();
    return lp::solve(build_assignment(p).model);
}

LookaheadPlan solve_b_matching(const LookaheadProblem& p) {
    p.validate();
    if (!p.groups.empty()) throw std::invalid_argument("b-matching does not support fairness groups");
    for (const auto& f : p.frequency) {
        if (f.hi > 1) throw std::invalid_argument("b-matching needs at most one pull per arm");
    }
    const int n = p.num_arms;
    const int T = p.num_steps;
    const double cover = coverage_bonus(p);

    struct Edge {
        int to;
        int cap;
        double cost;
    };
    std::vector<Edge> edges;
    const int source = n + T;
    const int sink = source + 1;
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(sink) + 1);
    auto add_edge = [&](int u, int v, int cap, double cost) {
        adj[u].push_back(static_cast<int>(edges.size()));
        edges.push_back({v, cap, cost});
        adj[v].push_back(static_cast<int>(edges.size()));
        edges.push_back({u, 0, -cost});
    };
    for (int i = 0; i < n; ++i) {
        if (p.frequency[i].hi == 0) continue;
        add_edge(source, i, 1, 0.0);
        const double extra = p.frequency[i].lo == 1 ? cover : 0.0;
        for (int t = 0; t < T; ++t) {
            if (p.pullable(i, t)) add_edge(i, n + t, 1, -(p.index[i][t] + extra));
        }
    }
    for (int t = 0; t < T; ++t) add_edge(n + t, sink, p.budget[t], 0.0);

    // Successive shortest paths; Bellman-Ford copes with the negative costs.
    const int V = sink + 1;
    while (true) {
        std::vector<double> dist(static_cast<std::size_t>(V), std::numeric_limits<double>::infinity());
        std::vector<int> via(static_cast<std::size_t>(V), -1);
        dist[source] = 0.0;
        for (int round = 0; round < V; ++round) {
            bool relaxed = false;
            for (int u = 0; u < V; ++u) {
                if (dist[u] == std::numeric_limits<double>::infinity()) continue;
                for (int e : adj[u]) {
                    if (edges[e].cap <= 0) continue;
                    const double nd = dist[u] + edges[e].cost;
                    if (nd < dist[edges[e].to] - 1e-12) {
                        dist[edges[e].to] = nd;
                        via[edges[e].to] = e;
                        relaxed = true;
                    }
                }
            }
            if (!relaxed) break;
        }
        if (via[sink] < 0 || dist[sink] >= -1e-12) break;
        for (int v = sink; v != source; v = edges[via[v] ^ 1].to) {
            edges[via[v]].cap -= 1;
            edges[via[v] ^ 1].cap += 1;
        }
    }
    LookaheadPlan plan = empty_plan(p);
    for (int i = 0; i < n; ++i) {
        for (int e : adj[i]) {
            const int to = edges[e].to;
            if (to >= n && to < n + T && edges[e].cap == 0 && (e % 2 == 0)) plan.action[i][to - n] = 1;
        }
    }
    for (int i = 0; i < n; ++i) {
        int pulls = 0;
        for (int t = 0; t < T; ++t) pulls += plan.action[i][t];
        if (pulls < p.frequency[i].lo) return infeasible_plan(p);
    }
    plan.status = PlanStatus::optimal;
    return checked(p, std::move(plan));
}

LookaheadPlan brute_force_plan(const LookaheadProblem& p, long max_candidates) {
    p.validate();
    if (p.soft_lower_bounds) throw std::invalid_argument("brute force does not support soft lower bounds");
    std::vector<std::vector<std::vector<int>>> options(static_cast<std::size_t>(p.num_arms));
    for (int i = 0; i < p.num_arms; ++i) {
        if (p.frequency[i].lo == 0) options[i].push_back({});
        auto pats = arm_patterns(p, i, p.frequency[i].lo, max_candidates);
        for (auto& s : pats) options[i].push_back(std::move(s));
    }
    // Budget pruning keeps the walk far below the raw product of pattern counts.
    long visited = 0;
    std::vector<int> remaining = p.budget;
    std::vector<int> choice(static_cast<std::size_t>(p.num_arms), 0);
    std::vector<int> best_choice;
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> values(static_cast<std::size_t>(p.num_arms));
    std::function<void(int, double)> rec = [&](int i, double acc) {
        if (++visited > max_candidates) throw std::length_error("brute force search space exceeds the candidate limit");
        if (i == p.num_arms) {
            long total = 0;
            std::vector<int> count(static_cast<std::size_t>(p.num_arms));
            for (int a = 0; a < p.num_arms; ++a) {
                count[a] = static_cast<int>(options[a][choice[a]].size());
                total += count[a];
            }
            for (const auto& g : p.groups) {
                double in_group = 0.0;
                for (int a : g.arms) in_group += count[a];
                if (in_group < g.lambda * static_cast<double>(total) - 1e-9) return;
            }
            if (acc > best + 1e-12) {
                best = acc;
                best_choice = choice;
            }
            return;
        }
        for (std::size_t k = 0; k < options[i].size(); ++k) {
            const auto& s = options[i][k];
            bool fits = true;
            for (int t : s) fits = fits && remaining[t] > 0;
            if (!fits) continue;
            for (int t : s) --remaining[t];
            choice[i] = static_cast<int>(k);
            rec(i + 1, acc + pattern_value(p, i, s));
            for (int t : s) ++remaining[t];
        }
    };
    rec(0, 0.0);
    if (best_choice.empty() && p.num_arms > 0) return infeasible_plan(p);
    LookaheadPlan plan = empty_plan(p);
    plan.status = PlanStatus::optimal;
    for (int i = 0; i < p.num_arms; ++i) {
        for (int t : options[i][best_choice[i]]) plan.action[i][t] = 1;
    }
    return checked(p, std::move(plan));
}

LookaheadProblem add_fairness(LookaheadProblem problem, const std::vector<FairnessGroup>& groups) {
    for (const auto& g : groups) {
        if (!(g.lambda >= 0.0 && g.lambda <= 1.0)) throw std::invalid_argument("fairness share outside [0,1]");
        problem.groups.push_back(g);
    }
    return problem;
}

std::vector<int> greedy_whittle_step(const std::vector<double>& indices, int k) {
    std::vector<int> order(indices.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return indices[a] > indices[b]; });
    order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(std::max(0, k))));
    std::sort(order.begin(), order.end());
    return order;
}

}  // namespace rmab
