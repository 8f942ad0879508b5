#include "rmab/window_opt.hpp"

#include "rmab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rmab {

std::vector<int> VirtualSequence::counts() const {
    std::vector<int> c(static_cast<std::size_t>(period()), 0);
    for (const auto& row : action) {
        for (std::size_t t = 0; t < row.size(); ++t) c[t] += row[t];
    }
    return c;
}

std::optional<VirtualSequence> simulate_virtual_sequence(LookaheadProblem problem, const PlannerOptions& options) {
    for (auto& row : problem.eligible) std::fill(row.begin(), row.end(), true);
    for (auto& s : problem.slots) s.clear();
    const auto plan = solve_plan(problem, options);
    if (!plan.feasible()) return std::nullopt;
    return VirtualSequence{plan.action};
}

WindowLp build_window_lp(const std::vector<int>& counts, int window_len) {
    const int P = static_cast<int>(counts.size());
    if (window_len < 1 || window_len > P) throw std::invalid_argument("window length must lie in [1, period]");
    WindowLp w;
    w.counts = counts;
    w.window_len = window_len;
    auto& m = w.model;
    m.maximize = false;
    for (int t = 0; t < P; ++t) {
        if (counts[t] < 0) throw std::invalid_argument("negative virtual count");
        if (counts[t] == 0) continue;
        const int first = std::max(0, t - window_len + 1);
        const int last = std::min(t, P - window_len);
        const int row = m.add_row(lp::Sense::eq, 1.0);
        std::vector<int> cols;
        for (int s = first; s <= last; ++s) {
            const int col = m.add_column(0.0, 0.0, 1.0);
            m.add_coef(row, col, 1.0);
            w.vars.push_back({t, s, col});
            cols.push_back(col);
        }
        const double c = counts[t];
        for (std::size_t a = 0; a < cols.size(); ++a) {
            for (std::size_t b = a + 1; b < cols.size(); ++b) {
                // u >= |c f_a - c f_b|; each unordered pair appears twice in
                // the ordered-pair sum.
                const int u = m.add_column(2.0, 0.0, lp::kInf);
                const int r1 = m.add_row(lp::Sense::ge, 0.0);
                m.add_coef(r1, u, 1.0);
                m.add_coef(r1, cols[a], -c);
                m.add_coef(r1, cols[b], c);
                const int r2 = m.add_row(lp::Sense::ge, 0.0);
                m.add_coef(r2, u, 1.0);
                m.add_coef(r2, cols[a], c);
                m.add_coef(r2, cols[b], -c);
            }
        }
    }
    return w;
}

WindowDistribution solve_window_lp(const WindowLp& w) {
    // Among optimal distributions prefer mass on earlier starts.
    std::vector<double> secondary(static_cast<std::size_t>(w.model.num_cols()), 0.0);
    for (const auto& v : w.vars) secondary[v.col] = v.start - v.t;
    const auto sol = lp::solve_lexicographic(w.model, secondary);
    if (sol.status != lp::Status::optimal) {
        throw std::runtime_error(std::string("window LP ended with status ") + lp::to_string(sol.status));
    }
    WindowDistribution d;
    d.period = static_cast<int>(w.counts.size());
    d.window_len = w.window_len;
    d.counts = w.counts;
    d.f.assign(static_cast<std::size_t>(d.period), std::vector<double>(static_cast<std::size_t>(d.period), 0.0));
    for (const auto& v : w.vars) d.f[v.t][v.start] = std::clamp(sol.x[v.col], 0.0, 1.0);
    d.objective = sol.objective;
    return d;
}

std::vector<std::vector<ActionWindow>> sample_windows(const WindowDistribution& dist, const VirtualSequence& seq,
                                                      std::uint64_t seed) {
    if (seq.period() != dist.period) throw std::invalid_argument("virtual sequence and distribution disagree on the period");
    std::vector<std::vector<ActionWindow>> out(static_cast<std::size_t>(seq.num_arms()));
    for (int i = 0; i < seq.num_arms(); ++i) {
        auto gen = stream(seed, {tag::sampled_window, static_cast<std::uint64_t>(i)});
        for (int t = 0; t < seq.period(); ++t) {
            if (!seq.action[i][t]) continue;
            const double u = uniform01(gen);
            const int first = std::max(0, t - dist.window_len + 1);
            const int last = std::min(t, dist.period - dist.window_len);
            int chosen = -1;
            double acc = 0.0;
            for (int s = first; s <= last; ++s) {
                if (dist.f[t][s] <= 0.0) continue;
                acc += dist.f[t][s];
                chosen = s;
                if (u < acc) break;
            }
            if (chosen < 0) throw std::runtime_error("window distribution has no mass at a virtual inspection");
            out[i].push_back({chosen + 1, dist.window_len});
        }
    }
    return out;
}

}  // namespace rmab
