#include "rmab/whittle.hpp"

#include "rmab/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rmab {

bool ArmMDP::deterministic() const {
    for (int s = 0; s < num_states(); ++s) {
        if (passive[s].size() != 1 || active[s].size() != 1) return false;
    }
    return true;
}

bool ArmMDP::actions_coincide(int s) const {
    return passive[s] == active[s];
}

void ArmMDP::validate() const {
    const int n = num_states();
    if (static_cast<int>(passive.size()) != n || static_cast<int>(active.size()) != n) {
        throw std::invalid_argument("mdp: transition tables do not match the state count");
    }
    for (int s = 0; s < n; ++s) {
        if (!(reward[s] >= 0.0 && reward[s] <= 1.0)) throw std::invalid_argument("mdp: reward outside [0,1]");
        for (const Row* row : {&passive[s], &active[s]}) {
            double sum = 0.0;
            for (const auto& [to, p] : *row) {
                if (to < 0 || to >= n) throw std::invalid_argument("mdp: transition to unknown state");
                if (p < 0.0) throw std::invalid_argument("mdp: negative transition probability");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9) {
                throw std::invalid_argument("mdp: transition row of state " + std::to_string(s) + " sums to " +
                                            std::to_string(sum));
            }
        }
    }
}

ArmMDP chain_mdp(const BeliefChain& chain) {
    ArmMDP mdp;
    for (int j = 0; j < chain.size(); ++j) {
        mdp.reward.push_back(chain.beliefs[j]);
        mdp.passive.push_back({{chain.successor(j), 1.0}});
        mdp.active.push_back({{0, 1.0}});
    }
    return mdp;
}

namespace {

double expected(const ArmMDP::Row& row, const std::vector<double>& v) {
    double e = 0.0;
    for (const auto& [to, p] : row) e += p * v[to];
    return e;
}

QTable q_from_values(const ArmMDP& mdp, double gamma, double subsidy, const std::vector<double>& v) {
    QTable q(static_cast<std::size_t>(mdp.num_states()));
    for (int s = 0; s < mdp.num_states(); ++s) {
        q[s][0] = mdp.reward[s] + subsidy + gamma * expected(mdp.passive[s], v);
        q[s][1] = mdp.reward[s] + gamma * expected(mdp.active[s], v);
    }
    return q;
}

// Values of a fixed policy on a deterministic MDP. Every state has exactly
// one successor, so the graph splits into cycles with trees hanging off them.
std::vector<double> evaluate_deterministic(const ArmMDP& mdp, double gamma, double subsidy,
                                           const std::vector<int>& policy) {
    const int n = mdp.num_states();
    std::vector<int> next(static_cast<std::size_t>(n));
    std::vector<double> r(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        const bool act = policy[s] != 0;
        next[s] = (act ? mdp.active[s] : mdp.passive[s]).front().first;
        r[s] = mdp.reward[s] + (act ? 0.0 : subsidy);
    }
    std::vector<double> v(static_cast<std::size_t>(n), 0.0);
    std::vector<char> mark(static_cast<std::size_t>(n), 0);  // 0 new, 1 on path, 2 done
    std::vector<int> path;
    for (int start = 0; start < n; ++start) {
        if (mark[start]) continue;
        path.clear();
        int s = start;
        while (!mark[s]) {
            mark[s] = 1;
            path.push_back(s);
            s = next[s];
        }
        std::size_t stop = path.size();
        if (mark[s] == 1) {
            const auto cycle_begin = static_cast<std::size_t>(std::find(path.begin(), path.end(), s) - path.begin());
            double sum = 0.0;
            double disc = 1.0;
            for (std::size_t k = cycle_begin; k < path.size(); ++k) {
                sum += disc * r[path[k]];
                disc *= gamma;
            }
            v[path[cycle_begin]] = sum / (1.0 - disc);
            for (std::size_t k = path.size() - 1; k > cycle_begin; --k) {
                v[path[k]] = r[path[k]] + gamma * v[next[path[k]]];
            }
            for (std::size_t k = cycle_begin; k < path.size(); ++k) mark[path[k]] = 2;
            stop = cycle_begin;
        }
        for (std::size_t k = stop; k-- > 0;) {
            v[path[k]] = r[path[k]] + gamma * v[next[path[k]]];
            mark[path[k]] = 2;
        }
    }
    return v;
}

std::vector<double> evaluate_iterative(const ArmMDP& mdp, double gamma, double subsidy,
                                       const std::vector<int>& policy, std::vector<double> v) {
    const int n = mdp.num_states();
    const double tol = 1e-13 * (1.0 + std::abs(subsidy)) / (1.0 - gamma);
    for (long sweep = 0; sweep < 10'000'000; ++sweep) {
        double change = 0.0;
        for (int s = 0; s < n; ++s) {
            const bool act = policy[s] != 0;
            const double nv = mdp.reward[s] + (act ? 0.0 : subsidy) +
                              gamma * expected(act ? mdp.active[s] : mdp.passive[s], v);
            change = std::max(change, std::abs(nv - v[s]));
            v[s] = nv;
        }
        if (change < tol) break;
    }
    return v;
}

}  // namespace

QTable value_iteration_q(const ArmMDP& mdp, double gamma, double subsidy, double tol, long max_sweeps) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0,1)");
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    const int n = mdp.num_states();
    std::vector<double> v(static_cast<std::size_t>(n), 0.0);
    QTable q(static_cast<std::size_t>(n));
    for (long sweep = 0; sweep < max_sweeps; ++sweep) {
        q = q_from_values(mdp, gamma, subsidy, v);
        double change = 0.0;
        for (int s = 0; s < n; ++s) {
            const double nv = std::max(q[s][0], q[s][1]);
            change = std::max(change, std::abs(nv - v[s]));
            v[s] = nv;
        }
        if (change < tol) break;
    }
    return q_from_values(mdp, gamma, subsidy, v);
}

QTable policy_iteration_q(const ArmMDP& mdp, double gamma, double subsidy, std::vector<int>& policy) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0,1)");
    const int n = mdp.num_states();
    policy.resize(static_cast<std::size_t>(n), 0);
    const bool det = mdp.deterministic();
    const double eps = 1e-12 * (1.0 + std::abs(subsidy)) / (1.0 - gamma);
    std::vector<double> v(static_cast<std::size_t>(n), 0.0);
    for (int iter = 0; iter < 10 * n + 100; ++iter) {
        v = det ? evaluate_deterministic(mdp, gamma, subsidy, policy)
                : evaluate_iterative(mdp, gamma, subsidy, policy, std::move(v));
        const QTable q = q_from_values(mdp, gamma, subsidy, v);
        bool changed = false;
        for (int s = 0; s < n; ++s) {
            // Switch only on strict improvement; this keeps ties where they are
            // and guarantees termination.
            const int cur = policy[s];
            if (q[s][1 - cur] > q[s][cur] + eps) {
                policy[s] = 1 - cur;
                changed = true;
            }
        }
        if (!changed) return q;
    }
    throw std::runtime_error("policy iteration did not converge");
}

QTable policy_iteration_q(const ArmMDP& mdp, double gamma, double subsidy) {
    std::vector<int> policy(static_cast<std::size_t>(mdp.num_states()), 0);
    return policy_iteration_q(mdp, gamma, subsidy, policy);
}

namespace {

double index_of_state(const ArmMDP& mdp, int state, const IndexOptions& opt) {
    if (mdp.actions_coincide(state)) return 0.0;
    std::vector<int> policy(static_cast<std::size_t>(mdp.num_states()), 0);
    auto passive_preferred = [&](double m) {
        const QTable q = policy_iteration_q(mdp, opt.gamma, m, policy);
        const double eps = 1e-12 * (1.0 + std::abs(m)) / (1.0 - opt.gamma);
        return q[state][0] >= q[state][1] - eps;
    };
    double lo = 0.0;
    double hi = 1.0 / (1.0 - opt.gamma);
    int expansions = 0;
    while (!passive_preferred(hi)) {
        if (++expansions > opt.max_expansions) {
            throw BracketError("no subsidy makes passive optimal in state " + std::to_string(state));
        }
        lo = hi;
        hi *= 2.0;
    }
    double width = hi - lo;
    while (passive_preferred(lo)) {
        if (++expansions > opt.max_expansions) {
            throw BracketError("passive stays optimal for every subsidy in state " + std::to_string(state));
        }
        hi = lo;
        lo -= width;
        width *= 2.0;
    }
    while (hi - lo > opt.tolerance) {
        const double mid = 0.5 * (lo + hi);
        if (passive_preferred(mid)) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

double whittle_index(const ArmMDP& mdp, int state, const IndexOptions& options) {
    if (state < 0 || state >= mdp.num_states()) throw std::out_of_range("state id out of range");
    if (!(options.tolerance > 0.0)) throw std::invalid_argument("index tolerance must be positive");
    return index_of_state(mdp, state, options);
}

IndexTable index_table(const ArmMDP& mdp, const IndexOptions& options) {
    IndexTable table;
    table.gamma = options.gamma;
    table.tolerance = options.tolerance;
    table.index.resize(static_cast<std::size_t>(mdp.num_states()));
    for (int s = 0; s < mdp.num_states(); ++s) table.index[s] = whittle_index(mdp, s, options);
    return table;
}

IndexForecast forecast_indices(const BeliefChain& chain, int position, const IndexTable& table, int horizon) {
    if (position < 0 || position >= chain.size()) throw std::out_of_range("chain position out of range");
    if (table.size() != chain.size()) throw std::invalid_argument("index table does not match the chain");
    IndexForecast f;
    f.index.resize(static_cast<std::size_t>(horizon));
    f.post_pull.assign(static_cast<std::size_t>(horizon), std::vector<double>(static_cast<std::size_t>(horizon), 0.0));
    for (int t = 0; t < horizon; ++t) {
        f.index[t] = table[chain.clamp(static_cast<long long>(position) + t)];
        for (int u = t + 1; u < horizon; ++u) f.post_pull[t][u] = table[chain.clamp(u - t - 1)];
    }
    return f;
}

std::vector<bool> passive_set(const QTable& q, double tol) {
    std::vector<bool> out(q.size());
    for (std::size_t s = 0; s < q.size(); ++s) out[s] = q[s][0] >= q[s][1] - tol;
    return out;
}

IndexabilityReport check_indexability(const ArmMDP& mdp, double gamma, const std::vector<double>& grid) {
    if (!std::is_sorted(grid.begin(), grid.end())) throw std::invalid_argument("subsidy grid must be ascending");
    IndexabilityReport report;
    std::vector<int> policy(static_cast<std::size_t>(mdp.num_states()), 0);
    std::vector<bool> prev;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const auto q = policy_iteration_q(mdp, gamma, grid[g], policy);
        auto cur = passive_set(q);
        if (g > 0) {
            for (int s = 0; s < mdp.num_states(); ++s) {
                if (prev[s] && !cur[s]) report.violations.push_back({s, grid[g - 1], grid[g]});
            }
        }
        prev = std::move(cur);
    }
    report.indexable = report.violations.empty();
    return report;
}

std::vector<double> subsidy_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || hi < lo) throw std::invalid_argument("bad subsidy grid");
    const long n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(n + 1));
    for (long k = 0; k <= n; ++k) grid.push_back(lo + static_cast<double>(k) * step);
    return grid;
}

template <class Build>
const IndexTable& IndexCache::get(const Key& key, Build&& build) {
    {
        std::lock_guard lock(mutex_);
        if (auto it = tables_.find(key); it != tables_.end()) return *it->second;
    }
    auto table = std::make_unique<IndexTable>(build());
    std::lock_guard lock(mutex_);
    auto [it, inserted] = tables_.try_emplace(key, std::move(table));
    return *it->second;
}

const IndexTable& IndexCache::chain_table(const BeliefChain& chain, const Key& key) {
    return get(key, [&] { return index_table(chain_mdp(chain), {key.gamma, key.index_tolerance}); });
}

const IndexTable& IndexCache::encoded_table(const BeliefChain& chain, const Key& key) {
    if (!key.window) throw std::invalid_argument("encoded index table needs a window");
    return get(key, [&] {
        const auto enc = encode_action_window(chain, *key.window, key.period, key.allowance);
        return index_table(enc.mdp, {key.gamma, key.index_tolerance});
    });
}

std::size_t IndexCache::size() const {
    std::lock_guard lock(mutex_);
    return tables_.size();
}

}  // namespace rmab
