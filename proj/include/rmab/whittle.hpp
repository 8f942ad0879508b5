#pragma once

#include "rmab/arm_model.hpp"

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

namespace rmab {

/// Two-action MDP of a single arm. Action 0 is passive, 1 is active; the
/// subsidy is added to the passive reward when computing Q values.
struct ArmMDP {
    using Row = std::vector<std::pair<int, double>>;

    std::vector<double> reward;
    std::vector<Row> passive;
    std::vector<Row> active;

    int num_states() const { return static_cast<int>(reward.size()); }
    bool deterministic() const;
    /// Both actions lead to the same distribution from `s`.
    bool actions_coincide(int s) const;
    void validate() const;
};

/// Unencoded arm: passive walks the belief chain, active returns to the head.
ArmMDP chain_mdp(const BeliefChain& chain);

using QTable = std::vector<std::array<double, 2>>;

/// Bellman iteration with ties broken toward passive; stops when successive
/// iterates differ by less than `tol` in sup norm.
QTable value_iteration_q(const ArmMDP& mdp, double gamma, double subsidy, double tol = 1e-9,
                         long max_sweeps = 100'000);

/// Exact Q values by policy iteration. Policy evaluation walks the functional
/// graph of a deterministic MDP and falls back to iterative evaluation
/// otherwise. `policy` (1 = active) is used as a warm start and receives the
/// final policy.
QTable policy_iteration_q(const ArmMDP& mdp, double gamma, double subsidy, std::vector<int>& policy);
QTable policy_iteration_q(const ArmMDP& mdp, double gamma, double subsidy);

class BracketError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct IndexOptions {
    double gamma = 0.95;
    double tolerance = 1e-6;
    int max_expansions = 60;
};

/// Smallest subsidy (within tolerance) at which passive is optimal in `state`.
double whittle_index(const ArmMDP& mdp, int state, const IndexOptions& options = {});

struct IndexTable {
    std::vector<double> index;
    double gamma = 0.95;
    double tolerance = 1e-6;

    int size() const { return static_cast<int>(index.size()); }
    double operator[](int s) const { return index[s]; }
};

IndexTable index_table(const ArmMDP& mdp, const IndexOptions& options = {});

/// Index forecasts for one arm over `horizon` steps. `index[t]` is the index
/// after t passive steps from `position`; `post_pull[t][u]` (u > t) is the
/// index at step u if the arm is pulled at step t and left alone after.
struct IndexForecast {
    std::vector<double> index;
    std::vector<std::vector<double>> post_pull;
};

IndexForecast forecast_indices(const BeliefChain& chain, int position, const IndexTable& table, int horizon);

struct IndexabilityViolation {
    int state = 0;
    double subsidy_before = 0.0;
    double subsidy_after = 0.0;
};

struct IndexabilityReport {
    bool indexable = true;
    std::vector<IndexabilityViolation> violations;
};

/// Passive-optimal states at a given subsidy (Qp >= Qa - tol).
std::vector<bool> passive_set(const QTable& q, double tol = 1e-9);

IndexabilityReport check_indexability(const ArmMDP& mdp, double gamma, const std::vector<double>& grid);

/// Evenly spaced grid lo, lo+step, ..., up to hi inclusive.
std::vector<double> subsidy_grid(double lo, double hi, double step);

/// Thread-safe memo of index tables keyed by kernel, window layout and
/// solver settings.
class IndexCache {
public:
    struct Key {
        TransitionKernel kernel;
        double chain_tolerance = kDefaultChainTolerance;
        int chain_cap = 60;
        std::optional<ActionWindow> window;
        int period = 0;
        int allowance = 0;
        double gamma = 0.95;
        double index_tolerance = 1e-6;

        auto tie() const {
            return std::tuple(kernel.p00, kernel.p01, kernel.p10, kernel.p11, chain_tolerance, chain_cap,
                              window.has_value(), window ? window->start : 0, window ? window->length : 0,
                              period, allowance, gamma, index_tolerance);
        }
        bool operator<(const Key& o) const { return tie() < o.tie(); }
    };

    /// Index table of the plain belief chain for `kernel`.
    const IndexTable& chain_table(const BeliefChain& chain, const Key& key);
    /// Index table of the window-encoded arm.
    const IndexTable& encoded_table(const BeliefChain& chain, const Key& key);

    std::size_t size() const;

private:
    template <class Build>
    const IndexTable& get(const Key& key, Build&& build);

    mutable std::mutex mutex_;
    std::map<Key, std::unique_ptr<IndexTable>> tables_;
};

}  // namespace rmab
