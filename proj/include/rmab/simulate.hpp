#pragma once

#include "rmab/arm_model.hpp"
#include "rmab/parallel.hpp"
#include "rmab/planner.hpp"
#include "rmab/whittle.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rmab {

enum class WindowMode { random, optimized, given };
enum class Scheduler { none, naive_ip, optimized };
/// How the optimized scheduler handles at-most-once policies: per-step
/// top-k on window-encoded indices, or the period lookahead.
enum class AtMostMode { greedy, lookahead };

struct PolicyConfig {
    WindowMode window_mode = WindowMode::optimized;
    Scheduler scheduler = Scheduler::optimized;
    Frequency frequency = Frequency::exactly(1);
    /// Overrides the instance budget with floor(fraction * N), at least 1.
    std::optional<double> budget_fraction;
    int window_len = 2;
    AtMostMode at_most_mode = AtMostMode::lookahead;

    static PolicyConfig null_policy();
    /// Accepts "null" and slugs like "opt-opt-eq1", "rdm-ip-le1",
    /// "opt-opt-b12-15" (between 1 and 2, 15% budget). A trailing "-gr"
    /// selects the per-step greedy scheduler for at-most policies.
    static PolicyConfig parse(const std::string& slug);
    std::string slug() const;
    /// Display label such as "(Opt,Opt,=1)" or "(Opt,Opt,[1,2],15%)".
    std::string label() const;
    bool is_null() const { return scheduler == Scheduler::none; }
    int budget_for(const Instance& instance) const;
};

/// The eight window/scheduler/frequency combinations compared in the
/// experiments, extra budget variants at 15%.
std::vector<PolicyConfig> standard_policy_matrix();

class InfeasibleError : public std::runtime_error {
public:
    InfeasibleError(int period, const std::string& what)
        : std::runtime_error("period " + std::to_string(period) + ": " + what), period_(period) {}
    int period() const { return period_; }

private:
    int period_;
};

struct RunOptions {
    double surprise_rate = 0.0;
    /// A surprise inspection counts toward the arm's frequency requirement;
    /// when false it is additional and the scheduled inspection still falls due.
    bool surprise_counts = true;
    /// Kernels used for planning; the instance passed to run_policy always
    /// supplies the true dynamics for reward.
    const Instance* planning = nullptr;
    IndexCache* cache = nullptr;
    int threads = 1;
    double chain_tolerance = kDefaultChainTolerance;
    double index_tolerance = 1e-6;
    PlannerOptions planner;
};

struct SimulationTrace {
    int num_arms = 0;
    int horizon = 0;
    int period = 0;
    int budget = 0;
    std::string policy;
    std::vector<int> arm_ids;
    /// belief[t][i]: true adherence probability of arm i at step t (0-based).
    std::vector<std::vector<double>> belief;
    std::vector<std::vector<char>> action;
    std::vector<std::vector<char>> surprise;
    /// windows[p][i]: windows of arm i in period p, 1-based steps.
    std::vector<std::vector<std::vector<ActionWindow>>> windows;
    double reward = 0.0;
    std::vector<std::string> audit;
    int replans = 0;
    int infeasible_replans = 0;
    /// Arm-periods that ended below the lower frequency bound after an
    /// infeasible replan.
    int excused_shortfalls = 0;
    int window_redraws = 0;

    bool audit_ok() const { return audit.empty(); }
    int total_pulls() const;
    int total_surprises() const;
};

/// Lookahead problem of the first period with every arm at the chain head:
/// chain-index forecasts, post-pull forecasts when more than one pull is
/// allowed, and eligibility from the instance windows when present.
LookaheadProblem first_period_problem(const Instance& instance, Frequency frequency, int budget, IndexCache& cache,
                                      double chain_tolerance = kDefaultChainTolerance,
                                      double index_tolerance = 1e-6);

SimulationTrace run_policy(const Instance& instance, const PolicyConfig& config, std::uint64_t seed,
                           const RunOptions& options = {});

struct SurpriseReport {
    SimulationTrace base;
    SimulationTrace surprised;
    double drop_percent = 0.0;
};

SurpriseReport run_with_surprises(const Instance& instance, const PolicyConfig& config, double rate,
                                  std::uint64_t seed, const RunOptions& options = {});

/// Adds N(0, sigma) noise to p00 and p10 of every arm, clamps to [0, 1] and
/// recomputes the complements. Streams are keyed by (seed, arm).
Instance perturb_parameters(const Instance& instance, double sigma, std::uint64_t seed);

struct MatrixRow {
    std::string label;
    std::string slug;
    double reward = 0.0;
    double improvement = 0.0;
    double improvement_percent = 0.0;
    bool audit_ok = true;
    std::string error;
};

/// One row per config, improvements measured against the null policy;
/// errors are recorded per row.
std::vector<MatrixRow> run_policy_matrix(const Instance& instance, const std::vector<PolicyConfig>& configs,
                                         std::uint64_t seed, const RunOptions& options = {});

void write_trace_csv(const std::filesystem::path& path, const SimulationTrace& trace);

}  // namespace rmab
