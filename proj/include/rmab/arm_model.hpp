#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rmab {

class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Passive two-state kernel of one arm. State 1 is passing, state 0 failing;
/// p_xy is the probability of moving from x to y when the arm is left alone.
/// The active kernel is fixed: any state moves to passing.
struct TransitionKernel {
    double p00 = 1.0;
    double p01 = 0.0;
    double p10 = 0.0;
    double p11 = 1.0;

    static TransitionKernel from_fail_rates(double p00, double p10) {
        return {p00, 1.0 - p00, p10, 1.0 - p10};
    }

    friend bool operator==(const TransitionKernel&, const TransitionKernel&) = default;
};

void validate_kernel(const TransitionKernel& kernel);

/// One-step update of the adherence probability under the passive kernel.
double belief_update(double belief, const TransitionKernel& kernel);

/// Adherence probabilities reachable from the passing state. Position 0 is
/// the post-inspection belief 1; the last position loops onto itself.
struct BeliefChain {
    std::vector<double> beliefs;
    TransitionKernel kernel;

    int size() const { return static_cast<int>(beliefs.size()); }
    int tail() const { return size() - 1; }
    int successor(int pos) const { return pos + 1 < size() ? pos + 1 : pos; }
    int clamp(long long pos) const { return pos < tail() ? static_cast<int>(pos) : tail(); }
};

inline constexpr double kDefaultChainTolerance = 1e-4;

BeliefChain build_belief_chain(const TransitionKernel& kernel,
                               double tolerance = kDefaultChainTolerance, int cap = 60);

/// Contiguous steps [start, start + length - 1] of a period, 1-based.
struct ActionWindow {
    int start = 1;
    int length = 1;

    int last() const { return start + length - 1; }
    bool contains(int step) const { return step >= start && step <= last(); }
    friend bool operator==(const ActionWindow&, const ActionWindow&) = default;
};

struct ArmSpec {
    int arm_id = 0;
    TransitionKernel kernel;
    std::optional<ActionWindow> window;
    std::optional<int> group_id;
};

/// Per-period bound on the number of inspections an arm receives.
struct Frequency {
    int lo = 1;
    int hi = 1;

    static Frequency at_most(int c) { return {0, c}; }
    static Frequency exactly(int c) { return {c, c}; }
    static Frequency between(int lo, int hi) { return {lo, hi}; }

    /// Accepts "exactly:1", "at_most:1", "between:1:2" and the short forms
    /// "=1", "<=1", "1-2".
    static Frequency parse(const std::string& text);
    std::string to_string() const;
    std::string short_label() const;

    friend bool operator==(const Frequency&, const Frequency&) = default;
};

struct Instance {
    std::vector<ArmSpec> arms;
    int horizon = 60;
    int period = 12;
    int budget = 1;
    double gamma = 0.95;
    Frequency frequency = Frequency::exactly(1);

    int num_arms() const { return static_cast<int>(arms.size()); }
    int num_periods() const { return horizon / period; }
};

/// Throws ValidationError if the instance violates its structural invariants.
void validate_instance(const Instance& instance);

/// Pulls each period needs under the lower frequency bound versus the
/// per-period capacity budget * period.
bool meets_budget_prerequisite(const Instance& instance);

struct SyntheticParams {
    double p00_alpha = 5.0;
    double p00_beta = 1.0;
    double p10_alpha = 1.0;
    double p10_beta = 5.0;
    double budget_fraction = 0.09;
    int horizon = 60;
    int period = 12;
    double gamma = 0.95;
    Frequency frequency = Frequency::exactly(1);
};

int budget_from_fraction(int num_arms, double fraction);

Instance generate_synthetic_instance(int n, std::uint64_t seed, const SyntheticParams& params = {});

}  // namespace rmab
