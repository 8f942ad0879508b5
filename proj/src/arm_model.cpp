#include "rmab/arm_model.hpp"

#include "rmab/rng.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace rmab {

namespace {

constexpr double kStochasticTol = 1e-9;

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

}  // namespace

void validate_kernel(const TransitionKernel& k) {
    const double rows[2][2] = {{k.p00, k.p01}, {k.p10, k.p11}};
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
            const double v = rows[r][c];
            if (!(v >= 0.0 && v <= 1.0)) {
                throw ValidationError("entry out of range: p" + std::to_string(r) + std::to_string(c) +
                                      " = " + fmt_double(v));
            }
        }
        const double sum = rows[r][0] + rows[r][1];
        if (std::abs(sum - 1.0) > kStochasticTol) {
            throw ValidationError("row " + std::to_string(r) + " sums to " + fmt_double(sum));
        }
    }
}

double belief_update(double belief, const TransitionKernel& k) {
    return k.p01 * (1.0 - belief) + k.p11 * belief;
}

BeliefChain build_belief_chain(const TransitionKernel& kernel, double tolerance, int cap) {
    if (!(tolerance > 0.0)) throw std::invalid_argument("chain tolerance must be positive");
    if (cap < 1) throw std::invalid_argument("chain cap must be at least 1");
    BeliefChain chain;
    chain.kernel = kernel;
    chain.beliefs.push_back(1.0);
    while (chain.size() < cap) {
        const double last = chain.beliefs.back();
        const double next = belief_update(last, kernel);
        if (std::abs(next - last) < tolerance) break;
        chain.beliefs.push_back(next);
    }
    return chain;
}

Frequency Frequency::parse(const std::string& text) {
    auto to_int = [&](const std::string& s) {
        std::size_t used = 0;
        int v = -1;
        try {
            v = std::stoi(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size() || v < 0) throw ValidationError("bad frequency spec: " + text);
        return v;
    };
    auto after = [&](const std::string& prefix) -> std::optional<std::string> {
        if (text.rfind(prefix, 0) == 0) return text.substr(prefix.size());
        return std::nullopt;
    };
    if (auto rest = after("exactly:")) return exactly(to_int(*rest));
    if (auto rest = after("at_most:")) return at_most(to_int(*rest));
    if (auto rest = after("between:")) {
        const auto colon = rest->find(':');
        if (colon == std::string::npos) throw ValidationError("bad frequency spec: " + text);
        Frequency f = between(to_int(rest->substr(0, colon)), to_int(rest->substr(colon + 1)));
        if (f.lo > f.hi) throw ValidationError("bad frequency spec: " + text);
        return f;
    }
    if (auto rest = after("<=")) return at_most(to_int(*rest));
    if (auto rest = after("=")) return exactly(to_int(*rest));
    const auto dash = text.find('-');
    if (dash != std::string::npos) {
        Frequency f = between(to_int(text.substr(0, dash)), to_int(text.substr(dash + 1)));
        if (f.lo > f.hi) throw ValidationError("bad frequency spec: " + text);
        return f;
    }
    throw ValidationError("bad frequency spec: " + text);
}

std::string Frequency::to_string() const {
    if (lo == hi) return "exactly:" + std::to_string(lo);
    if (lo == 0) return "at_most:" + std::to_string(hi);
    return "between:" + std::to_string(lo) + ":" + std::to_string(hi);
}

std::string Frequency::short_label() const {
    if (lo == hi) return "=" + std::to_string(lo);
    if (lo == 0) return "<=" + std::to_string(hi);
    return "[" + std::to_string(lo) + "," + std::to_string(hi) + "]";
}

void validate_instance(const Instance& inst) {
    if (inst.arms.empty()) throw ValidationError("instance has no arms");
    if (inst.budget < 1) throw ValidationError("budget must be at least 1");
    if (inst.period < 1) throw ValidationError("period must be at least 1");
    if (inst.horizon < 1 || inst.horizon % inst.period != 0) {
        throw ValidationError("horizon must be a positive multiple of the period");
    }
    if (!(inst.gamma > 0.0 && inst.gamma < 1.0)) throw ValidationError("gamma must lie in (0,1)");
    if (inst.frequency.lo < 0 || inst.frequency.lo > inst.frequency.hi) {
        throw ValidationError("frequency bounds are inconsistent");
    }
    std::set<int> ids;
    for (const auto& arm : inst.arms) {
        if (!ids.insert(arm.arm_id).second) throw ValidationError("duplicate arm_id " + std::to_string(arm.arm_id));
        try {
            validate_kernel(arm.kernel);
        } catch (const ValidationError& e) {
            throw ValidationError("arm " + std::to_string(arm.arm_id) + ": " + e.what());
        }
        if (arm.window) {
            if (arm.window->length < 1) {
                throw ValidationError("arm " + std::to_string(arm.arm_id) + ": window length must be >= 1");
            }
            if (arm.window->start < 1 || arm.window->last() > inst.period) {
                throw ValidationError("arm " + std::to_string(arm.arm_id) + ": window does not fit in the period");
            }
        }
    }
}

bool meets_budget_prerequisite(const Instance& inst) {
    return static_cast<long long>(inst.num_arms()) * inst.frequency.lo <=
           static_cast<long long>(inst.budget) * inst.period;
}

int budget_from_fraction(int num_arms, double fraction) {
    const int k = static_cast<int>(std::floor(fraction * num_arms + 1e-9));
    return k < 1 ? 1 : k;
}

Instance generate_synthetic_instance(int n, std::uint64_t seed, const SyntheticParams& params) {
    if (n < 1) throw ValidationError("number of arms must be at least 1");
    for (double v : {params.p00_alpha, params.p00_beta, params.p10_alpha, params.p10_beta}) {
        if (!(v > 0.0)) throw ValidationError("Beta parameters must be positive");
    }
    auto beta = [](std::mt19937_64& gen, double a, double b) {
        std::gamma_distribution<double> ga(a, 1.0);
        std::gamma_distribution<double> gb(b, 1.0);
        const double x = ga(gen);
        const double y = gb(gen);
        return x / (x + y);
    };

    Instance inst;
    inst.horizon = params.horizon;
    inst.period = params.period;
    inst.gamma = params.gamma;
    inst.frequency = params.frequency;
    inst.budget = budget_from_fraction(n, params.budget_fraction);
    inst.arms.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto gen = stream(seed, {tag::synthetic, static_cast<std::uint64_t>(i)});
        const double p00 = beta(gen, params.p00_alpha, params.p00_beta);
        const double p10 = beta(gen, params.p10_alpha, params.p10_beta);
        inst.arms.push_back({i, TransitionKernel::from_fail_rates(p00, p10), std::nullopt, std::nullopt});
    }
    validate_instance(inst);
    return inst;
}

}  // namespace rmab
