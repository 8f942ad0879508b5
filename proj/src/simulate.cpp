#include "rmab/simulate.hpp"

#include "rmab/encoding.hpp"
#include "rmab/io.hpp"
#include "rmab/rng.hpp"
#include "rmab/window_opt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace rmab {

PolicyConfig PolicyConfig::null_policy() {
    PolicyConfig c;
    c.window_mode = WindowMode::random;
    c.scheduler = Scheduler::none;
    c.frequency = Frequency::at_most(1);
    return c;
}

namespace {

std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, sep)) out.push_back(part);
    return out;
}

int parse_count(const std::string& s, const std::string& slug) {
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        throw std::invalid_argument("bad policy slug: " + slug);
    }
    return std::stoi(s);
}

std::string percent_text(double fraction) {
    std::ostringstream os;
    os << fraction * 100.0;
    return os.str();
}

}  // namespace

PolicyConfig PolicyConfig::parse(const std::string& slug) {
    if (slug == "null") return null_policy();
    const auto parts = split_on(slug, '-');
    if (parts.size() < 3) throw std::invalid_argument("bad policy slug: " + slug);
    PolicyConfig c;
    if (parts[0] == "rdm") c.window_mode = WindowMode::random;
    else if (parts[0] == "opt") c.window_mode = WindowMode::optimized;
    else if (parts[0] == "given") c.window_mode = WindowMode::given;
    else throw std::invalid_argument("bad window mode in policy slug: " + slug);
    if (parts[1] == "ip") c.scheduler = Scheduler::naive_ip;
    else if (parts[1] == "opt") c.scheduler = Scheduler::optimized;
    else throw std::invalid_argument("bad scheduler in policy slug: " + slug);
    const std::string& f = parts[2];
    if (f.rfind("eq", 0) == 0) {
        c.frequency = Frequency::exactly(parse_count(f.substr(2), slug));
    } else if (f.rfind("le", 0) == 0) {
        c.frequency = Frequency::at_most(parse_count(f.substr(2), slug));
    } else if (f.size() >= 3 && f[0] == 'b') {
        const auto bounds = split_on(f.substr(1), '_');
        if (bounds.size() == 2) {
            c.frequency = Frequency::between(parse_count(bounds[0], slug), parse_count(bounds[1], slug));
        } else if (f.size() == 3) {
            c.frequency = Frequency::between(parse_count(f.substr(1, 1), slug), parse_count(f.substr(2, 1), slug));
        } else {
            throw std::invalid_argument("bad frequency in policy slug: " + slug);
        }
        if (c.frequency.lo > c.frequency.hi) throw std::invalid_argument("bad frequency in policy slug: " + slug);
    } else {
        throw std::invalid_argument("bad frequency in policy slug: " + slug);
    }
    for (std::size_t k = 3; k < parts.size(); ++k) {
        if (parts[k] == "gr") {
            c.at_most_mode = AtMostMode::greedy;
        } else {
            double pct = 0.0;
            try {
                std::size_t used = 0;
                pct = std::stod(parts[k], &used);
                if (used != parts[k].size()) throw std::invalid_argument("trailing text");
            } catch (const std::exception&) {
                throw std::invalid_argument("bad budget in policy slug: " + slug);
            }
            if (!(pct > 0.0 && pct <= 100.0)) throw std::invalid_argument("budget percentage must lie in (0, 100]");
            c.budget_fraction = pct / 100.0;
        }
    }
    return c;
}

std::string PolicyConfig::slug() const {
    if (is_null()) return "null";
    std::string s = window_mode == WindowMode::random ? "rdm" : window_mode == WindowMode::optimized ? "opt" : "given";
    s += scheduler == Scheduler::naive_ip ? "-ip" : "-opt";
    if (frequency.lo == frequency.hi) s += "-eq" + std::to_string(frequency.hi);
    else if (frequency.lo == 0) s += "-le" + std::to_string(frequency.hi);
    else if (frequency.lo < 10 && frequency.hi < 10) s += "-b" + std::to_string(frequency.lo) + std::to_string(frequency.hi);
    else s += "-b" + std::to_string(frequency.lo) + "_" + std::to_string(frequency.hi);
    if (budget_fraction) s += "-" + percent_text(*budget_fraction);
    if (at_most_mode == AtMostMode::greedy && frequency.lo == 0) s += "-gr";
    return s;
}

std::string PolicyConfig::label() const {
    if (is_null()) return "(null)";
    std::string s = "(";
    s += window_mode == WindowMode::random ? "Rdm" : window_mode == WindowMode::optimized ? "Opt" : "Given";
    s += scheduler == Scheduler::naive_ip ? ",IP," : ",Opt,";
    s += frequency.short_label();
    if (budget_fraction) s += "," + percent_text(*budget_fraction) + "%";
    return s + ")";
}

int PolicyConfig::budget_for(const Instance& instance) const {
    return budget_fraction ? budget_from_fraction(instance.num_arms(), *budget_fraction) : instance.budget;
}

std::vector<PolicyConfig> standard_policy_matrix() {
    std::vector<PolicyConfig> out;
    for (const char* slug : {"rdm-ip-eq1", "opt-ip-eq1", "rdm-opt-eq1", "opt-opt-eq1", "rdm-opt-le1", "opt-opt-le1",
                             "opt-opt-b12-15", "opt-ip-b12-15"}) {
        out.push_back(PolicyConfig::parse(slug));
    }
    return out;
}

int SimulationTrace::total_pulls() const {
    int n = 0;
    for (const auto& row : action) n += static_cast<int>(std::count(row.begin(), row.end(), 1));
    return n;
}

int SimulationTrace::total_surprises() const {
    int n = 0;
    for (const auto& row : surprise) n += static_cast<int>(std::count(row.begin(), row.end(), 1));
    return n;
}

namespace {

class Simulator {
public:
    Simulator(const Instance& truth, const PolicyConfig& cfg, std::uint64_t seed, const RunOptions& opt)
        : truth_(truth),
          plan_(opt.planning ? *opt.planning : truth),
          cfg_(cfg),
          seed_(seed),
          opt_(opt),
          cache_(opt.cache ? opt.cache : &local_cache_),
          N_(truth.num_arms()),
          P_(truth.period),
          T_(truth.horizon),
          k_(cfg.budget_for(truth)),
          W_(cfg.window_len) {
        validate_instance(truth_);
        if (plan_.num_arms() != N_) throw std::invalid_argument("planning instance has a different arm count");
        if (!cfg_.is_null() && (W_ < 1 || W_ > P_)) throw std::invalid_argument("window length must lie in [1, period]");
        if (!(opt_.surprise_rate >= 0.0 && opt_.surprise_rate < 1.0)) {
            throw std::invalid_argument("surprise rate must lie in [0, 1)");
        }
        greedy_ = cfg_.scheduler == Scheduler::optimized && cfg_.frequency.lo == 0 && cfg_.frequency.hi == 1 &&
                  cfg_.at_most_mode == AtMostMode::greedy;
        use_slots_ = cfg_.window_mode == WindowMode::optimized;
    }

    SimulationTrace run() {
        prepare();
        for (int p = 0; p < truth_.num_periods(); ++p) run_period(p);
        return std::move(tr_);
    }

private:
    IndexCache::Key chain_key(int i) const {
        IndexCache::Key key;
        key.kernel = plan_.arms[i].kernel;
        key.chain_tolerance = opt_.chain_tolerance;
        key.chain_cap = T_;
        key.gamma = plan_.gamma;
        key.index_tolerance = opt_.index_tolerance;
        return key;
    }

    void prepare() {
        tr_.num_arms = N_;
        tr_.horizon = T_;
        tr_.period = P_;
        tr_.budget = cfg_.is_null() ? 0 : k_;
        tr_.policy = cfg_.label();
        for (const auto& arm : truth_.arms) tr_.arm_ids.push_back(arm.arm_id);
        tr_.belief.assign(static_cast<std::size_t>(T_), std::vector<double>(static_cast<std::size_t>(N_)));
        tr_.action.assign(static_cast<std::size_t>(T_), std::vector<char>(static_cast<std::size_t>(N_), 0));
        tr_.surprise.assign(static_cast<std::size_t>(T_), std::vector<char>(static_cast<std::size_t>(N_), 0));
        age_.assign(static_cast<std::size_t>(N_), 0);
        belief_.assign(static_cast<std::size_t>(N_), 1.0);
        for (int i = 0; i < N_; ++i) {
            surprise_gen_.push_back(stream(seed_, {tag::surprise, static_cast<std::uint64_t>(i)}));
        }
        if (cfg_.is_null()) return;
        chains_.resize(static_cast<std::size_t>(N_));
        tables_.assign(static_cast<std::size_t>(N_), nullptr);
        parallel_for(N_, opt_.threads, [&](int i) {
            chains_[i] = build_belief_chain(plan_.arms[i].kernel, opt_.chain_tolerance, T_);
            tables_[i] = &cache_->chain_table(chains_[i], chain_key(i));
        });
    }

    double chain_index(int i, long long pos) const { return (*tables_[i])[chains_[i].clamp(pos)]; }

    // --- windows -----------------------------------------------------------

    std::vector<std::vector<ActionWindow>> draw_windows(int p, int attempt) {
        std::vector<std::vector<ActionWindow>> w(static_cast<std::size_t>(N_));
        switch (cfg_.window_mode) {
            case WindowMode::given:
                for (int i = 0; i < N_; ++i) w[i].push_back(truth_.arms[i].window.value_or(ActionWindow{1, P_}));
                break;
            case WindowMode::random:
                for (int i = 0; i < N_; ++i) {
                    auto gen = stream(seed_, {tag::random_window, static_cast<std::uint64_t>(p),
                                              static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(attempt)});
                    const int starts = P_ - W_ + 1;
                    const int s = std::min(starts - 1, static_cast<int>(uniform01(gen) * starts));
                    w[i].push_back({s + 1, W_});
                }
                break;
            case WindowMode::optimized: {
                LookaheadProblem vp = base_problem(0, {}, k_, false, /*use_index=*/true);
                const auto seq = simulate_virtual_sequence(vp, opt_.planner);
                if (!seq) throw InfeasibleError(p + 1, "virtual schedule infeasible: " + infeasibility_diagnostic(vp));
                const auto dist = solve_window_lp(build_window_lp(seq->counts(), W_));
                auto sample_gen = stream(seed_, {tag::sampled_window, static_cast<std::uint64_t>(p)});
                w = sample_windows(dist, *seq, sample_gen());
                break;
            }
        }
        return w;
    }

    void set_windows(std::vector<std::vector<ActionWindow>> w) {
        windows_ = std::move(w);
        free_slots_.assign(static_cast<std::size_t>(N_), {});
        window_used_.assign(static_cast<std::size_t>(N_), {});
        for (int i = 0; i < N_; ++i) {
            for (const auto& win : windows_[i]) free_slots_[i].push_back({win.start - 1, win.last() - 1});
            window_used_[i].assign(windows_[i].size(), 0);
        }
        done_.assign(static_cast<std::size_t>(N_), 0);
    }

    bool in_window(int i, int tau) const {
        return std::any_of(windows_[i].begin(), windows_[i].end(),
                           [&](const ActionWindow& w) { return w.contains(tau + 1); });
    }

    // --- planning ----------------------------------------------------------

    /// Problem over steps [tau0, P) of the current period. `restored` marks
    /// arms inspected by surprise at tau0.
    LookaheadProblem base_problem(int tau0, const std::vector<char>& restored, int budget_now, bool soft,
                                  bool use_index) const {
        const int H = P_ - tau0;
        LookaheadProblem p = LookaheadProblem::uniform(N_, H, k_, cfg_.frequency);
        p.budget[0] = budget_now;
        p.soft_lower_bounds = soft;
        const bool multipull = use_index && cfg_.frequency.hi >= 2;
        if (multipull) {
            p.post_pull.assign(static_cast<std::size_t>(N_),
                               std::vector<std::vector<double>>(static_cast<std::size_t>(H),
                                                                std::vector<double>(static_cast<std::size_t>(H), 0.0)));
        }
        for (int i = 0; i < N_; ++i) {
            const bool was_restored = !restored.empty() && restored[i];
            for (int d = 0; d < H; ++d) {
                if (use_index) {
                    p.index[i][d] = was_restored ? chain_index(i, std::max(0, d - 1))
                                                 : chain_index(i, static_cast<long long>(age_[i]) + d);
                }
                if (multipull) {
                    for (int u = d + 1; u < H; ++u) p.post_pull[i][d][u] = chain_index(i, u - d - 1);
                }
            }
            if (!windows_.empty()) {
                for (int d = 0; d < H; ++d) p.eligible[i][d] = in_window(i, tau0 + d);
            }
            if (was_restored) p.eligible[i][0] = false;
            if (!done_.empty()) {
                p.frequency[i].lo = std::max(0, cfg_.frequency.lo - done_[i]);
                p.frequency[i].hi = std::max(0, cfg_.frequency.hi - done_[i]);
            }
            if (use_slots_ && !free_slots_.empty()) {
                for (const auto& s : free_slots_[i]) {
                    if (s.last >= tau0) p.slots[i].push_back({std::max(s.first, tau0) - tau0, s.last - tau0});
                }
                if (p.slots[i].empty()) {
                    // Every window has closed; a remaining lower bound can
                    // only be reported as infeasible or as a shortfall.
                    std::fill(p.eligible[i].begin(), p.eligible[i].end(), false);
                    p.frequency[i].hi = p.frequency[i].lo;
                }
            }
        }
        return p;
    }

    LookaheadProblem schedule_problem(int tau0, const std::vector<char>& restored, int budget_now, bool soft) const {
        return base_problem(tau0, restored, budget_now, soft, cfg_.scheduler == Scheduler::optimized);
    }

    void write_plan(int tau0, const LookaheadPlan& plan) {
        for (int i = 0; i < N_; ++i) {
            for (int d = 0; d < P_ - tau0; ++d) plan_matrix_[i][tau0 + d] = static_cast<char>(plan.action[i][d]);
        }
    }

    // --- execution ---------------------------------------------------------

    std::vector<char> draw_surprises() {
        std::vector<char> s(static_cast<std::size_t>(N_), 0);
        if (opt_.surprise_rate <= 0.0) return s;
        std::vector<std::pair<double, int>> hits;
        for (int i = 0; i < N_; ++i) {
            const double u = uniform01(surprise_gen_[i]);
            if (u < opt_.surprise_rate) hits.emplace_back(u, i);
        }
        // A step cannot absorb more surprises than its budget; the smallest
        // draws win.
        if (static_cast<int>(hits.size()) > k_) {
            std::sort(hits.begin(), hits.end());
            hits.resize(static_cast<std::size_t>(k_));
        }
        for (const auto& h : hits) s[h.second] = 1;
        return s;
    }

    void audit(const std::string& what) { tr_.audit.push_back(what); }

    void execute_pull(int p, int tau, int i) {
        const std::string where = "period " + std::to_string(p + 1) + " step " + std::to_string(tau + 1) + " arm " +
                                  std::to_string(truth_.arms[i].arm_id);
        if (!in_window(i, tau)) audit(where + ": pull outside its windows");
        if (done_[i] >= cfg_.frequency.hi) audit(where + ": pull beyond the frequency bound");
        if (use_slots_) {
            // Consume the window that closes first among those still open.
            int best = -1;
            for (std::size_t s = 0; s < free_slots_[i].size(); ++s) {
                const auto& r = free_slots_[i][s];
                if (!r.contains(tau)) continue;
                if (best < 0 || r.last < free_slots_[i][best].last) best = static_cast<int>(s);
            }
            if (best < 0) audit(where + ": no unused window left for this pull");
            else free_slots_[i].erase(free_slots_[i].begin() + best);
        }
        ++done_[i];
    }

    void advance(int t, const std::vector<char>& pulled) {
        for (int i = 0; i < N_; ++i) {
            if (pulled[i]) {
                belief_[i] = 1.0;
                age_[i] = 0;
            } else {
                belief_[i] = belief_update(belief_[i], truth_.arms[i].kernel);
                if (age_[i] < std::numeric_limits<int>::max() / 2) ++age_[i];
            }
        }
        (void)t;
    }

    void record_reward(int t) {
        double step = 0.0;
        for (int i = 0; i < N_; ++i) {
            tr_.belief[t][i] = belief_[i];
            step += belief_[i];
        }
        tr_.reward += step;
    }

    void run_period(int p) {
        if (cfg_.is_null()) {
            for (int tau = 0; tau < P_; ++tau) {
                const int t = p * P_ + tau;
                record_reward(t);
                const auto s = draw_surprises();
                for (int i = 0; i < N_; ++i) tr_.surprise[t][i] = s[i];
                advance(t, s);
            }
            tr_.windows.emplace_back(static_cast<std::size_t>(N_));
            return;
        }
        if (greedy_) run_greedy_period(p);
        else run_planned_period(p);
        tr_.windows.push_back(windows_);
    }

    void run_planned_period(int p) {
        LookaheadPlan plan;
        for (int attempt = 0;; ++attempt) {
            windows_.clear();
            done_.clear();
            free_slots_.clear();
            set_windows(draw_windows(p, attempt));
            plan = solve_plan(schedule_problem(0, {}, k_, false), opt_.planner);
            if (plan.feasible()) break;
            if (cfg_.window_mode != WindowMode::random || attempt >= 999) {
                throw InfeasibleError(p + 1, "no feasible schedule: " + plan.diagnostic);
            }
            ++tr_.window_redraws;
        }
        plan_matrix_.assign(static_cast<std::size_t>(N_), std::vector<char>(static_cast<std::size_t>(P_), 0));
        write_plan(0, plan);
        bool excused = false;

        for (int tau = 0; tau < P_; ++tau) {
            const int t = p * P_ + tau;
            record_reward(t);
            const auto s = draw_surprises();
            const int n_surprised = static_cast<int>(std::count(s.begin(), s.end(), 1));
            for (int i = 0; i < N_; ++i) {
                tr_.surprise[t][i] = s[i];
                if (s[i] && opt_.surprise_counts) ++done_[i];
            }
            const int budget_now = std::max(0, k_ - n_surprised);
            bool soft_replan_after = false;
            if (n_surprised > 0) {
                ++tr_.replans;
                const auto hard = solve_plan(schedule_problem(tau, s, budget_now, false), opt_.planner);
                if (hard.feasible()) {
                    write_plan(tau, hard);
                } else {
                    // Budget crowded out: keep the highest-index pulls planned
                    // for this step, then replan the rest without hard lower
                    // bounds.
                    ++tr_.infeasible_replans;
                    excused = true;
                    std::vector<int> keep;
                    for (int i = 0; i < N_; ++i) {
                        if (plan_matrix_[i][tau] && !s[i]) keep.push_back(i);
                        plan_matrix_[i][tau] = 0;
                    }
                    std::stable_sort(keep.begin(), keep.end(), [&](int a, int b) {
                        return chain_index(a, age_[a]) > chain_index(b, age_[b]);
                    });
                    if (static_cast<int>(keep.size()) > budget_now) keep.resize(static_cast<std::size_t>(budget_now));
                    for (int i : keep) plan_matrix_[i][tau] = 1;
                    soft_replan_after = tau + 1 < P_;
                }
            }
            std::vector<char> pulled = s;
            int scheduled = 0;
            for (int i = 0; i < N_; ++i) {
                if (!plan_matrix_[i][tau] || s[i]) continue;
                execute_pull(p, tau, i);
                tr_.action[t][i] = 1;
                pulled[i] = 1;
                ++scheduled;
            }
            if (scheduled > budget_now) {
                audit("period " + std::to_string(p + 1) + " step " + std::to_string(tau + 1) + ": " +
                      std::to_string(scheduled) + " pulls exceed the budget of " + std::to_string(budget_now));
            }
            advance(t, pulled);
            if (soft_replan_after) {
                const auto soft = solve_plan(schedule_problem(tau + 1, {}, k_, true), opt_.planner);
                if (!soft.feasible()) throw InfeasibleError(p + 1, "replanning failed: " + soft.diagnostic);
                write_plan(tau + 1, soft);
            }
        }
        close_period(p, excused);
    }

    const IndexTable& encoded_table(int i, const ActionWindow& w) {
        auto key = chain_key(i);
        key.window = w;
        key.period = P_;
        key.allowance = 1;
        return cache_->encoded_table(chains_[i], key);
    }

    void run_greedy_period(int p) {
        windows_.clear();
        done_.clear();
        free_slots_.clear();
        set_windows(draw_windows(p, 0));
        // Encoded tables for this period's windows, filled in parallel.
        encoded_.assign(static_cast<std::size_t>(N_), {});
        parallel_for(N_, opt_.threads, [&](int i) {
            for (const auto& w : windows_[i]) {
                encoded_[i].push_back(encode_action_window(chains_[i], w, P_, 1));
                encoded_table(i, w);
            }
        });
        for (int tau = 0; tau < P_; ++tau) {
            const int t = p * P_ + tau;
            record_reward(t);
            const auto s = draw_surprises();
            const int n_surprised = static_cast<int>(std::count(s.begin(), s.end(), 1));
            for (int i = 0; i < N_; ++i) {
                tr_.surprise[t][i] = s[i];
                if (s[i] && opt_.surprise_counts) ++done_[i];
            }
            const int budget_now = std::max(0, k_ - n_surprised);
            std::vector<double> idx(static_cast<std::size_t>(N_), 0.0);
            std::vector<int> open_window(static_cast<std::size_t>(N_), -1);
            for (int i = 0; i < N_; ++i) {
                if (s[i]) {
                    idx[i] = -1.0;
                    continue;
                }
                int wi = -1;
                for (std::size_t k = 0; k < windows_[i].size(); ++k) {
                    if (windows_[i][k].contains(tau + 1) && !window_used_[i][k]) {
                        wi = static_cast<int>(k);
                        break;
                    }
                }
                const bool can_pull = wi >= 0 && done_[i] < cfg_.frequency.hi;
                open_window[i] = can_pull ? wi : -1;
                // States without a pull left have index 0 in the encoded arm.
                if (!can_pull) continue;
                const auto& enc = encoded_[i][wi];
                const int id = enc.state_id({chains_[i].clamp(age_[i]), tau + 1, 1});
                idx[i] = encoded_table(i, windows_[i][wi])[id];
            }
            std::vector<char> pulled = s;
            int scheduled = 0;
            for (int i : greedy_whittle_step(idx, budget_now)) {
                // Picks that cannot act are discarded; they would not change
                // the arm's state.
                if (s[i] || open_window[i] < 0) continue;
                window_used_[i][open_window[i]] = 1;
                execute_pull(p, tau, i);
                tr_.action[t][i] = 1;
                pulled[i] = 1;
                ++scheduled;
            }
            if (scheduled > budget_now) {
                audit("period " + std::to_string(p + 1) + " step " + std::to_string(tau + 1) + ": budget exceeded");
            }
            advance(t, pulled);
        }
        close_period(p, false);
    }

    void close_period(int p, bool excused) {
        for (int i = 0; i < N_; ++i) {
            if (done_[i] >= cfg_.frequency.lo) continue;
            if (excused) {
                ++tr_.excused_shortfalls;
            } else {
                audit("period " + std::to_string(p + 1) + " arm " + std::to_string(truth_.arms[i].arm_id) +
                      ": below the lower frequency bound");
            }
        }
    }

    const Instance& truth_;
    const Instance& plan_;
    PolicyConfig cfg_;
    std::uint64_t seed_;
    RunOptions opt_;
    IndexCache local_cache_;
    IndexCache* cache_;
    int N_, P_, T_, k_, W_;
    bool greedy_ = false;
    bool use_slots_ = false;

    std::vector<BeliefChain> chains_;
    std::vector<const IndexTable*> tables_;
    std::vector<int> age_;
    std::vector<double> belief_;
    std::vector<std::mt19937_64> surprise_gen_;
    SimulationTrace tr_;

    std::vector<std::vector<ActionWindow>> windows_;
    std::vector<std::vector<char>> window_used_;
    std::vector<std::vector<EncodedMDP>> encoded_;
    std::vector<std::vector<StepRange>> free_slots_;
    std::vector<int> done_;
    std::vector<std::vector<char>> plan_matrix_;
};

}  // namespace

SimulationTrace run_policy(const Instance& instance, const PolicyConfig& config, std::uint64_t seed,
                           const RunOptions& options) {
    return Simulator(instance, config, seed, options).run();
}

SurpriseReport run_with_surprises(const Instance& instance, const PolicyConfig& config, double rate,
                                  std::uint64_t seed, const RunOptions& options) {
    SurpriseReport r;
    RunOptions base = options;
    base.surprise_rate = 0.0;
    r.base = run_policy(instance, config, seed, base);
    RunOptions with = options;
    with.surprise_rate = rate;
    r.surprised = rate == 0.0 ? r.base : run_policy(instance, config, seed, with);
    r.drop_percent = 100.0 * (r.base.reward - r.surprised.reward) / r.base.reward;
    return r;
}

LookaheadProblem first_period_problem(const Instance& instance, Frequency frequency, int budget, IndexCache& cache,
                                      double chain_tolerance, double index_tolerance) {
    validate_instance(instance);
    const int N = instance.num_arms();
    const int P = instance.period;
    LookaheadProblem p = LookaheadProblem::uniform(N, P, budget, frequency);
    if (frequency.hi >= 2) {
        p.post_pull.assign(static_cast<std::size_t>(N), {});
    }
    for (int i = 0; i < N; ++i) {
        const auto& arm = instance.arms[i];
        const auto chain = build_belief_chain(arm.kernel, chain_tolerance, instance.horizon);
        IndexCache::Key key;
        key.kernel = arm.kernel;
        key.chain_tolerance = chain_tolerance;
        key.chain_cap = instance.horizon;
        key.gamma = instance.gamma;
        key.index_tolerance = index_tolerance;
        const auto forecast = forecast_indices(chain, 0, cache.chain_table(chain, key), P);
        p.index[i] = forecast.index;
        if (frequency.hi >= 2) p.post_pull[i] = forecast.post_pull;
        if (arm.window) {
            for (int t = 0; t < P; ++t) p.eligible[i][t] = arm.window->contains(t + 1);
        }
    }
    return p;
}

Instance perturb_parameters(const Instance& instance, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw std::invalid_argument("noise standard deviation must be nonnegative");
    Instance out = instance;
    if (sigma == 0.0) return out;
    for (std::size_t i = 0; i < out.arms.size(); ++i) {
        auto gen = stream(seed, {tag::noise, static_cast<std::uint64_t>(i)});
        std::normal_distribution<double> noise(0.0, sigma);
        const double p00 = std::clamp(out.arms[i].kernel.p00 + noise(gen), 0.0, 1.0);
        const double p10 = std::clamp(out.arms[i].kernel.p10 + noise(gen), 0.0, 1.0);
        out.arms[i].kernel = TransitionKernel::from_fail_rates(p00, p10);
    }
    return out;
}

std::vector<MatrixRow> run_policy_matrix(const Instance& instance, const std::vector<PolicyConfig>& configs,
                                         std::uint64_t seed, const RunOptions& options) {
    std::vector<MatrixRow> rows;
    const double null_reward = run_policy(instance, PolicyConfig::null_policy(), seed, options).reward;
    for (const auto& cfg : configs) {
        MatrixRow row;
        row.label = cfg.label();
        row.slug = cfg.slug();
        try {
            const auto tr = run_policy(instance, cfg, seed, options);
            row.reward = tr.reward;
            row.improvement = tr.reward - null_reward;
            row.improvement_percent = 100.0 * row.improvement / null_reward;
            row.audit_ok = tr.audit_ok();
        } catch (const std::exception& e) {
            row.error = e.what();
            row.audit_ok = false;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_trace_csv(const std::filesystem::path& path, const SimulationTrace& tr) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "timestep,arm_id,belief,action,surprise\n";
    for (int t = 0; t < tr.horizon; ++t) {
        for (int i = 0; i < tr.num_arms; ++i) {
            out << t + 1 << ',' << tr.arm_ids[i] << ',' << csv::format_double(tr.belief[t][i]) << ','
                << static_cast<int>(tr.action[t][i]) << ',' << static_cast<int>(tr.surprise[t][i]) << '\n';
        }
    }
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace rmab
