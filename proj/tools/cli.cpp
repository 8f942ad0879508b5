#include "cli.hpp"

#include "rmab/arm_model.hpp"
#include "rmab/encoding.hpp"
#include "rmab/files.hpp"
#include "rmab/io.hpp"
#include "rmab/parallel.hpp"
#include "rmab/planner.hpp"
#include "rmab/simulate.hpp"
#include "rmab/whittle.hpp"
#include "rmab/window_opt.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <optional>

namespace rmab::cli {

namespace {

/// Infeasible schedules map to their own exit code.
class Infeasible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Flags {
    std::string instance;
    std::string out;
    std::string windows;
    std::string trace;
    std::string report;
    std::string policy = "opt-opt-eq1";
    std::string freq;
    std::vector<std::string> inputs;
    std::string drops_out;

    int n = 0;
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> noise_seed;
    int threads = 1;
    int window_len = 2;
    int horizon = 60;
    int period = 12;
    double gamma = 0.95;
    double budget_frac = 0.09;
    bool budget_frac_set = false;
    double surprise = 0.0;
    bool surprise_extra = false;
    double noise_sigma = 0.0;
    double chain_tol = kDefaultChainTolerance;
    double index_tol = 1e-6;
    double p00_alpha = 5.0;
    double p00_beta = 1.0;
    double p10_alpha = 1.0;
    double p10_beta = 5.0;
};

std::string fmt(double v) { return csv::format_double(v); }

Frequency frequency_for(const Flags& f, const Instance& inst) {
    return f.freq.empty() ? inst.frequency : Frequency::parse(f.freq);
}

int budget_for(const Flags& f, const Instance& inst) {
    return f.budget_frac_set ? budget_from_fraction(inst.num_arms(), f.budget_frac) : inst.budget;
}

void print(std::ostream& out, const KeyValues& kv) {
    for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
}

int cmd_generate(const Flags& f, std::ostream& out) {
    if (f.n < 1) throw CLI::ValidationError("--n", "number of arms must be at least 1");
    SyntheticParams params;
    params.p00_alpha = f.p00_alpha;
    params.p00_beta = f.p00_beta;
    params.p10_alpha = f.p10_alpha;
    params.p10_beta = f.p10_beta;
    params.budget_fraction = f.budget_frac;
    params.horizon = f.horizon;
    params.period = f.period;
    params.gamma = f.gamma;
    if (!f.freq.empty()) params.frequency = Frequency::parse(f.freq);
    const Instance inst = generate_synthetic_instance(f.n, f.seed, params);
    save_instance(inst, f.out);
    KeyValues kv = instance_parameters(inst);
    kv["arms"] = std::to_string(inst.num_arms());
    kv["seed"] = std::to_string(f.seed);
    kv["instance"] = f.out;
    print(out, kv);
    return kExitOk;
}

int cmd_indices(const Flags& f, std::ostream& out) {
    const Instance inst = load_instance(f.instance);
    validate_instance(inst);
    IndexCache cache;
    std::vector<std::vector<IndexRow>> per_arm(static_cast<std::size_t>(inst.num_arms()));
    parallel_for(inst.num_arms(), f.threads, [&](int i) {
        const auto& arm = inst.arms[i];
        const auto chain = build_belief_chain(arm.kernel, f.chain_tol, inst.horizon);
        IndexCache::Key key;
        key.kernel = arm.kernel;
        key.chain_tolerance = f.chain_tol;
        key.chain_cap = inst.horizon;
        key.gamma = inst.gamma;
        key.index_tolerance = f.index_tol;
        auto& rows = per_arm[i];
        if (arm.window) {
            key.window = arm.window;
            key.period = inst.period;
            key.allowance = 1;
            const auto enc = encode_action_window(chain, *arm.window, inst.period, 1);
            const auto& table = cache.encoded_table(chain, key);
            for (int s = 0; s < enc.num_states(); ++s) {
                const auto& st = enc.states[s];
                rows.push_back({arm.arm_id, s, chain.beliefs[st.belief_pos], st.timer, st.pulls_left, table[s]});
            }
        } else {
            const auto& table = cache.chain_table(chain, key);
            for (int s = 0; s < chain.size(); ++s) rows.push_back({arm.arm_id, s, chain.beliefs[s], -1, -1, table[s]});
        }
    });
    std::vector<IndexRow> rows;
    for (auto& r : per_arm) rows.insert(rows.end(), r.begin(), r.end());
    save_index_rows(f.out, rows);
    print(out, {{"arms", std::to_string(inst.num_arms())}, {"rows", std::to_string(rows.size())}, {"out", f.out}});
    return kExitOk;
}

int cmd_windows(const Flags& f, std::ostream& out) {
    const Instance inst = load_instance(f.instance);
    if (f.window_len < 1 || f.window_len > inst.period) {
        throw CLI::ValidationError("--window-len", "window length must lie in [1, period]");
    }
    IndexCache cache;
    const auto problem =
        first_period_problem(inst, frequency_for(f, inst), budget_for(f, inst), cache, f.chain_tol, f.index_tol);
    const auto seq = simulate_virtual_sequence(problem);
    if (!seq) {
        auto relaxed = problem;
        for (auto& row : relaxed.eligible) std::fill(row.begin(), row.end(), true);
        throw Infeasible("virtual sequence is infeasible: " + infeasibility_diagnostic(relaxed));
    }
    const auto dist = solve_window_lp(build_window_lp(seq->counts(), f.window_len));
    const auto windows = sample_windows(dist, *seq, f.seed);
    save_windows(f.out, inst, windows);
    std::size_t count = 0;
    for (const auto& w : windows) count += w.size();
    print(out, {{"lp_objective", fmt(dist.objective)}, {"windows", std::to_string(count)}, {"out", f.out}});
    return kExitOk;
}

int cmd_plan(const Flags& f, std::ostream& out) {
    const Instance inst = load_instance(f.instance);
    IndexCache cache;
    auto problem =
        first_period_problem(inst, frequency_for(f, inst), budget_for(f, inst), cache, f.chain_tol, f.index_tol);
    if (!f.windows.empty()) {
        const auto windows = load_windows(f.windows, inst);
        for (int i = 0; i < inst.num_arms(); ++i) {
            if (windows[i].empty()) continue;
            std::fill(problem.eligible[i].begin(), problem.eligible[i].end(), false);
            for (const auto& w : windows[i]) {
                problem.slots[i].push_back({w.start - 1, w.last() - 1});
                for (int t = w.start; t <= w.last(); ++t) problem.eligible[i][t - 1] = true;
            }
        }
    }
    const auto plan = solve_plan(problem);
    save_plan(f.out, inst, plan);
    int pulls = 0;
    for (int t = 0; t < problem.num_steps; ++t) pulls += plan.feasible() ? plan.pulls_at(t) : 0;
    KeyValues kv{{"status", to_string(plan.status)}, {"objective", fmt(plan.objective)},
                 {"pulls", std::to_string(pulls)}, {"out", f.out}};
    if (!plan.feasible()) kv["diagnostic"] = plan.diagnostic;
    print(out, kv);
    if (!plan.feasible()) throw Infeasible(plan.diagnostic);
    return kExitOk;
}

int cmd_simulate(const Flags& f, std::ostream& out) {
    Instance inst = load_instance(f.instance);
    PolicyConfig cfg = PolicyConfig::parse(f.policy);
    cfg.window_len = f.window_len;
    if (!f.windows.empty()) {
        if (cfg.window_mode != WindowMode::given) {
            throw CLI::ValidationError("--windows", "a windows file requires a policy with given windows");
        }
        const auto windows = load_windows(f.windows, inst);
        for (int i = 0; i < inst.num_arms(); ++i) {
            if (windows[i].size() > 1) throw CLI::ValidationError("--windows", "given windows allow one per arm");
            if (!windows[i].empty()) inst.arms[i].window = windows[i].front();
        }
    }
    IndexCache cache;
    RunOptions opt;
    opt.cache = &cache;
    opt.threads = f.threads;
    opt.chain_tolerance = f.chain_tol;
    opt.index_tolerance = f.index_tol;
    opt.surprise_counts = !f.surprise_extra;

    std::optional<Instance> noisy;
    RunOptions planned = opt;
    if (f.noise_sigma > 0.0) {
        noisy = perturb_parameters(inst, f.noise_sigma, f.noise_seed.value_or(f.seed));
        planned.planning = &*noisy;
    }

    KeyValues kv;
    SimulationTrace trace;
    try {
        if (f.surprise > 0.0) {
            auto r = run_with_surprises(inst, cfg, f.surprise, f.seed, planned);
            trace = std::move(r.surprised);
            kv["surprise_rate"] = fmt(f.surprise);
            kv["base_reward"] = fmt(r.base.reward);
            kv["drop_percent"] = fmt(r.drop_percent);
        } else {
            trace = run_policy(inst, cfg, f.seed, planned);
        }
        if (noisy) {
            RunOptions clean = opt;
            clean.surprise_rate = f.surprise;
            const double clean_reward = run_policy(inst, cfg, f.seed, clean).reward;
            kv["noise_sigma"] = fmt(f.noise_sigma);
            kv["clean_reward"] = fmt(clean_reward);
            kv["noise_diff"] = fmt(trace.reward - clean_reward);
        }
    } catch (const InfeasibleError& e) {
        throw Infeasible(e.what());
    }
    const double null_reward = run_policy(inst, PolicyConfig::null_policy(), f.seed, opt).reward;

    kv["policy"] = cfg.label();
    kv["slug"] = cfg.slug();
    kv["seed"] = std::to_string(f.seed);
    kv["reward"] = fmt(trace.reward);
    kv["null_reward"] = fmt(null_reward);
    kv["improvement"] = fmt(trace.reward - null_reward);
    kv["improvement_percent"] = fmt(null_reward > 0.0 ? 100.0 * (trace.reward - null_reward) / null_reward : 0.0);
    kv["audit"] = trace.audit_ok() ? "ok" : "violations";
    kv["audit_violations"] = std::to_string(trace.audit.size());
    kv["total_pulls"] = std::to_string(trace.total_pulls());
    kv["total_surprises"] = std::to_string(trace.total_surprises());
    kv["replans"] = std::to_string(trace.replans);
    kv["infeasible_replans"] = std::to_string(trace.infeasible_replans);
    kv["excused_shortfalls"] = std::to_string(trace.excused_shortfalls);
    kv["window_redraws"] = std::to_string(trace.window_redraws);
    if (!f.trace.empty()) {
        write_trace_csv(f.trace, trace);
        kv["trace"] = f.trace;
    }
    if (!f.report.empty()) write_key_values(f.report, kv);
    print(out, kv);
    for (const auto& a : trace.audit) out << "audit: " << a << '\n';
    return kExitOk;
}

std::string get(const KeyValues& kv, const std::string& key, const std::string& file) {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParseError(file, 0, "missing key '" + key + "'");
    return it->second;
}

int cmd_report(const Flags& f, std::ostream& out) {
    std::vector<std::pair<std::string, KeyValues>> reports;
    for (const auto& path : f.inputs) reports.emplace_back(path, read_key_values(path));

    std::ofstream table(f.out);
    if (!table) throw std::runtime_error("cannot write " + f.out);
    table << "policy,slug,seed,reward,null_reward,improvement,improvement_percent,audit\n";
    for (const auto& [path, kv] : reports) {
        table << csv::quote(get(kv, "policy", path)) << ',' << get(kv, "slug", path) << ',' << get(kv, "seed", path) << ','
              << get(kv, "reward", path) << ',' << get(kv, "null_reward", path) << ','
              << get(kv, "improvement", path) << ',' << get(kv, "improvement_percent", path) << ','
              << get(kv, "audit", path) << '\n';
    }
    if (!table) throw std::runtime_error("failed writing " + f.out);

    int drops = 0;
    if (!f.drops_out.empty()) {
        std::ofstream d(f.drops_out);
        if (!d) throw std::runtime_error("cannot write " + f.drops_out);
        d << "policy,slug,seed,surprise_rate,base_reward,reward,drop_percent\n";
        for (const auto& [path, kv] : reports) {
            if (!kv.count("drop_percent")) continue;
            d << csv::quote(get(kv, "policy", path)) << ',' << get(kv, "slug", path) << ',' << get(kv, "seed", path) << ','
              << get(kv, "surprise_rate", path) << ',' << get(kv, "base_reward", path) << ','
              << get(kv, "reward", path) << ',' << get(kv, "drop_percent", path) << '\n';
            ++drops;
        }
        if (!d) throw std::runtime_error("failed writing " + f.drops_out);
    }
    print(out, {{"rows", std::to_string(reports.size())}, {"drop_rows", std::to_string(drops)}, {"out", f.out}});
    return kExitOk;
}

void add_index_flags(CLI::App* app, Flags& f) {
    app->add_option("--chain-tol", f.chain_tol, "Belief chain convergence tolerance")->check(CLI::PositiveNumber);
    app->add_option("--index-tol", f.index_tol, "Whittle index bisection tolerance")->check(CLI::PositiveNumber);
    app->add_option("--threads", f.threads, "Worker thread cap")->check(CLI::Range(1, 1024));
}

void add_schedule_flags(CLI::App* app, Flags& f) {
    app->add_option("--freq", f.freq, "Frequency bound, e.g. exactly:1, at_most:1, between:1:2");
    app->add_option_function<double>(
           "--budget-frac",
           [&f](double v) {
               f.budget_frac = v;
               f.budget_frac_set = true;
           },
           "Per-step budget as a fraction of the arm count")
        ->check(CLI::Range(0.0, 1.0));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Inspection scheduling with window-constrained restless bandits", "rmab"};
    app.require_subcommand(1);
    app.allow_extras(false);
    Flags f;

    auto* gen = app.add_subcommand("generate", "Sample a synthetic instance");
    gen->add_option("--n", f.n, "Number of arms")->required();
    gen->add_option("--seed", f.seed, "Random seed");
    gen->add_option("--out", f.out, "Instance CSV path")->required();
    gen->add_option("--p00-alpha", f.p00_alpha)->check(CLI::PositiveNumber);
    gen->add_option("--p00-beta", f.p00_beta)->check(CLI::PositiveNumber);
    gen->add_option("--p10-alpha", f.p10_alpha)->check(CLI::PositiveNumber);
    gen->add_option("--p10-beta", f.p10_beta)->check(CLI::PositiveNumber);
    gen->add_option("--budget-frac", f.budget_frac, "Per-step budget as a fraction of the arm count")
        ->check(CLI::Range(0.0, 1.0));
    gen->add_option("--horizon", f.horizon, "Simulation horizon")->check(CLI::PositiveNumber);
    gen->add_option("--period", f.period, "Period length")->check(CLI::PositiveNumber);
    gen->add_option("--gamma", f.gamma, "Discount factor")->check(CLI::Range(0.0, 1.0));
    gen->add_option("--freq", f.freq, "Frequency bound, e.g. exactly:1");

    auto* idx = app.add_subcommand("indices", "Dump Whittle index tables");
    idx->add_option("--instance", f.instance)->required()->check(CLI::ExistingFile);
    idx->add_option("--out", f.out, "Index CSV path")->required();
    add_index_flags(idx, f);

    auto* win = app.add_subcommand("windows", "Optimize action windows for one period");
    win->add_option("--instance", f.instance)->required()->check(CLI::ExistingFile);
    win->add_option("--out", f.out, "Windows CSV path")->required();
    win->add_option("--seed", f.seed, "Window sampling seed");
    win->add_option("--window-len", f.window_len, "Window length")->check(CLI::PositiveNumber);
    add_schedule_flags(win, f);
    add_index_flags(win, f);

    auto* plan = app.add_subcommand("plan", "Plan the first period");
    plan->add_option("--instance", f.instance)->required()->check(CLI::ExistingFile);
    plan->add_option("--windows", f.windows, "Windows CSV; overrides instance windows")->check(CLI::ExistingFile);
    plan->add_option("--out", f.out, "Plan CSV path")->required();
    add_schedule_flags(plan, f);
    add_index_flags(plan, f);

    auto* sim = app.add_subcommand("simulate", "Simulate a policy over the horizon");
    sim->add_option("--instance", f.instance)->required()->check(CLI::ExistingFile);
    sim->add_option("--policy", f.policy, "Policy slug, e.g. opt-opt-eq1, rdm-ip-eq1, opt-opt-b12-15, null");
    sim->add_option("--seed", f.seed, "Simulation seed");
    sim->add_option("--surprise", f.surprise, "Per-arm surprise inspection rate")->check(CLI::Range(0.0, 0.999999));
    sim->add_flag("--surprise-extra", f.surprise_extra, "Surprises do not count toward the frequency requirement");
    sim->add_option("--noise-sigma", f.noise_sigma, "Std. dev. of planning noise on p00 and p10")
        ->check(CLI::NonNegativeNumber);
    sim->add_option("--noise-seed", f.noise_seed, "Noise seed; defaults to --seed");
    sim->add_option("--window-len", f.window_len, "Window length")->check(CLI::PositiveNumber);
    sim->add_option("--windows", f.windows, "Windows CSV for given-window policies")->check(CLI::ExistingFile);
    sim->add_option("--trace", f.trace, "Trace CSV path");
    sim->add_option("--report", f.report, "Key-value summary path");
    add_index_flags(sim, f);

    auto* rep = app.add_subcommand("report", "Aggregate simulation summaries");
    rep->add_option("--inputs", f.inputs, "Summary files written by simulate --report")
        ->required()
        ->check(CLI::ExistingFile);
    rep->add_option("--out", f.out, "Improvement table CSV")->required();
    rep->add_option("--drops-out", f.drops_out, "Surprise drop table CSV");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (gen->parsed()) return cmd_generate(f, out);
        if (idx->parsed()) return cmd_indices(f, out);
        if (win->parsed()) return cmd_windows(f, out);
        if (plan->parsed()) return cmd_plan(f, out);
        if (sim->parsed()) return cmd_simulate(f, out);
        if (rep->parsed()) return cmd_report(f, out);
    } catch (const Infeasible& e) {
        err << "infeasible: " << e.what() << '\n';
        return kExitInfeasible;
    } catch (const CLI::Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace rmab::cli
