#include "rmab/files.hpp"

#include "rmab/io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

namespace rmab {

namespace {

std::map<int, int> arm_positions(const Instance& instance) {
    std::map<int, int> pos;
    for (int i = 0; i < instance.num_arms(); ++i) pos[instance.arms[i].arm_id] = i;
    return pos;
}

int position_of(const std::map<int, int>& pos, int arm_id, const std::string& file, int line) {
    auto it = pos.find(arm_id);
    if (it == pos.end()) throw ParseError(file, line, "unknown arm_id " + std::to_string(arm_id));
    return it->second;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

void save_windows(const std::filesystem::path& path, const Instance& instance, const ArmWindows& windows) {
    if (static_cast<int>(windows.size()) != instance.num_arms()) {
        throw std::invalid_argument("window list does not match the arm count");
    }
    auto out = open_out(path);
    out << "arm_id,window_start,window_len\n";
    for (int i = 0; i < instance.num_arms(); ++i) {
        for (const auto& w : windows[i]) out << instance.arms[i].arm_id << ',' << w.start << ',' << w.length << '\n';
    }
    finish(out, path);
}

ArmWindows load_windows(const std::filesystem::path& path, const Instance& instance) {
    const auto table = csv::read(path);
    const std::string file = path.string();
    const int c_arm = table.column("arm_id", file);
    const int c_start = table.column("window_start", file);
    const int c_len = table.column("window_len", file);
    const auto pos = arm_positions(instance);
    ArmWindows out(static_cast<std::size_t>(instance.num_arms()));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const int line = table.line_numbers[r];
        const int arm = csv::parse_int(row[c_arm], file, line, "arm_id");
        ActionWindow w{csv::parse_int(row[c_start], file, line, "window_start"),
                       csv::parse_int(row[c_len], file, line, "window_len")};
        if (w.length < 1 || w.start < 1 || w.last() > instance.period) {
            throw ParseError(file, line, "window does not fit in the period");
        }
        out[position_of(pos, arm, file, line)].push_back(w);
    }
    return out;
}

void save_plan(const std::filesystem::path& path, const Instance& instance, const LookaheadPlan& plan) {
    auto out = open_out(path);
    out << "arm_id,timestep,action\n";
    for (std::size_t i = 0; i < plan.action.size(); ++i) {
        for (std::size_t t = 0; t < plan.action[i].size(); ++t) {
            if (plan.action[i][t]) out << instance.arms[i].arm_id << ',' << t + 1 << ",1\n";
        }
    }
    out << "objective," << csv::format_double(plan.objective) << ',' << to_string(plan.status) << '\n';
    finish(out, path);
}

LookaheadPlan load_plan(const std::filesystem::path& path, const Instance& instance, int num_steps) {
    const auto table = csv::read(path);
    const std::string file = path.string();
    const int c_arm = table.column("arm_id", file);
    const int c_t = table.column("timestep", file);
    const int c_a = table.column("action", file);
    const auto pos = arm_positions(instance);
    LookaheadPlan plan;
    plan.action.assign(static_cast<std::size_t>(instance.num_arms()),
                       std::vector<int>(static_cast<std::size_t>(num_steps), 0));
    bool trailer = false;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const int line = table.line_numbers[r];
        if (row[c_arm] == "objective") {
            plan.objective = csv::parse_double(row[c_t], file, line, "objective");
            const std::string& status = row[c_a];
            if (status == to_string(PlanStatus::optimal)) plan.status = PlanStatus::optimal;
            else if (status == to_string(PlanStatus::infeasible)) plan.status = PlanStatus::infeasible;
            else throw ParseError(file, line, "unknown plan status '" + status + "'");
            trailer = true;
            continue;
        }
        const int arm = position_of(pos, csv::parse_int(row[c_arm], file, line, "arm_id"), file, line);
        const int t = csv::parse_int(row[c_t], file, line, "timestep");
        const int a = csv::parse_int(row[c_a], file, line, "action");
        if (t < 1 || t > num_steps) throw ParseError(file, line, "timestep out of range");
        if (a != 0 && a != 1) throw ParseError(file, line, "action must be 0 or 1");
        plan.action[arm][t - 1] = a;
    }
    if (!trailer) throw ParseError(file, static_cast<int>(table.rows.size()) + 1, "missing objective trailer row");
    return plan;
}

SimulationTrace load_trace_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    const std::string file = path.string();
    const int c_t = table.column("timestep", file);
    const int c_arm = table.column("arm_id", file);
    const int c_b = table.column("belief", file);
    const int c_a = table.column("action", file);
    const int c_s = table.column("surprise", file);
    SimulationTrace tr;
    std::map<int, int> pos;
    int horizon = 0;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const int line = table.line_numbers[r];
        const int t = csv::parse_int(row[c_t], file, line, "timestep");
        if (t < 1) throw ParseError(file, line, "timestep must be positive");
        horizon = std::max(horizon, t);
        if (t != 1) continue;
        const int arm = csv::parse_int(row[c_arm], file, line, "arm_id");
        if (pos.count(arm)) throw ParseError(file, line, "duplicate arm_id " + std::to_string(arm));
        pos[arm] = static_cast<int>(tr.arm_ids.size());
        tr.arm_ids.push_back(arm);
    }
    const std::size_t n = tr.arm_ids.size();
    tr.belief.assign(static_cast<std::size_t>(horizon), std::vector<double>(n, 0.0));
    tr.action.assign(static_cast<std::size_t>(horizon), std::vector<char>(n, 0));
    tr.surprise.assign(static_cast<std::size_t>(horizon), std::vector<char>(n, 0));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const int line = table.line_numbers[r];
        const int t = csv::parse_int(row[c_t], file, line, "timestep");
        const int i = position_of(pos, csv::parse_int(row[c_arm], file, line, "arm_id"), file, line);
        tr.belief[t - 1][i] = csv::parse_double(row[c_b], file, line, "belief");
        tr.action[t - 1][i] = static_cast<char>(csv::parse_int(row[c_a], file, line, "action"));
        tr.surprise[t - 1][i] = static_cast<char>(csv::parse_int(row[c_s], file, line, "surprise"));
    }
    tr.num_arms = static_cast<int>(tr.arm_ids.size());
    tr.horizon = static_cast<int>(tr.belief.size());
    for (const auto& row : tr.belief) {
        for (double b : row) tr.reward += b;
    }
    return tr;
}

void save_index_rows(const std::filesystem::path& path, const std::vector<IndexRow>& rows) {
    auto out = open_out(path);
    out << "arm_id,state_id,belief,timer,counter,whittle_index\n";
    for (const auto& r : rows) {
        out << r.arm_id << ',' << r.state_id << ',' << csv::format_double(r.belief) << ',';
        if (r.timer >= 0) out << r.timer;
        out << ',';
        if (r.counter >= 0) out << r.counter;
        out << ',' << csv::format_double(r.index) << '\n';
    }
    finish(out, path);
}

std::vector<IndexRow> load_index_rows(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    const std::string file = path.string();
    const int c_arm = table.column("arm_id", file);
    const int c_id = table.column("state_id", file);
    const int c_b = table.column("belief", file);
    const int c_timer = table.column("timer", file);
    const int c_counter = table.column("counter", file);
    const int c_w = table.column("whittle_index", file);
    std::vector<IndexRow> rows;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const int line = table.line_numbers[r];
        IndexRow x;
        x.arm_id = csv::parse_int(row[c_arm], file, line, "arm_id");
        x.state_id = csv::parse_int(row[c_id], file, line, "state_id");
        x.belief = csv::parse_double(row[c_b], file, line, "belief");
        if (!row[c_timer].empty()) x.timer = csv::parse_int(row[c_timer], file, line, "timer");
        if (!row[c_counter].empty()) x.counter = csv::parse_int(row[c_counter], file, line, "counter");
        x.index = csv::parse_double(row[c_w], file, line, "whittle_index");
        rows.push_back(x);
    }
    return rows;
}

}  // namespace rmab
