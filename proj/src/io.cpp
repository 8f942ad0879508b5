#include "rmab/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

namespace rmab {

namespace csv {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char c = line[k];
        if (quoted) {
            if (c != '"') cur.push_back(c);
            else if (k + 1 < line.size() && line[k + 1] == '"') cur.push_back(line[++k]);
            else quoted = false;
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::string quote(const std::string& field) {
    if (field.find_first_of(",\"") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& field, const std::string& file, int line, const std::string& column) {
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto res = std::from_chars(first, last, v);
    if (field.empty() || res.ec != std::errc() || res.ptr != last) {
        throw ParseError(file, line, "column '" + column + "': not a number: '" + field + "'");
    }
    return v;
}

int parse_int(const std::string& field, const std::string& file, int line, const std::string& column) {
    int v = 0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto res = std::from_chars(first, last, v);
    if (field.empty() || res.ec != std::errc() || res.ptr != last) {
        throw ParseError(file, line, "column '" + column + "': not an integer: '" + field + "'");
    }
    return v;
}

int Table::find(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
}

int Table::column(const std::string& name, const std::string& file) const {
    const int idx = find(name);
    if (idx < 0) throw ParseError(file, 1, "missing column '" + name + "'");
    return idx;
}

Table read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    Table t;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (t.header.empty()) {
            t.header = split(line);
            continue;
        }
        auto fields = split(line);
        if (fields.size() != t.header.size()) {
            throw ParseError(path.string(), lineno,
                             "expected " + std::to_string(t.header.size()) + " fields, found " +
                                 std::to_string(fields.size()));
        }
        t.rows.push_back(std::move(fields));
        t.line_numbers.push_back(lineno);
    }
    if (t.header.empty()) throw ParseError(path.string(), 1, "empty file");
    return t;
}

}  // namespace csv

KeyValues read_key_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    KeyValues kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(path.string(), lineno, "expected key=value");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

void write_key_values(const std::filesystem::path& path, const KeyValues& values) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& [k, v] : values) out << k << '=' << v << '\n';
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
    return std::filesystem::path(csv_path.string() + ".cfg");
}

KeyValues instance_parameters(const Instance& inst) {
    return {
        {"horizon", std::to_string(inst.horizon)},
        {"period", std::to_string(inst.period)},
        {"budget", std::to_string(inst.budget)},
        {"gamma", csv::format_double(inst.gamma)},
        {"frequency", inst.frequency.to_string()},
    };
}

void apply_instance_parameters(Instance& inst, const KeyValues& kv) {
    const std::string src = "instance parameters";
    if (auto it = kv.find("horizon"); it != kv.end()) inst.horizon = csv::parse_int(it->second, src, 0, "horizon");
    if (auto it = kv.find("period"); it != kv.end()) inst.period = csv::parse_int(it->second, src, 0, "period");
    if (auto it = kv.find("budget"); it != kv.end()) inst.budget = csv::parse_int(it->second, src, 0, "budget");
    if (auto it = kv.find("gamma"); it != kv.end()) inst.gamma = csv::parse_double(it->second, src, 0, "gamma");
    if (auto it = kv.find("frequency"); it != kv.end()) inst.frequency = Frequency::parse(it->second);
}

void save_instance(const Instance& inst, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "arm_id,p00,p01,p10,p11,window_start,window_len,group_id\n";
    for (const auto& arm : inst.arms) {
        out << arm.arm_id << ',' << csv::format_double(arm.kernel.p00) << ','
            << csv::format_double(arm.kernel.p01) << ',' << csv::format_double(arm.kernel.p10) << ','
            << csv::format_double(arm.kernel.p11) << ',';
        if (arm.window) out << arm.window->start << ',' << arm.window->length;
        else out << ',';
        out << ',';
        if (arm.group_id) out << *arm.group_id;
        out << '\n';
    }
    if (!out) throw std::runtime_error("failed writing " + path.string());
    write_key_values(sidecar_path(path), instance_parameters(inst));
}

Instance load_instance(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    const std::string file = path.string();
    const int c_id = table.column("arm_id", file);
    const int c00 = table.column("p00", file);
    const int c01 = table.column("p01", file);
    const int c10 = table.column("p10", file);
    const int c11 = table.column("p11", file);
    const int c_ws = table.find("window_start");
    const int c_wl = table.find("window_len");
    const int c_g = table.find("group_id");

    Instance inst;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const int line = table.line_numbers[r];
        ArmSpec arm;
        arm.arm_id = csv::parse_int(row[c_id], file, line, "arm_id");
        arm.kernel.p00 = csv::parse_double(row[c00], file, line, "p00");
        arm.kernel.p01 = csv::parse_double(row[c01], file, line, "p01");
        arm.kernel.p10 = csv::parse_double(row[c10], file, line, "p10");
        arm.kernel.p11 = csv::parse_double(row[c11], file, line, "p11");
        try {
            validate_kernel(arm.kernel);
        } catch (const ValidationError& e) {
            throw ParseError(file, line, e.what());
        }
        const bool has_ws = c_ws >= 0 && !row[c_ws].empty();
        const bool has_wl = c_wl >= 0 && !row[c_wl].empty();
        if (has_ws != has_wl) throw ParseError(file, line, "window_start and window_len must be given together");
        if (has_ws) {
            arm.window = ActionWindow{csv::parse_int(row[c_ws], file, line, "window_start"),
                                      csv::parse_int(row[c_wl], file, line, "window_len")};
        }
        if (c_g >= 0 && !row[c_g].empty()) arm.group_id = csv::parse_int(row[c_g], file, line, "group_id");
        inst.arms.push_back(arm);
    }
    const auto side = sidecar_path(path);
    if (std::filesystem::exists(side)) apply_instance_parameters(inst, read_key_values(side));
    validate_instance(inst);
    return inst;
}

}  // namespace rmab
