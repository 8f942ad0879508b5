#pragma once

#include "rmab/arm_model.hpp"

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace rmab {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& file, int line, const std::string& what)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

namespace csv {

/// Splits one CSV line on commas; double-quoted fields may hold commas and
/// doubled quotes.
std::vector<std::string> split(const std::string& line);
/// Quotes a field when it contains a comma or a quote.
std::string quote(const std::string& field);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

double parse_double(const std::string& field, const std::string& file, int line, const std::string& column);
int parse_int(const std::string& field, const std::string& file, int line, const std::string& column);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> line_numbers;

    /// Column index by name; throws ParseError naming the file if missing.
    int column(const std::string& name, const std::string& file) const;
    int find(const std::string& name) const;
};

Table read(const std::filesystem::path& path);

}  // namespace csv

using KeyValues = std::map<std::string, std::string>;

KeyValues read_key_values(const std::filesystem::path& path);
void write_key_values(const std::filesystem::path& path, const KeyValues& values);

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

KeyValues instance_parameters(const Instance& instance);
/// Applies T, P, k, gamma and frequency from a key-value map onto `instance`.
void apply_instance_parameters(Instance& instance, const KeyValues& values);

/// Writes the arm table and a `<path>.cfg` sidecar with instance parameters.
void save_instance(const Instance& instance, const std::filesystem::path& path);

/// Reads the arm table and, when present, the sidecar parameters.
Instance load_instance(const std::filesystem::path& path);

}  // namespace rmab
