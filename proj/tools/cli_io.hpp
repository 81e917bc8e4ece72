#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace pme::cli {

// Grids: "a:step:b" (inclusive), "a,b,c", or "log:a:b:n" (n log-spaced points).
// A trailing "db" converts every value from decibels to a linear ratio.
std::vector<double> parse_grid(const std::string& text);
// A single energy or SNR, linear or with a "db" suffix.
double parse_level(const std::string& text);

// Recipe and manifest grammar: "key = value" lines, "[section]" headers, '#' comments.
struct KeyValueDoc {
    std::map<std::string, std::string> top;
    std::map<std::string, std::map<std::string, std::string>> sections;
};

KeyValueDoc parse_key_value(std::istream& in);
KeyValueDoc parse_key_value_file(const std::string& path);

struct RunManifest {
    std::string command;
    std::vector<std::pair<std::string, std::string>> params;  // in command-line order
    std::string version;
    std::vector<std::uint64_t> seeds;
    std::string timestamp;

    // FNV-1a over command, version and parameters; the output path and timestamp are excluded.
    std::string digest() const;
    std::string to_text() const;
    nlohmann::json to_json() const;
};

struct Table {
    std::string schema;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::pair<std::string, std::string>> meta;
};

std::string format_number(double v);
void write_csv(std::ostream& os, const Table& t, const RunManifest& m);
void write_json(std::ostream& os, const Table& t, const RunManifest& m);

// Reads back a CSV written by write_csv: comment lines are returned in `meta` as raw text.
Table read_csv(std::istream& in);

}  // namespace pme::cli
