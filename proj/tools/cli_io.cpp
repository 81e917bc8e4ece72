#include "cli_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pme/errors.hpp"

namespace pme::cli {

namespace {

std::string trim(std::string s) {
    auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
    s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
    s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
    return s;
}

double to_double(const std::string& s) {
    std::string t = trim(s);
    double v = 0.0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty())
        throw DomainError("not a number: '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

bool strip_db(std::string& s) {
    std::string t = trim(s);
    if (t.size() >= 2) {
        std::string tail = t.substr(t.size() - 2);
        std::transform(tail.begin(), tail.end(), tail.begin(), [](unsigned char c) { return std::tolower(c); });
        if (tail == "db") {
            s = t.substr(0, t.size() - 2);
            return true;
        }
    }
    s = t;
    return false;
}

double from_db(double v) { return std::pow(10.0, v / 10.0); }

}  // namespace

std::vector<double> parse_grid(const std::string& text) {
    std::string body = text;
    const bool db = strip_db(body);
    std::vector<double> out;
    if (body.rfind("log:", 0) == 0) {
        auto parts = split(body.substr(4), ':');
        if (parts.size() != 3) throw DomainError("log grid must be log:a:b:n");
        double a = to_double(parts[0]), b = to_double(parts[1]);
        double nd = to_double(parts[2]);
        if (!(a > 0.0 && b > a) || nd < 2 || nd != std::floor(nd)) throw DomainError("log grid needs 0 < a < b and integer n >= 2");
        auto n = static_cast<int>(nd);
        for (int k = 0; k < n; ++k) out.push_back(k == n - 1 ? b : a * std::pow(b / a, static_cast<double>(k) / (n - 1)));
    } else if (body.find(':') != std::string::npos) {
        auto parts = split(body, ':');
        if (parts.size() != 3) throw DomainError("grid must be a:step:b");
        double a = to_double(parts[0]), step = to_double(parts[1]), b = to_double(parts[2]);
        if (!(step > 0.0) || b < a) throw DomainError("grid needs step > 0 and b >= a");
        auto n = static_cast<long>(std::floor((b - a) / step * (1.0 + 1e-12) + 1e-9)) + 1;
        if (n > 10'000'000) throw DomainError("grid has too many points");
        for (long k = 0; k < n; ++k) out.push_back(a + step * static_cast<double>(k));
    } else {
        for (const auto& p : split(body, ',')) out.push_back(to_double(p));
    }
    if (out.empty()) throw DomainError("empty grid");
    if (db)
        for (auto& v : out) v = from_db(v);
    return out;
}

double parse_level(const std::string& text) {
    std::string body = text;
    const bool db = strip_db(body);
    double v = to_double(body);
    return db ? from_db(v) : v;
}

KeyValueDoc parse_key_value(std::istream& in) {
    KeyValueDoc doc;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw DomainError("line " + std::to_string(lineno) + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            doc.sections[section];
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) throw DomainError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        if (key.empty()) throw DomainError("line " + std::to_string(lineno) + ": empty key");
        (section.empty() ? doc.top : doc.sections[section])[key] = value;
    }
    return doc;
}

KeyValueDoc parse_key_value_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open " + path);
    return parse_key_value(in);
}

std::string RunManifest::digest() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        h ^= 0xff;
        h *= 1099511628211ULL;
    };
    mix(command);
    mix(version);
    for (const auto& [k, v] : params) {
        if (k == "out") continue;
        mix(k);
        mix(v);
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string RunManifest::to_text() const {
    std::ostringstream os;
    os << "# pme run manifest\n";
    os << "command = " << command << "\n";
    os << "version = " << version << "\n";
    os << "timestamp = " << timestamp << "\n";
    os << "digest = " << digest() << "\n";
    if (!seeds.empty()) {
        os << "seeds = ";
        for (std::size_t k = 0; k < seeds.size(); ++k) os << (k ? "," : "") << seeds[k];
        os << "\n";
    }
    os << "\n[args]\n";
    for (const auto& [k, v] : params) os << k << " = " << v << "\n";
    return os.str();
}

nlohmann::json RunManifest::to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["version"] = version;
    j["timestamp"] = timestamp;
    j["digest"] = digest();
    j["seeds"] = seeds;
    nlohmann::json args = nlohmann::json::object();
    for (const auto& [k, v] : params) args[k] = v;
    j["args"] = args;
    return j;
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv(std::ostream& os, const Table& t, const RunManifest& m) {
    os << "# schema: " << t.schema << "\n";
    os << "# manifest: " << m.command << " " << m.digest() << "\n";
    for (const auto& [k, v] : t.meta) os << "# " << k << ": " << v << "\n";
    for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
    os << "\n";
    for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_number(row[c]);
        os << "\n";
    }
}

void write_json(std::ostream& os, const Table& t, const RunManifest& m) {
    nlohmann::json j;
    j["schema"] = t.schema;
    j["manifest"] = m.to_json();
    j["manifest"].erase("timestamp");
    nlohmann::json meta = nlohmann::json::object();
    for (const auto& [k, v] : t.meta) meta[k] = v;
    j["meta"] = meta;
    j["columns"] = t.columns;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : t.rows) {
        nlohmann::json r = nlohmann::json::array();
        for (double v : row) {
            if (std::isfinite(v))
                r.push_back(v);
            else
                r.push_back(format_number(v));
        }
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    os << j.dump(1) << "\n";
}

Table read_csv(std::istream& in) {
    Table t;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.front() == '#') {
            std::string body = trim(line.substr(1));
            auto colon = body.find(": ");
            std::string key = colon == std::string::npos ? body : body.substr(0, colon);
            std::string value = colon == std::string::npos ? "" : body.substr(colon + 2);
            if (key == "schema")
                t.schema = value;
            else
                t.meta.emplace_back(key, value);
            continue;
        }
        auto cells = split(line, ',');
        if (!header) {
            t.columns = cells;
            header = true;
            continue;
        }
        std::vector<double> row;
        for (const auto& c : cells) {
            std::string s = trim(c);
            if (s == "nan")
                row.push_back(std::nan(""));
            else if (s == "inf" || s == "-inf")
                row.push_back(s == "inf" ? INFINITY : -INFINITY);
            else
                row.push_back(to_double(s));
        }
        if (row.size() != t.columns.size()) throw DomainError("csv row width does not match header");
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace pme::cli
