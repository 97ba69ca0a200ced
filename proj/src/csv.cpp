#include "spdelab/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace spdelab {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void Table::add_row(std::vector<std::string> row) {
    if (row.size() != columns.size())
        throw std::invalid_argument("csv: row width does not match header");
    rows.push_back(std::move(row));
}

std::string Table::to_string() const {
    std::ostringstream os;
    for (const auto& c : comments) os << "# " << c << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i)
        os << columns[i] << (i + 1 < columns.size() ? "," : "");
    os << '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i)
            os << r[i] << (i + 1 < r.size() ? "," : "");
        os << '\n';
    }
    return os.str();
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << contents;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

namespace {
std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}
}  // namespace

Table read_csv(const std::string& path) {
    std::istringstream in(read_file(path));
    Table t;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            t.comments.push_back(line.size() > 2 ? line.substr(2) : "");
            continue;
        }
        if (!have_header) {
            t.columns = split_commas(line);
            have_header = true;
            continue;
        }
        auto row = split_commas(line);
        if (row.size() != t.columns.size())
            throw std::runtime_error("csv: ragged row in " + path);
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::size_t Table::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    throw std::runtime_error("csv: missing column '" + name + "'");
}

/// CSV body (header + rows, no comment lines); the determinism contract
/// compares these bytes.
std::string Table::body() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < columns.size(); ++i)
        os << columns[i] << (i + 1 < columns.size() ? "," : "");
    os << '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i)
            os << r[i] << (i + 1 < r.size() ? "," : "");
        os << '\n';
    }
    return os.str();
}

Pooled pool_estimates(const Pooled& a, double value, double se, double weight) {
    Pooled out;
    if (a.weight <= 0.0) {
        out.value = value;
        out.se = se;
        out.weight = weight > 0.0 ? weight : 1.0;
        return out;
    }
    if (a.se > 0.0 && se > 0.0) {
        const double wa = 1.0 / (a.se * a.se), wb = 1.0 / (se * se);
        out.value = (wa * a.value + wb * value) / (wa + wb);
        out.se = 1.0 / std::sqrt(wa + wb);
        out.weight = a.weight + (weight > 0.0 ? weight : 1.0);
        return out;
    }
    const double wb = weight > 0.0 ? weight : 1.0;
    out.value = (a.weight * a.value + wb * value) / (a.weight + wb);
    out.se = 0.0;
    out.weight = a.weight + wb;
    return out;
}

std::uint64_t fnv1a_digest(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace spdelab
