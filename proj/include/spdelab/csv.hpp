#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spdelab/parallel.hpp"

namespace spdelab {

std::string format_double(double v);  // %.17g, round-trip exact

struct Table {
    std::vector<std::string> comments;  // written as '# ...' lines
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row);
    std::size_t column_index(const std::string& name) const;
    std::string to_string() const;
    std::string body() const;  // header + rows without comments
};

void write_file(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);
Table read_csv(const std::string& path);

std::uint64_t fnv1a_digest(const std::string& text);

/// Inverse-variance pooling of two independent estimates; the pooled SE is
/// never larger than either input SE. Zero-SE inputs pool by plain weights.
struct Pooled {
    double value = 0.0;
    double se = 0.0;
    double weight = 0.0;
};
Pooled pool_estimates(const Pooled& a, double value, double se, double weight);

}  // namespace spdelab
