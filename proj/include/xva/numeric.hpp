#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace xva {

/// Pairwise (cascade) summation. The result depends only on the input order,
/// never on how the inputs were produced, and the rounding error grows as O(log n).
double pairwise_sum(std::span<const double> values);

struct SampleStats {
    double mean = 0.0;
    double std_error = 0.0;
    double std_dev = 0.0;
};

/// Mean, sample standard deviation and standard error of the mean.
SampleStats sample_stats(std::span<const double> values);

/// Shortest decimal text that parses back to the same double.
std::string format_shortest(double value);

/// Fixed 17-significant-digit decimal text.
std::string format_17g(double value);

} // namespace xva
