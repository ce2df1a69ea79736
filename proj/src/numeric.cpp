#include "xva/numeric.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace xva {

double pairwise_sum(std::span<const double> values) {
    constexpr std::size_t block = 32;
    if (values.size() <= block) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

SampleStats sample_stats(std::span<const double> values) {
    SampleStats out;
    const std::size_t n = values.size();
    if (n == 0) return out;
    out.mean = pairwise_sum(values) / static_cast<double>(n);
    if (n < 2) return out;
    double acc = 0.0;
    // Two-pass variance, blocked like pairwise_sum so it stays order-stable.
    constexpr std::size_t chunk = 4096;
    double partial[64] = {};
    std::size_t np = 0;
    for (std::size_t start = 0; start < n; start += chunk) {
        const std::size_t stop = std::min(n, start + chunk);
        double s = 0.0;
        for (std::size_t i = start; i < stop; ++i) {
            const double d = values[i] - out.mean;
            s += d * d;
        }
        if (np == 64) {
            acc += pairwise_sum(std::span<const double>(partial, np));
            np = 0;
        }
        partial[np++] = s;
    }
    acc += pairwise_sum(std::span<const double>(partial, np));
    const double var = acc / static_cast<double>(n - 1);
    out.std_dev = std::sqrt(var);
    out.std_error = std::sqrt(var / static_cast<double>(n));
    return out;
}

std::string format_shortest(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::string format_17g(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

} // namespace xva
