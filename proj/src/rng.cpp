#include "xva/rng.hpp"

#include <cmath>
#include <limits>

namespace xva {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose) noexcept {
    return splitmix64(splitmix64(seed) ^ splitmix64(purpose + 0x632be59bd9b4e019ULL));
}

CounterRng::CounterRng(std::uint64_t seed) noexcept : seed_(seed), key_(splitmix64(seed ^ 0xd1b54a32d192ed03ULL)) {}

std::uint64_t CounterRng::bits(std::uint64_t stream, std::uint64_t step, std::uint64_t lane) const noexcept {
    std::uint64_t h = splitmix64(key_ ^ stream);
    h = splitmix64(h ^ (step * 0xff51afd7ed558ccdULL));
    return splitmix64(h ^ (lane * 0xc4ceb9fe1a85ec53ULL + 0x2545f4914f6cdd1dULL));
}

double CounterRng::uniform(std::uint64_t stream, std::uint64_t step, std::uint64_t lane) const noexcept {
    // 53 random bits centred in their cell: never exactly 0 or 1.
    const std::uint64_t b = bits(stream, step, lane) >> 11;
    return (static_cast<double>(b) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t stream, std::uint64_t step, std::uint64_t lane) const noexcept {
    return inverse_normal_cdf(uniform(stream, step, lane));
}

double normal_cdf(double x) noexcept {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double inverse_normal_cdf(double p) noexcept {
    if (!(p > 0.0)) return -std::numeric_limits<double>::infinity();
    if (!(p < 1.0)) return std::numeric_limits<double>::infinity();
    // 1 - p is exact for p >= 0.5, and the lower tail keeps full relative accuracy.
    if (p > 0.5) return -inverse_normal_cdf(1.0 - p);

    // Acklam's rational approximation (relative error 1.15e-9) ...
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01, -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }

    // ... refined by one Halley step against the exact CDF.
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

} // namespace xva
