#pragma once

#include <cstdint>

namespace xva {

/// Stateless counter-based generator. Every draw is a pure function of
/// (seed, stream, step, lane), so draws can be produced in any order by any
/// number of workers and still come out bit-identical.
///
/// The mixing function is the SplitMix64 finalizer applied to a chained key.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) noexcept;

    std::uint64_t bits(std::uint64_t stream, std::uint64_t step, std::uint64_t lane) const noexcept;
    /// Uniform on the open interval (0, 1).
    double uniform(std::uint64_t stream, std::uint64_t step, std::uint64_t lane) const noexcept;
    /// Standard normal via the inverse CDF of uniform().
    double normal(std::uint64_t stream, std::uint64_t step, std::uint64_t lane) const noexcept;

    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t key_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Derive an independent seed for a named purpose (e.g. "paths", "init").
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose) noexcept;

double normal_cdf(double x) noexcept;

/// Inverse standard normal CDF, accurate to about 1e-15 relative on (0, 1).
double inverse_normal_cdf(double p) noexcept;

} // namespace xva
