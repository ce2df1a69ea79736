#pragma once

#include "xva/model.hpp"
#include "xva/simulate.hpp"

#include <cstddef>
#include <cstdint>

namespace xva::mc {

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
};

struct McOptions {
    Scheme scheme = Scheme::euler;
    /// Run the path loop on the OpenMP team. Results are bit-identical either way.
    bool parallel = true;
};

/// U = E[ int_0^T c e^{-int r} ds + e^{-int_0^T r} phi(X_T) ], left-endpoint quadrature.
McEstimate estimate_riskfree_value(const Claim& claim, const Dynamics& dyn, const TimeGrid& grid, std::size_t L,
                                   std::uint64_t seed, McOptions opts = {});

/// Reduced-form pre-default value with exogenous recovery Z:
/// E[ int (c + lambda Z) e^{-int (r+lambda)} ds + e^{-int (r+lambda)} phi(X_T) ].
McEstimate estimate_predefault_value(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard,
                                     const Field& recovery, const TimeGrid& grid, std::size_t L, std::uint64_t seed,
                                     McOptions opts = {});

/// Same quantity from the cash-flow definition: sample tau ~ Exp(lambda) per path,
/// pay Z at the last grid node before tau if tau <= T, else phi(X_T).
/// Requires a constant counterparty intensity.
McEstimate estimate_by_default_sampling(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard,
                                        const Field& recovery, const TimeGrid& grid, std::size_t L,
                                        std::uint64_t seed, McOptions opts = {});

/// Stream index used for default times; disjoint from the increment steps.
inline constexpr std::uint64_t default_time_step = 1ULL << 40;

} // namespace xva::mc
