#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace xva::gradcheck {

struct CaseResult {
    std::string name;
    double relative_error = 0.0;
    double tolerance = 0.0;
    bool passed() const { return relative_error < tolerance; }
};

/// Central-difference checks of every tape primitive, the LSTM cell and a
/// miniature rollout (d = 1, N = 4, L = 2). Inputs are drawn from `seed`.
std::vector<CaseResult> run_all(std::uint64_t seed, double h = 1e-6);

} // namespace xva::gradcheck
