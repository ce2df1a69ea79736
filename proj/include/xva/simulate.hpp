#pragma once

#include "xva/model.hpp"
#include "xva/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace xva {

/// Uniform time grid 0 = t_0 < ... < t_N = T.
class TimeGrid {
public:
    TimeGrid(double horizon, int steps);

    int steps() const noexcept { return steps_; }
    double horizon() const noexcept { return horizon_; }
    double dt() const noexcept { return dt_; }
    double node(int i) const noexcept { return i == steps_ ? horizon_ : i * dt_; }

private:
    double horizon_;
    int steps_;
    double dt_;
};

/// L simulated paths: states L x (N+1) x m and Brownian increments L x N x n, path-major.
struct PathBatch {
    std::size_t paths = 0;
    std::size_t steps = 0;
    std::size_t dim = 0;
    std::size_t noise_dim = 0;
    std::vector<double> states;
    std::vector<double> increments;

    std::span<const double> state(std::size_t path, std::size_t step) const {
        return {states.data() + (path * (steps + 1) + step) * dim, dim};
    }
    std::span<double> state(std::size_t path, std::size_t step) {
        return {states.data() + (path * (steps + 1) + step) * dim, dim};
    }
    std::span<const double> increment(std::size_t path, std::size_t step) const {
        return {increments.data() + (path * steps + step) * noise_dim, noise_dim};
    }
    std::span<double> increment(std::size_t path, std::size_t step) {
        return {increments.data() + (path * steps + step) * noise_dim, noise_dim};
    }
};

enum class Scheme { euler, gbm_exact };

/// Brownian increments of one path. Path `path` always receives the same draws
/// for a given seed, whatever other paths are generated alongside it.
void brownian_increments(const CounterRng& rng, const TimeGrid& grid, std::uint64_t path, int noise_dim,
                         std::span<double> out);

/// Euler-Maruyama states of one path from precomputed increments.
/// Throws SolverError naming the step if a state becomes non-finite.
void euler_path(const Dynamics& dyn, const TimeGrid& grid, std::span<const double> increments,
                std::span<double> states);

/// Exact log-normal stepping for the built-in GBM model.
void gbm_exact_path(const Dynamics& dyn, const TimeGrid& grid, std::span<const double> increments,
                    std::span<double> states);

/// Simulate paths [first_path, first_path + L). OpenMP-parallel over paths;
/// the result is bit-identical to the serial variant for any thread count.
PathBatch simulate_euler(const Dynamics& dyn, const TimeGrid& grid, std::size_t L, std::uint64_t seed,
                         std::uint64_t first_path = 0);
PathBatch simulate_gbm_exact(const Dynamics& dyn, const TimeGrid& grid, std::size_t L, std::uint64_t seed,
                             std::uint64_t first_path = 0);
PathBatch simulate(Scheme scheme, const Dynamics& dyn, const TimeGrid& grid, std::size_t L, std::uint64_t seed,
                   std::uint64_t first_path = 0);

/// Single-threaded reference implementations.
namespace serial {
PathBatch simulate_euler(const Dynamics& dyn, const TimeGrid& grid, std::size_t L, std::uint64_t seed,
                         std::uint64_t first_path = 0);
PathBatch simulate_gbm_exact(const Dynamics& dyn, const TimeGrid& grid, std::size_t L, std::uint64_t seed,
                             std::uint64_t first_path = 0);
} // namespace serial

/// CSV with header `path,step,t,x0,...,x{m-1}`, one row per (path, step).
void write_paths_csv(std::ostream& out, const PathBatch& batch, const TimeGrid& grid);

} // namespace xva
