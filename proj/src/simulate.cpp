#include "xva/simulate.hpp"

#include "xva/error.hpp"
#include "xva/numeric.hpp"
#include "xva/rng.hpp"

#include <cmath>
#include <ostream>
#include <string>

namespace xva {

TimeGrid::TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps), dt_(horizon / steps) {
    require(steps >= 1, "time grid: need at least one step");
    require(horizon > 0.0 && std::isfinite(horizon), "time grid: horizon must be positive");
}

void brownian_increments(const CounterRng& rng, const TimeGrid& grid, std::uint64_t path, int noise_dim,
                         std::span<double> out) {
    const double sqrt_dt = std::sqrt(grid.dt());
    const auto n = static_cast<std::size_t>(noise_dim);
    for (int i = 0; i < grid.steps(); ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = sqrt_dt * rng.normal(path, static_cast<std::uint64_t>(i), j);
}

namespace {

[[noreturn]] void non_finite(int step) {
    throw SolverError("simulation: non-finite state at step " + std::to_string(step));
}

} // namespace

void euler_path(const Dynamics& dyn, const TimeGrid& grid, std::span<const double> increments,
                std::span<double> states) {
    const auto m = static_cast<std::size_t>(dyn.dim());
    const auto n = static_cast<std::size_t>(dyn.noise_dim());
    const double dt = grid.dt();
    std::copy(dyn.x0().begin(), dyn.x0().end(), states.begin());

    if (const GbmSpec* g = dyn.gbm_spec()) {
        for (int i = 0; i < grid.steps(); ++i) {
            const double* x = states.data() + i * m;
            double* y = states.data() + (i + 1) * m;
            const double* dw = increments.data() + i * n;
            for (std::size_t k = 0; k < m; ++k) {
                y[k] = x[k] + (g->mu[k] * x[k]) * dt + (g->sigma[k] * x[k]) * dw[k];
                if (!std::isfinite(y[k])) non_finite(i + 1);
            }
        }
        return;
    }

    std::vector<double> mu(m), sig(m * n);
    for (int i = 0; i < grid.steps(); ++i) {
        const double t = grid.node(i);
        std::span<const double> x(states.data() + i * m, m);
        dyn.drift(t, x, mu);
        dyn.diffusion(t, x, sig);
        double* y = states.data() + (i + 1) * m;
        const double* dw = increments.data() + i * n;
        for (std::size_t k = 0; k < m; ++k) {
            double v = x[k] + mu[k] * dt;
            for (std::size_t j = 0; j < n; ++j) v += sig[k * n + j] * dw[j];
            if (!std::isfinite(v)) non_finite(i + 1);
            y[k] = v;
        }
    }
}

void gbm_exact_path(const Dynamics& dyn, const TimeGrid& grid, std::span<const double> increments,
                    std::span<double> states) {
    const GbmSpec* g = dyn.gbm_spec();
    require(g != nullptr, "exact simulation requires the built-in GBM dynamics");
    const auto m = static_cast<std::size_t>(dyn.dim());
    const double dt = grid.dt();
    std::copy(dyn.x0().begin(), dyn.x0().end(), states.begin());
    for (int i = 0; i < grid.steps(); ++i) {
        const double* x = states.data() + i * m;
        double* y = states.data() + (i + 1) * m;
        const double* dw = increments.data() + i * m;
        for (std::size_t k = 0; k < m; ++k) {
            const double s = g->sigma[k];
            y[k] = x[k] * std::exp((g->mu[k] - 0.5 * s * s) * dt + s * dw[k]);
            if (!std::isfinite(y[k])) non_finite(i + 1);
        }
    }
}

namespace {

PathBatch allocate(const Dynamics& dyn, const TimeGrid& grid, std::size_t L) {
    require(L >= 1, "simulation: need at least one path");
    PathBatch b;
    b.paths = L;
    b.steps = static_cast<std::size_t>(grid.steps());
    b.dim = static_cast<std::size_t>(dyn.dim());
    b.noise_dim = static_cast<std::size_t>(dyn.noise_dim());
    b.states.resize(L * (b.steps + 1) * b.dim);
    b.increments.resize(L * b.steps * b.noise_dim);
    return b;
}

template <class PathFn>
void fill_path(PathBatch& b, const Dynamics& dyn, const TimeGrid& grid, const CounterRng& rng, std::uint64_t first,
               std::size_t l, PathFn&& path_fn) {
    std::span<double> inc(b.increments.data() + l * b.steps * b.noise_dim, b.steps * b.noise_dim);
    std::span<double> st(b.states.data() + l * (b.steps + 1) * b.dim, (b.steps + 1) * b.dim);
    brownian_increments(rng, grid, first + l, dyn.noise_dim(), inc);
    try {
        path_fn(dyn, grid, inc, st);
    } catch (const SolverError& e) {
        throw SolverError(std::string(e.what()) + ", path " + std::to_string(first + l));
    }
}

template <class PathFn>
PathBatch run_parallel(const Dynamics& dyn, const TimeGrid& grid, std::size_t L, std::uint64_t seed,
                       std::uint64_t first, PathFn path_fn) {
    PathBatch b = allocate(dyn, grid, L);
    const CounterRng rng(seed);
    // Exceptions cannot leave an OpenMP region; keep the lowest failing path.
    std::string error;
    long long failed = -1;
#pragma omp parallel for schedule(static)
    for (long long l = 0; l < static_cast<long long>(L); ++l) {
        try {
            fill_path(b, dyn, grid, rng, first, static_cast<std::size_t>(l), path_fn);
        } catch (const std::exception& e) {
#pragma omp critical(xva_simulate_error)
            if (failed < 0 || l < failed) {
                failed = l;
                error = e.what();
            }
        }
    }
    if (failed >= 0) throw SolverError(error);
    return b;
}

template <class PathFn>
PathBatch run_serial(const Dynamics& dyn, const TimeGrid& grid, std::size_t L, std::uint64_t seed,
                     std::uint64_t first, PathFn path_fn) {
    PathBatch b = allocate(dyn, grid, L);
    const CounterRng rng(seed);
    for (std::size_t l = 0; l < L; ++l) fill_path(b, dyn, grid, rng, first, l, path_fn);
    return b;
}

void require_gbm(const Dynamics& dyn) {
    require(dyn.gbm_spec() != nullptr, "exact simulation requires the built-in GBM dynamics");
}

} // namespace

PathBatch simulate_euler(const Dynamics& dyn, const TimeGrid& grid, std::size_t L, std::uint64_t seed,
                         std::uint64_t first_path) {
    return run_parallel(dyn, grid, L, seed, first_path, euler_path);
}

PathBatch simulate_gbm_exact(const Dynamics& dyn, const TimeGrid& grid, std::size_t L, std::uint64_t seed,
                             std::uint64_t first_path) {
    require_gbm(dyn);
    return run_parallel(dyn, grid, L, seed, first_path, gbm_exact_path);
}

PathBatch simulate(Scheme scheme, const Dynamics& dyn, const TimeGrid& grid, std::size_t L, std::uint64_t seed,
                   std::uint64_t first_path) {
    return scheme == Scheme::euler ? simulate_euler(dyn, grid, L, seed, first_path)
                                   : simulate_gbm_exact(dyn, grid, L, seed, first_path);
}

namespace serial {

PathBatch simulate_euler(const Dynamics& dyn, const TimeGrid& grid, std::size_t L, std::uint64_t seed,
                         std::uint64_t first_path) {
    return run_serial(dyn, grid, L, seed, first_path, euler_path);
}

PathBatch simulate_gbm_exact(const Dynamics& dyn, const TimeGrid& grid, std::size_t L, std::uint64_t seed,
                             std::uint64_t first_path) {
    require_gbm(dyn);
    return run_serial(dyn, grid, L, seed, first_path, gbm_exact_path);
}

} // namespace serial

void write_paths_csv(std::ostream& out, const PathBatch& batch, const TimeGrid& grid) {
    out << "path,step,t";
    for (std::size_t k = 0; k < batch.dim; ++k) out << ",x" << k;
    out << '\n';
    for (std::size_t l = 0; l < batch.paths; ++l)
        for (std::size_t i = 0; i <= batch.steps; ++i) {
            out << l << ',' << i << ',' << format_shortest(grid.node(static_cast<int>(i)));
            for (double v : batch.state(l, i)) out << ',' << format_shortest(v);
            out << '\n';
        }
}

} // namespace xva
