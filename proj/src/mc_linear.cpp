#include "xva/mc_linear.hpp"

#include "xva/error.hpp"
#include "xva/numeric.hpp"
#include "xva/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace xva::mc {

namespace {

struct Scratch {
    std::vector<double> increments;
    std::vector<double> states;
};

/// Simulates path `l` into the scratch buffers.
class PathSource {
public:
    PathSource(const Dynamics& dyn, const TimeGrid& grid, std::uint64_t seed, Scheme scheme)
        : dyn_(dyn), grid_(grid), rng_(seed), scheme_(scheme) {
        if (scheme == Scheme::gbm_exact)
            require(dyn.gbm_spec() != nullptr, "exact simulation requires the built-in GBM dynamics");
    }

    Scratch scratch() const {
        const auto n = static_cast<std::size_t>(grid_.steps());
        return {std::vector<double>(n * dyn_.noise_dim()), std::vector<double>((n + 1) * dyn_.dim())};
    }

    void fill(std::uint64_t l, Scratch& s) const {
        brownian_increments(rng_, grid_, l, dyn_.noise_dim(), s.increments);
        if (scheme_ == Scheme::euler) euler_path(dyn_, grid_, s.increments, s.states);
        else gbm_exact_path(dyn_, grid_, s.increments, s.states);
    }

    const CounterRng& rng() const noexcept { return rng_; }

private:
    const Dynamics& dyn_;
    const TimeGrid& grid_;
    CounterRng rng_;
    Scheme scheme_;
};

/// Evaluates `value(path, scratch)` for every path and reduces with pairwise summation.
template <class PathValue>
McEstimate run(const PathSource& source, std::size_t L, std::uint64_t seed, bool parallel, PathValue&& value) {
    require(L >= 2, "Monte Carlo: need at least two paths for a standard error");
    std::vector<double> samples(L);
    std::string error;
    long long failed = -1;
    auto one = [&](long long l, Scratch& s) {
        try {
            source.fill(static_cast<std::uint64_t>(l), s);
            samples[static_cast<std::size_t>(l)] = value(static_cast<std::uint64_t>(l), s);
        } catch (const std::exception& e) {
#pragma omp critical(xva_mc_error)
            if (failed < 0 || l < failed) {
                failed = l;
                error = std::string(e.what()) + ", path " + std::to_string(l);
            }
        }
    };
    if (parallel) {
#pragma omp parallel
        {
            Scratch s = source.scratch();
#pragma omp for schedule(static)
            for (long long l = 0; l < static_cast<long long>(L); ++l) one(l, s);
        }
    } else {
        Scratch s = source.scratch();
        for (long long l = 0; l < static_cast<long long>(L); ++l) one(l, s);
    }
    if (failed >= 0) throw SolverError(error);
    const SampleStats st = sample_stats(samples);
    return {st.mean, st.std_error, L, seed};
}

/// int_0^h e^{-k s} ds for a rate frozen over the step.
inline double step_weight(double k, double h) {
    return k == 0.0 ? h : -std::expm1(-k * h) / k;
}

/// Discounted source integral plus discounted terminal payoff. Coefficients are
/// frozen at the left endpoint of each step; the exponential inside a step is
/// integrated exactly, so large intensities do not blow up the quadrature.
/// `rates(t, x, &source, &discount)` supplies the integrand pieces at node i.
template <class Rates>
double linear_path_value(const Claim& claim, const TimeGrid& grid, std::size_t m, const std::vector<double>& states,
                         Rates&& rates) {
    const double dt = grid.dt();
    double acc = 0.0;
    double log_discount = 0.0;
    for (int i = 0; i < grid.steps(); ++i) {
        StateView x(states.data() + i * m, m);
        double source = 0.0, k = 0.0;
        rates(grid.node(i), x, source, k);
        acc += source * std::exp(-log_discount) * step_weight(k, dt);
        log_discount += k * dt;
    }
    StateView xT(states.data() + grid.steps() * m, m);
    return acc + std::exp(-log_discount) * claim.payoff(xT);
}

} // namespace

McEstimate estimate_riskfree_value(const Claim& claim, const Dynamics& dyn, const TimeGrid& grid, std::size_t L,
                                   std::uint64_t seed, McOptions opts) {
    const PathSource source(dyn, grid, seed, opts.scheme);
    const auto m = static_cast<std::size_t>(dyn.dim());
    return run(source, L, seed, opts.parallel, [&](std::uint64_t, const Scratch& s) {
        return linear_path_value(claim, grid, m, s.states, [&](double t, StateView x, double& src, double& k) {
            src = claim.cashflow(t, x);
            k = claim.discount(t, x);
        });
    });
}

McEstimate estimate_predefault_value(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard,
                                     const Field& recovery, const TimeGrid& grid, std::size_t L, std::uint64_t seed,
                                     McOptions opts) {
    const PathSource source(dyn, grid, seed, opts.scheme);
    const auto m = static_cast<std::size_t>(dyn.dim());
    return run(source, L, seed, opts.parallel, [&](std::uint64_t, const Scratch& s) {
        return linear_path_value(claim, grid, m, s.states, [&](double t, StateView x, double& src, double& k) {
            const double lambda = hazard.counterparty(t, x);
            src = claim.cashflow(t, x) + lambda * recovery(t, x);
            k = claim.discount(t, x) + lambda;
        });
    });
}

McEstimate estimate_by_default_sampling(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard,
                                        const Field& recovery, const TimeGrid& grid, std::size_t L,
                                        std::uint64_t seed, McOptions opts) {
    const auto& lambda = hazard.counterparty.constant_value();
    require(lambda.has_value(), "default sampling requires a constant counterparty intensity");
    const PathSource source(dyn, grid, seed, opts.scheme);
    const auto m = static_cast<std::size_t>(dyn.dim());
    const double dt = grid.dt();
    const int N = grid.steps();

    return run(source, L, seed, opts.parallel, [&](std::uint64_t l, const Scratch& s) {
        const double u = source.rng().uniform(l, default_time_step, 0);
        const double tau = *lambda > 0.0 ? -std::log(u) / *lambda : std::numeric_limits<double>::infinity();
        const bool defaulted = tau <= grid.horizon();
        // Last node at or before tau; quadrature of r and c runs up to tau itself.
        const int k = defaulted ? std::min(static_cast<int>(tau / dt), N - 1) : N;
        double acc = 0.0;
        double log_discount = 0.0;
        for (int i = 0; i < k; ++i) {
            StateView x(s.states.data() + i * m, m);
            const double t = grid.node(i);
            const double r = claim.discount(t, x);
            acc += claim.cashflow(t, x) * std::exp(-log_discount) * step_weight(r, dt);
            log_discount += r * dt;
        }
        StateView xk(s.states.data() + k * m, m);
        if (!defaulted) return acc + std::exp(-log_discount) * claim.payoff(xk);
        const double tk = grid.node(k);
        const double stub = tau - tk;
        const double rk = claim.discount(tk, xk);
        acc += claim.cashflow(tk, xk) * std::exp(-log_discount) * step_weight(rk, stub);
        log_discount += rk * stub;
        return acc + std::exp(-log_discount) * recovery(tk, xk);
    });
}

} // namespace xva::mc
