#include "xva/deep_bsde.hpp"

#include "xva/error.hpp"
#include "xva/mc_linear.hpp"
#include "xva/numeric.hpp"
#include "xva/rng.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <tuple>

namespace xva::dbsde {

using ad::Matrix;
using ad::Tape;
using ad::Var;

namespace {

constexpr std::uint64_t train_purpose = 0x7472616e;   // "tran"
constexpr std::uint64_t pilot_purpose = 0x70696c6f;   // "pilo"
constexpr std::uint64_t jitter_purpose = 0x6a697474;  // "jitt"

double window_mean(const std::vector<double>& v, std::size_t end, std::size_t window) {
    return pairwise_sum(std::span<const double>(v.data() + end - window, window)) / static_cast<double>(window);
}

/// Coefficients of V_{i+1} = V_i + dt (r + lambda) V_i - dt lambda f - dt c + noise when all are constants.
struct ConstantDriver {
    double c = 0.0;
    double r = 0.0;
    double lambda = 0.0;
};

std::optional<ConstantDriver> constant_driver(const Claim& claim, const HazardModel& hazard) {
    const auto& c = claim.cashflow.constant_value();
    const auto& r = claim.discount.constant_value();
    const auto& l = hazard.counterparty.constant_value();
    if (!c || !r || !l) return std::nullopt;
    return ConstantDriver{*c, *r, *l};
}

/// sigma(t_i, X_i) dW_i for every path, L x m.
void noise_rows(const Dynamics& dyn, const TimeGrid& grid, const PathBatch& paths, int i, Matrix& X, Matrix& S,
                std::vector<double>& sig) {
    const auto L = static_cast<Eigen::Index>(paths.paths);
    const auto m = static_cast<Eigen::Index>(paths.dim);
    const auto n = static_cast<Eigen::Index>(paths.noise_dim);
    const GbmSpec* g = dyn.gbm_spec();
    for (Eigen::Index l = 0; l < L; ++l) {
        const auto x = paths.state(static_cast<std::size_t>(l), static_cast<std::size_t>(i));
        const auto dw = paths.increment(static_cast<std::size_t>(l), static_cast<std::size_t>(i));
        for (Eigen::Index k = 0; k < m; ++k) X(l, k) = x[k];
        if (g) {
            for (Eigen::Index k = 0; k < m; ++k) S(l, k) = g->sigma[k] * x[k] * dw[k];
        } else {
            dyn.diffusion(grid.node(i), x, sig);
            for (Eigen::Index k = 0; k < m; ++k) {
                double s = 0.0;
                for (Eigen::Index j = 0; j < n; ++j) s += sig[k * n + j] * dw[j];
                S(l, k) = s;
            }
        }
    }
}

void check_paths(const PathBatch& paths, const Dynamics& dyn, const TimeGrid& grid) {
    require(paths.steps == static_cast<std::size_t>(grid.steps()), "rollout: path batch and time grid disagree on N");
    require(paths.dim == static_cast<std::size_t>(dyn.dim()) && paths.noise_dim == static_cast<std::size_t>(dyn.noise_dim()),
            "rollout: path batch and dynamics disagree on dimensions");
    require(paths.paths >= 1, "rollout: empty path batch");
}

} // namespace

void TrainConfig::validate() const {
    require(N >= 1, "dbsde: N must be at least 1");
    require(L >= 2, "dbsde: L must be at least 2");
    require(iters >= 1, "dbsde: iters must be at least 1");
    require(window >= 1 && rel_tol >= 0.0 && min_iters >= 0, "dbsde: invalid early-stopping settings");
    require(pilot_paths >= 2, "dbsde: pilot needs at least two paths");
    require(jitter >= 0.0 && jitter < 1.0, "dbsde: jitter must lie in [0, 1)");
    require(max_skip_fraction >= 0.0, "dbsde: max_skip_fraction must be nonnegative");
}

Network Network::make(Architecture arch, int d, int m, int N) {
    Network net;
    net.arch = arch;
    net.lstm = nn::LstmStack::for_dimension(d, m);
    net.fc = nn::FcSubnetworks::for_dimension(d, m, N);
    return net;
}

nn::ParameterSet Network::init(std::uint64_t seed) const {
    return arch == Architecture::lstm ? nn::init_params(lstm, seed) : nn::init_params(fc, seed);
}

Var rollout_loss(Tape& tape, const Network& net, const std::vector<Var>& params, const Claim& claim,
                 const Dynamics& dyn, const HazardModel& hazard, const TimeGrid& grid, const PathBatch& paths,
                 const Matrix* recovery, Matrix* trace) {
    check_paths(paths, dyn, grid);
    require(!params.empty(), "rollout: missing parameters");
    const int N = grid.steps();
    const auto L = static_cast<Eigen::Index>(paths.paths);
    const auto m = static_cast<Eigen::Index>(paths.dim);
    const double dt = grid.dt();
    const double T = grid.horizon();
    if (recovery)
        require(recovery->rows() == L && recovery->cols() == N, "rollout: recovery matrix must be L x N");

    const auto pl = claim.closeout.piecewise_linear();
    const auto cd = constant_driver(claim, hazard);
    const bool no_default = cd && cd->lambda == 0.0;
    if (!recovery && !no_default)
        require(pl.has_value(), "rollout: the replacement driver needs a piecewise-linear closeout");

    const std::vector<Var> net_params(params.begin(), params.end() - 1);
    Var V = tape.broadcast(params.back(), static_cast<int>(L), 1);
    nn::LstmCarry carry;
    if (net.arch == Architecture::lstm) carry = nn::zero_carry(tape, net.lstm, static_cast<int>(L));

    if (trace) {
        trace->resize(L, N + 1);
        trace->col(0) = tape.value(V).col(0);
    }

    Matrix X(L, m), S(L, m), C(L, 1), K(L, 1), Lam(L, 1);
    std::vector<double> sig(static_cast<std::size_t>(dyn.dim() * dyn.noise_dim()));
    for (int i = 0; i < N; ++i) {
        const double t = grid.node(i);
        noise_rows(dyn, grid, paths, i, X, S, sig);
        Var x = tape.constant(X);
        Var z = net.arch == Architecture::lstm
                    ? nn::lstm_forward(tape, net.lstm, net_params, tape.constant(Matrix::Constant(L, 1, t / T)), x, carry)
                    : nn::fc_forward(tape, net.fc, net_params, i, x);
        Var noise = tape.row_sum(tape.mul(z, tape.constant(S)));

        auto closeout_term = [&]() -> Var {
            if (recovery) return tape.constant(recovery->col(i));
            return tape.sub(tape.scale(tape.pos(V), pl->pos_slope), tape.scale(tape.neg(V), pl->neg_slope));
        };

        Var next;
        if (cd) {
            next = tape.add(tape.scale(V, 1.0 + dt * (cd->r + cd->lambda)), noise);
            if (cd->lambda != 0.0) next = tape.sub(next, tape.scale(closeout_term(), dt * cd->lambda));
            if (cd->c != 0.0) next = tape.add_scalar(next, -dt * cd->c);
        } else {
            for (Eigen::Index l = 0; l < L; ++l) {
                const StateView xs(X.row(l).data(), static_cast<std::size_t>(m));
                const double lam = hazard.counterparty(t, xs);
                C(l, 0) = claim.cashflow(t, xs);
                Lam(l, 0) = lam;
                K(l, 0) = claim.discount(t, xs) + lam;
            }
            next = tape.add(tape.add(V, tape.mul(tape.constant(dt * K), V)), noise);
            next = tape.sub(next, tape.mul(tape.constant(dt * Lam), closeout_term()));
            next = tape.sub(next, tape.constant(dt * C));
        }
        V = next;
        if (!tape.value(V).allFinite()) throw SolverError("rollout: non-finite value at step " + std::to_string(i + 1));
        if (trace) trace->col(i + 1) = tape.value(V).col(0);
    }

    Matrix phi(L, 1);
    for (Eigen::Index l = 0; l < L; ++l)
        phi(l, 0) = claim.payoff(paths.state(static_cast<std::size_t>(l), static_cast<std::size_t>(N)));
    return tape.mean(tape.square(tape.sub(V, tape.constant(phi))));
}

double rollout_loss_with_gradient(const std::function<void(double t, StateView x, std::span<double> out)>& gradient,
                                  double v, const Claim& claim, const Dynamics& dyn, const HazardModel& hazard,
                                  const TimeGrid& grid, const PathBatch& paths) {
    check_paths(paths, dyn, grid);
    const int N = grid.steps();
    const auto L = static_cast<Eigen::Index>(paths.paths);
    const auto m = static_cast<Eigen::Index>(paths.dim);
    const double dt = grid.dt();
    Matrix X(L, m), S(L, m);
    std::vector<double> sig(static_cast<std::size_t>(dyn.dim() * dyn.noise_dim()));
    std::vector<double> z(static_cast<std::size_t>(m));
    std::vector<double> V(static_cast<std::size_t>(L), v);
    for (int i = 0; i < N; ++i) {
        const double t = grid.node(i);
        noise_rows(dyn, grid, paths, i, X, S, sig);
        for (Eigen::Index l = 0; l < L; ++l) {
            const StateView xs(X.row(l).data(), static_cast<std::size_t>(m));
            gradient(t, xs, z);
            double noise = 0.0;
            for (Eigen::Index k = 0; k < m; ++k) noise += z[k] * S(l, k);
            V[l] = V[l] - bsde_driver(claim, hazard, t, xs, V[l]) * dt + noise;
        }
    }
    std::vector<double> sq(static_cast<std::size_t>(L));
    for (Eigen::Index l = 0; l < L; ++l) {
        const double e = V[l] - claim.payoff(paths.state(static_cast<std::size_t>(l), static_cast<std::size_t>(N)));
        sq[l] = e * e;
    }
    return pairwise_sum(sq) / static_cast<double>(L);
}

double pilot_value(const Claim& claim, const Dynamics& dyn, const TrainConfig& cfg, std::uint64_t seed) {
    const TimeGrid grid(claim.maturity, cfg.N);
    mc::McOptions opts;
    opts.scheme = cfg.scheme;
    return mc::estimate_riskfree_value(claim, dyn, grid, static_cast<std::size_t>(cfg.pilot_paths),
                                       derive_seed(seed, pilot_purpose), opts)
        .mean;
}

TrainState train(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard, const TrainConfig& cfg,
                 const RecoveryProvider& recovery) {
    cfg.validate();
    const TimeGrid grid(claim.maturity, cfg.N);
    TrainState st;
    st.seed = cfg.seed;
    st.net = Network::make(cfg.arch, dyn.dim(), dyn.dim(), cfg.N);
    st.params = st.net.init(cfg.seed);
    const double u = CounterRng(derive_seed(cfg.seed, jitter_purpose)).uniform(0, 0, 0);
    const double v0 = pilot_value(claim, dyn, cfg, cfg.seed) * (1.0 + cfg.jitter * (2.0 * u - 1.0));
    st.params.add("v", Matrix::Constant(1, 1, v0));

    nn::AdamState adam(st.params, cfg.adam);
    const std::uint64_t path_seed = derive_seed(cfg.seed, train_purpose);
    const auto start = std::chrono::steady_clock::now();
    const auto window = static_cast<std::size_t>(cfg.window);
    Tape tape;
    std::vector<Matrix> grads(st.params.size());
    long long rollout_failures = 0;

    for (int it = 0; it < cfg.iters; ++it) {
        double loss = std::numeric_limits<double>::quiet_NaN();
        bool ok = true;
        try {
            const PathBatch batch = simulate(cfg.scheme, dyn, grid, static_cast<std::size_t>(cfg.L), path_seed,
                                             static_cast<std::uint64_t>(it) * static_cast<std::uint64_t>(cfg.L));
            std::optional<Matrix> z;
            if (recovery) z = recovery(batch, grid);
            tape.clear();
            const std::vector<Var> vars = st.params.record(tape);
            const Var out = rollout_loss(tape, st.net, vars, claim, dyn, hazard, grid, batch, z ? &*z : nullptr);
            loss = tape.scalar(out);
            tape.backward(out);
            for (std::size_t k = 0; k < vars.size(); ++k) grads[k] = tape.grad(vars[k]);
        } catch (const SolverError&) {
            ok = false;
            ++rollout_failures;
        }
        if (ok) nn::adam_step(adam, st.params, grads);

        ++st.iterations;
        st.loss_history.push_back(loss);
        st.v_history.push_back(st.v());
        st.seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());

        const auto n = st.v_history.size();
        if (cfg.early_stop && n >= 2 * window && n >= static_cast<std::size_t>(cfg.min_iters)) {
            const double now = window_mean(st.v_history, n, window);
            const double before = window_mean(st.v_history, n - window, window);
            if (std::abs(now - before) <= cfg.rel_tol * std::abs(before)) {
                st.early_stopped = true;
                break;
            }
        }
    }

    st.skipped = rollout_failures + adam.skipped;
    if (static_cast<double>(st.skipped) > cfg.max_skip_fraction * static_cast<double>(st.iterations))
        throw SolverError("dbsde: " + std::to_string(st.skipped) + " of " + std::to_string(st.iterations) +
                          " iterations skipped for non-finite values (seed " + std::to_string(cfg.seed) + ")");
    const std::size_t w = std::min(window, st.v_history.size());
    st.v_star = window_mean(st.v_history, st.v_history.size(), w);
    if (!std::isfinite(st.v_star)) throw SolverError("dbsde: non-finite value estimate");
    return st;
}

namespace {

template <class Trial>
TrialSummary run_trials(const TrainConfig& cfg, int M, Trial&& trial) {
    require(M >= 1, "dbsde: M must be at least 1");
    TrialSummary s;
    for (int j = 1; j <= M; ++j) {
        TrainConfig c = cfg;
        c.seed = cfg.seed + static_cast<std::uint64_t>(j);
        try {
            const auto [value, seconds, iters] = trial(c);
            s.values.push_back(value);
            s.seconds.push_back(seconds);
            s.iterations.push_back(iters);
            s.seeds.push_back(c.seed);
        } catch (const SolverError& e) {
            s.failures.push_back("seed " + std::to_string(c.seed) + ": " + e.what());
        }
    }
    const int ok = static_cast<int>(s.values.size());
    if (ok == 0 || ok < M - 1)
        throw SolverError("dbsde: " + std::to_string(M - ok) + " of " + std::to_string(M) + " trials failed; first: " +
                          s.failures.front());
    const SampleStats st = ok >= 2 ? sample_stats(s.values) : SampleStats{s.values[0], 0.0, 0.0};
    s.mean = st.mean;
    s.std = st.std_dev;
    s.total_seconds = pairwise_sum(s.seconds);
    return s;
}

} // namespace

TrialSummary value_replacement(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard,
                               const TrainConfig& cfg, int M) {
    return run_trials(cfg, M, [&](const TrainConfig& c) {
        const TrainState st = train(claim, dyn, hazard, c);
        return std::tuple{st.v_star, st.total_seconds(), st.iterations};
    });
}

CvaResult cva_solve(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard, const TrainConfig& cfg,
                    int M) {
    CvaResult r;
    r.riskfree = value_replacement(claim, dyn, hazard.without_default(), cfg, M);
    r.replacement = value_replacement(claim, dyn, hazard, cfg, M);
    r.cva = r.riskfree.mean - r.replacement.mean;
    if (r.riskfree.seeds == r.replacement.seeds && r.riskfree.values.size() >= 2) {
        std::vector<double> diff;
        for (std::size_t i = 0; i < r.riskfree.values.size(); ++i)
            diff.push_back(r.riskfree.values[i] - r.replacement.values[i]);
        r.cva_std = sample_stats(diff).std_dev;
    } else {
        r.cva_std = std::sqrt(r.riskfree.std * r.riskfree.std + r.replacement.std * r.replacement.std);
    }
    return r;
}

Matrix frozen_values(const TrainState& state, const Claim& claim, const Dynamics& dyn, const TimeGrid& grid,
                     const PathBatch& paths) {
    Tape tape;
    const std::vector<Var> vars = state.params.record(tape, false);
    Matrix trace;
    rollout_loss(tape, state.net, vars, claim, dyn, HazardModel::constant(0.0), grid, paths, nullptr, &trace);
    return trace;
}

TrialSummary value_riskfree_closeout(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard,
                                     const TrainConfig& cfg, int M) {
    return run_trials(cfg, M, [&](const TrainConfig& c) {
        const auto start = std::chrono::steady_clock::now();
        const TrainState u = train(claim, dyn, hazard.without_default(), c);
        const RecoveryProvider provider = [&](const PathBatch& paths, const TimeGrid& grid) {
            const Matrix uhat = frozen_values(u, claim, dyn, grid, paths);
            Matrix z(uhat.rows(), grid.steps());
            for (Eigen::Index l = 0; l < z.rows(); ++l)
                for (int i = 0; i < grid.steps(); ++i)
                    z(l, i) = claim.closeout(grid.node(i), paths.state(static_cast<std::size_t>(l), static_cast<std::size_t>(i)),
                                             uhat(l, i));
            return z;
        };
        const TrainState v0 = train(claim, dyn, hazard, c, provider);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return std::tuple{v0.v_star, seconds, u.iterations + v0.iterations};
    });
}

TrialSummary train_multifc_baseline(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard,
                                    const TrainConfig& cfg, int M) {
    TrainConfig c = cfg;
    c.arch = Architecture::multi_fc;
    return value_replacement(claim, dyn, hazard, c, M);
}

void write_training_log(std::ostream& out, const TrainState& state, bool timings) {
    out << "iter,loss,v,seconds\n";
    for (std::size_t i = 0; i < state.loss_history.size(); ++i)
        out << i + 1 << ',' << format_shortest(state.loss_history[i]) << ',' << format_shortest(state.v_history[i])
            << ',' << format_shortest(timings ? state.seconds[i] : 0.0) << '\n';
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows, bool timings) {
    out << "dim,method,closeout,value,std,seconds\n";
    for (const auto& r : rows)
        out << r.dim << ',' << r.method << ',' << r.closeout << ',' << format_shortest(r.value) << ','
            << format_shortest(r.std) << ',' << format_shortest(timings ? r.seconds : 0.0) << '\n';
}

} // namespace xva::dbsde
