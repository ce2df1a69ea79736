#pragma once

#include "xva/autodiff.hpp"
#include "xva/model.hpp"
#include "xva/nn.hpp"
#include "xva/simulate.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace xva::dbsde {

enum class Architecture { lstm, multi_fc };

struct TrainConfig {
    int N = 100;
    int L = 64;
    int iters = 4000;
    /// Early stop once the mean of v over the last `window` iterations moves by
    /// less than rel_tol against the window before it, but not before min_iters.
    bool early_stop = true;
    int window = 200;
    double rel_tol = 5e-4;
    int min_iters = 1000;
    nn::AdamConfig adam;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::euler;
    Architecture arch = Architecture::lstm;
    int pilot_paths = 1024;
    double jitter = 0.2;
    double max_skip_fraction = 0.01;

    void validate() const;
};

/// Gradient network bound to a dimension and time grid.
struct Network {
    Architecture arch = Architecture::lstm;
    nn::LstmStack lstm;
    nn::FcSubnetworks fc;

    static Network make(Architecture arch, int d, int m, int N);
    nn::ParameterSet init(std::uint64_t seed) const;
};

/// Recovery values Z (L x N) fed to a linear driver c + lambda Z - (r + lambda) y.
/// When absent the driver is the replacement driver c + lambda f(y) - (r + lambda) y.
using RecoveryProvider = std::function<ad::Matrix(const PathBatch& paths, const TimeGrid& grid)>;

/// Tape-recorded rollout V_0 = v, V_{i+1} = V_i - F dt + N(t_i, X_i)^T sigma dW_i and the
/// loss mean (V_N - phi(X_N))^2. `params` holds the network tensors followed by v (1 x 1).
/// If `trace` is given it receives V_i for i = 0..N as columns of an L x (N+1) matrix.
ad::Var rollout_loss(ad::Tape& tape, const Network& net, const std::vector<ad::Var>& params, const Claim& claim,
                     const Dynamics& dyn, const HazardModel& hazard, const TimeGrid& grid, const PathBatch& paths,
                     const ad::Matrix* recovery = nullptr, ad::Matrix* trace = nullptr);

/// Same rollout with the gradient network replaced by a fixed function grad(t, x) -> m-vector.
double rollout_loss_with_gradient(const std::function<void(double t, StateView x, std::span<double> out)>& gradient,
                                  double v, const Claim& claim, const Dynamics& dyn, const HazardModel& hazard,
                                  const TimeGrid& grid, const PathBatch& paths);

struct TrainState {
    Network net;
    nn::ParameterSet params;  // network tensors, then "v"
    long long iterations = 0;
    long long skipped = 0;
    std::vector<double> loss_history;
    std::vector<double> v_history;
    std::vector<double> seconds;  // cumulative wall clock after each iteration
    std::uint64_t seed = 0;
    bool early_stopped = false;
    double v_star = 0.0;  // mean of v over the trailing window

    double v() const { return params.at("v")(0, 0); }
    double total_seconds() const { return seconds.empty() ? 0.0 : seconds.back(); }
};

/// Simulate, roll out, backpropagate, Adam, for cfg.iters iterations or until early stop.
TrainState train(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard, const TrainConfig& cfg,
                 const RecoveryProvider& recovery = nullptr);

/// Pilot estimate of v: mean discounted terminal payoff over cfg.pilot_paths paths.
double pilot_value(const Claim& claim, const Dynamics& dyn, const TrainConfig& cfg, std::uint64_t seed);

struct TrialSummary {
    std::vector<double> values;
    std::vector<double> seconds;
    std::vector<long long> iterations;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> failures;
    double mean = 0.0;
    double std = 0.0;
    double total_seconds = 0.0;
};

/// M trials with seeds cfg.seed + 1 .. cfg.seed + M, averaged.
TrialSummary value_replacement(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard,
                               const TrainConfig& cfg, int M);

struct CvaResult {
    TrialSummary riskfree;
    TrialSummary replacement;
    double cva = 0.0;
    double cva_std = 0.0;  // trial std of the paired per-seed differences
};

/// The same trials with lambda = 0 and with the given hazard; cva is the difference.
CvaResult cva_solve(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard, const TrainConfig& cfg,
                    int M);

/// Frozen rollout values U_hat (L x (N+1)) of a trained risk-free network on given paths.
ad::Matrix frozen_values(const TrainState& state, const Claim& claim, const Dynamics& dyn, const TimeGrid& grid,
                         const PathBatch& paths);

/// Risk-free-closeout pipeline: train U with lambda = 0, then train V0 against the
/// linear driver with recovery f(U_hat) from the frozen U network. Seconds cover both stages.
TrialSummary value_riskfree_closeout(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard,
                                     const TrainConfig& cfg, int M);

/// The replacement-closeout value with one FC network per time node.
TrialSummary train_multifc_baseline(const Claim& claim, const Dynamics& dyn, const HazardModel& hazard,
                                    const TrainConfig& cfg, int M);

/// `iter,loss,v,seconds`. With timings off the seconds column is written as 0.
void write_training_log(std::ostream& out, const TrainState& state, bool timings = true);

struct SummaryRow {
    int dim = 0;
    std::string method;
    std::string closeout;
    double value = 0.0;
    double std = 0.0;
    double seconds = 0.0;
};

/// `dim,method,closeout,value,std,seconds`.
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows, bool timings = true);

} // namespace xva::dbsde
