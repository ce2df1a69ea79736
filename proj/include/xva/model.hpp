#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace xva {

using StateView = std::span<const double>;

/// A scalar coefficient (t, x) -> value such as r, c or a hazard rate.
/// Fields built with constant() remember their value so solvers can take
/// time- and state-independent fast paths.
class Field {
public:
    using Fn = std::function<double(double t, StateView x)>;

    Field() : Field(constant(0.0)) {}
    explicit Field(Fn fn) : fn_(std::move(fn)) {}

    static Field constant(double value);

    double operator()(double t, StateView x) const { return constant_ ? *constant_ : fn_(t, x); }
    const std::optional<double>& constant_value() const noexcept { return constant_; }

private:
    Fn fn_;
    std::optional<double> constant_;
};

/// Diagonal geometric Brownian motion: dX_i = mu_i X_i dt + sigma_i X_i dW_i.
struct GbmSpec {
    std::vector<double> mu;
    std::vector<double> sigma;
};

/// Markov factor dynamics dX = mu(t, X) dt + sigma(t, X) dW.
class Dynamics {
public:
    /// drift writes an m-vector, diffusion writes a row-major m x n matrix.
    using DriftFn = std::function<void(double t, StateView x, std::span<double> out)>;
    using DiffusionFn = std::function<void(double t, StateView x, std::span<double> out)>;

    Dynamics(int dim, int noise_dim, DriftFn drift, DiffusionFn diffusion, std::vector<double> x0,
             bool time_homogeneous = false);

    static Dynamics gbm(std::vector<double> mu, std::vector<double> sigma, std::vector<double> x0);
    /// d identical GBM factors.
    static Dynamics gbm(int d, double mu, double sigma, double x0);

    int dim() const noexcept { return dim_; }
    int noise_dim() const noexcept { return noise_dim_; }
    const std::vector<double>& x0() const noexcept { return x0_; }
    bool time_homogeneous() const noexcept { return time_homogeneous_; }

    void drift(double t, StateView x, std::span<double> out) const { drift_(t, x, out); }
    void diffusion(double t, StateView x, std::span<double> out) const { diffusion_(t, x, out); }

    /// Non-null for the built-in GBM model.
    const GbmSpec* gbm_spec() const noexcept { return gbm_ ? &*gbm_ : nullptr; }

private:
    int dim_;
    int noise_dim_;
    DriftFn drift_;
    DiffusionFn diffusion_;
    std::vector<double> x0_;
    bool time_homogeneous_;
    std::optional<GbmSpec> gbm_;
};

/// Default intensities of the counterparty and, for bilateral valuation, the investor.
struct HazardModel {
    Field counterparty;
    std::optional<Field> investor;

    static HazardModel constant(double lambda);
    static HazardModel constant(double lambda, double lambda_bar);
    HazardModel without_default() const;
};

enum class CloseoutSide { counterparty, investor };

/// f(y) = pos_slope * y^+ - neg_slope * y^-. Covers R y^+ - y^-, y^+ - R' y^- and f(y) = y.
struct PiecewiseLinearCloseout {
    double pos_slope;
    double neg_slope;

    double operator()(double y) const noexcept {
        return y >= 0.0 ? pos_slope * y : neg_slope * y;
    }
};

/// The lump-sum payoff f(t, x, y) received at default given the reference value y.
class CloseoutFunction {
public:
    using Fn = std::function<double(double t, StateView x, double y)>;

    CloseoutFunction(Fn fn, CloseoutSide side);
    CloseoutFunction(PiecewiseLinearCloseout pl, CloseoutSide side);

    /// R y^+ - y^-, counterparty side.
    static CloseoutFunction recovery(double R);
    /// y^+ - R' y^-, investor side.
    static CloseoutFunction investor_recovery(double R_prime);
    /// f(y) = y: full replacement, the boundary of incentive compatibility.
    static CloseoutFunction identity(CloseoutSide side = CloseoutSide::counterparty);

    double operator()(double t, StateView x, double y) const {
        return linear_ ? (*linear_)(y) : fn_(t, x, y);
    }
    CloseoutSide side() const noexcept { return side_; }
    const std::optional<PiecewiseLinearCloseout>& piecewise_linear() const noexcept { return linear_; }

private:
    Fn fn_;
    CloseoutSide side_;
    std::optional<PiecewiseLinearCloseout> linear_;
};

enum class PayoffKind { basket_put, forward, constant, custom };

/// A defaultable claim: terminal payoff, cash-flow rate, discounting and closeout.
struct Claim {
    std::function<double(StateView x)> payoff;
    Field cashflow;
    Field discount;
    double maturity = 1.0;
    CloseoutFunction closeout = CloseoutFunction::recovery(0.0);
    std::optional<CloseoutFunction> investor_closeout;

    PayoffKind kind = PayoffKind::custom;
    double strike = 0.0;

    /// phi(x) = (d K - sum x_i)^+.
    static Claim basket_put(int d, double K, double r, double T, CloseoutFunction closeout);
    /// phi(x) = sum x_i - d K; changes sign.
    static Claim forward(int d, double K, double r, double T, CloseoutFunction closeout);
    /// phi(x) = value.
    static Claim constant_payoff(double value, double r, double T, CloseoutFunction closeout);
};

/// F(t, x, y) = c + lambda f(t, x, y) - (r + lambda) y.
double bsde_driver(const Claim& claim, const HazardModel& hazard, double t, StateView x, double y);

/// F(t, x, y) = c + lambda f(y) + lambda_bar fbar(y) - (r + lambda + lambda_bar) y.
/// Requires an investor closeout and investor intensity.
double bilateral_driver(const Claim& claim, const HazardModel& hazard, double t, StateView x, double y);

/// Axis-aligned box of (t, x, y) for property sampling.
struct SampleBox {
    double t_min = 0.0;
    double t_max = 1.0;
    std::vector<double> x_min{0.0};
    std::vector<double> x_max{2.0};
    double y_min = -10.0;
    double y_max = 10.0;
};

enum class CloseoutViolationKind { above_value, below_value, decreasing, steeper_than_value };

struct CloseoutViolation {
    CloseoutViolationKind kind;
    double t;
    std::vector<double> x;
    double y1;
    double y2;
    double lhs;
    double rhs;
};

struct CloseoutReport {
    std::vector<CloseoutViolation> violations;
    bool ok() const noexcept { return violations.empty(); }
};

std::string to_string(CloseoutViolationKind kind);

/// Sampled check of f <= y (counterparty) or f >= y (investor) and
/// 0 <= f(y2) - f(y1) <= y2 - y1. Deterministic for a given seed.
CloseoutReport validate_closeout(const CloseoutFunction& f, const SampleBox& box, std::size_t n_samples,
                                 std::uint64_t rng_seed);

} // namespace xva
