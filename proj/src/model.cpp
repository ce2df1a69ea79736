#include "xva/model.hpp"

#include "xva/error.hpp"
#include "xva/rng.hpp"

#include <algorithm>
#include <cmath>

namespace xva {

Field Field::constant(double value) {
    Field f{Fn{}};
    f.constant_ = value;
    return f;
}

Dynamics::Dynamics(int dim, int noise_dim, DriftFn drift, DiffusionFn diffusion, std::vector<double> x0,
                   bool time_homogeneous)
    : dim_(dim),
      noise_dim_(noise_dim),
      drift_(std::move(drift)),
      diffusion_(std::move(diffusion)),
      x0_(std::move(x0)),
      time_homogeneous_(time_homogeneous) {
    require(dim_ > 0 && noise_dim_ > 0, "dynamics: dimensions must be positive");
    require(static_cast<int>(x0_.size()) == dim_, "dynamics: initial state has wrong length");
    require(static_cast<bool>(drift_) && static_cast<bool>(diffusion_), "dynamics: missing coefficient function");
}

Dynamics Dynamics::gbm(std::vector<double> mu, std::vector<double> sigma, std::vector<double> x0) {
    const int m = static_cast<int>(x0.size());
    require(m > 0 && mu.size() == x0.size() && sigma.size() == x0.size(), "gbm: parameter lengths differ");
    for (double s : sigma) require(std::isfinite(s) && s >= 0.0, "gbm: sigma must be finite and nonnegative");
    for (double v : mu) require(std::isfinite(v), "gbm: mu must be finite");
    auto drift = [mu](double, StateView x, std::span<double> out) {
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = mu[i] * x[i];
    };
    auto diffusion = [sigma](double, StateView x, std::span<double> out) {
        const std::size_t m = x.size();
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t i = 0; i < m; ++i) out[i * m + i] = sigma[i] * x[i];
    };
    Dynamics dyn(m, m, drift, diffusion, std::move(x0), true);
    dyn.gbm_ = GbmSpec{std::move(mu), std::move(sigma)};
    return dyn;
}

Dynamics Dynamics::gbm(int d, double mu, double sigma, double x0) {
    require(d > 0, "gbm: dimension must be positive");
    const auto n = static_cast<std::size_t>(d);
    return gbm(std::vector<double>(n, mu), std::vector<double>(n, sigma), std::vector<double>(n, x0));
}

HazardModel HazardModel::constant(double lambda) {
    require(lambda >= 0.0 && std::isfinite(lambda), "hazard: intensity must be finite and nonnegative");
    return HazardModel{Field::constant(lambda), std::nullopt};
}

HazardModel HazardModel::constant(double lambda, double lambda_bar) {
    require(lambda_bar >= 0.0 && std::isfinite(lambda_bar), "hazard: investor intensity must be finite and nonnegative");
    HazardModel h = constant(lambda);
    h.investor = Field::constant(lambda_bar);
    return h;
}

HazardModel HazardModel::without_default() const {
    HazardModel h{Field::constant(0.0), std::nullopt};
    if (investor) h.investor = Field::constant(0.0);
    return h;
}

CloseoutFunction::CloseoutFunction(Fn fn, CloseoutSide side) : fn_(std::move(fn)), side_(side) {
    require(static_cast<bool>(fn_), "closeout: missing function");
}

CloseoutFunction::CloseoutFunction(PiecewiseLinearCloseout pl, CloseoutSide side) : side_(side), linear_(pl) {
    fn_ = [pl](double, StateView, double y) { return pl(y); };
}

CloseoutFunction CloseoutFunction::recovery(double R) {
    require(R >= 0.0 && R < 1.0, "closeout: recovery rate must lie in [0, 1)");
    return {PiecewiseLinearCloseout{R, 1.0}, CloseoutSide::counterparty};
}

CloseoutFunction CloseoutFunction::investor_recovery(double R_prime) {
    require(R_prime >= 0.0 && R_prime < 1.0, "closeout: investor recovery rate must lie in [0, 1)");
    return {PiecewiseLinearCloseout{1.0, R_prime}, CloseoutSide::investor};
}

CloseoutFunction CloseoutFunction::identity(CloseoutSide side) {
    return {PiecewiseLinearCloseout{1.0, 1.0}, side};
}

Claim Claim::basket_put(int d, double K, double r, double T, CloseoutFunction closeout) {
    require(d > 0, "claim: dimension must be positive");
    require(K > 0.0, "claim: strike must be positive");
    require(T > 0.0, "claim: maturity must be positive");
    require(r >= 0.0, "claim: discount rate must be nonnegative");
    const double level = d * K;
    Claim c{[level](StateView x) {
                double s = 0.0;
                for (double v : x) s += v;
                return std::max(level - s, 0.0);
            },
            Field::constant(0.0), Field::constant(r), T, std::move(closeout), std::nullopt, PayoffKind::basket_put, K};
    return c;
}

Claim Claim::forward(int d, double K, double r, double T, CloseoutFunction closeout) {
    require(d > 0, "claim: dimension must be positive");
    require(T > 0.0, "claim: maturity must be positive");
    require(r >= 0.0, "claim: discount rate must be nonnegative");
    const double level = d * K;
    return Claim{[level](StateView x) {
                     double s = 0.0;
                     for (double v : x) s += v;
                     return s - level;
                 },
                 Field::constant(0.0), Field::constant(r), T, std::move(closeout), std::nullopt, PayoffKind::forward, K};
}

Claim Claim::constant_payoff(double value, double r, double T, CloseoutFunction closeout) {
    require(T > 0.0, "claim: maturity must be positive");
    require(r >= 0.0, "claim: discount rate must be nonnegative");
    return Claim{[value](StateView) { return value; }, Field::constant(0.0), Field::constant(r), T,
                 std::move(closeout), std::nullopt, PayoffKind::constant, 0.0};
}

namespace {

void require_finite_inputs(double t, StateView x, double y) {
    bool ok = std::isfinite(t) && std::isfinite(y);
    for (double v : x) ok = ok && std::isfinite(v);
    require(ok, "driver: non-finite input");
}

} // namespace

double bsde_driver(const Claim& claim, const HazardModel& hazard, double t, StateView x, double y) {
    require_finite_inputs(t, x, y);
    const double lambda = hazard.counterparty(t, x);
    const double r = claim.discount(t, x);
    return claim.cashflow(t, x) + lambda * claim.closeout(t, x, y) - (r + lambda) * y;
}

double bilateral_driver(const Claim& claim, const HazardModel& hazard, double t, StateView x, double y) {
    require_finite_inputs(t, x, y);
    require(claim.investor_closeout.has_value() && hazard.investor.has_value(),
            "bilateral driver: investor closeout and intensity are required");
    const double lambda = hazard.counterparty(t, x);
    const double lambda_bar = (*hazard.investor)(t, x);
    const double r = claim.discount(t, x);
    return claim.cashflow(t, x) + lambda * claim.closeout(t, x, y) + lambda_bar * (*claim.investor_closeout)(t, x, y) -
           (r + lambda + lambda_bar) * y;
}

std::string to_string(CloseoutViolationKind kind) {
    switch (kind) {
    case CloseoutViolationKind::above_value: return "f(t,x,y) > y";
    case CloseoutViolationKind::below_value: return "f(t,x,y) < y";
    case CloseoutViolationKind::decreasing: return "f decreasing in y";
    case CloseoutViolationKind::steeper_than_value: return "f(y2)-f(y1) > y2-y1";
    }
    return "unknown";
}

CloseoutReport validate_closeout(const CloseoutFunction& f, const SampleBox& box, std::size_t n_samples,
                                 std::uint64_t rng_seed) {
    require(n_samples >= 1, "validate_closeout: need at least one sample");
    require(box.x_min.size() == box.x_max.size() && !box.x_min.empty(), "validate_closeout: malformed state box");
    const CounterRng rng(rng_seed);
    const std::size_t m = box.x_min.size();
    auto lerp = [](double lo, double hi, double u) { return lo + (hi - lo) * u; };
    auto slack = [](double a, double b) { return 1e-12 * (1.0 + std::abs(a) + std::abs(b)); };

    CloseoutReport report;
    std::vector<double> x(m);
    for (std::size_t s = 0; s < n_samples; ++s) {
        const double t = lerp(box.t_min, box.t_max, rng.uniform(s, 0, 0));
        for (std::size_t i = 0; i < m; ++i) x[i] = lerp(box.x_min[i], box.x_max[i], rng.uniform(s, 1, i));
        double y1 = lerp(box.y_min, box.y_max, rng.uniform(s, 2, 0));
        double y2 = lerp(box.y_min, box.y_max, rng.uniform(s, 2, 1));
        if (y2 < y1) std::swap(y1, y2);

        const double f1 = f(t, x, y1);
        const double f2 = f(t, x, y2);
        auto record = [&](CloseoutViolationKind kind, double lhs, double rhs) {
            report.violations.push_back({kind, t, x, y1, y2, lhs, rhs});
        };
        if (f.side() == CloseoutSide::counterparty) {
            if (f1 > y1 + slack(f1, y1)) record(CloseoutViolationKind::above_value, f1, y1);
            else if (f2 > y2 + slack(f2, y2)) record(CloseoutViolationKind::above_value, f2, y2);
        } else {
            if (f1 < y1 - slack(f1, y1)) record(CloseoutViolationKind::below_value, f1, y1);
            else if (f2 < y2 - slack(f2, y2)) record(CloseoutViolationKind::below_value, f2, y2);
        }
        if (y1 < y2) {
            const double df = f2 - f1;
            const double dy = y2 - y1;
            if (df < -slack(f1, f2)) record(CloseoutViolationKind::decreasing, df, 0.0);
            if (df > dy + slack(f1, f2) + slack(y1, y2)) record(CloseoutViolationKind::steeper_than_value, df, dy);
        }
    }
    return report;
}

} // namespace xva
