#include "xva/analytic.hpp"

#include "xva/error.hpp"
#include "xva/rng.hpp"

#include <algorithm>
#include <cmath>

// Both closed forms follow from Feynman-Kac with constant coefficients.
//
// Replacement closeout, V >= 0: f(V) = R V, so the valuation PDE reads
//   L V - (r + lambda) V + lambda R V = 0, V(T) = phi,
// i.e. the risk-free PDE with discount r + (1-R) lambda. Since lambda is
// constant, V = e^{-(1-R) lambda (T-t)} U.
//
// Risk-free closeout, U >= 0: the recovery is R U(s, X_s). Because
// e^{-r s} U(s, X_s) is a martingale,
//   E[ int_t^T lambda R U(s, X_s) e^{-(r+lambda)(s-t)} ds ]
//     = R U(t, x) int_t^T lambda e^{-lambda (s-t)} ds = R (1 - e^{-lambda (T-t)}) U,
// and the survival term contributes e^{-lambda (T-t)} U.

namespace xva::analytic {

void ConstParams::validate() const {
    require(sigma > 0.0, "analytic: sigma must be positive");
    require(lambda >= 0.0, "analytic: lambda must be nonnegative");
    require(R >= 0.0 && R < 1.0, "analytic: R must lie in [0, 1)");
    require(T > 0.0, "analytic: T must be positive");
    require(K > 0.0, "analytic: K must be positive");
}

namespace {

/// Undiscounted put on a log-normal with the given forward.
double put_on_forward(double forward, double K, double stdev) {
    const double d1 = (std::log(forward / K) + 0.5 * stdev * stdev) / stdev;
    const double d2 = d1 - stdev;
    return K * normal_cdf(-d2) - forward * normal_cdf(-d1);
}

} // namespace

double gbm_put(const ConstParams& p, double t, double x) {
    require(x > 0.0, "gbm_put: spot must be positive");
    const double tau = p.T - t;
    if (tau <= 0.0) return std::max(p.K - x, 0.0);
    const double forward = x * std::exp(p.mu * tau);
    return std::exp(-p.r * tau) * put_on_forward(forward, p.K, p.sigma * std::sqrt(tau));
}

double bs_put(const ConstParams& p, double t, double x) {
    ConstParams q = p;
    q.mu = p.r;
    return gbm_put(q, t, x);
}

double replacement_value_nonneg(const ConstParams& p, double riskfree_value, double t) {
    require(riskfree_value >= 0.0, "replacement_value_nonneg: negative value, linearisation invalid");
    return std::exp(-(1.0 - p.R) * p.lambda * (p.T - t)) * riskfree_value;
}

double riskfree_closeout_value(const ConstParams& p, double riskfree_value, double t) {
    require(riskfree_value >= 0.0, "riskfree_closeout_value: negative value, closed form invalid");
    const double survival = std::exp(-p.lambda * (p.T - t));
    return (p.R * (1.0 - survival) + survival) * riskfree_value;
}

double figure1_relative_error(double lambda, double R, double T) {
    require(lambda >= 0.0, "figure1_relative_error: lambda must be nonnegative");
    require(R >= 0.0 && R < 1.0, "figure1_relative_error: R must lie in [0, 1)");
    require(T > 0.0, "figure1_relative_error: T must be positive");
    if (lambda == 0.0) return 0.0;
    // expm1 keeps both numerator and denominator accurate as lambda -> 0.
    const double num = (1.0 - R) * -std::expm1(-lambda * T);
    const double den = -std::expm1(-(1.0 - R) * lambda * T);
    return 1.0 - num / den;
}

} // namespace xva::analytic
