#pragma once

namespace xva::analytic {

/// Constant-parameter model family: GBM factors, constant r and lambda,
/// closeout R y^+ - y^-, no intermediate cash flows.
struct ConstParams {
    double r = 0.03;
    double mu = 0.05;
    double sigma = 0.2;
    double lambda = 0.1;
    double R = 0.4;
    double K = 1.0;
    double x0 = 0.8;
    double T = 1.0;
    int d = 1;

    void validate() const;
};

/// Black-Scholes European put with rate r, volatility sigma, strike K and
/// expiry T - t. Returns the payoff (K - x)^+ when t >= T.
double bs_put(const ConstParams& p, double t, double x);

/// E[e^{-r(T-t)} (K - X_T)^+ | X_t = x] when X drifts at mu rather than r.
/// Equals bs_put when mu == r.
double gbm_put(const ConstParams& p, double t, double x);

/// Pre-default value under the replacement closeout for a claim whose value
/// stays nonnegative: e^{-(1-R) lambda (T-t)} U.
double replacement_value_nonneg(const ConstParams& p, double riskfree_value, double t);

/// Pre-default value under the risk-free closeout:
/// [R (1 - e^{-lambda (T-t)}) + e^{-lambda (T-t)}] U.
double riskfree_closeout_value(const ConstParams& p, double riskfree_value, double t);

/// Relative CVA underestimate (Pi - Pi0) / Pi of the risk-free closeout:
/// 1 - (1-R)(1 - e^{-lambda T}) / (1 - e^{-(1-R) lambda T}).
double figure1_relative_error(double lambda, double R, double T);

} // namespace xva::analytic
