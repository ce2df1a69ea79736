#include "doctest.h"

#include "xva/analytic.hpp"
#include "xva/error.hpp"
#include "xva/rng.hpp"

#include <cmath>
#include <vector>

using namespace xva;
using analytic::ConstParams;

namespace {

// Cox-Ross-Rubinstein European put.
double binomial_put(double S, double K, double r, double sigma, double T, int n) {
    const double dt = T / n, u = std::exp(sigma * std::sqrt(dt)), d = 1 / u;
    const double q = (std::exp(r * dt) - d) / (u - d), disc = std::exp(-r * dt);
    std::vector<double> v(n + 1);
    for (int j = 0; j <= n; ++j) v[j] = std::max(K - S * std::pow(u, j) * std::pow(d, n - j), 0.0);
    for (int i = n - 1; i >= 0; --i)
        for (int j = 0; j <= i; ++j) v[j] = disc * (q * v[j + 1] + (1 - q) * v[j]);
    return v[0];
}

ConstParams ten_year_put(double lambda = 0.3) {
    ConstParams p;
    p.r = 0.05;
    p.mu = 0.05;
    p.sigma = 0.2;
    p.K = 1.0;
    p.x0 = 1.0;
    p.T = 10.0;
    p.R = 0.5;
    p.lambda = lambda;
    return p;
}

} // namespace

TEST_SUITE("analytic") {

TEST_CASE("put in the zero-volatility limit") {
    ConstParams p;
    p.r = 0.0;
    p.sigma = 1e-8;
    p.K = 1.0;
    p.T = 1.0;
    CHECK(analytic::bs_put(p, 0.0, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("put against a binomial tree") {
    const ConstParams p = ten_year_put();
    const double tree = 0.5 * (binomial_put(1, 1, 0.05, 0.2, 10, 10000) + binomial_put(1, 1, 0.05, 0.2, 10, 10001));
    CHECK(std::abs(analytic::bs_put(p, 0.0, 1.0) - tree) < 1e-4);
}

TEST_CASE("deep out of the money put") {
    ConstParams p;
    CHECK(analytic::bs_put(p, 0.0, 100.0) <= 1e-10);
    CHECK(analytic::bs_put(p, 0.0, 100.0) >= 0.0);
}

TEST_CASE("put at or after maturity is the payoff") {
    ConstParams p;
    CHECK(analytic::bs_put(p, 1.0, 0.7) == doctest::Approx(0.3));
    CHECK(analytic::bs_put(p, 2.0, 1.7) == 0.0);
}

TEST_CASE("gbm put equals the risk-neutral put when mu = r") {
    ConstParams p = ten_year_put();
    CHECK(analytic::gbm_put(p, 0.0, 0.9) == doctest::Approx(analytic::bs_put(p, 0.0, 0.9)).epsilon(1e-14));
    p.mu = 0.1;
    CHECK(analytic::gbm_put(p, 0.0, 0.9) < analytic::bs_put(p, 0.0, 0.9));
}

TEST_CASE("replacement value") {
    ConstParams p;
    p.lambda = 0.0;
    CHECK(analytic::replacement_value_nonneg(p, 0.77, 0.0) == 0.77);
    p.lambda = 0.1;
    p.R = 1 - 1e-12;
    CHECK(analytic::replacement_value_nonneg(p, 0.77, 0.0) == doctest::Approx(0.77).epsilon(1e-9));
    p.R = 0.4;
    CHECK(analytic::replacement_value_nonneg(p, 0.7736, 0.0) == doctest::Approx(0.7285).epsilon(1e-4));
    CHECK_THROWS_AS(analytic::replacement_value_nonneg(p, -0.1, 0.0), InvalidArgument);
}

TEST_CASE("risk-free closeout value") {
    ConstParams p = ten_year_put();
    // 0.5 (1 - e^-3) + e^-3
    CHECK(analytic::riskfree_closeout_value(p, 1.0, 0.0) == doctest::Approx(0.5248935341839319).epsilon(1e-14));
    p.R = 0.0;
    CHECK(analytic::riskfree_closeout_value(p, 2.0, 4.0) == doctest::Approx(2 * std::exp(-1.8)).epsilon(1e-14));
    p.lambda = 0.0;
    CHECK(analytic::riskfree_closeout_value(p, 2.0, 4.0) == 2.0);
    CHECK_THROWS_AS(analytic::riskfree_closeout_value(p, -1.0, 0.0), InvalidArgument);
}

TEST_CASE("relative CVA gap") {
    CHECK(std::abs(analytic::figure1_relative_error(0.3, 0.5, 10) - 0.38849) < 1e-4);
    CHECK(analytic::figure1_relative_error(1e-8, 0.5, 10) < 1e-6);
    CHECK(analytic::figure1_relative_error(0.0, 0.5, 10) == 0.0);
    for (double lambda : {0.01, 0.2, 1.0}) CHECK(std::abs(analytic::figure1_relative_error(lambda, 0.0, 10)) < 1e-14);
}

TEST_CASE("relative CVA gap increases in lambda and stays in [0, 1)") {
    double prev = -1;
    for (int i = 0; i <= 49; ++i) {
        const double e = analytic::figure1_relative_error(0.01 + i * 0.01, 0.5, 10);
        CHECK(e > prev);
        CHECK(e >= 0.0);
        CHECK(e < 1.0);
        prev = e;
    }
}

TEST_CASE("replacement <= risk-free closeout <= risk-free value") {
    CounterRng rng(5);
    for (int i = 0; i < 1000; ++i) {
        ConstParams p;
        p.lambda = 2 * rng.uniform(1, i, 0);
        p.R = 0.999 * rng.uniform(1, i, 1);
        p.T = 0.1 + 20 * rng.uniform(1, i, 2);
        const double U = rng.uniform(1, i, 3);
        const double v = analytic::replacement_value_nonneg(p, U, 0.0), v0 = analytic::riskfree_closeout_value(p, U, 0.0);
        CHECK(v <= v0 + 1e-15);
        CHECK(v0 <= U + 1e-15);
        const double e = analytic::figure1_relative_error(p.lambda, p.R, p.T);
        CHECK(e >= -1e-12);
        CHECK(e < 1.0);
    }
}

}
