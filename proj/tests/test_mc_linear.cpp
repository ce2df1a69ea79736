#include "doctest.h"

#include "xva/analytic.hpp"
#include "xva/error.hpp"
#include "xva/mc_linear.hpp"
#include "xva/rng.hpp"

#include <cmath>

using namespace xva;

namespace {

analytic::ConstParams base() { return analytic::ConstParams{}; }

Field riskfree_put_field(const analytic::ConstParams& p) {
    return Field([p](double t, StateView x) { return analytic::gbm_put(p, t, x[0]); });
}

bool within(const mc::McEstimate& a, double target, double k = 3.0) {
    return std::abs(a.mean - target) <= k * a.std_error;
}

bool agree(const mc::McEstimate& a, const mc::McEstimate& b, double k = 3.0) {
    return std::abs(a.mean - b.mean) <= k * std::hypot(a.std_error, b.std_error);
}

} // namespace

TEST_SUITE("mc_linear") {

TEST_CASE("constant payoff without discounting") {
    const Claim c = Claim::constant_payoff(1.0, 0.0, 1.0, CloseoutFunction::recovery(0.4));
    const auto e = mc::estimate_riskfree_value(c, Dynamics::gbm(1, 0.05, 0.2, 0.8), TimeGrid(1.0, 10), 100, 1);
    CHECK(e.mean == 1.0);
    CHECK(e.std_error == 0.0);
    CHECK(e.n_paths == 100);
}

TEST_CASE("risk-neutral put matches Black-Scholes") {
    analytic::ConstParams p;
    p.r = 0.05, p.mu = 0.05, p.sigma = 0.2, p.K = 1, p.x0 = 1, p.T = 10;
    const Claim c = Claim::basket_put(1, 1.0, 0.05, 10.0, CloseoutFunction::recovery(0.4));
    const auto e = mc::estimate_riskfree_value(c, Dynamics::gbm(1, 0.05, 0.2, 1.0), TimeGrid(10.0, 100), 100000, 2,
                                               {Scheme::gbm_exact});
    CHECK(within(e, analytic::bs_put(p, 0.0, 1.0)));
}

TEST_CASE("five-dimensional basket put") {
    const Claim c = Claim::basket_put(5, 1.0, 0.03, 1.0, CloseoutFunction::recovery(0.4));
    const auto e = mc::estimate_riskfree_value(c, Dynamics::gbm(5, 0.05, 0.2, 0.8), TimeGrid(1.0, 100), 200000, 3);
    CHECK(within(e, 0.7736, 3.5));
}

TEST_CASE("predefault value of a constant payoff without recovery") {
    const Claim c = Claim::constant_payoff(1.0, 0.03, 2.0, CloseoutFunction::recovery(0.4));
    const auto e = mc::estimate_predefault_value(c, Dynamics::gbm(1, 0.05, 0.2, 0.8), HazardModel::constant(0.1),
                                                 Field::constant(0.0), TimeGrid(2.0, 50), 10, 4);
    CHECK(e.mean == doctest::Approx(std::exp(-0.13 * 2.0)).epsilon(1e-13));
}

TEST_CASE("recovery of the risk-free value reproduces the risk-free closeout value") {
    const analytic::ConstParams p = base();
    const Claim c = Claim::basket_put(1, p.K, p.r, p.T, CloseoutFunction::recovery(p.R));
    const Field Z([p](double t, StateView x) { return p.R * analytic::gbm_put(p, t, x[0]); });
    const auto e = mc::estimate_predefault_value(c, Dynamics::gbm(1, p.mu, p.sigma, p.x0), HazardModel::constant(p.lambda),
                                                 Z, TimeGrid(p.T, 200), 100000, 5, {Scheme::gbm_exact});
    CHECK(within(e, analytic::riskfree_closeout_value(p, analytic::gbm_put(p, 0.0, p.x0), 0.0)));
}

TEST_CASE("immediate default pays the recovery") {
    const Claim c = Claim::constant_payoff(5.0, 0.03, 0.1, CloseoutFunction::recovery(0.4));
    const auto e = mc::estimate_predefault_value(c, Dynamics::gbm(1, 0.05, 0.2, 0.8), HazardModel::constant(1e3),
                                                 Field::constant(0.37), TimeGrid(0.1, 1000), 100, 6);
    CHECK(e.mean == doctest::Approx(0.37).epsilon(0.01));
}

TEST_CASE("default sampling: survival probability") {
    const Claim c = Claim::constant_payoff(1.0, 0.0, 3.0, CloseoutFunction::recovery(0.4));
    const auto e = mc::estimate_by_default_sampling(c, Dynamics::gbm(1, 0.05, 0.2, 0.8), HazardModel::constant(0.1),
                                                    Field::constant(0.0), TimeGrid(3.0, 30), 100000, 7);
    CHECK(within(e, std::exp(-0.3)));
}

TEST_CASE("default sampling with recovery R V reproduces the replacement value") {
    const analytic::ConstParams p = base();
    const Claim c = Claim::basket_put(1, p.K, p.r, p.T, CloseoutFunction::recovery(p.R));
    const Field Z([p](double t, StateView x) {
        return p.R * analytic::replacement_value_nonneg(p, analytic::gbm_put(p, t, x[0]), t);
    });
    const auto e = mc::estimate_by_default_sampling(c, Dynamics::gbm(1, p.mu, p.sigma, p.x0),
                                                    HazardModel::constant(p.lambda), Z, TimeGrid(p.T, 200), 100000, 8,
                                                    {Scheme::gbm_exact});
    CHECK(within(e, analytic::replacement_value_nonneg(p, analytic::gbm_put(p, 0.0, p.x0), 0.0)));
}

TEST_CASE("default sampling agrees with the reduced form") {
    CounterRng rng(99);
    for (int i = 0; i < 5; ++i) {
        analytic::ConstParams p;
        p.lambda = 0.05 + 0.5 * rng.uniform(0, i, 0);
        p.R = 0.8 * rng.uniform(0, i, 1);
        p.sigma = 0.1 + 0.3 * rng.uniform(0, i, 2);
        p.x0 = 0.6 + 0.6 * rng.uniform(0, i, 3);
        const Claim c = Claim::basket_put(1, p.K, p.r, p.T, CloseoutFunction::recovery(p.R));
        const Dynamics dyn = Dynamics::gbm(1, p.mu, p.sigma, p.x0);
        const Field Z([p](double t, StateView x) { return p.R * analytic::gbm_put(p, t, x[0]); });
        const TimeGrid g(p.T, 100);
        const auto a = mc::estimate_predefault_value(c, dyn, HazardModel::constant(p.lambda), Z, g, 20000, 10 + i);
        const auto b = mc::estimate_by_default_sampling(c, dyn, HazardModel::constant(p.lambda), Z, g, 20000, 10 + i);
        CHECK(agree(a, b));
    }
}

TEST_CASE("recovery linearity under common random numbers") {
    const analytic::ConstParams p = base();
    const Dynamics dyn = Dynamics::gbm(1, p.mu, p.sigma, p.x0);
    const HazardModel h = HazardModel::constant(0.2);
    const TimeGrid g(p.T, 50);
    const Field z1 = riskfree_put_field(p);
    const Field z2([](double, StateView x) { return x[0]; });
    const Field mix([&](double t, StateView x) { return 0.3 * z1(t, x) - 1.7 * z2(t, x); });
    const Claim c0 = Claim::constant_payoff(0.0, p.r, p.T, CloseoutFunction::recovery(p.R));
    const auto e1 = mc::estimate_predefault_value(c0, dyn, h, z1, g, 5000, 12);
    const auto e2 = mc::estimate_predefault_value(c0, dyn, h, z2, g, 5000, 12);
    const auto em = mc::estimate_predefault_value(c0, dyn, h, mix, g, 5000, 12);
    CHECK(em.mean == doctest::Approx(0.3 * e1.mean - 1.7 * e2.mean).epsilon(1e-12));
}

TEST_CASE("zero hazard predefault equals the risk-free value bit for bit") {
    const Claim c = Claim::basket_put(3, 1.0, 0.03, 1.0, CloseoutFunction::recovery(0.4));
    const Dynamics dyn = Dynamics::gbm(3, 0.05, 0.2, 0.8);
    const TimeGrid g(1.0, 20);
    const auto a = mc::estimate_riskfree_value(c, dyn, g, 3000, 13);
    const auto b = mc::estimate_predefault_value(c, dyn, HazardModel::constant(0.0), Field::constant(0.3), g, 3000, 13);
    CHECK(a.mean == b.mean);
    CHECK(a.std_error == b.std_error);
}

TEST_CASE("serial and parallel loops give identical estimates") {
    const Claim c = Claim::basket_put(2, 1.0, 0.03, 1.0, CloseoutFunction::recovery(0.4));
    const Dynamics dyn = Dynamics::gbm(2, 0.05, 0.2, 0.8);
    const TimeGrid g(1.0, 20);
    const auto a = mc::estimate_riskfree_value(c, dyn, g, 4000, 14, {Scheme::euler, true});
    const auto b = mc::estimate_riskfree_value(c, dyn, g, 4000, 14, {Scheme::euler, false});
    CHECK(a.mean == b.mean);
}

TEST_CASE("input errors") {
    const Claim c = Claim::basket_put(1, 1.0, 0.03, 1.0, CloseoutFunction::recovery(0.4));
    const Dynamics dyn = Dynamics::gbm(1, 0.05, 0.2, 0.8);
    CHECK_THROWS_AS(mc::estimate_riskfree_value(c, dyn, TimeGrid(1.0, 10), 1, 0), InvalidArgument);
    HazardModel h;
    h.counterparty = Field([](double t, StateView) { return 0.1 + t; });
    CHECK_THROWS_AS(mc::estimate_by_default_sampling(c, dyn, h, Field::constant(0.0), TimeGrid(1.0, 10), 10, 0),
                    InvalidArgument);
}

}
