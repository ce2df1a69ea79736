#include "doctest.h"

#include "xva/autodiff.hpp"
#include "xva/error.hpp"
#include "xva/gradcheck.hpp"
#include "xva/rng.hpp"

#include <cmath>

using namespace xva;
using ad::Matrix;
using ad::Tape;
using ad::Var;

namespace {

Matrix draw(CounterRng& rng, std::uint64_t stream, int r, int c) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = 2 * rng.uniform(stream, i, 0) - 1;
    return m;
}

double closeout_slope(double y, double R) {
    Tape t;
    Var p = t.parameter(Matrix::Constant(1, 1, y));
    t.backward(t.sub(t.scale(t.pos(p), R), t.neg(p)));
    return t.grad(p)(0, 0);
}

} // namespace

TEST_SUITE("autodiff") {

TEST_CASE("tanh slope at zero") {
    Tape t;
    Var x = t.parameter(Matrix::Zero(1, 1));
    t.backward(t.tanh(x));
    CHECK(t.grad(x)(0, 0) == 1.0);
}

TEST_CASE("tanh values") {
    Tape t;
    Matrix x(1, 6);
    x << -30.0, -1.5, -1e-9, 0.0, 0.3, 25.0;
    const Matrix y = t.value(t.tanh(t.constant(x)));
    for (int j = 0; j < 6; ++j) CHECK(y(0, j) == doctest::Approx(std::tanh(x(0, j))).epsilon(1e-15));
}

TEST_CASE("closeout slopes and the tie-break at zero") {
    CHECK(closeout_slope(1.0, 0.4) == doctest::Approx(0.4));
    CHECK(closeout_slope(-1.0, 0.4) == doctest::Approx(1.0));
    CHECK(closeout_slope(0.0, 0.4) == doctest::Approx(0.4));
}

TEST_CASE("sum gives ones, zero-scaled loss gives zeros") {
    Tape t;
    Var p = t.parameter(Matrix::Random(3, 2));
    t.backward(t.sum(p));
    CHECK(t.grad(p) == Matrix::Ones(3, 2));

    Tape u;
    Var q = u.parameter(Matrix::Random(2, 2));
    u.backward(u.scale(u.sum(u.tanh(u.matmul(q, q))), 0.0));
    CHECK(u.grad(q) == Matrix::Zero(2, 2));
}

TEST_CASE("unreached parameters get zero gradient") {
    Tape t;
    Var a = t.parameter(Matrix::Ones(2, 2));
    Var b = t.parameter(Matrix::Ones(4, 1));
    t.backward(t.sum(t.square(a)));
    CHECK(t.grad(b) == Matrix::Zero(4, 1));
    CHECK(t.grad(a) == Matrix::Constant(2, 2, 2.0));
}

TEST_CASE("gradients accumulate over shared uses") {
    Tape t;
    Var a = t.parameter(Matrix::Constant(1, 1, 3.0));
    t.backward(t.add(t.mul(a, a), t.scale(a, 2.0)));
    CHECK(t.grad(a)(0, 0) == 8.0);
}

TEST_CASE("non-scalar loss is rejected") {
    Tape t;
    Var a = t.parameter(Matrix::Ones(2, 2));
    CHECK_THROWS_AS(t.backward(a), InvalidArgument);
}

TEST_CASE("shape mismatch names both shapes") {
    Tape t;
    Var a = t.constant(Matrix::Ones(2, 3));
    Var b = t.constant(Matrix::Ones(3, 2));
    try {
        t.add(a, b);
        FAIL("expected a shape error");
    } catch (const InvalidArgument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("2x3") != std::string::npos);
        CHECK(msg.find("3x2") != std::string::npos);
    }
    CHECK_THROWS_AS(t.matmul(a, a), InvalidArgument);
    CHECK_THROWS_AS(t.add_row(a, t.constant(Matrix::Ones(1, 2))), InvalidArgument);
    CHECK_THROWS_AS(t.broadcast(a, 2, 2), InvalidArgument);
    CHECK_THROWS_AS(t.slice_cols(a, 2, 2), InvalidArgument);
}

TEST_CASE("two-layer tanh network against finite differences") {
    CounterRng rng(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::uint64_t s = 10 * trial;
        const Matrix X = draw(rng, s, 8, 3), Y = draw(rng, s + 1, 8, 2);
        const std::vector<Matrix> params{draw(rng, s + 2, 3, 5), draw(rng, s + 3, 1, 5), draw(rng, s + 4, 5, 2),
                                         draw(rng, s + 5, 1, 2)};
        const auto res = ad::gradcheck(
            [&](Tape& t, const std::vector<Var>& v) {
                Var a = t.tanh(t.add_row(t.matmul(t.constant(X), v[0]), v[1]));
                Var y = t.add_row(t.matmul(a, v[2]), v[3]);
                return t.mean(t.square(t.sub(y, t.constant(Y))));
            },
            params);
        worst = std::max(worst, res.max_relative_error);
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("identical tapes give bit-identical gradients") {
    auto run = [] {
        Tape t;
        CounterRng rng(7);
        Var w = t.parameter(draw(rng, 0, 4, 4));
        Var x = t.constant(draw(rng, 1, 16, 4));
        Var h = t.sigmoid(t.matmul(t.tanh(t.matmul(x, w)), w));
        t.backward(t.mean(t.square(h)));
        return t.grad(w);
    };
    CHECK(run() == run());
}

TEST_CASE("every primitive, the LSTM cell and the miniature rollout pass gradient checks") {
    const auto results = gradcheck::run_all(3);
    CHECK(results.size() >= 22);
    for (const auto& r : results) {
        INFO(r.name << " relative error " << r.relative_error);
        CHECK(r.passed());
    }
}

}
