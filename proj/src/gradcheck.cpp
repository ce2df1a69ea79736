#include "xva/gradcheck.hpp"

#include "xva/autodiff.hpp"
#include "xva/deep_bsde.hpp"
#include "xva/nn.hpp"
#include "xva/rng.hpp"

#include <cmath>
#include <functional>

namespace xva::gradcheck {

using ad::Matrix;
using ad::Tape;
using ad::Var;

namespace {

class Draws {
public:
    explicit Draws(std::uint64_t seed) : rng_(seed) {}

    /// Uniform entries on (-1, 1).
    Matrix uniform(int rows, int cols) {
        Matrix m(rows, cols);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = 2.0 * rng_.uniform(stream_, i, 0) - 1.0;
        ++stream_;
        return m;
    }

    /// Entries with 0.1 <= |y| < 1, away from the kink of y^+ and y^-.
    Matrix away_from_zero(int rows, int cols) {
        Matrix m = uniform(rows, cols);
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            double& y = m.data()[i];
            y = (y < 0.0 ? -1.0 : 1.0) * (0.1 + 0.9 * std::abs(y));
        }
        return m;
    }

private:
    CounterRng rng_;
    std::uint64_t stream_ = 0;
};

using LossFn = std::function<Var(Tape&, const std::vector<Var>&)>;

CaseResult check(const std::string& name, const LossFn& fn, const std::vector<Matrix>& inputs, double h, double tol) {
    return CaseResult{name, ad::gradcheck(fn, inputs, h).max_relative_error, tol};
}

/// sum(out * W) with a fixed weight matrix so every output entry matters differently.
Var weighted(Tape& t, Var out, const Matrix& w) { return t.sum(t.mul(out, t.constant(w))); }

} // namespace

std::vector<CaseResult> run_all(std::uint64_t seed, double h) {
    Draws draw(derive_seed(seed, 0x67636b));
    std::vector<CaseResult> out;
    constexpr double tol = 1e-5;

    const Matrix A = draw.uniform(3, 4), B = draw.uniform(3, 4), C = draw.uniform(4, 2), row = draw.uniform(1, 4);
    const Matrix W34 = draw.uniform(3, 4), W32 = draw.uniform(3, 2), W31 = draw.uniform(3, 1), W38 = draw.uniform(3, 8);
    const Matrix W22 = draw.uniform(2, 2), Kinked = draw.away_from_zero(3, 4), S = draw.uniform(1, 1);

    auto unary = [&](const std::string& name, std::function<Var(Tape&, Var)> op, const Matrix& x) {
        out.push_back(check(name, [&](Tape& t, const std::vector<Var>& v) { return weighted(t, op(t, v[0]), W34); }, {x}, h,
                            tol));
    };
    out.push_back(check("add", [&](Tape& t, const std::vector<Var>& v) { return weighted(t, t.add(v[0], v[1]), W34); },
                        {A, B}, h, tol));
    out.push_back(check("sub", [&](Tape& t, const std::vector<Var>& v) { return weighted(t, t.sub(v[0], v[1]), W34); },
                        {A, B}, h, tol));
    out.push_back(check("mul", [&](Tape& t, const std::vector<Var>& v) { return weighted(t, t.mul(v[0], v[1]), W34); },
                        {A, B}, h, tol));
    out.push_back(check("matmul",
                        [&](Tape& t, const std::vector<Var>& v) { return weighted(t, t.matmul(v[0], v[1]), W32); }, {A, C},
                        h, tol));
    unary("tanh", [](Tape& t, Var x) { return t.tanh(x); }, A);
    unary("sigmoid", [](Tape& t, Var x) { return t.sigmoid(x); }, A);
    unary("pos", [](Tape& t, Var x) { return t.pos(x); }, Kinked);
    unary("neg", [](Tape& t, Var x) { return t.neg(x); }, Kinked);
    unary("scale", [](Tape& t, Var x) { return t.scale(x, -1.7); }, A);
    unary("add_scalar", [](Tape& t, Var x) { return t.add_scalar(x, 0.3); }, A);
    unary("square", [](Tape& t, Var x) { return t.square(x); }, A);
    out.push_back(check("add_row",
                        [&](Tape& t, const std::vector<Var>& v) { return weighted(t, t.add_row(v[0], v[1]), W34); },
                        {A, row}, h, tol));
    out.push_back(check("broadcast",
                        [&](Tape& t, const std::vector<Var>& v) { return weighted(t, t.broadcast(v[0], 3, 4), W34); }, {S},
                        h, tol));
    out.push_back(check("sum", [&](Tape& t, const std::vector<Var>& v) { return t.scale(t.sum(v[0]), 0.7); }, {A}, h, tol));
    out.push_back(check("mean", [&](Tape& t, const std::vector<Var>& v) { return t.square(t.mean(v[0])); }, {A}, h, tol));
    out.push_back(check("concat_cols",
                        [&](Tape& t, const std::vector<Var>& v) { return weighted(t, t.concat_cols(v[0], v[1]), W38); },
                        {A, B}, h, tol));
    out.push_back(check("slice_cols",
                        [&](Tape& t, const std::vector<Var>& v) { return weighted(t, t.slice_cols(v[0], 1, 2), W32); },
                        {A}, h, tol));
    out.push_back(check("row_sum",
                        [&](Tape& t, const std::vector<Var>& v) { return weighted(t, t.row_sum(v[0]), W31); }, {A}, h, tol));

    {
        // Closeout R y^+ - y^- away from the kink.
        const double R = 0.4;
        out.push_back(check("closeout",
                            [&](Tape& t, const std::vector<Var>& v) {
                                return weighted(t, t.sub(t.scale(t.pos(v[0]), R), t.neg(v[0])), W34);
                            },
                            {Kinked}, h, tol));
    }

    {
        // Two-layer tanh network with a mean-squared loss.
        const Matrix X = draw.uniform(5, 3), Y = draw.uniform(5, 2);
        const std::vector<Matrix> params{draw.uniform(3, 6), draw.uniform(1, 6), draw.uniform(6, 2), draw.uniform(1, 2)};
        out.push_back(check("mlp_mse",
                            [&](Tape& t, const std::vector<Var>& v) {
                                Var a = t.tanh(t.add_row(t.matmul(t.constant(X), v[0]), v[1]));
                                Var y = t.add_row(t.matmul(a, v[2]), v[3]);
                                return t.mean(t.square(t.sub(y, t.constant(Y))));
                            },
                            params, h, tol));
    }

    {
        // LSTM stack, two steps from a random carry; inputs are the weights, x and the carry.
        const nn::LstmStack net{2, 4, 3};
        const nn::ParameterSet p = nn::init_params(net, seed);
        std::vector<Matrix> inputs;
        for (std::size_t k = 0; k < p.size(); ++k) inputs.push_back(p[k] + 0.1 * draw.uniform(static_cast<int>(p[k].rows()), static_cast<int>(p[k].cols())));
        const std::size_t np = inputs.size();
        inputs.push_back(draw.uniform(3, 2));
        for (int l = 0; l < net.layers; ++l) {
            inputs.push_back(draw.uniform(3, net.h));
            inputs.push_back(draw.uniform(3, net.h));
        }
        const Matrix tcol = Matrix::Constant(3, 1, 0.25);
        const Matrix W = draw.uniform(3, 2);
        out.push_back(check("lstm_cell",
                            [&](Tape& t, const std::vector<Var>& v) {
                                const std::vector<Var> params(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(np));
                                nn::LstmCarry carry;
                                for (int l = 0; l < net.layers; ++l) {
                                    carry.h.push_back(v[np + 1 + 2 * l]);
                                    carry.c.push_back(v[np + 2 + 2 * l]);
                                }
                                Var y1 = nn::lstm_forward(t, net, params, t.constant(tcol), v[np], carry);
                                Var y2 = nn::lstm_forward(t, net, params, t.constant(tcol), t.tanh(y1), carry);
                                return t.add(weighted(t, y1, W), weighted(t, y2, W));
                            },
                            inputs, h, tol));
    }

    {
        // Full rollout of the replacement-closeout BSDE: d = 1, N = 4, L = 2.
        const Dynamics dyn = Dynamics::gbm(1, 0.05, 0.2, 0.8);
        const Claim claim = Claim::basket_put(1, 1.0, 0.03, 1.0, CloseoutFunction::recovery(0.4));
        const HazardModel hazard = HazardModel::constant(0.1);
        const TimeGrid grid(1.0, 4);
        const PathBatch paths = simulate_euler(dyn, grid, 2, derive_seed(seed, 0x726f6c));
        const dbsde::Network net = dbsde::Network::make(dbsde::Architecture::lstm, 1, 1, 4);
        nn::ParameterSet p = net.init(seed);
        p.add("v", Matrix::Constant(1, 1, 0.21));
        std::vector<Matrix> inputs;
        for (std::size_t k = 0; k < p.size(); ++k) inputs.push_back(p[k]);
        out.push_back(check("rollout_d1_N4_L2",
                            [&](Tape& t, const std::vector<Var>& v) {
                                return dbsde::rollout_loss(t, net, v, claim, dyn, hazard, grid, paths);
                            },
                            inputs, h, 1e-4));
    }
    return out;
}

} // namespace xva::gradcheck
