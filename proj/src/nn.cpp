#include "xva/nn.hpp"

#include "xva/error.hpp"
#include "xva/numeric.hpp"
#include "xva/rng.hpp"

#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace xva::nn {

void ParameterSet::add(std::string name, Matrix value) {
    for (const auto& n : names_) require(n != name, "parameter set: duplicate name " + name);
    names_.push_back(std::move(name));
    values_.push_back(std::move(value));
}

std::size_t ParameterSet::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return i;
    throw InvalidArgument("parameter set: no tensor named " + name);
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
    return n;
}

std::vector<Var> ParameterSet::record(Tape& tape, bool trainable) const {
    std::vector<Var> out;
    out.reserve(values_.size());
    for (const auto& v : values_) out.push_back(trainable ? tape.parameter(v) : tape.constant(v));
    return out;
}

bool ParameterSet::operator==(const ParameterSet& other) const {
    if (names_ != other.names_) return false;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        const auto& a = values_[i];
        const auto& b = other.values_[i];
        if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
        for (Eigen::Index k = 0; k < a.size(); ++k)
            if (std::bit_cast<std::uint64_t>(a.data()[k]) != std::bit_cast<std::uint64_t>(b.data()[k])) return false;
    }
    return true;
}

LstmStack LstmStack::for_dimension(int d, int m) {
    require(d >= 1 && m >= 1, "lstm: dimensions must be positive");
    return LstmStack{m, d + 10, 3};
}

std::size_t LstmStack::parameter_count() const {
    std::size_t n = 0;
    int in = m + 1;
    for (int l = 0; l < layers; ++l) {
        n += 4 * static_cast<std::size_t>(in + h + 1) * h;
        in = h;
    }
    return n + static_cast<std::size_t>(h + 1) * m;
}

ParameterSet LstmStack::shapes() const {
    require(m >= 1 && h >= 1 && layers >= 1, "lstm: widths and depth must be positive");
    ParameterSet p;
    int in = m + 1;
    for (int l = 0; l < layers; ++l) {
        const std::string prefix = "lstm" + std::to_string(l);
        p.add(prefix + ".W", Matrix::Zero(in + h, 4 * h));
        p.add(prefix + ".b", Matrix::Zero(1, 4 * h));
        in = h;
    }
    p.add("head.W", Matrix::Zero(h, m));
    p.add("head.b", Matrix::Zero(1, m));
    return p;
}

LstmCarry zero_carry(Tape& tape, const LstmStack& net, int batch) {
    LstmCarry c;
    for (int l = 0; l < net.layers; ++l) {
        c.h.push_back(tape.constant(Matrix::Zero(batch, net.h)));
        c.c.push_back(tape.constant(Matrix::Zero(batch, net.h)));
    }
    return c;
}

Var lstm_forward(Tape& tape, const LstmStack& net, const std::vector<Var>& params, Var t_scaled, Var x,
                 LstmCarry& carry) {
    require(params.size() == static_cast<std::size_t>(2 * net.layers + 2), "lstm: wrong number of parameter tensors");
    require(carry.h.size() == static_cast<std::size_t>(net.layers) && carry.c.size() == carry.h.size(),
            "lstm: carry depth does not match the number of layers");
    const auto batch = tape.value(x).rows();
    if (tape.value(x).cols() != net.m)
        throw InvalidArgument("lstm: input has " + std::to_string(tape.value(x).cols()) + " columns, expected m = " +
                              std::to_string(net.m));
    const int h = net.h;
    Var input = tape.concat_cols(t_scaled, x);
    for (int l = 0; l < net.layers; ++l) {
        if (tape.value(carry.h[l]).cols() != h || tape.value(carry.h[l]).rows() != batch)
            throw InvalidArgument("lstm: carry shape " + ad::shape_string(tape.value(carry.h[l])) +
                                  " does not match batch x h");
        Var z = tape.add_row(tape.matmul(tape.concat_cols(input, carry.h[l]), params[2 * l]), params[2 * l + 1]);
        Var i = tape.sigmoid(tape.slice_cols(z, 0, h));
        Var f = tape.sigmoid(tape.slice_cols(z, h, h));
        Var g = tape.tanh(tape.slice_cols(z, 2 * h, h));
        Var o = tape.sigmoid(tape.slice_cols(z, 3 * h, h));
        carry.c[l] = tape.add(tape.mul(f, carry.c[l]), tape.mul(i, g));
        carry.h[l] = tape.mul(o, tape.tanh(carry.c[l]));
        input = carry.h[l];
    }
    return tape.add_row(tape.matmul(input, params[2 * net.layers]), params[2 * net.layers + 1]);
}

FcSubnetworks FcSubnetworks::for_dimension(int d, int m, int nodes) {
    require(d >= 1 && m >= 1 && nodes >= 1, "fc: dimensions must be positive");
    return FcSubnetworks{m, d + 10, nodes};
}

std::size_t FcSubnetworks::parameter_count() const {
    const auto per = static_cast<std::size_t>((m + 1) * h + (h + 1) * h + (h + 1) * m);
    return per * static_cast<std::size_t>(nodes);
}

ParameterSet FcSubnetworks::shapes() const {
    require(m >= 1 && h >= 1 && nodes >= 1, "fc: widths and node count must be positive");
    ParameterSet p;
    for (int i = 0; i < nodes; ++i) {
        const std::string prefix = "fc" + std::to_string(i);
        p.add(prefix + ".W1", Matrix::Zero(m, h));
        p.add(prefix + ".b1", Matrix::Zero(1, h));
        p.add(prefix + ".W2", Matrix::Zero(h, h));
        p.add(prefix + ".b2", Matrix::Zero(1, h));
        p.add(prefix + ".W3", Matrix::Zero(h, m));
        p.add(prefix + ".b3", Matrix::Zero(1, m));
    }
    return p;
}

Var fc_forward(Tape& tape, const FcSubnetworks& net, const std::vector<Var>& params, int node, Var x) {
    require(node >= 0 && node < net.nodes, "fc: time node out of range");
    require(params.size() == static_cast<std::size_t>(6 * net.nodes), "fc: wrong number of parameter tensors");
    if (tape.value(x).cols() != net.m)
        throw InvalidArgument("fc: input has " + std::to_string(tape.value(x).cols()) + " columns, expected m = " +
                              std::to_string(net.m));
    const std::size_t k = 6 * static_cast<std::size_t>(node);
    Var a = tape.tanh(tape.add_row(tape.matmul(x, params[k]), params[k + 1]));
    Var b = tape.tanh(tape.add_row(tape.matmul(a, params[k + 2]), params[k + 3]));
    return tape.add_row(tape.matmul(b, params[k + 4]), params[k + 5]);
}

namespace {

constexpr std::uint64_t init_purpose = 0x696e6974;  // "init"

void glorot_fill(ParameterSet& p, std::uint64_t seed) {
    const CounterRng rng(derive_seed(seed, init_purpose));
    for (std::size_t k = 0; k < p.size(); ++k) {
        const std::string& name = p.name(k);
        const auto dot = name.rfind('.');
        if (name.compare(dot + 1, 1, "W") != 0) continue;
        Matrix& w = p[k];
        const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
        for (Eigen::Index i = 0; i < w.size(); ++i)
            w.data()[i] = (2.0 * rng.uniform(k, static_cast<std::uint64_t>(i), 0) - 1.0) * limit;
    }
}

} // namespace

ParameterSet init_params(const LstmStack& net, std::uint64_t seed) {
    ParameterSet p = net.shapes();
    glorot_fill(p, seed);
    for (int l = 0; l < net.layers; ++l) p.at("lstm" + std::to_string(l) + ".b").middleCols(net.h, net.h).setOnes();
    return p;
}

ParameterSet init_params(const FcSubnetworks& net, std::uint64_t seed) {
    ParameterSet p = net.shapes();
    glorot_fill(p, seed);
    return p;
}

AdamState::AdamState(const ParameterSet& params, AdamConfig cfg) : config(cfg) {
    require(cfg.lr > 0.0 && cfg.beta1 >= 0.0 && cfg.beta1 < 1.0 && cfg.beta2 >= 0.0 && cfg.beta2 < 1.0 &&
                cfg.eps > 0.0,
            "adam: invalid hyperparameters");
    require(cfg.decay_every >= 1 && cfg.decay_factor > 0.0, "adam: invalid learning-rate schedule");
    for (std::size_t i = 0; i < params.size(); ++i) {
        m.push_back(Matrix::Zero(params[i].rows(), params[i].cols()));
        v.push_back(Matrix::Zero(params[i].rows(), params[i].cols()));
    }
}

double AdamState::current_lr() const {
    return config.lr * std::pow(config.decay_factor, static_cast<double>(step / config.decay_every));
}

bool adam_step(AdamState& state, ParameterSet& params, const std::vector<Matrix>& grads) {
    require(grads.size() == params.size() && state.m.size() == params.size(), "adam: gradient count mismatch");
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (grads[i].rows() != params[i].rows() || grads[i].cols() != params[i].cols())
            throw InvalidArgument("adam: gradient " + ad::shape_string(grads[i]) + " does not match parameter " +
                                  params.name(i) + " " + ad::shape_string(params[i]));
        if (!grads[i].allFinite()) {
            ++state.skipped;
            return false;
        }
    }
    const double lr = state.current_lr();
    ++state.step;
    const auto& c = state.config;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < grads.size(); ++i) {
        state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * grads[i];
        state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * grads[i].cwiseAbs2();
        params[i].array() -= lr * (state.m[i].array() / bc1) / ((state.v[i].array() / bc2).sqrt() + c.eps);
    }
    return true;
}

void save_checkpoint(std::ostream& out, const ParameterSet& params) {
    out << "xva-checkpoint v1\n" << params.size() << '\n';
    for (std::size_t k = 0; k < params.size(); ++k) {
        const Matrix& w = params[k];
        out << params.name(k) << ' ' << w.rows() << ' ' << w.cols() << '\n';
        for (Eigen::Index i = 0; i < w.size(); ++i) out << (i ? " " : "") << format_17g(w.data()[i]);
        out << '\n';
    }
}

ParameterSet load_checkpoint(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "xva-checkpoint v1")
        throw InvalidArgument("checkpoint: missing or unsupported header");
    std::size_t count = 0;
    if (!(in >> count)) throw InvalidArgument("checkpoint: missing tensor count");
    ParameterSet p;
    for (std::size_t k = 0; k < count; ++k) {
        std::string name;
        long rows = 0, cols = 0;
        if (!(in >> name >> rows >> cols) || rows < 0 || cols < 0)
            throw InvalidArgument("checkpoint: bad tensor header at entry " + std::to_string(k));
        Matrix w(rows, cols);
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            std::string tok;
            if (!(in >> tok)) throw InvalidArgument("checkpoint: truncated tensor " + name);
            w.data()[i] = std::stod(tok);
        }
        p.add(std::move(name), std::move(w));
    }
    return p;
}

} // namespace xva::nn
