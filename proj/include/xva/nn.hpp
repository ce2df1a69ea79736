#pragma once

#include "xva/autodiff.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace xva::nn {

using ad::Matrix;
using ad::Tape;
using ad::Var;

/// Ordered list of named tensors.
class ParameterSet {
public:
    void add(std::string name, Matrix value);
    std::size_t size() const noexcept { return values_.size(); }
    const std::string& name(std::size_t i) const { return names_.at(i); }
    Matrix& operator[](std::size_t i) { return values_.at(i); }
    const Matrix& operator[](std::size_t i) const { return values_.at(i); }
    std::size_t index_of(const std::string& name) const;
    Matrix& at(const std::string& name) { return values_[index_of(name)]; }
    const Matrix& at(const std::string& name) const { return values_[index_of(name)]; }
    std::size_t scalar_count() const;

    /// Records every tensor as a tape parameter (or constant when frozen), in order.
    std::vector<Var> record(Tape& tape, bool trainable = true) const;

    bool operator==(const ParameterSet& other) const;

private:
    std::vector<std::string> names_;
    std::vector<Matrix> values_;
};

/// Stacked LSTM: input (t/T, x) of width m+1, `layers` layers of width h, affine head h -> m.
/// Gate order inside each 4h block is input, forget, candidate, output.
struct LstmStack {
    int m = 1;
    int h = 11;
    int layers = 3;

    static LstmStack for_dimension(int d, int m);
    std::size_t parameter_count() const;
    ParameterSet shapes() const;  // zero-valued tensors with the right names and shapes
};

/// Per-layer hidden and cell states for a batch.
struct LstmCarry {
    std::vector<Var> h;
    std::vector<Var> c;
};

LstmCarry zero_carry(Tape& tape, const LstmStack& net, int batch);

/// One time step for a batch: t_scaled is batch x 1, x is batch x m. Returns batch x m.
/// `params` are the tape variables of the ParameterSet in order.
Var lstm_forward(Tape& tape, const LstmStack& net, const std::vector<Var>& params, Var t_scaled, Var x,
                 LstmCarry& carry);

/// One network per time node: m -> h -> h -> m with tanh hidden layers.
struct FcSubnetworks {
    int m = 1;
    int h = 11;
    int nodes = 1;

    static FcSubnetworks for_dimension(int d, int m, int nodes);
    std::size_t parameter_count() const;
    ParameterSet shapes() const;
};

Var fc_forward(Tape& tape, const FcSubnetworks& net, const std::vector<Var>& params, int node, Var x);

/// Glorot-uniform weights, zero biases, LSTM forget-gate bias 1. Deterministic per seed.
ParameterSet init_params(const LstmStack& net, std::uint64_t seed);
ParameterSet init_params(const FcSubnetworks& net, std::uint64_t seed);

struct AdamConfig {
    double lr = 5e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int decay_every = 1000;
    double decay_factor = 0.5;
};

struct AdamState {
    AdamConfig config;
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    long long step = 0;
    long long skipped = 0;

    explicit AdamState(const ParameterSet& params, AdamConfig cfg = {});
    /// Learning rate after `step` accepted updates, with the step decay applied.
    double current_lr() const;
};

/// Bias-corrected Adam update. Returns false and leaves everything unchanged
/// (except the skip counter) if any gradient entry is non-finite.
bool adam_step(AdamState& state, ParameterSet& params, const std::vector<Matrix>& grads);

/// Text checkpoint: `xva-checkpoint v1`, a tensor count, then per tensor
/// `name rows cols` followed by the row-major values in %.17g.
void save_checkpoint(std::ostream& out, const ParameterSet& params);
ParameterSet load_checkpoint(std::istream& in);

} // namespace xva::nn
