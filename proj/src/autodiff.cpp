#include "xva/autodiff.hpp"

#include "xva/error.hpp"

#include <algorithm>
#include <cmath>

namespace xva::ad {

std::string shape_string(const Matrix& m) {
    return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
}

namespace {

void require_same(const char* op, const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw InvalidArgument(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b));
}

} // namespace

const Tape::Node& Tape::node(Var v) const {
    require(v.id >= 0 && static_cast<std::size_t>(v.id) < nodes_.size(), "tape: variable does not belong to this tape");
    return nodes_[static_cast<std::size_t>(v.id)];
}

Var Tape::push(Op op, int a, int b, Matrix value, double s, int i0, int i1) {
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.s = s;
    n.i0 = i0;
    n.i1 = i1;
    n.requires_grad = (a >= 0 && nodes_[a].requires_grad) || (b >= 0 && nodes_[b].requires_grad);
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Matrix value) { return push(Op::leaf, -1, -1, std::move(value)); }

Var Tape::constant(double value) {
    Matrix m(1, 1);
    m(0, 0) = value;
    return constant(std::move(m));
}

Var Tape::parameter(Matrix value) {
    Var v = push(Op::leaf, -1, -1, std::move(value));
    nodes_.back().requires_grad = true;
    return v;
}

Var Tape::add(Var a, Var b) {
    const Matrix& x = node(a).value;
    const Matrix& y = node(b).value;
    require_same("add", x, y);
    return push(Op::add, a.id, b.id, x + y);
}

Var Tape::sub(Var a, Var b) {
    const Matrix& x = node(a).value;
    const Matrix& y = node(b).value;
    require_same("sub", x, y);
    return push(Op::sub, a.id, b.id, x - y);
}

Var Tape::mul(Var a, Var b) {
    const Matrix& x = node(a).value;
    const Matrix& y = node(b).value;
    require_same("mul", x, y);
    return push(Op::mul, a.id, b.id, x.cwiseProduct(y));
}

Var Tape::matmul(Var a, Var b) {
    const Matrix& x = node(a).value;
    const Matrix& y = node(b).value;
    if (x.cols() != y.rows())
        throw InvalidArgument("matmul: shape mismatch " + shape_string(x) + " vs " + shape_string(y));
    Matrix out(x.rows(), y.cols());
    out.noalias() = x * y;
    return push(Op::matmul, a.id, b.id, std::move(out));
}

Var Tape::tanh(Var a) {
    // sign(x) (1 - e^{-2|x|}) / (1 + e^{-2|x|})
    const Matrix& x = node(a).value;
    const auto e = (-2.0 * x.array().abs()).exp();
    Matrix out = (x.array().sign() * (1.0 - e) / (1.0 + e)).matrix();
    return push(Op::tanh, a.id, -1, std::move(out));
}

Var Tape::sigmoid(Var a) {
    const Matrix& x = node(a).value;
    Matrix out = (1.0 / (1.0 + (-x.array()).exp())).matrix();
    return push(Op::sigmoid, a.id, -1, std::move(out));
}

Var Tape::pos(Var a) { return push(Op::pos, a.id, -1, node(a).value.cwiseMax(0.0)); }

Var Tape::neg(Var a) { return push(Op::neg, a.id, -1, (-node(a).value).cwiseMax(0.0)); }

Var Tape::scale(Var a, double s) { return push(Op::scale, a.id, -1, node(a).value * s, s); }

Var Tape::add_scalar(Var a, double s) {
    return push(Op::add_scalar, a.id, -1, (node(a).value.array() + s).matrix(), s);
}

Var Tape::add_row(Var a, Var b) {
    const Matrix& x = node(a).value;
    const Matrix& y = node(b).value;
    if (y.rows() != 1 || y.cols() != x.cols())
        throw InvalidArgument("add_row: shape mismatch " + shape_string(x) + " vs " + shape_string(y));
    Matrix out = x;
    out.rowwise() += y.row(0);
    return push(Op::add_row, a.id, b.id, std::move(out));
}

Var Tape::broadcast(Var a, int rows, int cols) {
    const Matrix& x = node(a).value;
    if (x.rows() != 1 || x.cols() != 1)
        throw InvalidArgument("broadcast: expected a (1x1) operand, got " + shape_string(x));
    require(rows >= 1 && cols >= 1, "broadcast: target shape must be positive");
    return push(Op::broadcast, a.id, -1, Matrix::Constant(rows, cols, x(0, 0)));
}

Var Tape::sum(Var a) {
    Matrix out(1, 1);
    out(0, 0) = node(a).value.sum();
    return push(Op::sum, a.id, -1, std::move(out));
}

Var Tape::mean(Var a) {
    const Matrix& x = node(a).value;
    require(x.size() > 0, "mean: empty operand");
    Matrix out(1, 1);
    out(0, 0) = x.mean();
    return push(Op::mean, a.id, -1, std::move(out));
}

Var Tape::square(Var a) { return push(Op::square, a.id, -1, node(a).value.array().square().matrix()); }

Var Tape::concat_cols(Var a, Var b) {
    const Matrix& x = node(a).value;
    const Matrix& y = node(b).value;
    if (x.rows() != y.rows())
        throw InvalidArgument("concat_cols: shape mismatch " + shape_string(x) + " vs " + shape_string(y));
    Matrix out(x.rows(), x.cols() + y.cols());
    out << x, y;
    return push(Op::concat_cols, a.id, b.id, std::move(out));
}

Var Tape::slice_cols(Var a, int start, int count) {
    const Matrix& x = node(a).value;
    if (start < 0 || count < 1 || start + count > x.cols())
        throw InvalidArgument("slice_cols: columns [" + std::to_string(start) + ", " + std::to_string(start + count) +
                              ") outside " + shape_string(x));
    return push(Op::slice_cols, a.id, -1, x.middleCols(start, count), 0.0, start, count);
}

Var Tape::row_sum(Var a) { return push(Op::row_sum, a.id, -1, node(a).value.rowwise().sum()); }

const Matrix& Tape::value(Var v) const { return node(v).value; }

double Tape::scalar(Var v) const {
    const Matrix& m = node(v).value;
    if (m.rows() != 1 || m.cols() != 1) throw InvalidArgument("scalar: expected (1x1), got " + shape_string(m));
    return m(0, 0);
}

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

void Tape::accumulate(int target, const Matrix& g) {
    Node& n = nodes_[static_cast<std::size_t>(target)];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) n.grad = g;
    else n.grad += g;
}

template <class Expr>
void Tape::accumulate_expr(int target, const Expr& g) {
    Node& n = nodes_[static_cast<std::size_t>(target)];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) n.grad = g;
    else n.grad += g;
}

void Tape::backward(Var loss) {
    const Node& root = node(loss);
    if (root.value.rows() != 1 || root.value.cols() != 1)
        throw InvalidArgument("backward: loss must be a scalar (1x1), got " + shape_string(root.value));
    for (Node& n : nodes_) n.grad.resize(0, 0);
    backward_root_ = loss.id;
    if (!root.requires_grad) return;
    nodes_[static_cast<std::size_t>(loss.id)].grad = Matrix::Ones(1, 1);

    for (int i = loss.id; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.op == Op::leaf || n.grad.size() == 0 || !n.requires_grad) continue;
        const Matrix g = std::move(n.grad);
        const int a = n.a;
        const int b = n.b;
        switch (n.op) {
        case Op::leaf:
            break;
        case Op::add:
            accumulate(a, g);
            accumulate(b, g);
            break;
        case Op::sub:
            accumulate(a, g);
            accumulate_expr(b, -g);
            break;
        case Op::mul:
            if (nodes_[a].requires_grad) accumulate_expr(a, g.cwiseProduct(nodes_[b].value));
            if (nodes_[b].requires_grad) accumulate_expr(b, g.cwiseProduct(nodes_[a].value));
            break;
        case Op::matmul:
            if (nodes_[a].requires_grad) {
                Matrix ga(g.rows(), nodes_[b].value.rows());
                ga.noalias() = g * nodes_[b].value.transpose();
                accumulate(a, ga);
            }
            if (nodes_[b].requires_grad) {
                Matrix gb(nodes_[a].value.cols(), g.cols());
                gb.noalias() = nodes_[a].value.transpose() * g;
                accumulate(b, gb);
            }
            break;
        case Op::tanh:
            accumulate_expr(a, (g.array() * (1.0 - n.value.array().square())).matrix());
            break;
        case Op::sigmoid:
            accumulate_expr(a, (g.array() * n.value.array() * (1.0 - n.value.array())).matrix());
            break;
        case Op::pos:
            accumulate_expr(a, (nodes_[a].value.array() >= 0.0).select(g.array(), 0.0).matrix());
            break;
        case Op::neg:
            accumulate_expr(a, (nodes_[a].value.array() < 0.0).select(-g.array(), 0.0).matrix());
            break;
        case Op::scale:
            accumulate_expr(a, g * n.s);
            break;
        case Op::add_scalar:
            accumulate(a, g);
            break;
        case Op::add_row:
            accumulate(a, g);
            if (nodes_[b].requires_grad) accumulate_expr(b, g.colwise().sum());
            break;
        case Op::broadcast:
            accumulate_expr(a, Matrix::Constant(1, 1, g.sum()));
            break;
        case Op::sum:
            accumulate_expr(a, Matrix::Constant(nodes_[a].value.rows(), nodes_[a].value.cols(), g(0, 0)));
            break;
        case Op::mean: {
            const auto& x = nodes_[a].value;
            accumulate_expr(a, Matrix::Constant(x.rows(), x.cols(), g(0, 0) / static_cast<double>(x.size())));
            break;
        }
        case Op::square:
            accumulate_expr(a, (2.0 * g.array() * nodes_[a].value.array()).matrix());
            break;
        case Op::concat_cols: {
            const auto ca = nodes_[a].value.cols();
            if (nodes_[a].requires_grad) accumulate_expr(a, g.leftCols(ca));
            if (nodes_[b].requires_grad) accumulate_expr(b, g.rightCols(g.cols() - ca));
            break;
        }
        case Op::slice_cols: {
            Node& p = nodes_[a];
            if (!p.requires_grad) break;
            if (p.grad.size() == 0) p.grad = Matrix::Zero(p.value.rows(), p.value.cols());
            p.grad.middleCols(n.i0, n.i1) += g;
            break;
        }
        case Op::row_sum:
            accumulate_expr(a, g.replicate(1, nodes_[a].value.cols()));
            break;
        }
    }
}

Matrix Tape::grad(Var v) const {
    const Node& n = node(v);
    require(backward_root_ >= 0, "grad: backward() has not been called");
    if (n.grad.size() == 0 || v.id > backward_root_) return Matrix::Zero(n.value.rows(), n.value.cols());
    return n.grad;
}

void Tape::clear() {
    nodes_.clear();
    backward_root_ = -1;
}

GradCheckResult gradcheck(const std::function<Var(Tape&, const std::vector<Var>&)>& loss,
                          const std::vector<Matrix>& inputs, double h, double floor) {
    require(h > 0.0, "gradcheck: step must be positive");
    std::vector<Matrix> analytic;
    {
        Tape tape;
        std::vector<Var> vars;
        for (const Matrix& m : inputs) vars.push_back(tape.parameter(m));
        const Var out = loss(tape, vars);
        tape.backward(out);
        for (const Var& v : vars) analytic.push_back(tape.grad(v));
    }
    auto evaluate = [&](const std::vector<Matrix>& xs) {
        Tape tape;
        std::vector<Var> vars;
        for (const Matrix& m : xs) vars.push_back(tape.constant(m));
        return tape.scalar(loss(tape, vars));
    };

    GradCheckResult result;
    std::vector<Matrix> xs = inputs;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        Matrix numeric(xs[k].rows(), xs[k].cols());
        for (Eigen::Index i = 0; i < xs[k].size(); ++i) {
            double& x = xs[k].data()[i];
            const double saved = x;
            x = saved + h;
            const double up = evaluate(xs);
            x = saved - h;
            const double down = evaluate(xs);
            x = saved;
            numeric.data()[i] = (up - down) / (2.0 * h);
        }
        const double scale = std::max({analytic[k].lpNorm<Eigen::Infinity>(), numeric.lpNorm<Eigen::Infinity>(), floor});
        const double err = (analytic[k] - numeric).lpNorm<Eigen::Infinity>() / scale;
        result.relative_errors.push_back(err);
        result.max_relative_error = std::max(result.max_relative_error, err);
    }
    return result;
}

} // namespace xva::ad
