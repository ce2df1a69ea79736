#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace xva::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Handle to a node on a Tape. Only meaningful together with the tape that made it.
struct Var {
    int id = -1;
};

enum class Op {
    leaf,
    add,
    sub,
    mul,
    matmul,
    tanh,
    sigmoid,
    pos,
    neg,
    scale,
    add_scalar,
    add_row,
    broadcast,
    sum,
    mean,
    square,
    concat_cols,
    slice_cols,
    row_sum,
};

std::string shape_string(const Matrix& m);

/// Define-by-run reverse-mode tape. Nodes are appended in evaluation order,
/// so the node list is already topologically sorted.
class Tape {
public:
    Tape() = default;

    /// Leaf that never receives a gradient.
    Var constant(Matrix value);
    Var constant(double value);
    /// Leaf whose gradient is tracked.
    Var parameter(Matrix value);

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    /// Elementwise product.
    Var mul(Var a, Var b);
    Var matmul(Var a, Var b);
    Var tanh(Var a);
    Var sigmoid(Var a);
    /// y^+ = max(y, 0); derivative 1 at y = 0.
    Var pos(Var a);
    /// y^- = max(-y, 0); derivative 0 at y = 0.
    Var neg(Var a);
    Var scale(Var a, double s);
    Var add_scalar(Var a, double s);
    /// a (n x p) plus the row vector b (1 x p) on every row.
    Var add_row(Var a, Var b);
    /// 1 x 1 value repeated to rows x cols.
    Var broadcast(Var a, int rows, int cols);
    Var sum(Var a);
    Var mean(Var a);
    Var square(Var a);
    Var concat_cols(Var a, Var b);
    Var slice_cols(Var a, int start, int count);
    /// n x p -> n x 1.
    Var row_sum(Var a);

    const Matrix& value(Var v) const;
    double scalar(Var v) const;
    bool requires_grad(Var v) const;

    /// Reverse sweep from a 1 x 1 loss. Afterwards grad() returns d loss / d node.
    void backward(Var loss);
    /// Gradient of a leaf after the last backward(); zeros if the leaf was not reached.
    Matrix grad(Var v) const;

    std::size_t size() const noexcept { return nodes_.size(); }
    void clear();

private:
    struct Node {
        Op op = Op::leaf;
        int a = -1;
        int b = -1;
        double s = 0.0;
        int i0 = 0;
        int i1 = 0;
        bool requires_grad = false;
        Matrix value;
        Matrix grad;
    };

    const Node& node(Var v) const;
    Var push(Op op, int a, int b, Matrix value, double s = 0.0, int i0 = 0, int i1 = 0);
    void accumulate(int target, const Matrix& g);
    template <class Expr>
    void accumulate_expr(int target, const Expr& g);

    std::vector<Node> nodes_;
    int backward_root_ = -1;
};

struct GradCheckResult {
    /// Per input: max |analytic - numeric| / max(|analytic|_inf, |numeric|_inf, floor).
    std::vector<double> relative_errors;
    double max_relative_error = 0.0;
};

/// Compares tape gradients of `loss(tape, inputs)` with central differences of step h.
GradCheckResult gradcheck(const std::function<Var(Tape&, const std::vector<Var>&)>& loss,
                          const std::vector<Matrix>& inputs, double h = 1e-6, double floor = 1e-8);

} // namespace xva::ad
