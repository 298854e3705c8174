#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace mskfit::autodiff {

using Matrix = Eigen::MatrixXd;

// Handle into a Tape. Scalars are 1x1 matrices.
struct Var {
    std::int32_t id = -1;
    bool valid() const { return id >= 0; }
};

enum class Op : std::uint8_t {
    Constant,
    Leaf,
    Add,
    Sub,
    Neg,
    Mul,      // elementwise; either side may be 1x1 (broadcast)
    MatMul,
    Linear,   // sum_i W_i X_i (+ column-broadcast bias)
    AddCol,   // X + column-broadcast bias
    Affine,   // a * x + b with plain-double a, b
    Tanh,
    Sigmoid,
    Exp,
    Sin,
    Cos,
    Sqrt,
    Recip,
    Select,   // per element: value(src) <= threshold ? a : b
    SliceCols,
    Fd1,      // first time derivative along a row (second-order stencils)
    Fd2,      // second time derivative along a row
    Sum,      // scalar sum of all entries
};

// Reverse-mode tape over matrix-valued nodes. The graph is recorded once;
// forward() re-evaluates every node in order (so constants and leaves can be
// re-pointed between passes) and backward() accumulates adjoints. One tape is
// confined to one thread at a time.
class Tape {
public:
    Var constant(const Matrix& value);
    Var leaf(const Matrix& value);

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var neg(Var a);
    Var mul(Var a, Var b);
    Var matmul(Var a, Var b);
    // terms = {(W0, X0), (W1, X1), ...}; bias (rows x 1) broadcast over
    // columns, pass an invalid Var for none.
    Var linear(const std::vector<std::pair<Var, Var>>& terms, Var bias);
    Var add_col(Var x, Var bias);
    Var affine(Var x, double scale, double shift);
    Var tanh(Var x);
    Var sigmoid(Var x);
    Var exp(Var x);
    Var sin(Var x);
    Var cos(Var x);
    Var sqrt(Var x);
    Var recip(Var x);
    // Boundary belongs to the lower branch; no gradient flows through src.
    Var select_le(Var src, double threshold, Var a, Var b);
    Var slice_cols(Var x, Eigen::Index start, Eigen::Index count);
    Var fd1(Var x, double dt);
    Var fd2(Var x, double dt);
    Var sum(Var x);

    void forward();
    // output must be scalar (1x1); zeroes all adjoints first.
    void backward(Var output);

    const Matrix& value(Var v) const { return nodes_[v.id].value; }
    const Matrix& adjoint(Var v) const { return nodes_[v.id].adjoint; }
    // Overwrites a Constant or Leaf value (shape must match).
    void set_value(Var v, const Matrix& value);
    std::vector<Var> inputs_of(Var v) const;
    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Op op;
        std::vector<std::int32_t> inputs;
        Matrix value;
        Matrix adjoint;
        double a = 0.0;      // Affine scale / Select threshold / Fd dt
        double b = 0.0;      // Affine shift
        Eigen::Index i0 = 0; // SliceCols start
        Eigen::Index i1 = 0; // SliceCols count
        Matrix mask;         // Select mask, recomputed each forward
        bool has_bias = false;
    };

    Var push(Op op, std::vector<std::int32_t> inputs);
    void eval(Node& n);
    void accumulate(const Node& n);

    std::vector<Node> nodes_;
};

}  // namespace mskfit::autodiff
