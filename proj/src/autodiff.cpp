#include "mskfit/autodiff.hpp"

#include <cmath>
#include <stdexcept>

#include "mskfit/detail/fd.hpp"

namespace mskfit::autodiff {

using detail::fd1_stencil;
using detail::fd2_stencil;

namespace {

bool scalar_shaped(const Matrix& m) { return m.rows() == 1 && m.cols() == 1; }

void require_same_or_scalar(const Matrix& a, const Matrix& b) {
    if (a.rows() == b.rows() && a.cols() == b.cols()) return;
    if (scalar_shaped(a) || scalar_shaped(b)) return;
    throw std::invalid_argument("autodiff: shape mismatch");
}

}  // namespace

Var Tape::push(Op op, std::vector<std::int32_t> inputs) {
    Node n;
    n.op = op;
    n.inputs = std::move(inputs);
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Tape::constant(const Matrix& value) {
    Var v = push(Op::Constant, {});
    nodes_[v.id].value = value;
    return v;
}

Var Tape::leaf(const Matrix& value) {
    Var v = push(Op::Leaf, {});
    nodes_[v.id].value = value;
    return v;
}

void Tape::set_value(Var v, const Matrix& value) {
    Node& n = nodes_[v.id];
    if (n.op != Op::Constant && n.op != Op::Leaf) {
        throw std::invalid_argument("autodiff: only constants and leaves can be overwritten");
    }
    if (n.value.rows() != value.rows() || n.value.cols() != value.cols()) {
        throw std::invalid_argument("autodiff: shape mismatch");
    }
    n.value = value;
}

std::vector<Var> Tape::inputs_of(Var v) const {
    std::vector<Var> out;
    for (auto id : nodes_[v.id].inputs) out.push_back(Var{id});
    return out;
}

Var Tape::add(Var a, Var b) {
    require_same_or_scalar(value(a), value(b));
    Var v = push(Op::Add, {a.id, b.id});
    eval(nodes_[v.id]);
    return v;
}

Var Tape::sub(Var a, Var b) {
    require_same_or_scalar(value(a), value(b));
    Var v = push(Op::Sub, {a.id, b.id});
    eval(nodes_[v.id]);
    return v;
}

Var Tape::neg(Var a) {
    Var v = push(Op::Neg, {a.id});
    eval(nodes_[v.id]);
    return v;
}

Var Tape::mul(Var a, Var b) {
    require_same_or_scalar(value(a), value(b));
    Var v = push(Op::Mul, {a.id, b.id});
    eval(nodes_[v.id]);
    return v;
}

Var Tape::matmul(Var a, Var b) {
    if (value(a).cols() != value(b).rows()) throw std::invalid_argument("autodiff: shape mismatch");
    Var v = push(Op::MatMul, {a.id, b.id});
    eval(nodes_[v.id]);
    return v;
}

Var Tape::linear(const std::vector<std::pair<Var, Var>>& terms, Var bias) {
    if (terms.empty()) throw std::invalid_argument("autodiff: linear needs at least one term");
    std::vector<std::int32_t> in;
    for (const auto& [w, x] : terms) {
        if (value(w).cols() != value(x).rows()) {
            throw std::invalid_argument("autodiff: shape mismatch");
        }
        in.push_back(w.id);
        in.push_back(x.id);
    }
    const bool has_bias = bias.valid();
    if (has_bias) in.push_back(bias.id);
    Var v = push(Op::Linear, std::move(in));
    nodes_[v.id].has_bias = has_bias;
    eval(nodes_[v.id]);
    return v;
}

Var Tape::add_col(Var x, Var bias) {
    if (value(bias).cols() != 1 || value(bias).rows() != value(x).rows()) {
        throw std::invalid_argument("autodiff: shape mismatch");
    }
    Var v = push(Op::AddCol, {x.id, bias.id});
    eval(nodes_[v.id]);
    return v;
}

Var Tape::affine(Var x, double scale, double shift) {
    Var v = push(Op::Affine, {x.id});
    nodes_[v.id].a = scale;
    nodes_[v.id].b = shift;
    eval(nodes_[v.id]);
    return v;
}

#define MSKFIT_UNARY(NAME, OP)            \
    Var Tape::NAME(Var x) {               \
        Var v = push(Op::OP, {x.id});     \
        eval(nodes_[v.id]);               \
        return v;                         \
    }
MSKFIT_UNARY(tanh, Tanh)
MSKFIT_UNARY(sigmoid, Sigmoid)
MSKFIT_UNARY(exp, Exp)
MSKFIT_UNARY(sin, Sin)
MSKFIT_UNARY(cos, Cos)
MSKFIT_UNARY(sqrt, Sqrt)
MSKFIT_UNARY(recip, Recip)
#undef MSKFIT_UNARY

Var Tape::select_le(Var src, double threshold, Var a, Var b) {
    require_same_or_scalar(value(src), value(a));
    require_same_or_scalar(value(src), value(b));
    Var v = push(Op::Select, {src.id, a.id, b.id});
    nodes_[v.id].a = threshold;
    eval(nodes_[v.id]);
    return v;
}

Var Tape::slice_cols(Var x, Eigen::Index start, Eigen::Index count) {
    if (start < 0 || count <= 0 || start + count > value(x).cols()) {
        throw std::invalid_argument("autodiff: slice out of range");
    }
    Var v = push(Op::SliceCols, {x.id});
    nodes_[v.id].i0 = start;
    nodes_[v.id].i1 = count;
    eval(nodes_[v.id]);
    return v;
}

Var Tape::fd1(Var x, double dt) {
    if (value(x).rows() != 1) throw std::invalid_argument("autodiff: fd1 expects a row vector");
    Var v = push(Op::Fd1, {x.id});
    nodes_[v.id].a = dt;
    eval(nodes_[v.id]);
    return v;
}

Var Tape::fd2(Var x, double dt) {
    if (value(x).rows() != 1) throw std::invalid_argument("autodiff: fd2 expects a row vector");
    Var v = push(Op::Fd2, {x.id});
    nodes_[v.id].a = dt;
    eval(nodes_[v.id]);
    return v;
}

Var Tape::sum(Var x) {
    Var v = push(Op::Sum, {x.id});
    eval(nodes_[v.id]);
    return v;
}

void Tape::eval(Node& n) {
    auto in = [&](std::size_t i) -> const Matrix& { return nodes_[n.inputs[i]].value; };
    auto broadcast2 = [&](auto&& f) {
        const Matrix& a = in(0);
        const Matrix& b = in(1);
        if (scalar_shaped(a) && !scalar_shaped(b)) {
            n.value = f(Matrix::Constant(b.rows(), b.cols(), a(0, 0)), b);
        } else if (scalar_shaped(b) && !scalar_shaped(a)) {
            n.value = f(a, Matrix::Constant(a.rows(), a.cols(), b(0, 0)));
        } else {
            n.value = f(a, b);
        }
    };
    switch (n.op) {
        case Op::Constant:
        case Op::Leaf:
            break;
        case Op::Add:
            broadcast2([](const Matrix& a, const Matrix& b) { return a + b; });
            break;
        case Op::Sub:
            broadcast2([](const Matrix& a, const Matrix& b) { return a - b; });
            break;
        case Op::Neg:
            n.value = -in(0);
            break;
        case Op::Mul:
            broadcast2([](const Matrix& a, const Matrix& b) -> Matrix {
                return a.cwiseProduct(b);
            });
            break;
        case Op::MatMul: {
            const Matrix& a = in(0);
            const Matrix& b = in(1);
            if (n.value.rows() != a.rows() || n.value.cols() != b.cols()) {
                n.value.resize(a.rows(), b.cols());
            }
            n.value.noalias() = a * b;
            break;
        }
        case Op::Linear: {
            const std::size_t nterms = (n.inputs.size() - (n.has_bias ? 1 : 0)) / 2;
            const Matrix& w0 = in(0);
            const Matrix& x0 = in(1);
            if (n.value.rows() != w0.rows() || n.value.cols() != x0.cols()) {
                n.value.resize(w0.rows(), x0.cols());
            }
            n.value.noalias() = w0 * x0;
            for (std::size_t t = 1; t < nterms; ++t) {
                n.value.noalias() += in(2 * t) * in(2 * t + 1);
            }
            if (n.has_bias) n.value.colwise() += in(n.inputs.size() - 1).col(0);
            break;
        }
        case Op::AddCol:
            n.value = in(0);
            n.value.colwise() += in(1).col(0);
            break;
        case Op::Affine:
            n.value = n.a * in(0).array() + n.b;
            break;
        case Op::Tanh:
            n.value = in(0).array().tanh();
            break;
        case Op::Sigmoid:
            n.value = 1.0 / (1.0 + (-in(0).array()).exp());
            break;
        case Op::Exp:
            n.value = in(0).array().exp();
            break;
        case Op::Sin:
            n.value = in(0).array().sin();
            break;
        case Op::Cos:
            n.value = in(0).array().cos();
            break;
        case Op::Sqrt:
            n.value = in(0).array().sqrt();
            break;
        case Op::Recip:
            n.value = in(0).array().inverse();
            break;
        case Op::Select: {
            const Matrix& src = in(0);
            n.mask = (src.array() <= n.a).cast<double>();
            const Matrix& a = in(1);
            const Matrix& b = in(2);
            auto expand = [&](const Matrix& m) -> Matrix {
                if (scalar_shaped(m) && !scalar_shaped(src)) {
                    return Matrix::Constant(src.rows(), src.cols(), m(0, 0));
                }
                return m;
            };
            n.value = n.mask.cwiseProduct(expand(a)) +
                      (1.0 - n.mask.array()).matrix().cwiseProduct(expand(b));
            break;
        }
        case Op::SliceCols:
            n.value = in(0).middleCols(n.i0, n.i1);
            break;
        case Op::Fd1: {
            const Matrix& x = in(0);
            const Eigen::Index len = x.cols();
            n.value = Matrix::Zero(1, len);
            const double inv = 1.0 / n.a;
            fd1_stencil(len, [&](Eigen::Index i, Eigen::Index j, double c) {
                n.value(0, i) += c * inv * x(0, j);
            });
            break;
        }
        case Op::Fd2: {
            const Matrix& x = in(0);
            const Eigen::Index len = x.cols();
            n.value = Matrix::Zero(1, len);
            const double inv = 1.0 / (n.a * n.a);
            fd2_stencil(len, [&](Eigen::Index i, Eigen::Index j, double c) {
                n.value(0, i) += c * inv * x(0, j);
            });
            break;
        }
        case Op::Sum:
            n.value = Matrix::Constant(1, 1, in(0).sum());
            break;
    }
}

void Tape::forward() {
    for (Node& n : nodes_) eval(n);
}

void Tape::accumulate(const Node& n) {
    auto inv = [&](std::size_t i) -> const Matrix& { return nodes_[n.inputs[i]].value; };
    auto inadj = [&](std::size_t i) -> Matrix& { return nodes_[n.inputs[i]].adjoint; };
    const Matrix& g = n.adjoint;
    auto add_to = [&](std::size_t i, const Matrix& contrib) {
        Matrix& a = inadj(i);
        if (scalar_shaped(inv(i)) && !scalar_shaped(contrib)) {
            a(0, 0) += contrib.sum();
        } else {
            a += contrib;
        }
    };
    switch (n.op) {
        case Op::Constant:
        case Op::Leaf:
            break;
        case Op::Add:
            add_to(0, g);
            add_to(1, g);
            break;
        case Op::Sub:
            add_to(0, g);
            add_to(1, -g);
            break;
        case Op::Neg:
            add_to(0, -g);
            break;
        case Op::Mul: {
            const Matrix& a = inv(0);
            const Matrix& b = inv(1);
            if (scalar_shaped(a) && !scalar_shaped(b)) {
                inadj(0)(0, 0) += g.cwiseProduct(b).sum();
                inadj(1) += g * a(0, 0);
            } else if (scalar_shaped(b) && !scalar_shaped(a)) {
                inadj(1)(0, 0) += g.cwiseProduct(a).sum();
                inadj(0) += g * b(0, 0);
            } else {
                inadj(0) += g.cwiseProduct(b);
                inadj(1) += g.cwiseProduct(a);
            }
            break;
        }
        case Op::MatMul:
            inadj(0).noalias() += g * inv(1).transpose();
            inadj(1).noalias() += inv(0).transpose() * g;
            break;
        case Op::Linear: {
            const std::size_t nterms = (n.inputs.size() - (n.has_bias ? 1 : 0)) / 2;
            for (std::size_t t = 0; t < nterms; ++t) {
                inadj(2 * t).noalias() += g * inv(2 * t + 1).transpose();
                inadj(2 * t + 1).noalias() += inv(2 * t).transpose() * g;
            }
            if (n.has_bias) inadj(n.inputs.size() - 1).col(0) += g.rowwise().sum();
            break;
        }
        case Op::AddCol:
            inadj(0) += g;
            inadj(1).col(0) += g.rowwise().sum();
            break;
        case Op::Affine:
            add_to(0, n.a * g);
            break;
        case Op::Tanh:
            add_to(0, g.cwiseProduct((1.0 - n.value.array().square()).matrix()));
            break;
        case Op::Sigmoid:
            add_to(0, g.cwiseProduct((n.value.array() * (1.0 - n.value.array())).matrix()));
            break;
        case Op::Exp:
            add_to(0, g.cwiseProduct(n.value));
            break;
        case Op::Sin:
            add_to(0, g.cwiseProduct(inv(0).array().cos().matrix()));
            break;
        case Op::Cos:
            add_to(0, -g.cwiseProduct(inv(0).array().sin().matrix()));
            break;
        case Op::Sqrt:
            add_to(0, (g.array() * 0.5 / n.value.array()).matrix());
            break;
        case Op::Recip:
            add_to(0, (-g.array() * n.value.array().square()).matrix());
            break;
        case Op::Select: {
            add_to(1, n.mask.cwiseProduct(g));
            add_to(2, (1.0 - n.mask.array()).matrix().cwiseProduct(g));
            break;
        }
        case Op::SliceCols:
            inadj(0).middleCols(n.i0, n.i1) += g;
            break;
        case Op::Fd1: {
            Matrix& xa = inadj(0);
            const double invdt = 1.0 / n.a;
            fd1_stencil(g.cols(), [&](Eigen::Index i, Eigen::Index j, double c) {
                xa(0, j) += c * invdt * g(0, i);
            });
            break;
        }
        case Op::Fd2: {
            Matrix& xa = inadj(0);
            const double invdt2 = 1.0 / (n.a * n.a);
            fd2_stencil(g.cols(), [&](Eigen::Index i, Eigen::Index j, double c) {
                xa(0, j) += c * invdt2 * g(0, i);
            });
            break;
        }
        case Op::Sum:
            inadj(0).array() += g(0, 0);
            break;
    }
}

void Tape::backward(Var output) {
    const Matrix& out = value(output);
    if (!scalar_shaped(out)) throw std::invalid_argument("autodiff: backward needs a scalar output");
    for (Node& n : nodes_) {
        if (n.adjoint.rows() != n.value.rows() || n.adjoint.cols() != n.value.cols()) {
            n.adjoint = Matrix::Zero(n.value.rows(), n.value.cols());
        } else {
            n.adjoint.setZero();
        }
    }
    nodes_[output.id].adjoint(0, 0) = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        accumulate(*it);
    }
}

}  // namespace mskfit::autodiff
