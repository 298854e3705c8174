#include "mskfit/physics.hpp"

#include <cmath>
#include <stdexcept>

#include "mskfit/detail/fd.hpp"

namespace mskfit::physics {

double data_loss(const std::vector<double>& predictions, const std::vector<double>& targets) {
    if (predictions.empty()) throw std::invalid_argument("data_loss: empty input");
    if (predictions.size() != targets.size()) {
        throw std::invalid_argument("data_loss: length mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double e = predictions[i] - targets[i];
        acc += e * e;
    }
    return acc / static_cast<double>(predictions.size());
}

double residual_loss(const std::vector<double>& residuals) {
    if (residuals.empty()) throw std::invalid_argument("residual_loss: empty input");
    double acc = 0.0;
    for (double r : residuals) acc += r * r;
    return acc / static_cast<double>(residuals.size());
}

double total_loss(double j_data, double j_res, double beta) {
    if (beta < 0.0) throw std::invalid_argument("total_loss: beta must be >= 0");
    return j_data + beta * j_res;
}

std::vector<double> fd_first(const std::vector<double>& x, double dt) {
    const auto n = static_cast<Eigen::Index>(x.size());
    std::vector<double> y(x.size(), 0.0);
    const double inv = 1.0 / dt;
    detail::fd1_stencil(n, [&](Eigen::Index i, Eigen::Index j, double c) {
        y[static_cast<std::size_t>(i)] += c * inv * x[static_cast<std::size_t>(j)];
    });
    return y;
}

std::vector<double> fd_second(const std::vector<double>& x, double dt) {
    const auto n = static_cast<Eigen::Index>(x.size());
    std::vector<double> y(x.size(), 0.0);
    const double inv = 1.0 / (dt * dt);
    detail::fd2_stencil(n, [&](Eigen::Index i, Eigen::Index j, double c) {
        y[static_cast<std::size_t>(i)] += c * inv * x[static_cast<std::size_t>(j)];
    });
    return y;
}

std::vector<double> residual(const std::vector<double>& q_hat, const std::vector<double>& a_bi,
                             const std::vector<double>& a_tri, double dt,
                             const dynamics::ElbowGeometry& geometry,
                             const muscle::MuscleParams& kappa_bi,
                             const muscle::MuscleParams& kappa_tri) {
    if (q_hat.size() < 3) throw std::invalid_argument("residual: need at least 3 points");
    if (q_hat.size() != a_bi.size() || q_hat.size() != a_tri.size()) {
        throw std::invalid_argument("residual: sequences must share the grid");
    }
    const std::vector<double> qd = fd_first(q_hat, dt);
    const std::vector<double> qdd = fd_second(q_hat, dt);
    const double inertia = dynamics::inertia(geometry);
    std::vector<double> r(q_hat.size());
    for (std::size_t k = 0; k < q_hat.size(); ++k) {
        const dynamics::JointState s{q_hat[k], qd[k]};
        const double torque = dynamics::muscle_torque(a_bi[k], a_tri[k], s, geometry, kappa_bi,
                                                      kappa_tri);
        r[k] = inertia * qdd[k] - dynamics::external_torque(q_hat[k], geometry) - torque;
    }
    return r;
}

void IdentTargets::validate() const {
    for (double v : initial) {
        if (v <= 0.0) throw std::invalid_argument("IdentTargets: initial values must be positive");
    }
    if (mode == IdentMode::SigmoidConstrained) {
        for (const auto& a : anchors) {
            if (a.empty()) {
                throw std::invalid_argument("IdentTargets: anchors required in sigmoid mode");
            }
        }
    }
}

std::vector<autodiff::Matrix> IdentTargets::initial_trainables() const {
    validate();
    std::vector<autodiff::Matrix> out;
    for (std::size_t l = 0; l < 4; ++l) {
        if (mode == IdentMode::Normalized) {
            out.push_back(autodiff::Matrix::Ones(1, 1));
        } else {
            out.push_back(autodiff::Matrix::Zero(static_cast<Eigen::Index>(anchors[l].size()), 1));
        }
    }
    return out;
}

std::array<double, 4> IdentTargets::values(const std::vector<autodiff::Matrix>& trainables) const {
    if (trainables.size() != 4) throw std::invalid_argument("IdentTargets: need 4 tensors");
    std::array<double, 4> out{};
    for (std::size_t l = 0; l < 4; ++l) {
        if (mode == IdentMode::Normalized) {
            out[l] = trainables[l](0, 0) * initial[l];
        } else {
            std::vector<double> psi(trainables[l].data(),
                                    trainables[l].data() + trainables[l].size());
            out[l] = params_sigmoid(psi, anchors[l]);
        }
    }
    return out;
}

std::vector<double> params_normalized(const std::vector<double>& gbar,
                                      const std::vector<double>& gamma0) {
    if (gbar.size() != gamma0.size()) throw std::invalid_argument("params_normalized: size mismatch");
    std::vector<double> out(gbar.size());
    for (std::size_t i = 0; i < gbar.size(); ++i) out[i] = gbar[i] * gamma0[i];
    return out;
}

double params_sigmoid(const std::vector<double>& psi, const std::vector<double>& anchors) {
    if (anchors.empty() || psi.size() != anchors.size()) {
        throw std::invalid_argument("params_sigmoid: anchor list mismatch");
    }
    double acc = 0.0;
    for (std::size_t r = 0; r < psi.size(); ++r) {
        acc += anchors[r] / (1.0 + std::exp(-psi[r]));
    }
    return acc / static_cast<double>(anchors.size());
}

Metrics metrics(const std::vector<double>& q, const std::vector<double>& q_hat) {
    if (q.size() != q_hat.size() || q.empty()) throw std::invalid_argument("metrics: bad input");
    const auto n = static_cast<double>(q.size());
    double mean = 0.0;
    for (double v : q) mean += v;
    mean /= n;
    double sse = 0.0, sst = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double e = q[i] - q_hat[i];
        sse += e * e;
        const double d = q[i] - mean;
        sst += d * d;
    }
    if (sst == 0.0) throw std::invalid_argument("metrics: constant target");
    Metrics m;
    m.mse = sse / n;
    m.r2 = 1.0 - sse / sst;
    m.nmse = sse / sst / n;
    return m;
}

// ---- tape builders -------------------------------------------------------

namespace {

using autodiff::Tape;
using autodiff::Var;

// 9 (l - c)^2 branches of the active curve.
Var parabola(Tape& t, Var x, double center, double scale, double offset) {
    const Var e = t.affine(x, 1.0, -center);
    return t.affine(t.mul(e, e), scale, offset);
}

}  // namespace

Var active_force_length_graph(Tape& t, Var l_norm) {
    const Var low = parabola(t, l_norm, 0.4, 9.0, 0.0);
    const Var mid = parabola(t, l_norm, 1.0, -4.0, 1.0);
    const Var high = parabola(t, l_norm, 1.6, 9.0, 0.0);
    return t.select_le(l_norm, 0.6, low, t.select_le(l_norm, 1.4, mid, high));
}

Var passive_force_length_graph(Tape& t, Var l_norm) {
    const double g1 = muscle::PassiveForceConstants::gamma1;
    const double g2 = muscle::PassiveForceConstants::gamma2;
    const Var zero = t.constant(autodiff::Matrix::Zero(1, 1));
    const Var mid = t.affine(t.exp(t.affine(l_norm, g2, -g2)), g1, -g1);
    const double e04 = std::exp(0.4 * g2);
    const Var lin = t.affine(l_norm, g1 * g2 * e04, g1 * ((1.0 - 1.4 * g2) * e04 - 1.0));
    return t.select_le(l_norm, 1.0, zero, t.select_le(l_norm, 1.4, mid, lin));
}

Var force_velocity_graph(Tape& t, Var v_norm, const muscle::ForceVelocityCurve& curve) {
    const double af = curve.concentric_shape;
    const double fl = curve.eccentric_plateau;
    const Var zero = t.constant(autodiff::Matrix::Zero(1, 1));
    const Var conc = t.mul(t.affine(v_norm, 1.0, 1.0), t.recip(t.affine(v_norm, -1.0 / af, 1.0)));
    const Var c = t.affine(v_norm, 2.0 + 2.0 / af, 0.0);
    const Var ecc = t.mul(t.affine(c, fl, fl - 1.0), t.recip(t.affine(c, 1.0, fl - 1.0)));
    return t.select_le(v_norm, -1.0, zero, t.select_le(v_norm, 0.0, conc, ecc));
}

namespace {

// F_m l1 l2 sin(q) / lMT for one muscle, everything batched over the row.
Var muscle_torque_graph(Tape& t, Var sin_q, Var cos_q, Var qd, const muscle::MusclePath& path,
                        const muscle::MuscleParams& kappa, const std::vector<double>& act,
                        MuscleVars vars) {
    const double l1 = path.l1, l2 = path.l2;
    const double cos_sign = path.extensor ? 2.0 * l1 * l2 : -2.0 * l1 * l2;
    const Var lmt = t.sqrt(t.affine(cos_q, cos_sign, l1 * l1 + l2 * l2));
    const double cphi = std::cos(kappa.phi0);
    const Var lm = t.affine(lmt, 1.0 / cphi, -kappa.lst / cphi);
    const Var l_norm = t.mul(lm, t.recip(vars.l0));
    const double arm_sign = path.extensor ? -l1 * l2 : l1 * l2;
    const Var arm = t.mul(t.affine(sin_q, arm_sign, 0.0), t.recip(lmt));
    const Var v_norm = t.affine(t.mul(arm, qd), 1.0 / (cphi * kappa.vmax), 0.0);

    const Var a = t.constant(Eigen::Map<const Eigen::RowVectorXd>(act.data(),
                                                                  static_cast<Eigen::Index>(act.size())));
    const Var fal = active_force_length_graph(t, l_norm);
    const Var fv = force_velocity_graph(t, v_norm);
    const Var fpl = passive_force_length_graph(t, l_norm);
    const Var fm = t.affine(t.add(t.mul(t.mul(a, fal), fv), fpl), cphi, 0.0);
    const Var force = t.mul(vars.f0, fm);
    // torque factor l1 l2 sin(q) / lMT, positive for both muscles as printed
    const Var tfac = t.mul(t.affine(sin_q, l1 * l2, 0.0), t.recip(lmt));
    return t.mul(force, tfac);
}

}  // namespace

Var residual_graph(Tape& t, Var q_hat, const std::vector<double>& a_bi,
                   const std::vector<double>& a_tri, double dt,
                   const dynamics::ElbowGeometry& geometry, const muscle::MuscleParams& kappa_bi,
                   const muscle::MuscleParams& kappa_tri, MuscleVars bi, MuscleVars tri) {
    const auto n = static_cast<std::size_t>(t.value(q_hat).cols());
    if (n < 3 || a_bi.size() != n || a_tri.size() != n) {
        throw std::invalid_argument("residual_graph: sequences must share the grid");
    }
    const Var qd = t.fd1(q_hat, dt);
    const Var qdd = t.fd2(q_hat, dt);
    const Var sin_q = t.sin(q_hat);
    const Var cos_q = t.cos(q_hat);
    const double mgl = geometry.m_fa * geometry.g * geometry.l_fa;
    const Var external = t.affine(sin_q, -mgl, 0.0);
    const Var torque_bi =
        muscle_torque_graph(t, sin_q, cos_q, qd, geometry.biceps_path(), kappa_bi, a_bi, bi);
    const Var torque_tri =
        muscle_torque_graph(t, sin_q, cos_q, qd, geometry.triceps_path(), kappa_tri, a_tri, tri);
    const Var torque = t.sub(torque_bi, torque_tri);
    const Var lhs = t.affine(qdd, dynamics::inertia(geometry), 0.0);
    return t.sub(t.sub(lhs, external), torque);
}

IdentGraph build_ident_graph(Tape& t, const IdentTargets& targets,
                             const std::vector<autodiff::Matrix>& trainables) {
    targets.validate();
    if (trainables.size() != 4) throw std::invalid_argument("build_ident_graph: need 4 tensors");
    IdentGraph g;
    for (std::size_t l = 0; l < 4; ++l) {
        const Var leaf = t.leaf(trainables[l]);
        g.leaves.push_back(leaf);
        if (targets.mode == IdentMode::Normalized) {
            g.gamma[l] = t.affine(leaf, targets.initial[l], 0.0);
        } else {
            const auto& a = targets.anchors[l];
            const Var anchors = t.constant(
                Eigen::Map<const Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size())));
            const Var mixed = t.sum(t.mul(anchors, t.sigmoid(leaf)));
            g.gamma[l] = t.affine(mixed, 1.0 / static_cast<double>(a.size()), 0.0);
        }
    }
    return g;
}

}  // namespace mskfit::physics
