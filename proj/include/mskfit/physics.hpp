#pragma once

#include <array>
#include <vector>

#include "mskfit/autodiff.hpp"
#include "mskfit/dynamics.hpp"
#include "mskfit/muscle.hpp"

namespace mskfit::physics {

struct LossConfig {
    double beta = 1e-3;  // residual penalty weight, beta ~ dt^2 / I
};

// Mean of squared errors over samples.
double data_loss(const std::vector<double>& predictions, const std::vector<double>& targets);
// Mean of squared residuals.
double residual_loss(const std::vector<double>& residuals);
// J = J_data + beta * J_res
double total_loss(double j_data, double j_res, double beta);

// Grid derivatives of a predicted sequence (central stencils, second-order
// one-sided at the ends).
std::vector<double> fd_first(const std::vector<double>& x, double dt);
std::vector<double> fd_second(const std::vector<double>& x, double dt);

// Equation-of-motion residual per step:
// r_k = I qdd_k - E(q_k) - T(a_bi_k, a_tri_k, q_k, qd_k), with qd, qdd from
// finite differences of the predicted sequence. Needs at least 3 points.
std::vector<double> residual(const std::vector<double>& q_hat, const std::vector<double>& a_bi,
                             const std::vector<double>& a_tri, double dt,
                             const dynamics::ElbowGeometry& geometry,
                             const muscle::MuscleParams& kappa_bi,
                             const muscle::MuscleParams& kappa_tri);

enum class IdentMode { Normalized, SigmoidConstrained };

// The four identified parameters, in fixed order f0_bi, l0_bi, f0_tri, l0_tri.
struct IdentTargets {
    IdentMode mode = IdentMode::Normalized;
    std::array<double, 4> initial{300.0, 0.6, 300.0, 0.4};  // Gamma^(0), Normalized mode
    std::array<std::vector<double>, 4> anchors;             // literature values, Sigmoid mode

    static constexpr std::array<const char*, 4> names{"f0_bi", "l0_bi", "f0_tri", "l0_tri"};
    void validate() const;

    // Fresh trainable tensors: 1x1 ones (Normalized) or N_l x 1 zeros
    // (Sigmoid).
    std::vector<autodiff::Matrix> initial_trainables() const;
    // Plain evaluation of the parameter transform.
    std::array<double, 4> values(const std::vector<autodiff::Matrix>& trainables) const;
};

// Gamma_l = gbar_l * gamma0_l
std::vector<double> params_normalized(const std::vector<double>& gbar,
                                      const std::vector<double>& gamma0);
// Gamma = mean_r anchors_r * sig(psi_r); strictly inside (0, mean anchors).
double params_sigmoid(const std::vector<double>& psi, const std::vector<double>& anchors);

struct Metrics {
    double mse = 0.0;
    double r2 = 0.0;
    double nmse = 0.0;
};

// MSE, R^2 and the (1 - R^2)/n normalized error. Throws on a constant
// target sequence.
Metrics metrics(const std::vector<double>& q, const std::vector<double>& q_hat);

// ---- tape builders -------------------------------------------------------

// Piecewise Hill curves as recorded select chains (boundaries belong to the
// lower branch). Exposed separately so they can be gradient-checked.
autodiff::Var active_force_length_graph(autodiff::Tape& tape, autodiff::Var l_norm);
autodiff::Var passive_force_length_graph(autodiff::Tape& tape, autodiff::Var l_norm);
autodiff::Var force_velocity_graph(autodiff::Tape& tape, autodiff::Var v_norm,
                                   const muscle::ForceVelocityCurve& curve = {});

struct MuscleVars {
    autodiff::Var f0;  // scalar
    autodiff::Var l0;  // scalar
};

// Differentiable residual over a predicted row; activations enter as fixed
// data, f0/l0 of both muscles as tape scalars, the rest of kappa from the
// fixed parameter structs.
autodiff::Var residual_graph(autodiff::Tape& tape, autodiff::Var q_hat,
                             const std::vector<double>& a_bi, const std::vector<double>& a_tri,
                             double dt, const dynamics::ElbowGeometry& geometry,
                             const muscle::MuscleParams& kappa_bi,
                             const muscle::MuscleParams& kappa_tri, MuscleVars bi, MuscleVars tri);

// Leaves for the identification trainables plus the four Gamma scalars.
struct IdentGraph {
    std::vector<autodiff::Var> leaves;
    std::array<autodiff::Var, 4> gamma;
};
IdentGraph build_ident_graph(autodiff::Tape& tape, const IdentTargets& targets,
                             const std::vector<autodiff::Matrix>& trainables);

}  // namespace mskfit::physics
