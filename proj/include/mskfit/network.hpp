#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mskfit/autodiff.hpp"
#include "mskfit/util.hpp"

namespace mskfit::network {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// All trainable tensors of the gated cell. Biases are stored as column
// matrices so the optimizer can treat every parameter uniformly. The hidden
// state update keeps its own additive bias (state_bias); setting the flag
// false pins that tensor at zero and excludes it from training.
struct GruWeights {
    int hidden = 0;
    int n_in = 0;
    bool state_bias = true;

    MatrixXd Whr, Wxr, Wqr;  // reset gate
    MatrixXd Whu, Wxu, Wqu;  // update gate
    MatrixXd Whc, Wxc, Wqc;  // candidate state
    MatrixXd Whq;            // readout, 1 x hidden
    MatrixXd br, bu, bc, bh, bq;

    static GruWeights init(int hidden, int n_in, std::uint64_t seed, bool state_bias = true);
    std::vector<std::pair<std::string, MatrixXd*>> params();
};

struct RnnWeights {
    int hidden = 0;
    int n_in = 0;

    MatrixXd Whh, Wxh, Wqh, Whq;
    MatrixXd bh, bq;

    static RnnWeights init(int hidden, int n_in, std::uint64_t seed);
    std::vector<std::pair<std::string, MatrixXd*>> params();
};

// History step (measured motion present): Eq.-style gated update
// h = u .* h_prev + (1 - u) .* c + bh.
VectorXd gru_history_step(const VectorXd& h_prev, const VectorXd& x, double q,
                          const GruWeights& w);
// Current step: identical with the motion-weight contributions absent.
VectorXd gru_current_step(const VectorXd& h_prev, const VectorXd& x, const GruWeights& w);
double readout(const VectorXd& h, const GruWeights& w);

VectorXd rnn_history_step(const VectorXd& h_prev, const VectorXd& x, double q,
                          const RnnWeights& w);
VectorXd rnn_current_step(const VectorXd& h_prev, const VectorXd& x, const RnnWeights& w);
double readout(const VectorXd& h, const RnnWeights& w);

enum class ModelKind { Gru, Rnn };

// Either cell behind one interface; the trainer and the checkpoint format
// only see the parameter list.
struct Surrogate {
    ModelKind kind = ModelKind::Gru;
    GruWeights gru;
    RnnWeights rnn;

    static Surrogate init(ModelKind kind, int hidden, int n_in, std::uint64_t seed,
                          bool state_bias = true);
    int hidden() const { return kind == ModelKind::Gru ? gru.hidden : rnn.hidden; }
    int n_in() const { return kind == ModelKind::Gru ? gru.n_in : rnn.n_in; }
    std::vector<std::pair<std::string, MatrixXd*>> params();

    VectorXd history_step(const VectorXd& h_prev, const VectorXd& x, double q) const;
    VectorXd current_step(const VectorXd& h_prev, const VectorXd& x) const;
    double read(const VectorXd& h) const;
};

// Teacher forcing over one window: m history steps with measured motion, the
// current step, then the affine readout. h_init defaults to zeros.
double forward_teacher(const Surrogate& model, const std::vector<VectorXd>& xs,
                       const std::vector<double>& q_hist, const VectorXd* h_init = nullptr);

// Autoregressive prediction over a full trial. xs has one n_in-vector per
// step; the first m motion values are taken from q_seed, later history slots
// reuse the model's own predictions. Returns a full-length sequence whose
// first m entries are the seed values.
std::vector<double> rollout(const Surrogate& model, const std::vector<VectorXd>& xs,
                            const std::vector<double>& q_seed, int history_steps);

// Training-time augmentation of history-step motion inputs; targets are
// never perturbed.
std::vector<double> augment_motion_noise(const std::vector<double>& q, double sigma, Rng& rng);

// Tape leaves for every parameter, in params() order.
std::vector<autodiff::Var> make_param_leaves(autodiff::Tape& tape, Surrogate& model);

// Batched window graph: x_steps holds m+1 constants (n_in x W), q_steps m
// constants (1 x W). Returns the 1 x W prediction row. The same leaves are
// reused by every step (shared parameters).
autodiff::Var build_window_graph(autodiff::Tape& tape, const Surrogate& model,
                                 const std::vector<autodiff::Var>& leaves,
                                 const std::vector<autodiff::Var>& x_steps,
                                 const std::vector<autodiff::Var>& q_steps);

}  // namespace mskfit::network
