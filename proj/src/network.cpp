#include "mskfit/network.hpp"

#include <cmath>
#include <stdexcept>

namespace mskfit::network {

namespace {

// U(-1/sqrt(H), 1/sqrt(H)) entries in row-major order, matching the row-wise
// draw convention used for every weight matrix; biases start at zero.
void fill_uniform(MatrixXd& m, double bound, Rng& rng) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            m(r, c) = rng.uniform(-bound, bound);
        }
    }
}

VectorXd sigmoid_vec(const VectorXd& z) {
    return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

}  // namespace

GruWeights GruWeights::init(int hidden, int n_in, std::uint64_t seed, bool state_bias) {
    if (hidden < 1 || n_in < 1) throw std::invalid_argument("GruWeights: bad sizes");
    GruWeights w;
    w.hidden = hidden;
    w.n_in = n_in;
    w.state_bias = state_bias;
    Rng rng(mix_seed(seed, 0x677275ULL));
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    auto mk = [&](Eigen::Index r, Eigen::Index c) {
        MatrixXd m(r, c);
        fill_uniform(m, bound, rng);
        return m;
    };
    w.Whr = mk(hidden, hidden); w.Wxr = mk(hidden, n_in); w.Wqr = mk(hidden, 1);
    w.Whu = mk(hidden, hidden); w.Wxu = mk(hidden, n_in); w.Wqu = mk(hidden, 1);
    w.Whc = mk(hidden, hidden); w.Wxc = mk(hidden, n_in); w.Wqc = mk(hidden, 1);
    w.Whq = mk(1, hidden);
    w.br = MatrixXd::Zero(hidden, 1);
    w.bu = MatrixXd::Zero(hidden, 1);
    w.bc = MatrixXd::Zero(hidden, 1);
    w.bh = MatrixXd::Zero(hidden, 1);
    w.bq = MatrixXd::Zero(1, 1);
    return w;
}

std::vector<std::pair<std::string, MatrixXd*>> GruWeights::params() {
    std::vector<std::pair<std::string, MatrixXd*>> p = {
        {"Whr", &Whr}, {"Wxr", &Wxr}, {"Wqr", &Wqr}, {"br", &br},
        {"Whu", &Whu}, {"Wxu", &Wxu}, {"Wqu", &Wqu}, {"bu", &bu},
        {"Whc", &Whc}, {"Wxc", &Wxc}, {"Wqc", &Wqc}, {"bc", &bc},
        {"Whq", &Whq}, {"bq", &bq},
    };
    if (state_bias) p.push_back({"bh", &bh});
    return p;
}

RnnWeights RnnWeights::init(int hidden, int n_in, std::uint64_t seed) {
    if (hidden < 1 || n_in < 1) throw std::invalid_argument("RnnWeights: bad sizes");
    RnnWeights w;
    w.hidden = hidden;
    w.n_in = n_in;
    Rng rng(mix_seed(seed, 0x726e6eULL));
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    auto mk = [&](Eigen::Index r, Eigen::Index c) {
        MatrixXd m(r, c);
        fill_uniform(m, bound, rng);
        return m;
    };
    w.Whh = mk(hidden, hidden);
    w.Wxh = mk(hidden, n_in);
    w.Wqh = mk(hidden, 1);
    w.Whq = mk(1, hidden);
    w.bh = MatrixXd::Zero(hidden, 1);
    w.bq = MatrixXd::Zero(1, 1);
    return w;
}

std::vector<std::pair<std::string, MatrixXd*>> RnnWeights::params() {
    return {{"Whh", &Whh}, {"Wxh", &Wxh}, {"Wqh", &Wqh}, {"bh", &bh}, {"Whq", &Whq}, {"bq", &bq}};
}

VectorXd gru_history_step(const VectorXd& h_prev, const VectorXd& x, double q,
                          const GruWeights& w) {
    const VectorXd r = sigmoid_vec(w.Whr * h_prev + w.Wxr * x + w.Wqr.col(0) * q + w.br.col(0));
    const VectorXd u = sigmoid_vec(w.Whu * h_prev + w.Wxu * x + w.Wqu.col(0) * q + w.bu.col(0));
    const VectorXd z = r.cwiseProduct(w.Whc * h_prev);
    const VectorXd c = (z + w.Wxc * x + w.Wqc.col(0) * q + w.bc.col(0)).array().tanh().matrix();
    VectorXd h = u.cwiseProduct(h_prev) + c - u.cwiseProduct(c);
    if (w.state_bias) h += w.bh.col(0);
    return h;
}

VectorXd gru_current_step(const VectorXd& h_prev, const VectorXd& x, const GruWeights& w) {
    const VectorXd r = sigmoid_vec(w.Whr * h_prev + w.Wxr * x + w.br.col(0));
    const VectorXd u = sigmoid_vec(w.Whu * h_prev + w.Wxu * x + w.bu.col(0));
    const VectorXd z = r.cwiseProduct(w.Whc * h_prev);
    const VectorXd c = (z + w.Wxc * x + w.bc.col(0)).array().tanh().matrix();
    VectorXd h = u.cwiseProduct(h_prev) + c - u.cwiseProduct(c);
    if (w.state_bias) h += w.bh.col(0);
    return h;
}

double readout(const VectorXd& h, const GruWeights& w) {
    return (w.Whq * h)(0) + w.bq(0, 0);
}

VectorXd rnn_history_step(const VectorXd& h_prev, const VectorXd& x, double q,
                          const RnnWeights& w) {
    return (w.Whh * h_prev + w.Wxh * x + w.Wqh.col(0) * q + w.bh.col(0)).array().tanh().matrix();
}

VectorXd rnn_current_step(const VectorXd& h_prev, const VectorXd& x, const RnnWeights& w) {
    return (w.Whh * h_prev + w.Wxh * x + w.bh.col(0)).array().tanh().matrix();
}

double readout(const VectorXd& h, const RnnWeights& w) {
    return (w.Whq * h)(0) + w.bq(0, 0);
}

Surrogate Surrogate::init(ModelKind kind, int hidden, int n_in, std::uint64_t seed,
                          bool state_bias) {
    Surrogate s;
    s.kind = kind;
    if (kind == ModelKind::Gru) {
        s.gru = GruWeights::init(hidden, n_in, seed, state_bias);
    } else {
        s.rnn = RnnWeights::init(hidden, n_in, seed);
    }
    return s;
}

std::vector<std::pair<std::string, MatrixXd*>> Surrogate::params() {
    return kind == ModelKind::Gru ? gru.params() : rnn.params();
}

VectorXd Surrogate::history_step(const VectorXd& h_prev, const VectorXd& x, double q) const {
    return kind == ModelKind::Gru ? gru_history_step(h_prev, x, q, gru)
                                  : rnn_history_step(h_prev, x, q, rnn);
}

VectorXd Surrogate::current_step(const VectorXd& h_prev, const VectorXd& x) const {
    return kind == ModelKind::Gru ? gru_current_step(h_prev, x, gru)
                                  : rnn_current_step(h_prev, x, rnn);
}

double Surrogate::read(const VectorXd& h) const {
    return kind == ModelKind::Gru ? readout(h, gru) : readout(h, rnn);
}

double forward_teacher(const Surrogate& model, const std::vector<VectorXd>& xs,
                       const std::vector<double>& q_hist, const VectorXd* h_init) {
    if (xs.size() != q_hist.size() + 1) {
        throw std::invalid_argument("forward_teacher: window needs m history inputs plus one");
    }
    VectorXd h = h_init ? *h_init : VectorXd::Zero(model.hidden());
    for (std::size_t i = 0; i < q_hist.size(); ++i) {
        h = model.history_step(h, xs[i], q_hist[i]);
    }
    h = model.current_step(h, xs.back());
    return model.read(h);
}

std::vector<double> rollout(const Surrogate& model, const std::vector<VectorXd>& xs,
                            const std::vector<double>& q_seed, int history_steps) {
    const auto n = xs.size();
    const auto m = static_cast<std::size_t>(history_steps);
    if (n <= m) throw std::invalid_argument("rollout: sequence shorter than the window");
    if (q_seed.size() < m) throw std::invalid_argument("rollout: seed window too short");
    std::vector<double> q(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) q[i] = q_seed[i];
    for (std::size_t k = m; k < n; ++k) {
        VectorXd h = VectorXd::Zero(model.hidden());
        for (std::size_t i = k - m; i < k; ++i) {
            h = model.history_step(h, xs[i], q[i]);
        }
        h = model.current_step(h, xs[k]);
        q[k] = model.read(h);
    }
    return q;
}

std::vector<double> augment_motion_noise(const std::vector<double>& q, double sigma, Rng& rng) {
    if (sigma < 0.0) throw std::invalid_argument("augment_motion_noise: sigma must be >= 0");
    std::vector<double> out(q);
    if (sigma == 0.0) return out;
    for (auto& v : out) v += sigma * rng.gaussian();
    return out;
}

std::vector<autodiff::Var> make_param_leaves(autodiff::Tape& tape, Surrogate& model) {
    std::vector<autodiff::Var> leaves;
    for (auto& [name, mat] : model.params()) {
        (void)name;
        leaves.push_back(tape.leaf(*mat));
    }
    return leaves;
}

namespace {

using autodiff::Tape;
using autodiff::Var;

struct GruLeaves {
    Var Whr, Wxr, Wqr, br, Whu, Wxu, Wqu, bu, Whc, Wxc, Wqc, bc, Whq, bq, bh;
    bool state_bias = false;
};

GruLeaves unpack_gru(const std::vector<autodiff::Var>& leaves, bool state_bias) {
    if (leaves.size() != (state_bias ? 15u : 14u)) {
        throw std::invalid_argument("build_window_graph: leaf count mismatch");
    }
    GruLeaves g;
    g.Whr = leaves[0]; g.Wxr = leaves[1]; g.Wqr = leaves[2]; g.br = leaves[3];
    g.Whu = leaves[4]; g.Wxu = leaves[5]; g.Wqu = leaves[6]; g.bu = leaves[7];
    g.Whc = leaves[8]; g.Wxc = leaves[9]; g.Wqc = leaves[10]; g.bc = leaves[11];
    g.Whq = leaves[12]; g.bq = leaves[13];
    g.state_bias = state_bias;
    if (state_bias) g.bh = leaves[14];
    return g;
}

Var gru_step_graph(Tape& t, const GruLeaves& g, Var h_prev, Var x, Var q, bool with_q) {
    std::vector<std::pair<Var, Var>> rt = {{g.Whr, h_prev}, {g.Wxr, x}};
    std::vector<std::pair<Var, Var>> ut = {{g.Whu, h_prev}, {g.Wxu, x}};
    std::vector<std::pair<Var, Var>> ct = {{g.Wxc, x}};
    if (with_q) {
        rt.push_back({g.Wqr, q});
        ut.push_back({g.Wqu, q});
        ct.push_back({g.Wqc, q});
    }
    const Var r = t.sigmoid(t.linear(rt, g.br));
    const Var u = t.sigmoid(t.linear(ut, g.bu));
    const Var z = t.mul(r, t.matmul(g.Whc, h_prev));
    Var pre = t.add(t.linear(ct, g.bc), z);
    const Var c = t.tanh(pre);
    // u .* h_prev + c - u .* c (+ bh)
    Var h = t.sub(t.add(t.mul(u, h_prev), c), t.mul(u, c));
    if (g.state_bias) h = t.add_col(h, g.bh);
    return h;
}

}  // namespace

autodiff::Var build_window_graph(autodiff::Tape& tape, const Surrogate& model,
                                 const std::vector<autodiff::Var>& leaves,
                                 const std::vector<autodiff::Var>& x_steps,
                                 const std::vector<autodiff::Var>& q_steps) {
    if (x_steps.size() != q_steps.size() + 1) {
        throw std::invalid_argument("build_window_graph: need m history inputs plus one");
    }
    const Eigen::Index width = tape.value(x_steps[0]).cols();
    Var h = tape.constant(autodiff::Matrix::Zero(model.hidden(), width));
    if (model.kind == ModelKind::Gru) {
        const GruLeaves g = unpack_gru(leaves, model.gru.state_bias);
        for (std::size_t s = 0; s < q_steps.size(); ++s) {
            h = gru_step_graph(tape, g, h, x_steps[s], q_steps[s], true);
        }
        h = gru_step_graph(tape, g, h, x_steps.back(), Var{}, false);
        return tape.linear({{g.Whq, h}}, g.bq);
    }
    if (leaves.size() != 6) throw std::invalid_argument("build_window_graph: leaf count mismatch");
    const Var Whh = leaves[0], Wxh = leaves[1], Wqh = leaves[2], bh = leaves[3], Whq = leaves[4],
              bq = leaves[5];
    for (std::size_t s = 0; s < q_steps.size(); ++s) {
        h = tape.tanh(tape.linear({{Whh, h}, {Wxh, x_steps[s]}, {Wqh, q_steps[s]}}, bh));
    }
    h = tape.tanh(tape.linear({{Whh, h}, {Wxh, x_steps.back()}}, bh));
    return tape.linear({{Whq, h}}, bq);
}

}  // namespace mskfit::network
