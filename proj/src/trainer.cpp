#include "mskfit/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "mskfit/wavelet.hpp"

namespace mskfit::trainer {

using autodiff::Matrix;
using autodiff::Tape;
using autodiff::Var;

void TrainConfig::validate() const {
    if (scales.empty() || scales.back() != 0) {
        throw std::invalid_argument("TrainConfig: scales must end at 0");
    }
    for (std::size_t i = 0; i + 1 < scales.size(); ++i) {
        if (scales[i] >= scales[i + 1]) {
            throw std::invalid_argument("TrainConfig: scales must be strictly increasing");
        }
    }
    if (epochs_total < 0) throw std::invalid_argument("TrainConfig: negative epoch budget");
    if (learning_rate <= 0.0) throw std::invalid_argument("TrainConfig: learning rate must be positive");
    if (beta < 0.0) throw std::invalid_argument("TrainConfig: beta must be >= 0");
    if (history_steps < 0) throw std::invalid_argument("TrainConfig: negative history steps");
    if (hidden_size < 1) throw std::invalid_argument("TrainConfig: hidden size must be >= 1");
    if (noise_sigma < 0.0) throw std::invalid_argument("TrainConfig: negative noise sigma");
    if (early_stop_patience < 1) throw std::invalid_argument("TrainConfig: patience must be >= 1");
    ident.validate();
}

int TrainConfig::epochs_for_scale(std::size_t scale_index) const {
    const auto k = scales.size();
    const int base = epochs_total / static_cast<int>(k);
    const int rem = epochs_total - base * static_cast<int>(k);
    return base + (scale_index + 1 == k ? rem : 0);
}

AdamState make_adam_state(const std::vector<Matrix*>& params) {
    AdamState s;
    for (const Matrix* p : params) {
        s.m.push_back(Matrix::Zero(p->rows(), p->cols()));
        s.v.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
    return s;
}

void adam_step(std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads,
               AdamState& state, double lr, const AdamConfig& cfg) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw std::invalid_argument("adam_step: size mismatch");
    }
    for (const Matrix* g : grads) {
        if (!g->allFinite()) throw std::runtime_error("diverged");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Matrix& m = state.m[i];
        Matrix& v = state.v[i];
        const Matrix& g = *grads[i];
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v.array().matrix() + (1.0 - cfg.beta2) * g.cwiseProduct(g);
        const Matrix mhat = m / bc1;
        const Matrix vhat = v / bc2;
        params[i]->array() -= lr * mhat.array() / (vhat.array().sqrt() + cfg.eps);
    }
}

TrainState init_state(const TrainConfig& config, std::uint64_t seed) {
    config.validate();
    TrainState s;
    s.net = network::Surrogate::init(config.model, config.hidden_size, 3,
                                     mix_seed(seed, 0x696e6974ULL), config.state_bias);
    s.ident = config.ident.initial_trainables();
    s.run_seed = seed;
    return s;
}

namespace {

struct TrialGraph {
    std::vector<Var> q_hist;       // m mutable constants, refreshed per epoch
    std::vector<double> q_meas;    // projected measured motion (noise base)
    Eigen::Index width = 0;
    int history = 0;
};

std::vector<double> activations_for(const TimeSeries& emg, const muscle::ActivationParams& act) {
    const TimeSeries u = muscle::excitation_from_emg(emg, act);
    std::vector<double> a(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) a[k] = muscle::activation(u[k], act.shape);
    return a;
}

}  // namespace

TrainState train_scale(const std::vector<Trial>& dataset, TrainState state,
                       const TrainConfig& config, int scale_label, int epochs) {
    config.validate();
    if (dataset.empty()) throw std::invalid_argument("train_scale: empty dataset");
    const int m = config.history_steps;
    const double dt = dataset[0].q.dt;

    Tape tape;
    auto net_leaves = network::make_param_leaves(tape, state.net);
    auto identg = physics::build_ident_graph(tape, config.ident, state.ident);
    const physics::MuscleVars bi{identg.gamma[0], identg.gamma[1]};
    const physics::MuscleVars tri{identg.gamma[2], identg.gamma[3]};

    std::vector<TrialGraph> graphs;
    Var sse_data_total, sse_res_total;
    std::size_t total_windows = 0;
    for (const Trial& tr : dataset) {
        const auto n = tr.q.size();
        if (tr.e_bi.size() != n || tr.e_tri.size() != n || tr.e_bi.dt != tr.q.dt) {
            throw std::invalid_argument("train_scale: trial channels must share the grid");
        }
        if (n < static_cast<std::size_t>(m) + 3) {
            throw std::invalid_argument("train_scale: trial too short for the window");
        }
        const auto width = static_cast<Eigen::Index>(n - static_cast<std::size_t>(m));

        TrialGraph tg;
        tg.width = width;
        tg.history = m;
        tg.q_meas = tr.q.values;

        std::vector<Var> x_steps;
        for (int s = 0; s <= m; ++s) {
            Matrix x(3, width);
            for (Eigen::Index w = 0; w < width; ++w) {
                const auto i = static_cast<std::size_t>(w) + static_cast<std::size_t>(s);
                x(0, w) = tr.q.time_at(i);
                x(1, w) = tr.e_bi[i];
                x(2, w) = tr.e_tri[i];
            }
            x_steps.push_back(tape.constant(x));
        }
        for (int s = 0; s < m; ++s) {
            Matrix q(1, width);
            for (Eigen::Index w = 0; w < width; ++w) {
                q(0, w) = tr.q[static_cast<std::size_t>(w) + static_cast<std::size_t>(s)];
            }
            tg.q_hist.push_back(tape.constant(q));
        }

        const Var pred = network::build_window_graph(tape, state.net, net_leaves, x_steps, tg.q_hist);

        Matrix target(1, width);
        for (Eigen::Index w = 0; w < width; ++w) {
            target(0, w) = tr.q[static_cast<std::size_t>(w) + static_cast<std::size_t>(m)];
        }
        const Var diff = tape.sub(pred, tape.constant(target));
        const Var sse_data = tape.sum(tape.mul(diff, diff));

        const auto a_bi_full = activations_for(tr.e_bi, config.setup.activation);
        const auto a_tri_full = activations_for(tr.e_tri, config.setup.activation);
        const std::vector<double> a_bi(a_bi_full.begin() + m, a_bi_full.end());
        const std::vector<double> a_tri(a_tri_full.begin() + m, a_tri_full.end());
        const Var res = physics::residual_graph(tape, pred, a_bi, a_tri, dt, config.setup.geometry,
                                                config.setup.kappa_bi, config.setup.kappa_tri, bi,
                                                tri);
        const Var sse_res = tape.sum(tape.mul(res, res));

        sse_data_total = sse_data_total.valid() ? tape.add(sse_data_total, sse_data) : sse_data;
        sse_res_total = sse_res_total.valid() ? tape.add(sse_res_total, sse_res) : sse_res;
        total_windows += static_cast<std::size_t>(width);
        graphs.push_back(std::move(tg));
    }

    const double inv_n = 1.0 / static_cast<double>(total_windows);
    const Var j_data = tape.affine(sse_data_total, inv_n, 0.0);
    const Var j_res = tape.affine(sse_res_total, inv_n, 0.0);
    const Var loss = tape.add(j_data, tape.affine(j_res, config.beta, 0.0));

    // One flat parameter list: network tensors first, identification after.
    std::vector<Matrix*> params;
    std::vector<Var> leaves = net_leaves;
    for (auto& [name, mat] : state.net.params()) {
        (void)name;
        params.push_back(mat);
    }
    for (std::size_t l = 0; l < state.ident.size(); ++l) {
        params.push_back(&state.ident[l]);
        leaves.push_back(identg.leaves[l]);
    }

    AdamState adam = make_adam_state(params);
    Rng noise_rng(mix_seed(state.run_seed, 0x6e6f6973ULL ^ static_cast<std::uint64_t>(scale_label + 64)));

    std::vector<Matrix> best;
    double best_loss = std::numeric_limits<double>::infinity();
    int since_best = 0;

    for (int epoch = 0; epoch < epochs; ++epoch) {
        for (TrialGraph& tg : graphs) {
            const auto noisy = network::augment_motion_noise(tg.q_meas, config.noise_sigma, noise_rng);
            for (int s = 0; s < tg.history; ++s) {
                Matrix q(1, tg.width);
                for (Eigen::Index w = 0; w < tg.width; ++w) {
                    q(0, w) = noisy[static_cast<std::size_t>(w) + static_cast<std::size_t>(s)];
                }
                tape.set_value(tg.q_hist[static_cast<std::size_t>(s)], q);
            }
        }
        for (std::size_t i = 0; i < params.size(); ++i) {
            tape.set_value(leaves[i], *params[i]);
        }
        tape.forward();

        const double j = tape.value(loss)(0, 0);
        if (!std::isfinite(j)) throw std::runtime_error("diverged");
        state.loss_history.push_back(j);
        state.gamma_history.push_back({tape.value(identg.gamma[0])(0, 0),
                                       tape.value(identg.gamma[1])(0, 0),
                                       tape.value(identg.gamma[2])(0, 0),
                                       tape.value(identg.gamma[3])(0, 0)});

        if (j < best_loss) {
            best_loss = j;
            best.clear();
            for (const Matrix* p : params) best.push_back(*p);
            since_best = 0;
        } else {
            ++since_best;
        }
        if (since_best >= config.early_stop_patience) break;

        tape.backward(loss);
        std::vector<const Matrix*> grads;
        grads.reserve(leaves.size());
        for (const Var v : leaves) grads.push_back(&tape.adjoint(v));
        adam_step(params, grads, adam, config.learning_rate);
    }

    if (!best.empty()) {
        for (std::size_t i = 0; i < params.size(); ++i) *params[i] = best[i];
    }
    state.adam = std::move(adam);
    return state;
}

namespace {

Trial project_trial(const Trial& tr, int depth, const wavelet::WaveletFilter& filter) {
    if (depth == 0) return tr;
    Trial out;
    out.e_bi = wavelet::project_to_scale(tr.e_bi, depth, filter);
    out.e_tri = wavelet::project_to_scale(tr.e_tri, depth, filter);
    out.q = wavelet::project_to_scale(tr.q, depth, filter);
    return out;
}

}  // namespace

EvalReport evaluate(const TrainState& state, const TrainConfig& config,
                    const std::vector<Trial>& test_trials) {
    const auto m = static_cast<std::size_t>(config.history_steps);
    EvalReport report;
    double mse = 0.0, r2 = 0.0, nmse = 0.0;
    for (const Trial& tr : test_trials) {
        const auto n = tr.q.size();
        std::vector<Eigen::VectorXd> xs(n);
        for (std::size_t k = 0; k < n; ++k) {
            Eigen::VectorXd x(3);
            x << tr.q.time_at(k), tr.e_bi[k], tr.e_tri[k];
            xs[k] = x;
        }
        const std::vector<double> seed(tr.q.values.begin(), tr.q.values.begin() + static_cast<long>(m));
        const auto pred = network::rollout(state.net, xs, seed, static_cast<int>(m));
        const std::vector<double> target(tr.q.values.begin() + static_cast<long>(m), tr.q.values.end());
        const std::vector<double> predicted(pred.begin() + static_cast<long>(m), pred.end());
        const auto metric = physics::metrics(target, predicted);
        report.per_trial.push_back(metric);
        mse += metric.mse;
        r2 += metric.r2;
        nmse += metric.nmse;
    }
    const auto count = static_cast<double>(test_trials.size());
    report.average = {mse / count, r2 / count, nmse / count};
    report.gamma = config.ident.values(state.ident);
    report.vmax_bi = 10.0 * report.gamma[1];
    report.vmax_tri = 10.0 * report.gamma[3];
    return report;
}

RunResult train_multiresolution(const std::vector<Trial>& train_trials,
                                const std::vector<Trial>& test_trials, const TrainConfig& config,
                                std::uint64_t seed) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const auto filter = wavelet::build_db2_filter();

    RunResult run;
    TrainState state = init_state(config, seed);
    for (std::size_t i = 0; i < config.scales.size(); ++i) {
        const int scale_label = config.scales[i];
        const int depth = -scale_label;
        std::vector<Trial> dataset;
        dataset.reserve(train_trials.size());
        for (const Trial& tr : train_trials) dataset.push_back(project_trial(tr, depth, filter));

        state.scale_index = static_cast<int>(i);
        const std::size_t before = state.loss_history.size();
        state = train_scale(dataset, std::move(state), config, scale_label,
                            config.epochs_for_scale(i));

        ScaleReport report;
        report.scale = scale_label;
        report.epochs_run = static_cast<int>(state.loss_history.size() - before);
        report.best_train_loss = report.epochs_run > 0
                                     ? *std::min_element(state.loss_history.begin() +
                                                             static_cast<long>(before),
                                                         state.loss_history.end())
                                     : std::numeric_limits<double>::quiet_NaN();
        if (!test_trials.empty()) {
            report.test = evaluate(state, config, test_trials).average;
        }
        run.per_scale.push_back(report);
    }
    if (!test_trials.empty()) {
        run.eval = evaluate(state, config, test_trials);
    } else {
        run.eval.gamma = config.ident.values(state.ident);
        run.eval.vmax_bi = 10.0 * run.eval.gamma[1];
        run.eval.vmax_tri = 10.0 * run.eval.gamma[3];
    }
    run.state = std::move(state);
    run.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return run;
}

std::vector<SeedOutcome> run_seeds(const std::vector<Trial>& train_trials,
                                   const std::vector<Trial>& test_trials,
                                   const TrainConfig& config, int max_threads) {
    config.validate();
    if (config.seeds.empty()) throw std::invalid_argument("run_seeds: no seeds configured");
    std::vector<SeedOutcome> out(config.seeds.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= config.seeds.size()) return;
            SeedOutcome& slot = out[i];
            slot.seed = config.seeds[i];
            try {
                slot.result = train_multiresolution(train_trials, test_trials, config, slot.seed);
            } catch (const std::exception& e) {
                slot.diverged = true;
                slot.message = e.what();
            }
        }
    };
    const int threads = std::max(1, std::min<int>(max_threads, static_cast<int>(config.seeds.size())));
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return out;
}

}  // namespace mskfit::trainer
