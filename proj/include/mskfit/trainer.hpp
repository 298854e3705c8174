#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mskfit/dynamics.hpp"
#include "mskfit/network.hpp"
#include "mskfit/physics.hpp"
#include "mskfit/timeseries.hpp"

namespace mskfit::trainer {

struct TrainConfig {
    // Scale labels coarse to fine, strictly increasing and ending at 0;
    // {-2, -1, 0} is a 3-scale run, {0} the single-scale baseline.
    std::vector<int> scales{0};
    // Total budget shared equally across scales so k-scale runs are
    // comparable; the remainder goes to the final scale.
    int epochs_total = 3000;
    double learning_rate = 1e-3;
    double beta = 1e-3;
    int history_steps = 2;
    int hidden_size = 50;
    double noise_sigma = 0.01;     // motion-input augmentation (rad)
    int early_stop_patience = 200; // epochs without improvement, per scale
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::vector<int> train_trials{1, 2, 4, 5};  // 1-based trial ids
    std::vector<int> test_trials{3};
    network::ModelKind model = network::ModelKind::Gru;
    bool state_bias = true;
    physics::IdentTargets ident{};
    dynamics::ElbowSetup setup{};  // fixed physical model behind the residual

    void validate() const;
    int epochs_for_scale(std::size_t scale_index) const;
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<autodiff::Matrix> m;
    std::vector<autodiff::Matrix> v;
    long step = 0;
};

AdamState make_adam_state(const std::vector<autodiff::Matrix*>& params);

// Standard Adam update in place. Throws "diverged" on non-finite gradients.
void adam_step(std::vector<autodiff::Matrix*>& params,
               const std::vector<const autodiff::Matrix*>& grads, AdamState& state, double lr,
               const AdamConfig& cfg = {});

struct TrainState {
    network::Surrogate net;
    std::vector<autodiff::Matrix> ident;  // 4 trainable tensors
    AdamState adam;
    int scale_index = 0;
    std::uint64_t run_seed = 0;
    std::vector<double> loss_history;                 // per epoch, across scales
    std::vector<std::array<double, 4>> gamma_history; // identified values per epoch
};

TrainState init_state(const TrainConfig& config, std::uint64_t seed);

// One stage of the sequential protocol: fits the surrogate plus the
// identification trainables on one scale of the data (teacher forcing, noise
// augmentation, full-batch Adam) and returns the best-loss parameters seen.
TrainState train_scale(const std::vector<Trial>& dataset, TrainState state,
                       const TrainConfig& config, int scale_label, int epochs);

struct ScaleReport {
    int scale = 0;
    int epochs_run = 0;
    double best_train_loss = 0.0;
    physics::Metrics test;
};

struct EvalReport {
    std::vector<physics::Metrics> per_trial;
    physics::Metrics average;
    std::array<double, 4> gamma{};
    double vmax_bi = 0.0;  // derived from l0 by the 10 / s rule
    double vmax_tri = 0.0;
};

// Rollout on raw full-scale inputs plus the identified parameters.
EvalReport evaluate(const TrainState& state, const TrainConfig& config,
                    const std::vector<Trial>& test_trials);

struct RunResult {
    TrainState state;
    std::vector<ScaleReport> per_scale;
    EvalReport eval;
    double wall_seconds = 0.0;
};

// The sequential coarse-to-fine protocol: project the trials to each scale,
// train, and carry the parameters into the next stage. Test metrics are
// recorded after every stage via rollout on the raw signals.
RunResult train_multiresolution(const std::vector<Trial>& train_trials,
                                const std::vector<Trial>& test_trials, const TrainConfig& config,
                                std::uint64_t seed);

struct SeedOutcome {
    std::uint64_t seed = 0;
    bool diverged = false;
    std::string message;
    RunResult result;
};

// Independent jobs, one per seed; a diverging seed is reported without
// aborting the others.
std::vector<SeedOutcome> run_seeds(const std::vector<Trial>& train_trials,
                                   const std::vector<Trial>& test_trials,
                                   const TrainConfig& config, int max_threads);

}  // namespace mskfit::trainer
