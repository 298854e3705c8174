#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mskfit/datagen.hpp"
#include "mskfit/network.hpp"
#include "mskfit/physics.hpp"
#include "mskfit/trainer.hpp"

namespace mskfit::experiment {

struct DatagenSpec {
    double sigma = 0.1;
    std::uint64_t seed = 42;
    std::size_t samples = 500;
    double dt = 0.005;
};

// Complete, serializable description of one experiment. Round-trips through
// JSON losslessly (doubles use shortest-exact formatting).
struct ExperimentSpec {
    DatagenSpec datagen;
    trainer::TrainConfig train;
    // Directory holding trial_<k>.csv (+ optional truth.json). When empty the
    // trials are synthesized in memory from the datagen block.
    std::string data_dir;

    std::string to_json_text() const;
    static ExperimentSpec from_json_text(const std::string& text);
    static ExperimentSpec load(const std::string& path);
    void save(const std::string& path) const;
};

// trial CSV: header t,emg_bi,emg_tri,q with full-precision decimal fields.
void write_trial_csv(const std::string& path, const Trial& trial);
Trial read_trial_csv(const std::string& path);
void write_prediction_csv(const std::string& path, const Trial& trial,
                          const std::vector<double>& q_pred);

// Weight checkpoint: JSON map parameter name -> shape + row-major data,
// plus the identification block.
struct Checkpoint {
    network::Surrogate net;
    int history_steps = 2;
    double dt = 0.005;
    physics::IdentTargets ident_targets;
    std::vector<autodiff::Matrix> ident_trainables;
    std::array<double, 4> gamma{};
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Subcommand bodies. Each returns a process exit code: 0 success, 1 every
// seed diverged (train only). Usage and file errors throw and are mapped to
// exit code 2 by the CLI wrapper.
int cmd_generate(const ExperimentSpec& spec, const std::string& out_dir);
int cmd_train(const ExperimentSpec& spec, const std::string& out_dir, int max_threads);
int cmd_evaluate(const std::string& checkpoint_path, const std::string& trial_csv,
                 const std::string& out_dir);

}  // namespace mskfit::experiment
