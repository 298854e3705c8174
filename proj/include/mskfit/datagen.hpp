#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mskfit/dynamics.hpp"
#include "mskfit/timeseries.hpp"

namespace mskfit::datagen {

// A family of trials sharing grid and noise case. sigma is the standard
// deviation of the Gaussian noise added to the sEMG before the motion was
// solved; 0 marks the clean set.
struct TrialSet {
    std::vector<Trial> trials;
    double dt = 0.005;
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

// Deterministic synthetic sEMG envelopes for one trial: a few raised
// windowed sinusoid bursts, base frequency 0.4 * trial_index Hz, biceps
// leading with a sustained holding tone, triceps in antiphase. Values lie in
// [0, 1] with amplitude at most 0.9.
std::pair<TimeSeries, TimeSeries> synth_emg(int trial_index, std::size_t n, double dt,
                                            std::uint64_t seed);

// The five-trial clean envelope set; motions not yet solved.
TrialSet synth_emg_set(std::size_t n, double dt, std::uint64_t seed);

// Adds N(0, sigma) per sEMG sample, clamps to [0, 1], then solves the
// forward dynamics for the motion of every trial.
TrialSet apply_noise_case(const TrialSet& base, double sigma, std::uint64_t seed,
                          const dynamics::ElbowSetup& setup);

struct VerificationSet {
    TrialSet set;
    dynamics::ElbowSetup truth;
    std::vector<int> train_ids{1, 2, 4, 5};  // 1-based
    std::vector<int> test_ids{3};
};

// Complete verification family: five trials, the requested noise case, and
// the ground-truth parameterization used to solve the motions.
VerificationSet build_verification_set(double sigma, std::uint64_t seed, std::size_t n = 500,
                                       double dt = 0.005,
                                       const dynamics::ElbowSetup& setup = {});

}  // namespace mskfit::datagen
