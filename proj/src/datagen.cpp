#include "mskfit/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mskfit/util.hpp"

namespace mskfit::datagen {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double hann_burst(double t, double center, double width) {
    const double u = (t - center) / width;
    if (u <= -0.5 || u >= 0.5) return 0.0;
    const double c = std::cos(3.14159265358979323846 * u);
    return c * c;
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

}  // namespace

std::pair<TimeSeries, TimeSeries> synth_emg(int trial_index, std::size_t n, double dt,
                                            std::uint64_t seed) {
    if (trial_index < 1 || trial_index > 5) {
        throw std::invalid_argument("synth_emg: trial_index must lie in 1..5");
    }
    if (n < 8) throw std::invalid_argument("synth_emg: too few samples");

    Rng rng(mix_seed(seed, 0x73796e65ULL ^ static_cast<std::uint64_t>(trial_index)));
    const double duration = dt * static_cast<double>(n - 1);
    const double freq = 0.4 * static_cast<double>(trial_index);

    // Three overlapping bursts give near-continuous coverage with soft
    // onsets; small seeded jitter decorrelates the trials.
    const double scale = duration / 2.5;
    double centers[3] = {0.62 * scale, 1.35 * scale, 2.05 * scale};
    double widths[3] = {1.15 * scale, 1.15 * scale, 0.95 * scale};
    for (auto& c : centers) c += rng.uniform(-0.05, 0.05) * scale;
    for (auto& w : widths) w += rng.uniform(-0.05, 0.05) * scale;
    const double phase_lag = 0.5 + rng.uniform(-0.15, 0.15);

    TimeSeries e_bi(dt, std::vector<double>(n));
    TimeSeries e_tri(dt, std::vector<double>(n));
    for (std::size_t k = 0; k < n; ++k) {
        const double t = dt * static_cast<double>(k);
        double burst = 0.0;
        for (int j = 0; j < 3; ++j) burst += hann_burst(t, centers[j], widths[j]);
        burst = std::min(1.0, burst);
        // Holding tone keeps the flexor engaged near the slack boundary at
        // the initial posture; the carrier rides on top in antiphase pairs.
        const double carrier_bi = 0.5 * (1.0 - std::cos(kTwoPi * freq * t));
        const double carrier_tri = 0.5 * (1.0 + std::cos(kTwoPi * freq * t - phase_lag));
        e_bi[k] = clamp01(std::min(0.9, 0.38 + 0.34 * burst * carrier_bi));
        e_tri[k] = clamp01(std::min(0.9, 0.04 + 0.22 * burst * carrier_tri));
    }
    return {std::move(e_bi), std::move(e_tri)};
}

TrialSet synth_emg_set(std::size_t n, double dt, std::uint64_t seed) {
    TrialSet set;
    set.dt = dt;
    set.sigma = 0.0;
    set.seed = seed;
    for (int idx = 1; idx <= 5; ++idx) {
        auto [e_bi, e_tri] = synth_emg(idx, n, dt, seed);
        Trial tr;
        tr.e_bi = std::move(e_bi);
        tr.e_tri = std::move(e_tri);
        set.trials.push_back(std::move(tr));
    }
    return set;
}

TrialSet apply_noise_case(const TrialSet& base, double sigma, std::uint64_t seed,
                          const dynamics::ElbowSetup& setup) {
    if (sigma < 0.0) throw std::invalid_argument("apply_noise_case: sigma must be >= 0");
    TrialSet out;
    out.dt = base.dt;
    out.sigma = sigma;
    out.seed = seed;
    for (std::size_t idx = 0; idx < base.trials.size(); ++idx) {
        const Trial& src = base.trials[idx];
        Rng rng(mix_seed(seed, 0x6e6f6973ULL ^ (idx + 1)));
        Trial tr;
        tr.e_bi = src.e_bi;
        tr.e_tri = src.e_tri;
        if (sigma > 0.0) {
            for (auto& v : tr.e_bi.values) v = clamp01(v + sigma * rng.gaussian());
            for (auto& v : tr.e_tri.values) v = clamp01(v + sigma * rng.gaussian());
        }
        tr.q = dynamics::solve_forward(tr.e_bi, tr.e_tri, setup.q0, setup.qdot0, setup.geometry,
                                       setup.kappa_bi, setup.kappa_tri, setup.activation);
        out.trials.push_back(std::move(tr));
    }
    return out;
}

VerificationSet build_verification_set(double sigma, std::uint64_t seed, std::size_t n, double dt,
                                       const dynamics::ElbowSetup& setup) {
    VerificationSet v;
    v.truth = setup;
    const TrialSet clean = synth_emg_set(n, dt, seed);
    v.set = apply_noise_case(clean, sigma, seed, setup);
    return v;
}

}  // namespace mskfit::datagen
