#include "mskfit/muscle.hpp"

#include <cmath>
#include <stdexcept>

namespace mskfit::muscle {

void MuscleParams::validate() const {
    if (l0m <= 0.0) throw std::invalid_argument("MuscleParams: l0m must be positive");
    if (vmax <= 0.0) throw std::invalid_argument("MuscleParams: vmax must be positive");
    if (f0 <= 0.0) throw std::invalid_argument("MuscleParams: f0 must be positive");
    if (lst < 0.0) throw std::invalid_argument("MuscleParams: lst must be nonnegative");
    if (phi0 < 0.0 || phi0 >= 1.5707963267948966) {
        throw std::invalid_argument("MuscleParams: phi0 must lie in [0, pi/2)");
    }
}

TimeSeries excitation_from_emg(const TimeSeries& e, const ActivationParams& params) {
    if (params.delay < 0.0) throw std::invalid_argument("excitation_from_emg: negative delay");
    const auto n = e.size();
    if (n == 0) throw std::invalid_argument("excitation_from_emg: empty signal");
    const auto shift = static_cast<std::size_t>(std::llround(params.delay / e.dt));
    if (shift >= n) throw std::invalid_argument("excitation_from_emg: delay longer than signal");
    TimeSeries u(e.dt, std::vector<double>(n));
    for (std::size_t k = 0; k < n; ++k) {
        u[k] = (k < shift) ? e[0] : e[k - shift];
    }
    return u;
}

double activation(double u, double shape) {
    if (shape == 0.0) throw std::invalid_argument("activation: shape factor must be nonzero");
    return std::expm1(shape * u) / std::expm1(shape);
}

double active_force_length(double l_norm) {
    if (l_norm <= 0.6) {
        const double t = l_norm - 0.4;
        return 9.0 * t * t;
    }
    if (l_norm <= 1.4) {
        const double t = 1.0 - l_norm;
        return 1.0 - 4.0 * t * t;
    }
    const double t = l_norm - 1.6;
    return 9.0 * t * t;
}

double passive_force_length(double l_norm) {
    const double g1 = PassiveForceConstants::gamma1;
    const double g2 = PassiveForceConstants::gamma2;
    if (l_norm <= 1.0) return 0.0;
    if (l_norm <= 1.4) return g1 * (std::exp(g2 * (l_norm - 1.0)) - 1.0);
    const double e = std::exp(0.4 * g2);
    return g1 * g2 * e * l_norm + g1 * ((1.0 - 1.4 * g2) * e - 1.0);
}

double ForceVelocityCurve::value(double v_norm) const {
    if (v_norm <= -1.0) return 0.0;
    if (v_norm <= 0.0) {
        return (1.0 + v_norm) / (1.0 - v_norm / concentric_shape);
    }
    const double c = v_norm * (2.0 + 2.0 / concentric_shape);
    return (c * eccentric_plateau + (eccentric_plateau - 1.0)) / (c + (eccentric_plateau - 1.0));
}

double force_velocity(double v_norm) { return ForceVelocityCurve{}.value(v_norm); }

double mt_force(double a, double l_norm, double v_norm, double phi, const MuscleParams& params) {
    const double active = a * active_force_length(l_norm) * force_velocity(v_norm);
    return params.f0 * (active + passive_force_length(l_norm)) * std::cos(phi);
}

double MusclePath::length(double q) const {
    const double theta = extensor ? (3.14159265358979323846 - q) : q;
    return std::sqrt(l1 * l1 + l2 * l2 - 2.0 * l1 * l2 * std::cos(theta));
}

double MusclePath::dlength_dq(double q) const {
    const double sign = extensor ? -1.0 : 1.0;
    return sign * l1 * l2 * std::sin(q) / length(q);
}

MtKinematics mt_kinematics(double q, double qdot, const MusclePath& path,
                           const MuscleParams& params) {
    const double lmt = path.length(q);
    if (lmt <= params.lst) throw std::runtime_error("muscle fully slack");
    const double cphi = std::cos(params.phi0);
    const double lm = (lmt - params.lst) / cphi;
    const double r = path.dlength_dq(q);
    MtKinematics out;
    out.lmt = lmt;
    out.moment_arm = r;
    out.l_norm = lm / params.l0m;
    out.v_norm = r * qdot / cphi / params.vmax;
    return out;
}

}  // namespace mskfit::muscle
