#pragma once

#include "mskfit/timeseries.hpp"

namespace mskfit::muscle {

struct ActivationParams {
    double delay = 0.08;  // electromechanical delay d (s)
    double shape = 0.2;   // shape factor A, must be nonzero
};

// Hill-model parameter vector for one muscle-tendon complex.
struct MuscleParams {
    double l0m;   // optimal muscle length (m)
    double vmax;  // maximum contraction velocity (m/s)
    double f0;    // maximum isometric force (N)
    double lst;   // tendon slack length (m), tendon assumed rigid
    double phi0;  // pennation angle (rad), held constant

    void validate() const;
};

struct PassiveForceConstants {
    static constexpr double gamma1 = 0.075;
    static constexpr double gamma2 = 6.6;
};

// Concentric/eccentric force-velocity multiplier. The contract is
// f(0) = 1, f(-1) = 0, monotone nondecreasing and bounded above by
// eccentric_plateau; the rational shape below is one standard curve
// satisfying it.
struct ForceVelocityCurve {
    double concentric_shape = 0.25;
    double eccentric_plateau = 1.4;

    double value(double v_norm) const;
};

// u(t) = e(t - d) with the leading gap filled with the earliest sample.
TimeSeries excitation_from_emg(const TimeSeries& e, const ActivationParams& params);

// a = (exp(A u) - 1) / (exp(A) - 1), endpoint-exact on [0, 1].
double activation(double u, double shape);

// Active force-length multiplier, piecewise parabolic with breakpoints at
// 0.6 and 1.4 (value 0.36 at both) and exactly 1 at the optimum.
double active_force_length(double l_norm);

// Passive force-length multiplier: zero up to the optimum, exponential to
// 1.4, then the tangent linear continuation (C1 at 1.4).
double passive_force_length(double l_norm);

double force_velocity(double v_norm);

// F_MT = f0 (a fAL(l) fV(v) + fP(l)) cos(phi)
double mt_force(double a, double l_norm, double v_norm, double phi, const MuscleParams& params);

// Two-link attachment geometry for one muscle. The path spans a triangle
// with sides l1 (upper-arm link) and l2 (forearm link); the included angle
// is q for the flexor and pi - q for the extensor, which reproduces the
// l1 l2 sin(q) / lMT moment-arm factor with flexor/extensor signs.
struct MusclePath {
    double l1;
    double l2;
    bool extensor = false;

    double length(double q) const;       // lMT(q)
    double dlength_dq(double q) const;   // signed moment arm R(q)
};

struct MtKinematics {
    double l_norm;
    double v_norm;
    double lmt;
    double moment_arm;  // d lMT / dq, lengthening positive
};

// Rigid tendon: lM = (lMT - lsT)/cos(phi0), vM = R(q) qdot / cos(phi0).
// Throws "muscle fully slack" when lMT <= lsT.
MtKinematics mt_kinematics(double q, double qdot, const MusclePath& path,
                           const MuscleParams& params);

}  // namespace mskfit::muscle
