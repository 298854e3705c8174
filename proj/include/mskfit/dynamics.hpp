#pragma once

#include "mskfit/muscle.hpp"
#include "mskfit/timeseries.hpp"

namespace mskfit::dynamics {

// Single-DOF elbow flexion-extension rigid-body model: upper-arm link fixed,
// forearm link hinged at the elbow, point mass at the wrist.
struct ElbowGeometry {
    double l_ua = 1.0;   // upper-arm link length (m)
    double l_fa = 1.0;   // forearm link length (m)
    double m_fa = 1.0;   // point mass at the wrist (kg)
    double l1_bi = 0.3;  // biceps attachment on the upper-arm link (m)
    double l2_bi = 0.8;  // biceps attachment on the forearm link (m)
    double l1_tri = 0.2;
    double l2_tri = 0.7;
    double g = 9.81;

    void validate() const;
    muscle::MusclePath biceps_path() const { return {l1_bi, l2_bi, false}; }
    muscle::MusclePath triceps_path() const { return {l1_tri, l2_tri, true}; }
};

struct JointState {
    double q = 0.0;
    double qdot = 0.0;
};

// I = m_fa l_fa^2
double inertia(const ElbowGeometry& geometry);

// E(q) = -m_fa g l_fa sin(q)
double external_torque(double q, const ElbowGeometry& geometry);

// T = T_bi - T_tri with T_m = F_m l1 l2 sin(q) / lMT_m(q); the flexor adds,
// the extensor subtracts.
double muscle_torque(double a_bi, double a_tri, const JointState& state,
                     const ElbowGeometry& geometry, const muscle::MuscleParams& kappa_bi,
                     const muscle::MuscleParams& kappa_tri);

// qddot = (E(q) + T) / I
double acceleration(double a_bi, double a_tri, const JointState& state,
                    const ElbowGeometry& geometry, const muscle::MuscleParams& kappa_bi,
                    const muscle::MuscleParams& kappa_tri);

// Classical fixed-step RK4 on the data grid with activations linearly
// interpolated between samples; substeps > 1 subdivides each interval.
// Throws "integration diverged" on non-finite state.
TimeSeries solve_forward(const TimeSeries& e_bi, const TimeSeries& e_tri, double q0,
                         double qdot0, const ElbowGeometry& geometry,
                         const muscle::MuscleParams& kappa_bi,
                         const muscle::MuscleParams& kappa_tri,
                         const muscle::ActivationParams& act, int substeps = 1);

struct Trajectory {
    TimeSeries q;
    TimeSeries qdot;
};

// Complete physical description of the elbow system plus initial conditions.
// Default values are the verification parameterization: both muscles at
// 300 N peak force, biceps 0.6 m / 6 m-per-s, triceps 0.4 m / 4 m-per-s,
// rigid tendons, zero pennation, q starting at pi/6 at rest.
struct ElbowSetup {
    ElbowGeometry geometry{};
    muscle::MuscleParams kappa_bi{0.6, 6.0, 300.0, 0.55, 0.0};
    muscle::MuscleParams kappa_tri{0.4, 4.0, 300.0, 0.33, 0.0};
    muscle::ActivationParams activation{};
    double q0 = 0.52359877559829887;  // pi/6
    double qdot0 = 0.0;
};

// Gravity-only variant (muscles disabled) on the same integrator.
Trajectory solve_pendulum(double q0, double qdot0, const ElbowGeometry& geometry,
                          std::size_t samples, double dt, int substeps = 1);

}  // namespace mskfit::dynamics
