#include "mskfit/dynamics.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace mskfit::dynamics {

void ElbowGeometry::validate() const {
    if (l_ua <= 0.0 || l_fa <= 0.0 || m_fa <= 0.0) {
        throw std::invalid_argument("ElbowGeometry: lengths and mass must be positive");
    }
    if (l1_bi <= 0.0 || l2_bi <= 0.0 || l1_tri <= 0.0 || l2_tri <= 0.0) {
        throw std::invalid_argument("ElbowGeometry: attachment offsets must be positive");
    }
    if (l1_bi > l_ua || l1_tri > l_ua || l2_bi > l_fa || l2_tri > l_fa) {
        throw std::invalid_argument("ElbowGeometry: attachment offsets exceed link lengths");
    }
    if (g <= 0.0) throw std::invalid_argument("ElbowGeometry: g must be positive");
}

double inertia(const ElbowGeometry& geometry) {
    return geometry.m_fa * geometry.l_fa * geometry.l_fa;
}

double external_torque(double q, const ElbowGeometry& geometry) {
    return -geometry.m_fa * geometry.g * geometry.l_fa * std::sin(q);
}

namespace {

double one_muscle_torque(double a, double q, double qdot, const muscle::MusclePath& path,
                         const muscle::MuscleParams& kappa) {
    const auto kin = muscle::mt_kinematics(q, qdot, path, kappa);
    const double f = muscle::mt_force(a, kin.l_norm, kin.v_norm, kappa.phi0, kappa);
    return f * path.l1 * path.l2 * std::sin(q) / kin.lmt;
}

struct Rk4 {
    double dt;
    int substeps;
    std::function<double(double, const JointState&)> accel;  // (t, state) -> qddot

    // Advances one data interval starting at time t.
    JointState step(double t, JointState s) const {
        const double h = dt / substeps;
        for (int i = 0; i < substeps; ++i) {
            const double t0 = t + h * i;
            const double k1q = s.qdot;
            const double k1v = accel(t0, s);
            const JointState s2{s.q + 0.5 * h * k1q, s.qdot + 0.5 * h * k1v};
            const double k2q = s2.qdot;
            const double k2v = accel(t0 + 0.5 * h, s2);
            const JointState s3{s.q + 0.5 * h * k2q, s.qdot + 0.5 * h * k2v};
            const double k3q = s3.qdot;
            const double k3v = accel(t0 + 0.5 * h, s3);
            const JointState s4{s.q + h * k3q, s.qdot + h * k3v};
            const double k4q = s4.qdot;
            const double k4v = accel(t0 + h, s4);
            s.q += h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
            s.qdot += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        }
        if (!std::isfinite(s.q) || !std::isfinite(s.qdot)) {
            throw std::runtime_error("integration diverged");
        }
        return s;
    }
};

}  // namespace

double muscle_torque(double a_bi, double a_tri, const JointState& state,
                     const ElbowGeometry& geometry, const muscle::MuscleParams& kappa_bi,
                     const muscle::MuscleParams& kappa_tri) {
    const double t_bi = one_muscle_torque(a_bi, state.q, state.qdot, geometry.biceps_path(), kappa_bi);
    const double t_tri =
        one_muscle_torque(a_tri, state.q, state.qdot, geometry.triceps_path(), kappa_tri);
    return t_bi - t_tri;
}

double acceleration(double a_bi, double a_tri, const JointState& state,
                    const ElbowGeometry& geometry, const muscle::MuscleParams& kappa_bi,
                    const muscle::MuscleParams& kappa_tri) {
    const double t = muscle_torque(a_bi, a_tri, state, geometry, kappa_bi, kappa_tri);
    return (external_torque(state.q, geometry) + t) / inertia(geometry);
}

TimeSeries solve_forward(const TimeSeries& e_bi, const TimeSeries& e_tri, double q0,
                         double qdot0, const ElbowGeometry& geometry,
                         const muscle::MuscleParams& kappa_bi,
                         const muscle::MuscleParams& kappa_tri,
                         const muscle::ActivationParams& act, int substeps) {
    if (e_bi.size() != e_tri.size() || e_bi.dt != e_tri.dt) {
        throw std::invalid_argument("solve_forward: excitation signals must share grid");
    }
    if (substeps < 1) throw std::invalid_argument("solve_forward: substeps must be >= 1");
    geometry.validate();
    kappa_bi.validate();
    kappa_tri.validate();

    const auto n = e_bi.size();
    const TimeSeries u_bi = muscle::excitation_from_emg(e_bi, act);
    const TimeSeries u_tri = muscle::excitation_from_emg(e_tri, act);
    std::vector<double> a_bi(n), a_tri(n);
    for (std::size_t k = 0; k < n; ++k) {
        a_bi[k] = muscle::activation(u_bi[k], act.shape);
        a_tri[k] = muscle::activation(u_tri[k], act.shape);
    }

    const double dt = e_bi.dt;
    auto interp = [dt, n](const std::vector<double>& a, double t) {
        const double s = t / dt;
        if (s <= 0.0) return a.front();
        const auto i = static_cast<std::size_t>(s);
        if (i + 1 >= n) return a.back();
        const double w = s - static_cast<double>(i);
        return (1.0 - w) * a[i] + w * a[i + 1];
    };

    Rk4 integ{dt, substeps,
              [&](double t, const JointState& s) {
                  return acceleration(interp(a_bi, t), interp(a_tri, t), s, geometry, kappa_bi,
                                      kappa_tri);
              }};

    TimeSeries q(dt, std::vector<double>(n));
    JointState s{q0, qdot0};
    q[0] = s.q;
    for (std::size_t k = 1; k < n; ++k) {
        s = integ.step(dt * static_cast<double>(k - 1), s);
        q[k] = s.q;
    }
    return q;
}

Trajectory solve_pendulum(double q0, double qdot0, const ElbowGeometry& geometry,
                          std::size_t samples, double dt, int substeps) {
    if (samples == 0) throw std::invalid_argument("solve_pendulum: need at least one sample");
    geometry.validate();
    const double inv_inertia = 1.0 / inertia(geometry);
    Rk4 integ{dt, substeps,
              [&](double, const JointState& s) { return external_torque(s.q, geometry) * inv_inertia; }};
    Trajectory out{TimeSeries(dt, std::vector<double>(samples)),
                   TimeSeries(dt, std::vector<double>(samples))};
    JointState s{q0, qdot0};
    out.q[0] = s.q;
    out.qdot[0] = s.qdot;
    for (std::size_t k = 1; k < samples; ++k) {
        s = integ.step(dt * static_cast<double>(k - 1), s);
        out.q[k] = s.q;
        out.qdot[k] = s.qdot;
    }
    return out;
}

}  // namespace mskfit::dynamics
