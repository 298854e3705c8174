#include <doctest.h>

#include <cmath>
#include <random>

#include "mskfit/muscle.hpp"

using namespace mskfit;
using namespace mskfit::muscle;

TEST_CASE("excitation delay shifts the signal") {
    std::vector<double> e(100);
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = 0.01 * static_cast<double>(i);
    const TimeSeries sig(0.005, e);

    SUBCASE("zero delay is the identity") {
        const auto u = excitation_from_emg(sig, {0.0, 0.2});
        for (std::size_t i = 0; i < e.size(); ++i) CHECK(u[i] == e[i]);
    }
    SUBCASE("80 ms at 5 ms sampling shifts by 16 samples") {
        const auto u = excitation_from_emg(sig, {0.08, 0.2});
        for (std::size_t i = 16; i < e.size(); ++i) CHECK(u[i] == e[i - 16]);
        for (std::size_t i = 0; i < 16; ++i) CHECK(u[i] == e[0]);
    }
    SUBCASE("constants are shift invariant") {
        const TimeSeries c(0.005, std::vector<double>(50, 0.4));
        const auto u = excitation_from_emg(c, {0.11, 0.2});
        for (std::size_t i = 0; i < c.size(); ++i) CHECK(u[i] == 0.4);
    }
    SUBCASE("delay longer than the signal is rejected") {
        CHECK_THROWS_AS(excitation_from_emg(sig, {1.0, 0.2}), std::invalid_argument);
    }
}

TEST_CASE("activation endpoints and closed form") {
    CHECK(activation(0.0, 0.2) == 0.0);
    CHECK(activation(1.0, 0.2) == doctest::Approx(1.0).epsilon(1e-15));
    // (e^0.1 - 1) / (e^0.2 - 1)
    CHECK(activation(0.5, 0.2) == doctest::Approx(0.4750208125210604).epsilon(1e-14));
    CHECK_THROWS_AS(activation(0.5, 0.0), std::invalid_argument);
}

TEST_CASE("activation is strictly monotone for either sign of the shape factor") {
    for (const double shape : {0.2, 2.0, -1.5}) {
        double prev = activation(0.0, shape);
        for (int i = 1; i <= 100; ++i) {
            const double a = activation(0.01 * i, shape);
            CHECK(a > prev);
            prev = a;
        }
        CHECK(activation(0.0, shape) == 0.0);
        CHECK(activation(1.0, shape) == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("active force-length curve") {
    CHECK(active_force_length(1.0) == 1.0);
    CHECK(active_force_length(0.6) == doctest::Approx(0.36).epsilon(1e-15));
    CHECK(active_force_length(1.4) == doctest::Approx(0.36).epsilon(1e-15));
    // continuity at the breakpoints
    CHECK(std::abs(active_force_length(0.6) - 9.0 * 0.2 * 0.2) < 1e-12);
    CHECK(std::abs(active_force_length(0.6) - (1.0 - 4.0 * 0.4 * 0.4)) < 1e-12);
    CHECK(std::abs(active_force_length(1.4) - 9.0 * 0.2 * 0.2) < 1e-12);
    const double eps = 1e-9;
    CHECK(std::abs(active_force_length(0.6 + eps) - active_force_length(0.6 - eps)) < 1e-7);
    CHECK(std::abs(active_force_length(1.4 + eps) - active_force_length(1.4 - eps)) < 1e-7);
    for (double l = 0.41; l < 1.6; l += 0.01) CHECK(active_force_length(l) >= 0.0);
}

TEST_CASE("passive force-length curve") {
    CHECK(passive_force_length(0.8) == 0.0);
    CHECK(passive_force_length(1.0) == 0.0);
    // 0.075 (e^{2.64} - 1), middle branch at the upper breakpoint
    CHECK(passive_force_length(1.4) == doctest::Approx(0.9759902705800211).epsilon(1e-13));
    // linear branch agrees there (C0)
    const double g1 = PassiveForceConstants::gamma1, g2 = PassiveForceConstants::gamma2;
    const double linear = g1 * g2 * std::exp(0.4 * g2) * 1.4 +
                          g1 * ((1.0 - 1.4 * g2) * std::exp(0.4 * g2) - 1.0);
    CHECK(std::abs(linear - passive_force_length(1.4)) < 1e-12);
    // C1 at 1.4: finite-difference slopes from both sides
    const double h = 1e-7;
    const double left = (passive_force_length(1.4) - passive_force_length(1.4 - h)) / h;
    const double right = (passive_force_length(1.4 + h) - passive_force_length(1.4)) / h;
    CHECK(std::abs(left - right) < 1e-4);
    double prev = 0.0;
    for (double l = 0.5; l < 2.0; l += 0.01) {
        const double v = passive_force_length(l);
        CHECK(v >= prev - 1e-15);
        prev = v;
    }
}

TEST_CASE("force-velocity contract") {
    CHECK(force_velocity(0.0) == 1.0);
    CHECK(force_velocity(-1.0) == 0.0);
    const double half = force_velocity(0.5);
    CHECK(half == doctest::Approx(1.3703703703703702).epsilon(1e-14));
    CHECK(half > 1.0);
    CHECK(half <= ForceVelocityCurve{}.eccentric_plateau);
    double prev = -1e-9;
    for (int i = 0; i <= 1000; ++i) {
        const double v = -1.2 + 3.0 * i / 1000.0;
        const double fv = force_velocity(v);
        CHECK(fv >= prev - 1e-12);
        CHECK(fv <= ForceVelocityCurve{}.eccentric_plateau + 1e-12);
        prev = fv;
    }
}

TEST_CASE("mt force composition") {
    const MuscleParams p{0.6, 6.0, 300.0, 0.55, 0.0};
    CHECK(mt_force(0.0, 1.0, 0.0, 0.0, p) == 0.0);
    CHECK(mt_force(1.0, 1.0, 0.0, 0.0, p) == doctest::Approx(300.0).epsilon(1e-15));
    const double full = mt_force(1.0, 1.1, 0.2, 0.0, p);
    const double pitched = mt_force(1.0, 1.1, 0.2, 3.14159265358979323846 / 3.0, p);
    CHECK(pitched == doctest::Approx(0.5 * full).epsilon(1e-12));
    // linear in f0 and in a at the optimum (passive term zero there)
    MuscleParams p2 = p;
    p2.f0 = 600.0;
    CHECK(mt_force(0.7, 1.0, 0.1, 0.0, p2) ==
          doctest::Approx(2.0 * mt_force(0.7, 1.0, 0.1, 0.0, p)).epsilon(1e-13));
    CHECK(mt_force(0.8, 1.0, 0.1, 0.0, p) ==
          doctest::Approx(2.0 * mt_force(0.4, 1.0, 0.1, 0.0, p)).epsilon(1e-13));
}

TEST_CASE("mt kinematics") {
    const MusclePath flexor{0.3, 0.8, false};
    const MusclePath extensor{0.2, 0.7, true};
    const MuscleParams bi{0.6, 6.0, 300.0, 0.55, 0.0};
    const MuscleParams tri{0.4, 4.0, 300.0, 0.33, 0.0};

    SUBCASE("zero angular velocity gives zero normalized velocity") {
        const auto kin = mt_kinematics(1.0, 0.0, flexor, bi);
        CHECK(kin.v_norm == 0.0);
    }
    SUBCASE("unit normalized length at the defining configuration") {
        // Pick lst so lMT(q) = lst + l0 cos(phi) at q = 1.2.
        const double q = 1.2;
        MuscleParams p = bi;
        p.l0m = 0.1;
        p.lst = flexor.length(q) - p.l0m * std::cos(p.phi0);
        const auto kin = mt_kinematics(q, 0.3, flexor, p);
        CHECK(kin.l_norm == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("analytic moment arm matches central differences") {
        const double q = 3.14159265358979323846 / 4.0;
        const double h = 1e-6;
        for (const auto& path : {flexor, extensor}) {
            const double fd = (path.length(q + h) - path.length(q - h)) / (2.0 * h);
            const double analytic = path.dlength_dq(q);
            CHECK(std::abs(fd - analytic) / std::abs(analytic) < 1e-6);
        }
    }
    SUBCASE("velocity sign: lengthening positive") {
        // Flexor lMT grows with q, so qdot > 0 must lengthen it.
        const auto kin = mt_kinematics(1.0, 2.0, flexor, bi);
        CHECK(kin.v_norm > 0.0);
        const auto ext = mt_kinematics(1.0, 2.0, extensor, tri);
        CHECK(ext.v_norm < 0.0);
    }
    SUBCASE("fully slack muscle is rejected") {
        CHECK_THROWS_WITH_AS(mt_kinematics(0.1, 0.0, flexor, bi), "muscle fully slack",
                             std::runtime_error);
    }
}
