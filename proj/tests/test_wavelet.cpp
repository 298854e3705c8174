#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mskfit/wavelet.hpp"

using mskfit::TimeSeries;
using namespace mskfit::wavelet;

namespace {

std::vector<double> random_signal(std::size_t n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double energy(const std::vector<double>& v) {
    double e = 0.0;
    for (double x : v) e += x * x;
    return e;
}

// Independent oracle: solve the defining equations of the 4-tap filter by
// Newton iteration. Equations: sum d = sqrt(2), shift orthogonality,
// vanishing zeroth and first moments of the alternating sequence.
std::vector<double> solve_db2_newton() {
    double d[4] = {0.5, 0.8, 0.2, -0.1};
    for (int it = 0; it < 80; ++it) {
        const double f[4] = {
            d[0] + d[1] + d[2] + d[3] - std::sqrt(2.0),
            d[0] * d[2] + d[1] * d[3],
            -d[1] + 2.0 * d[2] - 3.0 * d[3],
            d[0] - d[1] + d[2] - d[3],
        };
        double jac[4][4] = {
            {1.0, 1.0, 1.0, 1.0},
            {d[2], d[3], d[0], d[1]},
            {0.0, -1.0, 2.0, -3.0},
            {1.0, -1.0, 1.0, -1.0},
        };
        // Gaussian elimination with partial pivoting on the 4x4 system.
        double rhs[4] = {-f[0], -f[1], -f[2], -f[3]};
        for (int c = 0; c < 4; ++c) {
            int piv = c;
            for (int r = c + 1; r < 4; ++r) {
                if (std::abs(jac[r][c]) > std::abs(jac[piv][c])) piv = r;
            }
            std::swap(jac[c], jac[piv]);
            std::swap(rhs[c], rhs[piv]);
            for (int r = c + 1; r < 4; ++r) {
                const double m = jac[r][c] / jac[c][c];
                for (int k = c; k < 4; ++k) jac[r][k] -= m * jac[c][k];
                rhs[r] -= m * rhs[c];
            }
        }
        double dx[4];
        for (int r = 3; r >= 0; --r) {
            double s = rhs[r];
            for (int k = r + 1; k < 4; ++k) s -= jac[r][k] * dx[k];
            dx[r] = s / jac[r][r];
        }
        for (int i = 0; i < 4; ++i) d[i] += dx[i];
    }
    return {d[0], d[1], d[2], d[3]};
}

// Independent direct-convolution transform on the padded buffer, coded from
// the analysis/synthesis definitions with no shared machinery.
struct OraclePyramid {
    std::vector<double> base;
    std::vector<std::vector<double>> details;
    std::size_t original = 0;
};

OraclePyramid oracle_decompose(const std::vector<double>& signal, int depth,
                               const std::vector<double>& lo, const std::vector<double>& hi) {
    OraclePyramid p;
    p.original = signal.size();
    const std::size_t block = std::size_t{1} << depth;
    const std::size_t padded = ((signal.size() + block - 1) / block) * block;
    std::vector<double> cur = signal;
    for (std::size_t i = 0; cur.size() < padded; ++i) cur.push_back(signal[signal.size() - 1 - i]);
    for (int level = 0; level < depth; ++level) {
        const std::size_t n = cur.size();
        std::vector<double> a(n / 2, 0.0), d(n / 2, 0.0);
        for (std::size_t k = 0; k < n / 2; ++k) {
            for (std::size_t j = 0; j < lo.size(); ++j) {
                a[k] += lo[j] * cur[(2 * k + j) % n];
                d[k] += hi[j] * cur[(2 * k + j) % n];
            }
        }
        p.details.push_back(d);
        cur = a;
    }
    p.base = cur;
    return p;
}

std::vector<double> oracle_reconstruct(const OraclePyramid& p, const std::vector<double>& lo,
                                       const std::vector<double>& hi) {
    std::vector<double> cur = p.base;
    for (int level = static_cast<int>(p.details.size()) - 1; level >= 0; --level) {
        const auto& d = p.details[static_cast<std::size_t>(level)];
        const std::size_t n = 2 * cur.size();
        std::vector<double> s(n, 0.0);
        for (std::size_t k = 0; k < cur.size(); ++k) {
            for (std::size_t j = 0; j < lo.size(); ++j) {
                s[(2 * k + j) % n] += lo[j] * cur[k] + hi[j] * d[k];
            }
        }
        cur = s;
    }
    cur.resize(p.original);
    return cur;
}

}  // namespace

TEST_CASE("db2 filter identities") {
    const auto f = build_db2_filter();
    REQUIRE(f.lowpass.size() == 4);
    REQUIRE(f.highpass.size() == 4);

    double sum = 0.0, sumsq = 0.0, shift = 0.0;
    for (double d : f.lowpass) sum += d;
    for (double d : f.lowpass) sumsq += d * d;
    shift = f.lowpass[0] * f.lowpass[2] + f.lowpass[1] * f.lowpass[3];
    CHECK(std::abs(sum - std::sqrt(2.0)) < 1e-12);
    CHECK(std::abs(sumsq - 1.0) < 1e-12);
    CHECK(std::abs(shift) < 1e-12);

    // Reversed lowpass with alternating signs.
    for (int k = 0; k < 4; ++k) {
        const double sign = (k % 2 == 0) ? -1.0 : 1.0;
        CHECK(f.highpass[static_cast<std::size_t>(k)] ==
              sign * f.lowpass[static_cast<std::size_t>(3 - k)]);
    }
}

TEST_CASE("db2 filter matches the Newton-solved defining system") {
    const auto f = build_db2_filter();
    const auto oracle = solve_db2_newton();
    for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(f.lowpass[static_cast<std::size_t>(i)] -
                       oracle[static_cast<std::size_t>(i)]) < 1e-10);
    }
}

TEST_CASE("decompose of a constant signal") {
    const auto f = build_db2_filter();
    const int depth = 3;
    const double c = 0.7;
    TimeSeries sig(0.01, std::vector<double>(64, c));
    const auto pyr = decompose(sig, depth, f);
    for (const auto& band : pyr.details) {
        for (double v : band) CHECK(std::abs(v) <= 1e-12);
    }
    const double expected = c * std::pow(2.0, depth / 2.0);
    for (double v : pyr.base) CHECK(v == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("round trip on dyadic and padded lengths") {
    const auto f = build_db2_filter();
    for (const std::size_t n : {std::size_t{512}, std::size_t{500}}) {
        for (int depth = 1; depth <= 4; ++depth) {
            TimeSeries sig(0.005, random_signal(n, 17u + static_cast<unsigned>(n + depth)));
            const auto back = reconstruct(decompose(sig, depth, f), f);
            CHECK(max_abs_diff(back.values, sig.values) < 1e-10);
        }
    }
}

TEST_CASE("padded round trip matches the direct-convolution oracle") {
    const auto f = build_db2_filter();
    const auto x = random_signal(500, 23u);
    TimeSeries sig(0.005, x);
    const int depth = 4;

    const auto pyr = decompose(sig, depth, f);
    const auto oracle = oracle_decompose(x, depth, f.lowpass, f.highpass);
    REQUIRE(pyr.details.size() == oracle.details.size());
    CHECK(max_abs_diff(pyr.base, oracle.base) < 1e-10);
    for (std::size_t b = 0; b < oracle.details.size(); ++b) {
        CHECK(max_abs_diff(pyr.details[b], oracle.details[b]) < 1e-10);
    }
    const auto lib_back = reconstruct(pyr, f);
    const auto oracle_back = oracle_reconstruct(oracle, f.lowpass, f.highpass);
    CHECK(max_abs_diff(lib_back.values, oracle_back) < 1e-10);
    CHECK(max_abs_diff(lib_back.values, x) < 1e-10);
}

TEST_CASE("insufficient samples is rejected") {
    const auto f = build_db2_filter();
    TimeSeries sig(0.01, random_signal(6, 3u));
    CHECK_THROWS_WITH_AS(decompose(sig, 3, f), "insufficient samples", std::invalid_argument);
}

TEST_CASE("reconstruct rejects corrupted band lengths") {
    const auto f = build_db2_filter();
    TimeSeries sig(0.01, random_signal(64, 5u));
    auto pyr = decompose(sig, 2, f);
    pyr.details[0].pop_back();
    CHECK_THROWS_AS(reconstruct(pyr, f), std::invalid_argument);
}

TEST_CASE("projection at j = 0 is the identity") {
    const auto f = build_db2_filter();
    TimeSeries sig(0.01, random_signal(100, 7u));
    const auto out = project_to_scale(sig, 0, f);
    CHECK(max_abs_diff(out.values, sig.values) == 0.0);
}

TEST_CASE("projection plus detail reconstructions equals the signal") {
    const auto f = build_db2_filter();
    for (const std::size_t n : {std::size_t{512}, std::size_t{500}}) {
        TimeSeries sig(0.005, random_signal(n, 31u + static_cast<unsigned>(n)));
        const int j = 3;
        auto pyr = decompose(sig, j, f);
        std::vector<double> total = project_to_scale(sig, j, f).values;
        for (std::size_t b = 0; b < pyr.details.size(); ++b) {
            auto only = pyr;
            only.base.assign(only.base.size(), 0.0);
            for (std::size_t o = 0; o < only.details.size(); ++o) {
                if (o != b) only.details[o].assign(only.details[o].size(), 0.0);
            }
            const auto part = reconstruct(only, f);
            for (std::size_t i = 0; i < total.size(); ++i) total[i] += part[i];
        }
        CHECK(max_abs_diff(total, sig.values) < 1e-10);
    }
}

TEST_CASE("alternating signal is annihilated by the coarse projection") {
    const auto f = build_db2_filter();
    std::vector<double> alt(256);
    for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = (i % 2 == 0) ? 1.0 : -1.0;
    TimeSeries sig(0.01, alt);
    const auto proj = project_to_scale(sig, 1, f);
    CHECK(energy(proj.values) < 0.05 * energy(alt));
}

TEST_CASE("projections compose on padding-free grids") {
    const auto f = build_db2_filter();
    // 512 is dyadic; 500 = 4 * 125 admits two clean halvings.
    struct Case { std::size_t n; int j; };
    for (const Case c : {Case{512, 2}, Case{512, 4}, Case{500, 2}}) {
        TimeSeries sig(0.005, random_signal(c.n, 41u + static_cast<unsigned>(c.n + c.j)));
        const auto direct = project_to_scale(sig, c.j, f);
        const auto stepped = project_to_scale(project_to_scale(sig, c.j - 1, f), c.j, f);
        CHECK(max_abs_diff(direct.values, stepped.values) < 1e-10);
    }
}

TEST_CASE("energy splits across bands for dyadic lengths") {
    const auto f = build_db2_filter();
    const auto x = random_signal(512, 53u);
    TimeSeries sig(0.005, x);
    const auto pyr = decompose(sig, 4, f);
    double total = energy(pyr.base);
    for (const auto& band : pyr.details) total += energy(band);
    CHECK(std::abs(total - energy(x)) < 1e-8);
}

TEST_CASE("transform is linear") {
    const auto f = build_db2_filter();
    const auto x = random_signal(500, 61u);
    const auto y = random_signal(500, 67u);
    const double a = 0.37, b = -1.21;
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = a * x[i] + b * y[i];
    const int depth = 3;
    const auto px = decompose(TimeSeries(0.005, x), depth, f);
    const auto py = decompose(TimeSeries(0.005, y), depth, f);
    const auto pz = decompose(TimeSeries(0.005, z), depth, f);
    for (std::size_t i = 0; i < pz.base.size(); ++i) {
        CHECK(std::abs(pz.base[i] - (a * px.base[i] + b * py.base[i])) < 1e-10);
    }
    for (std::size_t bnd = 0; bnd < pz.details.size(); ++bnd) {
        for (std::size_t i = 0; i < pz.details[bnd].size(); ++i) {
            CHECK(std::abs(pz.details[bnd][i] -
                           (a * px.details[bnd][i] + b * py.details[bnd][i])) < 1e-10);
        }
    }
}

TEST_CASE("scaling all coefficients scales the reconstruction") {
    const auto f = build_db2_filter();
    TimeSeries sig(0.005, random_signal(500, 71u));
    auto pyr = decompose(sig, 3, f);
    const double alpha = 2.5;
    for (auto& v : pyr.base) v *= alpha;
    for (auto& band : pyr.details) {
        for (auto& v : band) v *= alpha;
    }
    const auto scaled = reconstruct(pyr, f);
    for (std::size_t i = 0; i < sig.size(); ++i) {
        CHECK(std::abs(scaled[i] - alpha * sig[i]) < 1e-10);
    }
}

TEST_CASE("pyramid of zeros reconstructs to zero") {
    const auto f = build_db2_filter();
    TimeSeries sig(0.01, random_signal(64, 73u));
    auto pyr = decompose(sig, 2, f);
    pyr.base.assign(pyr.base.size(), 0.0);
    for (auto& band : pyr.details) band.assign(band.size(), 0.0);
    const auto out = reconstruct(pyr, f);
    for (double v : out.values) CHECK(v == 0.0);
}
