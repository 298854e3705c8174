#include "mskfit/wavelet.hpp"

#include <cmath>
#include <stdexcept>

namespace mskfit::wavelet {

namespace {

// One circular analysis step: s (even length) -> approx, detail (half length).
void analysis_step(const std::vector<double>& s, const WaveletFilter& f,
                   std::vector<double>& approx, std::vector<double>& detail) {
    const std::size_t n = s.size();
    const std::size_t half = n / 2;
    const std::size_t taps = f.lowpass.size();
    approx.assign(half, 0.0);
    detail.assign(half, 0.0);
    for (std::size_t k = 0; k < half; ++k) {
        double a = 0.0, d = 0.0;
        for (std::size_t j = 0; j < taps; ++j) {
            const double x = s[(2 * k + j) % n];
            a += f.lowpass[j] * x;
            d += f.highpass[j] * x;
        }
        approx[k] = a;
        detail[k] = d;
    }
}

// Adjoint of the analysis step; exact inverse for an orthonormal pair.
std::vector<double> synthesis_step(const std::vector<double>& approx,
                                   const std::vector<double>& detail,
                                   const WaveletFilter& f) {
    const std::size_t half = approx.size();
    const std::size_t n = 2 * half;
    const std::size_t taps = f.lowpass.size();
    std::vector<double> s(n, 0.0);
    for (std::size_t k = 0; k < half; ++k) {
        for (std::size_t j = 0; j < taps; ++j) {
            s[(2 * k + j) % n] += f.lowpass[j] * approx[k] + f.highpass[j] * detail[k];
        }
    }
    return s;
}

std::vector<double> pad_signal(const std::vector<double>& v, std::size_t padded, PadMode mode) {
    std::vector<double> out(v);
    out.reserve(padded);
    const std::size_t n = v.size();
    for (std::size_t i = 0; n + i < padded; ++i) {
        if (mode == PadMode::Symmetric) {
            out.push_back(v[n - 1 - i]);  // half-sample mirror
        } else {
            out.push_back(v[i % n]);
        }
    }
    return out;
}

}  // namespace

WaveletFilter build_db2_filter() {
    const double s3 = std::sqrt(3.0);
    const double norm = 4.0 * std::sqrt(2.0);
    WaveletFilter f;
    f.lowpass = {(1.0 + s3) / norm, (3.0 + s3) / norm, (3.0 - s3) / norm, (1.0 - s3) / norm};
    // Reversed lowpass with alternating signs.
    const std::size_t taps = f.lowpass.size();
    f.highpass.resize(taps);
    for (std::size_t k = 0; k < taps; ++k) {
        const double sign = (k % 2 == 0) ? -1.0 : 1.0;
        f.highpass[k] = sign * f.lowpass[taps - 1 - k];
    }
    return f;
}

ScalePyramid decompose(const TimeSeries& signal, int depth, const WaveletFilter& filter,
                       PadMode pad) {
    if (depth < 1) throw std::invalid_argument("decompose: depth must be >= 1");
    const std::size_t n = signal.size();
    const std::size_t block = std::size_t{1} << depth;
    if (n < block) throw std::invalid_argument("insufficient samples");

    const std::size_t padded = ((n + block - 1) / block) * block;
    ScalePyramid pyr;
    pyr.original_length = n;
    pyr.padded_length = padded;
    pyr.dt = signal.dt;
    pyr.pad_mode = pad;

    std::vector<double> cur = (padded == n) ? signal.values : pad_signal(signal.values, padded, pad);
    for (int level = 0; level < depth; ++level) {
        std::vector<double> approx, detail;
        analysis_step(cur, filter, approx, detail);
        pyr.details.push_back(std::move(detail));
        cur = std::move(approx);
    }
    pyr.base = std::move(cur);
    return pyr;
}

TimeSeries reconstruct(const ScalePyramid& pyramid, const WaveletFilter& filter) {
    const int depth = pyramid.depth();
    if (depth < 1) throw std::invalid_argument("reconstruct: empty pyramid");
    std::size_t expect = pyramid.padded_length >> depth;
    if (pyramid.base.size() != expect) throw std::invalid_argument("reconstruct: corrupted band lengths");
    std::vector<double> cur = pyramid.base;
    for (int level = depth - 1; level >= 0; --level) {
        const auto& detail = pyramid.details[static_cast<std::size_t>(level)];
        if (detail.size() != cur.size()) throw std::invalid_argument("reconstruct: corrupted band lengths");
        cur = synthesis_step(cur, detail, filter);
    }
    if (cur.size() != pyramid.padded_length) throw std::invalid_argument("reconstruct: corrupted band lengths");
    cur.resize(pyramid.original_length);
    return TimeSeries(pyramid.dt, std::move(cur));
}

TimeSeries project_to_scale(const TimeSeries& signal, int j, const WaveletFilter& filter,
                            PadMode pad) {
    if (j < 0) throw std::invalid_argument("project_to_scale: j must be >= 0");
    if (j == 0) return signal;
    ScalePyramid pyr = decompose(signal, j, filter, pad);
    for (auto& band : pyr.details) band.assign(band.size(), 0.0);
    return reconstruct(pyr, filter);
}

}  // namespace mskfit::wavelet
