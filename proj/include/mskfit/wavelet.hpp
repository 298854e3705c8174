#pragma once

#include <cstddef>
#include <vector>

#include "mskfit/timeseries.hpp"

namespace mskfit::wavelet {

// Orthonormal conjugate filter pair. The highpass is the reversed lowpass
// with alternating signs, so both satisfy the same shift-orthogonality
// identities.
struct WaveletFilter {
    std::vector<double> lowpass;
    std::vector<double> highpass;
};

// 4-tap orthonormal Daubechies-2 pair (one vanishing moment beyond Haar).
WaveletFilter build_db2_filter();

enum class PadMode {
    Symmetric,  // half-sample mirror extension on the right
    Periodic,   // wrap-around extension
};

// Result of a multi-level analysis. details[0] is the finest band (one
// analysis step from the input); details.back() pairs with base at the
// deepest level. Reconstruction truncates back to original_length.
struct ScalePyramid {
    std::vector<double> base;
    std::vector<std::vector<double>> details;
    std::size_t original_length = 0;
    std::size_t padded_length = 0;
    double dt = 0.0;
    PadMode pad_mode = PadMode::Symmetric;

    int depth() const { return static_cast<int>(details.size()); }
};

// One analysis convolution-and-downsample step per level. Throws
// "insufficient samples" when the signal is shorter than 2^depth.
ScalePyramid decompose(const TimeSeries& signal, int depth, const WaveletFilter& filter,
                       PadMode pad = PadMode::Symmetric);

// Level-by-level synthesis (upsample-and-convolve), truncated to the
// recorded original length.
TimeSeries reconstruct(const ScalePyramid& pyramid, const WaveletFilter& filter);

// Scale [-j] representation on the original sampling grid: decompose to
// depth j, zero the detail bands, reconstruct. j = 0 is the identity.
TimeSeries project_to_scale(const TimeSeries& signal, int j, const WaveletFilter& filter,
                            PadMode pad = PadMode::Symmetric);

}  // namespace mskfit::wavelet
