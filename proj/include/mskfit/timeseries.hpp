#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace mskfit {

// Uniformly sampled scalar signal. Multichannel data is handled as one
// TimeSeries per channel sharing the same dt.
struct TimeSeries {
    double dt = 0.0;
    std::vector<double> values;

    TimeSeries() = default;
    TimeSeries(double step, std::vector<double> v) : dt(step), values(std::move(v)) {
        if (dt <= 0.0) throw std::invalid_argument("TimeSeries: dt must be positive");
    }

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }
    double time_at(std::size_t i) const { return dt * static_cast<double>(i); }
};

// One recorded trial: two sEMG channels plus the joint motion they drive.
struct Trial {
    TimeSeries e_bi;
    TimeSeries e_tri;
    TimeSeries q;
};

}  // namespace mskfit
