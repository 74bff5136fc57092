#pragma once

// Shared helpers for the unit and acceptance tests.

#include <Eigen/Dense>

#include "dws/motion.hpp"

namespace dws::test {

// Cheap sensing profile for unit tests: decimated slow time, short interval.
inline SensingParams fast_sensing(double t_spec = 0.1, double snr_db = 20.0) {
    SensingParams p;
    p.t_spec_s = t_spec;
    p.slow_time_decimation = 10;
    p.sensing_snr_db = snr_db;
    return p;
}

// |frequency| centroid of the above-mean cells of a standardized spectrogram;
// rows span [-band_hz, band_hz].
inline double doppler_centroid(const Eigen::MatrixXf& spec, double band_hz) {
    const int rows = static_cast<int>(spec.rows());
    double num = 0.0, den = 0.0;
    for (int r = 0; r < rows; ++r) {
        const double f = -band_hz + (r + 0.5) * (2.0 * band_hz / rows);
        for (int c = 0; c < spec.cols(); ++c) {
            const double w = std::max<double>(spec(r, c), 0.0);
            num += w * std::abs(f);
            den += w;
        }
    }
    return den > 0.0 ? num / den : 0.0;
}

}  // namespace dws::test
