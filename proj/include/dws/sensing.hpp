#pragma once

// Receive-side sensing pipeline: dechirp to fast-time/slow-time matrices,
// frame concatenation, SVD clutter removal, fast-time summation, and STFT
// spectrogram generation.

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "dws/fft.hpp"
#include "dws/isac_config.hpp"
#include "dws/waveform.hpp"

namespace dws {

using FrameMatrix = Eigen::MatrixXcd;  // N_c x M, fast time down the columns

struct SensingCube {
    Eigen::MatrixXcd data;  // N_c x (N_f * M)
    int num_frames = 1;
    int chirps_per_frame = 1;
};

// Column m = conj(rx chirp m (element-wise) conj(reference chirp) * exp(-j*phi_m)).
// The outer conjugate selects the down-conversion convention in which a target
// at range R beats at +2*R*mu/c, so range peaks land in the positive
// fast-time bins.
inline FrameMatrix dechirp(const Signal& rx, const PhaseSequence& phases,
                           const IsacConfig& cfg) {
    const int nc = cfg.samples_per_chirp();
    const int m = static_cast<int>(phases.size());
    if (static_cast<int>(rx.size()) != m * nc)
        throw std::invalid_argument("dechirp: rx length must be M * N_c");
    const Signal ref = reference_chirp(cfg);
    FrameMatrix out(nc, m);
    for (int col = 0; col < m; ++col) {
        const Cplx demod = std::polar(1.0, phases[col]);
        for (int row = 0; row < nc; ++row) {
            out(row, col) = std::conj(rx[col * nc + row]) * ref[row] * demod;
        }
    }
    return out;
}

inline SensingCube concat_frames(const std::vector<FrameMatrix>& frames) {
    if (frames.empty()) throw std::invalid_argument("concat_frames: no frames");
    const auto rows = frames.front().rows();
    const auto cols = frames.front().cols();
    SensingCube cube;
    cube.num_frames = static_cast<int>(frames.size());
    cube.chirps_per_frame = static_cast<int>(cols);
    cube.data.resize(rows, cols * frames.size());
    for (size_t f = 0; f < frames.size(); ++f) {
        if (frames[f].rows() != rows || frames[f].cols() != cols)
            throw std::invalid_argument("concat_frames: ragged frame dimensions");
        cube.data.middleCols(f * cols, cols) = frames[f];
    }
    return cube;
}

// Removes the best rank-r approximation. Implemented via the (small) Gram
// matrix A A^H: its top eigenvectors are the top left singular vectors, and
// the filter output is A - U_r U_r^H A.
inline SensingCube svd_clutter_filter(const SensingCube& cube, int rank) {
    const auto rows = cube.data.rows();
    const auto cols = cube.data.cols();
    if (rank < 0 || rank >= std::min(rows, cols))
        throw std::invalid_argument("svd_clutter_filter: rank out of range");
    if (rank == 0) return cube;
    Eigen::MatrixXcd gram = cube.data * cube.data.adjoint();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram);
    // eigenvalues ascending; take the top-rank eigenvectors
    Eigen::MatrixXcd u = es.eigenvectors().rightCols(rank);
    SensingCube out = cube;
    out.data.noalias() = cube.data - u * (u.adjoint() * cube.data);
    return out;
}

// Element t = sum over fast-time rows of column t.
inline Eigen::VectorXcd slow_time_series(const SensingCube& cube) {
    return cube.data.colwise().sum().transpose();
}

struct StftParams {
    int window = 512;
    int hop = 128;
    int fft_size = 1024;
    double sample_rate_hz = 100e3;  // slow-time rate, 1 / chirp spacing
    double band_hz = 2000.0;        // crop to [-band, band] Doppler
    int out_height = 28;
    int out_width = 28;
    double floor_db = -80.0;
};

struct Spectrogram {
    Eigen::MatrixXf data;  // out_height x out_width, standardized
    StftParams params;
};

namespace detail {

// Area-style average pooling onto an out_h x out_w grid (adaptive bins).
inline Eigen::MatrixXd adaptive_avg_pool(const Eigen::MatrixXd& in, int out_h, int out_w) {
    const int h = static_cast<int>(in.rows());
    const int w = static_cast<int>(in.cols());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(out_h, out_w);
    for (int i = 0; i < out_h; ++i) {
        const int r0 = static_cast<int>(static_cast<int64_t>(i) * h / out_h);
        const int r1 = std::max(r0 + 1, static_cast<int>(static_cast<int64_t>(i + 1) * h / out_h));
        for (int j = 0; j < out_w; ++j) {
            const int c0 = static_cast<int>(static_cast<int64_t>(j) * w / out_w);
            const int c1 =
                std::max(c0 + 1, static_cast<int>(static_cast<int64_t>(j + 1) * w / out_w));
            out(i, j) = in.block(r0, c0, r1 - r0, c1 - c0).mean();
        }
    }
    return out;
}

}  // namespace detail

// Hann-windowed STFT magnitude, dB relative to the peak with a -80 dB floor,
// cropped to the configured Doppler band, pooled to out_height x out_width
// and standardized to zero mean / unit variance. A spectrogram with variance
// below 1e-12 before standardization is returned as all zeros.
inline Spectrogram stft_spectrogram(const Eigen::VectorXcd& series, const StftParams& p) {
    const int len = static_cast<int>(series.size());
    if (p.window > len)
        throw std::invalid_argument("stft_spectrogram: window longer than series");
    if (p.hop < 1) throw std::invalid_argument("stft_spectrogram: hop must be >= 1");
    if (p.fft_size < p.window)
        throw std::invalid_argument("stft_spectrogram: fft size smaller than window");

    std::vector<double> hann(p.window);
    for (int n = 0; n < p.window; ++n)
        hann[n] = 0.5 * (1.0 - std::cos(2.0 * M_PI * n / (p.window - 1)));

    const int cols = (len - p.window) / p.hop + 1;
    // rows after fftshift-style centering: keep |f| <= band
    const double bin_hz = p.sample_rate_hz / p.fft_size;
    const int band_bins = std::min(p.fft_size / 2 - 1,
                                   static_cast<int>(std::floor(p.band_hz / bin_hz)));
    const int rows = 2 * band_bins + 1;

    Eigen::MatrixXd mag(rows, cols);
    Signal buf(p.fft_size);
    for (int c = 0; c < cols; ++c) {
        std::fill(buf.begin(), buf.end(), Cplx{0.0, 0.0});
        for (int n = 0; n < p.window; ++n) buf[n] = series[c * p.hop + n] * hann[n];
        fft_inplace(buf);
        // row 0 = -band ... row rows-1 = +band (zero Doppler centered)
        for (int r = 0; r < rows; ++r) {
            const int f = r - band_bins;  // signed bin
            const int k = (f >= 0) ? f : f + p.fft_size;
            mag(r, c) = std::abs(buf[k]);
        }
    }

    const double peak = mag.maxCoeff();
    Eigen::MatrixXd db(rows, cols);
    if (peak <= 0.0) {
        db.setConstant(p.floor_db);
    } else {
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                db(r, c) = std::max(p.floor_db, 20.0 * std::log10(mag(r, c) / peak + 1e-300));
    }

    Eigen::MatrixXd pooled = detail::adaptive_avg_pool(db, p.out_height, p.out_width);
    const double mean = pooled.mean();
    const double var = (pooled.array() - mean).square().mean();
    Spectrogram out;
    out.params = p;
    if (var < 1e-12) {
        out.data = Eigen::MatrixXf::Zero(p.out_height, p.out_width);
    } else {
        out.data = ((pooled.array() - mean) / std::sqrt(var)).cast<float>();
    }
    return out;
}

}  // namespace dws
