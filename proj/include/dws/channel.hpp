#pragma once

// Target echo, quasi-deterministic communication channel, and AWGN.
//
// Echoes use a point-scatterer model with stop-and-hop timing: scatterer
// positions are frozen within each chirp and updated between chirps.
// Fractional delays are applied as frequency-domain phase ramps, exact for
// band-limited signals.

#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dws/fft.hpp"
#include "dws/isac_config.hpp"
#include "dws/rng.hpp"
#include "dws/waveform.hpp"

namespace dws {

using Vec3 = Eigen::Vector3d;

struct Scatterer {
    std::function<Vec3(double)> trajectory;  // time (s) -> position (m)
    double reflectivity = 1.0;               // amplitude, >= 0
    bool is_static = false;
};

inline Scatterer static_scatterer(const Vec3& pos, double reflectivity) {
    return Scatterer{[pos](double) { return pos; }, reflectivity, true};
}

struct Ray {
    double amplitude = 1.0;  // a_{n,m}
    double phase = 0.0;      // psi_{n,m}
    double delay = 0.0;      // ray delay relative to t = 0, >= cluster delay
};

struct Cluster {
    double reflection_loss = 1.0;  // H_n, power ratio
    double delay = 0.0;            // tau_n^cluster
    std::vector<Ray> rays;
};

struct QdCommChannel {
    std::vector<Cluster> clusters;
    double distance_m = 1.0;     // D_kj
    double wavelength_m = 1.0;   // lambda

    void validate() const {
        if (distance_m <= 0) throw std::invalid_argument("QdCommChannel: distance must be > 0");
        if (clusters.empty()) throw std::invalid_argument("QdCommChannel: no clusters");
        for (const auto& c : clusters) {
            if (c.reflection_loss < 0) throw std::invalid_argument("QdCommChannel: H_n < 0");
            if (c.delay < 0) throw std::invalid_argument("QdCommChannel: cluster delay < 0");
            if (c.rays.empty()) throw std::invalid_argument("QdCommChannel: cluster with no rays");
            for (const auto& r : c.rays)
                if (r.delay < c.delay)
                    throw std::invalid_argument("QdCommChannel: ray delay < cluster delay");
        }
    }
};

struct NoiseSpec {
    enum class Mode { Power, SnrDb };
    Mode mode = Mode::Power;
    double value = 0.0;  // noise power (W) or SNR (dB) w.r.t. signal power
};

namespace detail {

// Multiply spectrum (FFT bin ordering, rate fs) by exp(-j*2*pi*f*tau),
// scaled by gain. Uses a phase-increment recurrence instead of per-bin polar.
inline void accumulate_delay_ramp(Signal& spectrum_acc, const Signal& spectrum,
                                  int n, double fs, double tau, Cplx gain) {
    const Cplx step = std::polar(1.0, -2.0 * M_PI * fs / n * tau);
    const Cplx wrap = std::polar(1.0, 2.0 * M_PI * fs * tau);
    Cplx ramp(1.0, 0.0);
    const int half = n / 2;
    for (int k = 0; k < n; ++k) {
        Cplx r = (k <= half) ? ramp : ramp * wrap;
        spectrum_acc[k] += gain * r * spectrum[k];
        ramp *= step;
    }
}

}  // namespace detail

// Circular fractional delay of a whole signal sampled at fs.
inline Signal delay_signal(const Signal& x, double tau, double fs, Cplx gain = {1.0, 0.0}) {
    const int n = static_cast<int>(x.size());
    Signal spec = fft(x);
    Signal acc(n, Cplx{0.0, 0.0});
    detail::accumulate_delay_ramp(acc, spec, n, fs, tau, gain);
    ifft_inplace(acc);
    return acc;
}

// Received echo of one frame. Per scatterer s and chirp m (stop-and-hop):
//   R   = |pos_s(t0 + m*chirp_period) - device|
//   tau = 2R/c
//   g   = reflectivity / R^2 * exp(-j*4*pi*R/lambda)
// and the transmit chirp is delayed by tau and scaled by g. chirp_period
// defaults to T_chirp; a larger value simulates slow-time decimation (chirps
// spaced further apart in time).
inline Signal apply_echo(const BasebandFrame& frame,
                         const std::vector<Scatterer>& scatterers,
                         const Vec3& device_pos, double t0,
                         double chirp_period = 0.0) {
    const IsacConfig& cfg = frame.cfg;
    cfg.validate();
    const int nc = cfg.samples_per_chirp();
    const int m_chirps = static_cast<int>(frame.samples.size()) / nc;
    if (static_cast<int>(frame.samples.size()) != m_chirps * nc)
        throw std::invalid_argument("apply_echo: frame length not a multiple of N_c");
    if (chirp_period <= 0.0) chirp_period = cfg.chirp_duration_s;
    const double lambda = cfg.wavelength();

    Signal out(frame.samples.size(), Cplx{0.0, 0.0});
    if (scatterers.empty()) return out;

    Signal chirp(nc), acc(nc);
    for (int m = 0; m < m_chirps; ++m) {
        const double tm = t0 + m * chirp_period;
        std::copy(frame.samples.begin() + m * nc, frame.samples.begin() + (m + 1) * nc,
                  chirp.begin());
        fft_inplace(chirp);
        std::fill(acc.begin(), acc.end(), Cplx{0.0, 0.0});
        for (const auto& s : scatterers) {
            const Vec3 p = s.trajectory(tm);
            const double range = (p - device_pos).norm();
            if (range < 1e-6)
                throw std::invalid_argument("apply_echo: scatterer at zero range");
            const double tau = 2.0 * range / kSpeedOfLight;
            const Cplx gain =
                std::polar(s.reflectivity / (range * range), -4.0 * M_PI * range / lambda);
            detail::accumulate_delay_ramp(acc, chirp, nc, cfg.sampling_rate_hz, tau, gain);
        }
        ifft_inplace(acc);
        std::copy(acc.begin(), acc.end(), out.begin() + m * nc);
    }
    return out;
}

struct QdChannelParams {
    int clusters = 3;
    int rays_per_cluster = 5;
    double cluster_delay_mean_s = 10e-9;
    double ray_delay_mean_s = 2e-9;
    double nlos_loss_db = -10.0;  // H_n for n >= 2
    double ray_decay_s = 2e-9;    // amplitude e-folding with excess ray delay
};

// Cluster 1 is the line-of-sight cluster (delay 0, H = 1, single unit ray).
inline QdCommChannel sample_qd_channel(Rng& rng, double distance_m, double wavelength_m,
                                       const QdChannelParams& p = {}) {
    if (distance_m <= 0)
        throw std::invalid_argument("sample_qd_channel: distance must be > 0");
    QdCommChannel ch;
    ch.distance_m = distance_m;
    ch.wavelength_m = wavelength_m;
    ch.clusters.push_back(Cluster{1.0, 0.0, {Ray{1.0, 0.0, 0.0}}});
    const double nlos_h = std::pow(10.0, p.nlos_loss_db / 10.0);
    for (int n = 1; n < p.clusters; ++n) {
        Cluster c;
        c.reflection_loss = nlos_h;
        c.delay = rng.exponential(p.cluster_delay_mean_s);
        for (int m = 0; m < p.rays_per_cluster; ++m) {
            const double excess = (m == 0) ? 0.0 : rng.exponential(p.ray_delay_mean_s);
            Ray r;
            r.delay = c.delay + excess;
            r.amplitude = std::exp(-excess / p.ray_decay_s);
            r.phase = rng.uniform(0.0, 2.0 * M_PI);
            c.rays.push_back(r);
        }
        ch.clusters.push_back(c);
    }
    return ch;
}

// Output = sum over clusters/rays of
//   sqrt(H_n) * lambda / (4*pi*(D + tau_cluster*c)) * a * exp(j*psi) * x(t - tau_ray)
inline Signal apply_comm(const Signal& x, const QdCommChannel& ch, double fs) {
    ch.validate();
    const int n = static_cast<int>(x.size());
    Signal spec = fft(x);
    Signal acc(n, Cplx{0.0, 0.0});
    for (const auto& c : ch.clusters) {
        const double cluster_gain =
            std::sqrt(c.reflection_loss) * ch.wavelength_m /
            (4.0 * M_PI * (ch.distance_m + c.delay * kSpeedOfLight));
        for (const auto& r : c.rays) {
            const Cplx gain = std::polar(cluster_gain * r.amplitude, r.phase);
            detail::accumulate_delay_ramp(acc, spec, n, fs, r.delay, gain);
        }
    }
    ifft_inplace(acc);
    return acc;
}

inline Signal apply_comm(const BasebandFrame& frame, const QdCommChannel& ch) {
    return apply_comm(frame.samples, ch, frame.cfg.sampling_rate_hz);
}

inline double signal_power(const Signal& x) {
    if (x.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& v : x) acc += std::norm(v);
    return acc / static_cast<double>(x.size());
}

// Adds circularly-symmetric complex Gaussian noise of the specified power.
inline Signal add_noise(const Signal& x, const NoiseSpec& spec, Rng& rng) {
    double npow = 0.0;
    if (spec.mode == NoiseSpec::Mode::Power) {
        npow = spec.value;
    } else {
        const double sp = signal_power(x);
        if (!std::isfinite(sp))
            throw std::invalid_argument("add_noise: non-finite signal power");
        npow = sp / std::pow(10.0, spec.value / 10.0);
    }
    if (npow < 0) throw std::invalid_argument("add_noise: negative noise power");
    if (npow == 0.0) return x;
    const double sigma = std::sqrt(npow / 2.0);
    Signal out(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        out[i] = x[i] + Cplx(sigma * rng.normal(), sigma * rng.normal());
    }
    return out;
}

}  // namespace dws
