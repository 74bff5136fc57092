#pragma once

// ISAC waveform and sampling parameters shared by the whole simulator.

#include <cmath>
#include <stdexcept>
#include <string>

namespace dws {

constexpr double kSpeedOfLight = 299792458.0;

struct IsacConfig {
    double bandwidth_hz = 10e6;       // B
    double carrier_hz = 60e9;         // f_c
    double chirp_duration_s = 10e-6;  // T_chirp
    int chirps_per_frame = 25;        // M
    double sampling_rate_hz = 10e6;   // F_s
    double tx_power_w = 1.0;          // P_T

    double chirp_slope() const { return bandwidth_hz / chirp_duration_s; }  // mu
    double frame_duration() const { return chirps_per_frame * chirp_duration_s; }
    double wavelength() const { return kSpeedOfLight / carrier_hz; }
    // R^C = 2/T_chirp, 2 bits/chirp; evaluated as 2*F_s/N_c (identical by the
    // N_c integrality constraint) so Table I rates are floating-point exact
    double comm_rate() const { return 2.0 * sampling_rate_hz / samples_per_chirp(); }

    // N_c; T_chirp * F_s must be an integer
    int samples_per_chirp() const {
        const double exact = chirp_duration_s * sampling_rate_hz;
        const double rounded = std::round(exact);
        if (rounded < 1.0 || std::abs(exact - rounded) > 1e-6 * exact) {
            throw std::invalid_argument(
                "IsacConfig: T_chirp * F_s = " + std::to_string(exact) +
                " is not an integer sample count");
        }
        return static_cast<int>(rounded);
    }

    int samples_per_frame() const { return chirps_per_frame * samples_per_chirp(); }

    void validate() const {
        if (bandwidth_hz <= 0) throw std::invalid_argument("IsacConfig: B must be > 0");
        if (chirp_duration_s <= 0)
            throw std::invalid_argument("IsacConfig: T_chirp must be > 0");
        if (chirps_per_frame < 1)
            throw std::invalid_argument("IsacConfig: M must be >= 1");
        if (sampling_rate_hz < bandwidth_hz)
            throw std::invalid_argument("IsacConfig: F_s must be >= B");
        if (carrier_hz < 100.0 * bandwidth_hz)
            throw std::invalid_argument("IsacConfig: f_c must be >= 100*B");
        if (tx_power_w <= 0)
            throw std::invalid_argument("IsacConfig: P_T must be > 0");
        (void)samples_per_chirp();
    }
};

}  // namespace dws
