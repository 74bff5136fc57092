#pragma once

// Complex-baseband modulated-FMCW frame synthesis and QPSK phase mapping.
//
// The simulator works at complex baseband relative to f_c: a chirp is
// sqrt(P_T) * exp(j(pi*mu*t^2 + phi_m)), t in [0, T_chirp). The carrier only
// enters through the wavelength, applied in the channel model.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dws/fft.hpp"
#include "dws/isac_config.hpp"

namespace dws {

using Bits = std::vector<uint8_t>;          // one bit per entry, values 0/1
using PhaseSequence = std::vector<double>;  // phi_m per chirp

struct BasebandFrame {
    Signal samples;  // length M * N_c
    IsacConfig cfg;
};

// Gray mapping, fixed: 00 -> pi/4, 01 -> 3pi/4, 11 -> 5pi/4, 10 -> 7pi/4.
inline double qpsk_phase(int b0, int b1) {
    static const double table[4] = {M_PI / 4, 3 * M_PI / 4, 7 * M_PI / 4, 5 * M_PI / 4};
    return table[(b0 << 1) | b1];
}

inline PhaseSequence qpsk_map(const Bits& bits) {
    if (bits.size() % 2 != 0)
        throw std::invalid_argument("qpsk_map: bit count must be even");
    PhaseSequence phases;
    phases.reserve(bits.size() / 2);
    for (size_t i = 0; i + 1 < bits.size(); i += 2) {
        phases.push_back(qpsk_phase(bits[i] & 1, bits[i + 1] & 1));
    }
    return phases;
}

// Inverse of qpsk_map for one constellation phase sector (0..3 counted
// counterclockwise from the first quadrant).
inline std::pair<int, int> qpsk_unmap_sector(int sector) {
    static const int table[4][2] = {{0, 0}, {0, 1}, {1, 1}, {1, 0}};
    return {table[sector & 3][0], table[sector & 3][1]};
}

// Unmodulated unit-power chirp, length N_c.
inline Signal reference_chirp(const IsacConfig& cfg) {
    cfg.validate();
    const int nc = cfg.samples_per_chirp();
    const double mu = cfg.chirp_slope();
    Signal out(nc);
    for (int n = 0; n < nc; ++n) {
        const double t = n / cfg.sampling_rate_hz;
        out[n] = std::polar(1.0, M_PI * mu * t * t);
    }
    return out;
}

// Concatenated modulated chirps, one per phase entry (any count).
inline Signal synth_chirps(const IsacConfig& cfg, const PhaseSequence& phases) {
    cfg.validate();
    const int nc = cfg.samples_per_chirp();
    const double amp = std::sqrt(cfg.tx_power_w);
    const Signal ref = reference_chirp(cfg);
    Signal out;
    out.reserve(phases.size() * nc);
    for (double phi : phases) {
        const Cplx rot = std::polar(amp, phi);
        for (int n = 0; n < nc; ++n) out.push_back(rot * ref[n]);
    }
    return out;
}

inline BasebandFrame synth_frame(const IsacConfig& cfg, const PhaseSequence& phases) {
    cfg.validate();
    if (static_cast<int>(phases.size()) != cfg.chirps_per_frame)
        throw std::invalid_argument("synth_frame: phase count must equal M");
    return BasebandFrame{synth_chirps(cfg, phases), cfg};
}

}  // namespace dws
