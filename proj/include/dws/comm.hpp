#pragma once

// QPSK-over-chirp modem, real-vector bit codec, and rate/latency accounting.

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "dws/channel.hpp"
#include "dws/isac_config.hpp"
#include "dws/waveform.hpp"

namespace dws {

struct VectorCodec {
    // 32 = IEEE-754 single precision payload; 34 adds 2 framing bits per
    // element (ledger accounting mode, framing ignored on decode).
    int bits_per_element = 32;

    void validate() const {
        if (bits_per_element != 32 && bits_per_element != 34)
            throw std::invalid_argument("VectorCodec: bits per element must be 32 or 34");
    }
};

struct LinkBudget {
    double rate_bps = 0.0;  // R^C = 2 / T_chirp
    uint64_t bits = 0;
    double seconds = 0.0;
};

inline double transfer_time(uint64_t n_bits, const IsacConfig& cfg) {
    return static_cast<double>(n_bits) / cfg.comm_rate();
}

inline LinkBudget link_budget(uint64_t n_bits, const IsacConfig& cfg) {
    return LinkBudget{cfg.comm_rate(), n_bits, transfer_time(n_bits, cfg)};
}

// Bits are most-significant-bit-first within each element, elements in
// vector index order. The 34-bit mode prepends framing bits {0,1}.
inline Bits encode_vector(const std::vector<float>& v, const VectorCodec& codec = {}) {
    codec.validate();
    Bits bits;
    bits.reserve(v.size() * codec.bits_per_element);
    for (float x : v) {
        uint32_t u = 0;
        std::memcpy(&u, &x, sizeof(u));
        if (codec.bits_per_element == 34) {
            bits.push_back(0);
            bits.push_back(1);
        }
        for (int b = 31; b >= 0; --b) bits.push_back((u >> b) & 1u);
    }
    return bits;
}

inline std::vector<float> decode_vector(const Bits& bits, const VectorCodec& codec = {}) {
    codec.validate();
    const size_t bpe = static_cast<size_t>(codec.bits_per_element);
    if (bits.size() % bpe != 0)
        throw std::invalid_argument("decode_vector: bit count not a multiple of element size");
    const size_t framing = bpe - 32;
    std::vector<float> v(bits.size() / bpe);
    for (size_t i = 0; i < v.size(); ++i) {
        uint32_t u = 0;
        const size_t base = i * bpe + framing;
        for (int b = 0; b < 32; ++b) u = (u << 1) | (bits[base + b] & 1u);
        float x;
        std::memcpy(&x, &u, sizeof(x));
        v[i] = x;
    }
    return v;
}

// One modulated chirp per bit pair; odd trailing bit is rejected.
inline Signal modulate_bits(const Bits& bits, const IsacConfig& cfg) {
    return synth_chirps(cfg, qpsk_map(bits));
}

// Matched-filter receiver: correlate each chirp slot with the
// channel-convolved reference chirp (channel known at receiver), decide the
// nearest constellation point from the correlation phase, inverse-Gray-map.
// A zero correlation is decided as pi/4 (bits 00).
inline Bits demodulate(const Signal& rx, const QdCommChannel& ch, const IsacConfig& cfg) {
    const int nc = cfg.samples_per_chirp();
    if (rx.size() % static_cast<size_t>(nc) != 0)
        throw std::invalid_argument("demodulate: rx length not a multiple of N_c");
    const int chirps = static_cast<int>(rx.size()) / nc;

    Signal ref = reference_chirp(cfg);
    for (auto& s : ref) s *= std::sqrt(cfg.tx_power_w);
    const Signal ref_ch = apply_comm(ref, ch, cfg.sampling_rate_hz);

    Bits bits;
    bits.reserve(2 * chirps);
    for (int m = 0; m < chirps; ++m) {
        Cplx z{0.0, 0.0};
        for (int n = 0; n < nc; ++n) z += rx[m * nc + n] * std::conj(ref_ch[n]);
        int sector = 0;
        if (z != Cplx{0.0, 0.0}) {
            double theta = std::arg(z);  // (-pi, pi]
            if (theta < 0) theta += 2.0 * M_PI;
            sector = static_cast<int>(theta / (M_PI / 2.0)) & 3;  // boundaries go ccw
        }
        auto [b0, b1] = qpsk_unmap_sector(sector);
        bits.push_back(static_cast<uint8_t>(b0));
        bits.push_back(static_cast<uint8_t>(b1));
    }
    return bits;
}

}  // namespace dws
