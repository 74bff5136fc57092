#pragma once

// Deterministic random number generation. All randomness in the simulator
// flows through Rng instances seeded explicitly; parallel work items derive
// independent streams from a master seed via derive_stream.

#include <cmath>
#include <cstdint>
#include <random>

namespace dws {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stream id mixing: stream k of master seed s is seeded with
// splitmix64(s ^ splitmix64(k)). Documented so callers can reproduce the
// per-sample / per-device streams outside the library.
inline uint64_t derive_stream(uint64_t master, uint64_t stream) {
    return splitmix64(master ^ splitmix64(stream));
}

class Rng {
public:
    explicit Rng(uint64_t seed = 0) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // uniform double in [0, 1)
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    uint64_t uniform_int(uint64_t n) {
        // rejection sampling, unbiased
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    // standard normal, Box-Muller (explicit so results are identical across
    // standard library implementations)
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double exponential(double mean) {
        double u;
        do {
            u = uniform();
        } while (u <= 0.0);
        return -mean * std::log(u);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace dws
