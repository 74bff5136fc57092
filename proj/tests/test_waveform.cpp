#include <catch2/catch_amalgamated.hpp>

#include "dws/rng.hpp"
#include "dws/waveform.hpp"

using namespace dws;

TEST_CASE("qpsk_map follows the documented Gray mapping") {
    CHECK(qpsk_map({0, 0}) == PhaseSequence{M_PI / 4});
    CHECK(qpsk_map({}).empty());
    const PhaseSequence expect{M_PI / 4, 3 * M_PI / 4, 5 * M_PI / 4, 7 * M_PI / 4};
    const PhaseSequence got = qpsk_map({0, 0, 0, 1, 1, 1, 1, 0});
    REQUIRE(got.size() == expect.size());
    for (size_t i = 0; i < got.size(); ++i) CHECK(got[i] == Catch::Approx(expect[i]));
}

TEST_CASE("qpsk_map rejects odd bit counts") {
    CHECK_THROWS_AS(qpsk_map({1}), std::invalid_argument);
    CHECK_THROWS_AS(qpsk_map({0, 1, 0}), std::invalid_argument);
}

TEST_CASE("qpsk_unmap_sector inverts qpsk_phase") {
    for (int b0 = 0; b0 < 2; ++b0)
        for (int b1 = 0; b1 < 2; ++b1) {
            const double phi = qpsk_phase(b0, b1);
            const int sector = static_cast<int>(phi / (M_PI / 2.0));
            const auto [g0, g1] = qpsk_unmap_sector(sector);
            CHECK(g0 == b0);
            CHECK(g1 == b1);
        }
}

TEST_CASE("reference_chirp has unit modulus and starts at 1") {
    const IsacConfig cfg;
    const Signal ref = reference_chirp(cfg);
    REQUIRE(ref.size() == 100);
    CHECK(ref[0] == Cplx(1.0, 0.0));
    // conj(ref) .* ref = all ones
    for (const auto& s : ref) CHECK(std::norm(s) == Catch::Approx(1.0).margin(1e-12));
    // self inner product = N_c
    Cplx acc{0, 0};
    for (const auto& s : ref) acc += s * std::conj(s);
    CHECK(acc.real() == Catch::Approx(100.0).margin(1e-9));
    CHECK(acc.imag() == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("synth_frame produces M*N_c samples with the right first-sample phase") {
    const IsacConfig cfg;  // defaults: M=25, N_c=100
    const PhaseSequence zeros(cfg.chirps_per_frame, 0.0);
    const BasebandFrame f = synth_frame(cfg, zeros);
    REQUIRE(f.samples.size() == 2500);
    CHECK(std::arg(f.samples[0]) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("constant modulation phase factors out of the chirp") {
    const IsacConfig cfg;
    const PhaseSequence zeros(cfg.chirps_per_frame, 0.0);
    const PhaseSequence quarter(cfg.chirps_per_frame, M_PI / 4);
    const Signal a = synth_frame(cfg, zeros).samples;
    const Signal b = synth_frame(cfg, quarter).samples;
    const Cplx rot = std::polar(1.0, M_PI / 4);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(std::abs(b[i] - rot * a[i]) < 1e-12);
    }
}

TEST_CASE("synth_frame validates phase count and sample-grid integrality") {
    const IsacConfig cfg;
    CHECK_THROWS_AS(synth_frame(cfg, PhaseSequence(3, 0.0)), std::invalid_argument);
    IsacConfig bad = cfg;
    bad.chirp_duration_s = 10.05e-6;  // T_chirp * F_s = 100.5
    CHECK_THROWS_AS(synth_frame(bad, PhaseSequence(bad.chirps_per_frame, 0.0)),
                    std::invalid_argument);
}

TEST_CASE("every synthesized chirp has constant modulus sqrt(P_T)") {
    IsacConfig cfg;
    cfg.tx_power_w = 2.5;
    Rng rng(7);
    Bits bits(2 * cfg.chirps_per_frame);
    for (auto& b : bits) b = static_cast<uint8_t>(rng.uniform_int(2));
    const BasebandFrame f = synth_frame(cfg, qpsk_map(bits));
    for (const auto& s : f.samples)
        CHECK(std::abs(s) == Catch::Approx(std::sqrt(2.5)).margin(1e-12));
}

TEST_CASE("per-chirp phase recovery from a modulated frame is exact") {
    const IsacConfig cfg;
    Rng rng(11);
    Bits bits(2 * cfg.chirps_per_frame);
    for (auto& b : bits) b = static_cast<uint8_t>(rng.uniform_int(2));
    const PhaseSequence phases = qpsk_map(bits);
    const BasebandFrame f = synth_frame(cfg, phases);
    const Signal ref = reference_chirp(cfg);
    const int nc = cfg.samples_per_chirp();
    for (int m = 0; m < cfg.chirps_per_frame; ++m) {
        for (int n = 0; n < nc; ++n) {
            const Cplx v = f.samples[m * nc + n] * std::conj(ref[n]);
            double err = std::abs(std::arg(v * std::polar(1.0, -phases[m])));
            CHECK(err < 1e-9);
        }
    }
}

TEST_CASE("doubling F_s doubles N_c and keeps recovered phases") {
    IsacConfig cfg;
    IsacConfig cfg2 = cfg;
    cfg2.sampling_rate_hz = 2.0 * cfg.sampling_rate_hz;
    CHECK(cfg2.samples_per_chirp() == 2 * cfg.samples_per_chirp());

    Rng rng(3);
    Bits bits(2 * cfg.chirps_per_frame);
    for (auto& b : bits) b = static_cast<uint8_t>(rng.uniform_int(2));
    const PhaseSequence phases = qpsk_map(bits);
    for (const IsacConfig& c : {cfg, cfg2}) {
        const BasebandFrame f = synth_frame(c, phases);
        const Signal ref = reference_chirp(c);
        const int nc = c.samples_per_chirp();
        for (int m = 0; m < c.chirps_per_frame; ++m) {
            // mean over the chirp, then compare the recovered phase
            Cplx acc{0, 0};
            for (int n = 0; n < nc; ++n) acc += f.samples[m * nc + n] * std::conj(ref[n]);
            double err = std::abs(std::arg(acc * std::polar(1.0, -phases[m])));
            CHECK(err < 1e-9);
        }
    }
}
