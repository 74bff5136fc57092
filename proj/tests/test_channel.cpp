#include <catch2/catch_amalgamated.hpp>

#include "dws/channel.hpp"
#include "dws/sensing.hpp"

using namespace dws;

namespace {

BasebandFrame unmodulated_frame(const IsacConfig& cfg) {
    return synth_frame(cfg, PhaseSequence(cfg.chirps_per_frame, 0.0));
}

}  // namespace

TEST_CASE("apply_echo with no scatterers returns zeros") {
    const IsacConfig cfg;
    const Signal rx = apply_echo(unmodulated_frame(cfg), {}, {0, 0, 0}, 0.0);
    REQUIRE(rx.size() == 2500);
    for (const auto& s : rx) CHECK(s == Cplx(0.0, 0.0));
}

TEST_CASE("apply_echo rejects a scatterer at the device position") {
    const IsacConfig cfg;
    CHECK_THROWS_AS(
        apply_echo(unmodulated_frame(cfg), {static_scatterer({0, 0, 0}, 1.0)}, {0, 0, 0}, 0.0),
        std::invalid_argument);
}

TEST_CASE("static 30 m scatterer dechirps to fast-time bin 2") {
    const IsacConfig cfg;
    const PhaseSequence zeros(cfg.chirps_per_frame, 0.0);
    const Signal rx =
        apply_echo(synth_frame(cfg, zeros), {static_scatterer({30.0, 0.0, 0.0}, 1.0)},
                   {0, 0, 0}, 0.0);
    const FrameMatrix m = dechirp(rx, zeros, cfg);
    Signal col(m.rows());
    for (int i = 0; i < m.rows(); ++i) col[i] = m(i, 0);
    fft_inplace(col);
    size_t peak = 0;
    for (size_t i = 1; i < col.size(); ++i)
        if (std::abs(col[i]) > std::abs(col[peak])) peak = i;
    CHECK(peak == 2);  // f_b = 2*R*mu/c ~= 200 kHz, bin spacing F_s/N_c = 100 kHz
}

TEST_CASE("1 m/s radial velocity produces a 400 Hz slow-time tone at 60 GHz") {
    IsacConfig cfg;
    cfg.chirps_per_frame = 4096;  // long slow-time record for a fine Doppler grid
    const PhaseSequence zeros(cfg.chirps_per_frame, 0.0);
    // receding target: positive Doppler under the positive-beat convention
    Scatterer s{[](double t) { return Vec3(28.3 + 1.0 * t, 0.0, 0.0); }, 1.0, false};
    const Signal rx = apply_echo(synth_frame(cfg, zeros), {s}, {0, 0, 0}, 0.0);
    const FrameMatrix m = dechirp(rx, zeros, cfg);
    const SensingCube cube = concat_frames({m});
    Eigen::VectorXcd st = slow_time_series(cube);
    Signal series(st.size());
    for (int i = 0; i < st.size(); ++i) series[i] = st(i);
    fft_inplace(series);
    size_t peak = 0;
    for (size_t i = 1; i < series.size(); ++i)
        if (std::abs(series[i]) > std::abs(series[peak])) peak = i;
    const double bin_hz = (1.0 / cfg.chirp_duration_s) / cfg.chirps_per_frame;
    const double freq = (peak <= series.size() / 2)
                            ? peak * bin_hz
                            : (static_cast<double>(peak) - series.size()) * bin_hz;
    // f_D = 2 v f_c / c = 2 * 1 * 60e9 / c ~= 400.3 Hz
    const double expect = 2.0 * 1.0 * cfg.carrier_hz / kSpeedOfLight;
    CHECK(std::abs(freq - expect) <= bin_hz);
}

TEST_CASE("apply_echo is linear in the scatterer list") {
    const IsacConfig cfg;
    const BasebandFrame tx = unmodulated_frame(cfg);
    const std::vector<Scatterer> a{static_scatterer({12.0, 3.0, 1.0}, 1.0)};
    const std::vector<Scatterer> b{static_scatterer({25.0, -4.0, 0.5}, 0.7),
                                   static_scatterer({8.0, 1.0, 2.0}, 0.3)};
    std::vector<Scatterer> both = a;
    both.insert(both.end(), b.begin(), b.end());
    const Signal ya = apply_echo(tx, a, {0, 0, 0}, 0.0);
    const Signal yb = apply_echo(tx, b, {0, 0, 0}, 0.0);
    const Signal yab = apply_echo(tx, both, {0, 0, 0}, 0.0);
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < yab.size(); ++i) {
        num += std::norm(yab[i] - (ya[i] + yb[i]));
        den += std::norm(yab[i]);
    }
    CHECK(std::sqrt(num / den) < 1e-12);
}

TEST_CASE("a static scatterer yields identical dechirped columns across chirps") {
    const IsacConfig cfg;
    const PhaseSequence zeros(cfg.chirps_per_frame, 0.0);
    const Signal rx =
        apply_echo(synth_frame(cfg, zeros), {static_scatterer({17.3, 5.0, 1.0}, 1.0)},
                   {0, 0, 0}, 0.0);
    const FrameMatrix m = dechirp(rx, zeros, cfg);
    for (int c = 1; c < m.cols(); ++c)
        for (int r = 0; r < m.rows(); ++r) {
            const double drift = std::abs(std::arg(m(r, c) * std::conj(m(r, 0))));
            CHECK(drift < 1e-9);
        }
}

TEST_CASE("sample_qd_channel LoS-only gain matches lambda/(4 pi D)") {
    Rng rng(1);
    QdChannelParams p;
    p.clusters = 1;
    p.rays_per_cluster = 1;
    const double lambda = kSpeedOfLight / 60e9;  // ~5 mm
    const QdCommChannel ch = sample_qd_channel(rng, 3.0, lambda, p);
    REQUIRE(ch.clusters.size() == 1);
    REQUIRE(ch.clusters[0].rays.size() == 1);
    CHECK(ch.clusters[0].reflection_loss == 1.0);
    CHECK(ch.clusters[0].delay == 0.0);
    const double gain = std::sqrt(ch.clusters[0].reflection_loss) * ch.wavelength_m /
                        (4.0 * M_PI * ch.distance_m);
    CHECK(gain == Catch::Approx(1.326e-4).epsilon(1e-3));
}

TEST_CASE("sample_qd_channel is deterministic and validates distance") {
    const double lambda = 5e-3;
    Rng a(42), b(42);
    const QdCommChannel ca = sample_qd_channel(a, 2.0, lambda);
    const QdCommChannel cb = sample_qd_channel(b, 2.0, lambda);
    REQUIRE(ca.clusters.size() == cb.clusters.size());
    for (size_t n = 0; n < ca.clusters.size(); ++n) {
        CHECK(ca.clusters[n].delay == cb.clusters[n].delay);
        REQUIRE(ca.clusters[n].rays.size() == cb.clusters[n].rays.size());
        for (size_t m = 0; m < ca.clusters[n].rays.size(); ++m) {
            CHECK(ca.clusters[n].rays[m].amplitude == cb.clusters[n].rays[m].amplitude);
            CHECK(ca.clusters[n].rays[m].phase == cb.clusters[n].rays[m].phase);
            CHECK(ca.clusters[n].rays[m].delay == cb.clusters[n].rays[m].delay);
        }
    }
    Rng c(0);
    CHECK_THROWS_AS(sample_qd_channel(c, 0.0, lambda), std::invalid_argument);
    CHECK_THROWS_AS(sample_qd_channel(c, -1.0, lambda), std::invalid_argument);
}

TEST_CASE("apply_comm identity-like channel passes the signal through") {
    const IsacConfig cfg;
    // single unit ray at delay 0, gain forced to 1 via lambda = 4 pi D
    QdCommChannel ch;
    ch.distance_m = 1.0;
    ch.wavelength_m = 4.0 * M_PI;
    ch.clusters.push_back(Cluster{1.0, 0.0, {Ray{1.0, 0.0, 0.0}}});
    const BasebandFrame tx = unmodulated_frame(cfg);
    const Signal rx = apply_comm(tx, ch);
    REQUIRE(rx.size() == tx.samples.size());
    for (size_t i = 0; i < rx.size(); ++i) CHECK(std::abs(rx[i] - tx.samples[i]) < 1e-9);
}

TEST_CASE("apply_comm with antiphase equal rays cancels exactly") {
    const IsacConfig cfg;
    QdCommChannel ch;
    ch.distance_m = 1.0;
    ch.wavelength_m = 1.0;
    ch.clusters.push_back(Cluster{1.0, 0.0, {Ray{1.0, 0.0, 0.0}, Ray{1.0, M_PI, 0.0}}});
    const Signal rx = apply_comm(unmodulated_frame(cfg), ch);
    for (const auto& s : rx) CHECK(std::abs(s) < 1e-12);
}

TEST_CASE("LoS energy scales as 1/D^2") {
    const IsacConfig cfg;
    auto los = [](double d) {
        QdCommChannel ch;
        ch.distance_m = d;
        ch.wavelength_m = 5e-3;
        ch.clusters.push_back(Cluster{1.0, 0.0, {Ray{1.0, 0.0, 0.0}}});
        return ch;
    };
    const BasebandFrame tx = unmodulated_frame(cfg);
    const double e1 = signal_power(apply_comm(tx, los(3.0)));
    const double e2 = signal_power(apply_comm(tx, los(6.0)));
    CHECK(e1 / e2 == Catch::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("channel validation rejects malformed structures") {
    QdCommChannel ch;
    ch.distance_m = 1.0;
    ch.wavelength_m = 5e-3;
    CHECK_THROWS_AS(ch.validate(), std::invalid_argument);  // no clusters
    ch.clusters.push_back(Cluster{1.0, 1e-9, {Ray{1.0, 0.0, 0.0}}});
    CHECK_THROWS_AS(ch.validate(), std::invalid_argument);  // ray delay < cluster delay
    ch.clusters[0].rays[0].delay = 1e-9;
    CHECK_NOTHROW(ch.validate());
    ch.distance_m = 0.0;
    CHECK_THROWS_AS(ch.validate(), std::invalid_argument);
}

TEST_CASE("add_noise: zero power is the identity, same seed reproduces") {
    const IsacConfig cfg;
    const Signal x = unmodulated_frame(cfg).samples;
    Rng rng(9);
    const Signal y = add_noise(x, NoiseSpec{NoiseSpec::Mode::Power, 0.0}, rng);
    CHECK(y == x);
    Rng r1(5), r2(5);
    const Signal a = add_noise(x, NoiseSpec{NoiseSpec::Mode::SnrDb, 10.0}, r1);
    const Signal b = add_noise(x, NoiseSpec{NoiseSpec::Mode::SnrDb, 10.0}, r2);
    CHECK(a == b);
}

TEST_CASE("add_noise at 0 dB SNR adds unit-variance noise to a unit-power signal") {
    const size_t n = 200000;
    Signal x(n, Cplx{1.0, 0.0});
    Rng rng(123);
    const Signal y = add_noise(x, NoiseSpec{NoiseSpec::Mode::SnrDb, 0.0}, rng);
    double var = 0.0;
    for (size_t i = 0; i < n; ++i) var += std::norm(y[i] - x[i]);
    var /= n;
    CHECK(var == Catch::Approx(1.0).epsilon(0.05));
}
