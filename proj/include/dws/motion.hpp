#pragma once

// Labeled multi-view scene generation: five human-motion classes observed
// simultaneously by K edge devices.
//
// The human is a five-scatterer kinematic model (torso, two legs, two arms).
// Class semantics: speed v = 0 (standing), 0.5*H (walking), 0.25*H (pacing);
// gait frequency f = v / (0.5*H); leg/arm oscillation velocity amplitudes
// 1.5*v and 0.8*v; pacing reverses heading every 2 s; standing has a small
// torso sway (0.01 m at 0.3 Hz).

#include <stdexcept>
#include <string>
#include <vector>

#include "dws/channel.hpp"
#include "dws/isac_config.hpp"
#include "dws/rng.hpp"
#include "dws/sensing.hpp"

namespace dws {

enum class MotionClass : uint8_t {
    ChildWalking = 0,
    ChildPacing = 1,
    AdultWalking = 2,
    AdultPacing = 3,
    Standing = 4,
};

constexpr int kNumClasses = 5;

inline const char* motion_class_name(MotionClass c) {
    switch (c) {
        case MotionClass::ChildWalking: return "child-walking";
        case MotionClass::ChildPacing: return "child-pacing";
        case MotionClass::AdultWalking: return "adult-walking";
        case MotionClass::AdultPacing: return "adult-pacing";
        case MotionClass::Standing: return "standing";
    }
    return "?";
}

struct Scenario {
    Vec3 room_min{0.0, -1.5, 0.0};
    Vec3 room_max{4.5, 1.5, 3.0};
    std::vector<Vec3> devices{{0.0, 0.0, 1.0}, {3.0, 1.5, 1.0}, {4.5, -1.0, 1.0}};
    // spawn rectangle, centered in the room footprint
    double spawn_min_x = 0.75, spawn_max_x = 3.75;
    double spawn_min_y = -1.0, spawn_max_y = 1.0;

    int num_devices() const { return static_cast<int>(devices.size()); }

    void validate() const {
        if (devices.size() < 2) throw std::invalid_argument("Scenario: need >= 2 devices");
        for (size_t i = 0; i < devices.size(); ++i)
            for (size_t j = i + 1; j < devices.size(); ++j)
                if ((devices[i] - devices[j]).norm() < 1e-9)
                    throw std::invalid_argument("Scenario: devices must be distinct");
        if (spawn_min_x < room_min.x() || spawn_max_x > room_max.x() ||
            spawn_min_y < room_min.y() || spawn_max_y > room_max.y())
            throw std::invalid_argument("Scenario: spawn rectangle outside room");
    }
};

struct Subject {
    MotionClass motion = MotionClass::Standing;
    double height_m = 1.7;          // H
    double speed_mps = 0.0;         // v, tied to class
    double heading_rad = 0.0;
    Vec3 start{2.25, 0.0, 0.0};     // ground position of the torso axis
    double gait_phase = 0.0;        // random phase of the limb cycle
    double turn_phase_s = 0.0;      // pacing position within the turn cycle
    double turn_period_s = 2.0;     // T_turn

    bool is_pacing() const {
        return motion == MotionClass::ChildPacing || motion == MotionClass::AdultPacing;
    }
    bool is_standing() const { return motion == MotionClass::Standing; }
    double gait_freq() const {
        return speed_mps > 0 ? speed_mps / (0.5 * height_m) : 0.0;
    }
};

inline double class_speed(MotionClass c, double height) {
    switch (c) {
        case MotionClass::ChildWalking:
        case MotionClass::AdultWalking: return 0.5 * height;
        case MotionClass::ChildPacing:
        case MotionClass::AdultPacing: return 0.25 * height;
        case MotionClass::Standing: return 0.0;
    }
    return 0.0;
}

inline Subject sample_subject(Rng& rng, MotionClass c, const Scenario& sc) {
    sc.validate();
    Subject s;
    s.motion = c;
    const bool child = (c == MotionClass::ChildWalking || c == MotionClass::ChildPacing);
    if (c == MotionClass::Standing) {
        // standing subjects may be of any height
        s.height_m = rng.uniform() < 0.5 ? rng.uniform(0.9, 1.2) : rng.uniform(1.6, 1.9);
    } else {
        s.height_m = child ? rng.uniform(0.9, 1.2) : rng.uniform(1.6, 1.9);
    }
    s.speed_mps = class_speed(c, s.height_m);
    s.heading_rad = rng.uniform(-M_PI, M_PI);
    s.start = Vec3(rng.uniform(sc.spawn_min_x, sc.spawn_max_x),
                   rng.uniform(sc.spawn_min_y, sc.spawn_max_y), 0.0);
    s.gait_phase = rng.uniform(0.0, 2.0 * M_PI);
    s.turn_phase_s = rng.uniform(0.0, 2.0 * s.turn_period_s);
    return s;
}

namespace detail {

// Path coordinate of a pacing subject at absolute cycle time tau: forward at
// speed v for T_turn seconds, backward for the next T_turn, repeating.
inline double pacing_path(double tau, double v, double t_turn) {
    const double cycle = 2.0 * t_turn;
    const double c = tau - cycle * std::floor(tau / cycle);
    return (c < t_turn) ? c * v : (cycle - c) * v;
}

}  // namespace detail

// Displacement of the torso along the heading at time t.
inline double torso_displacement(const Subject& s, double t) {
    if (s.is_standing()) return 0.01 * std::sin(2.0 * M_PI * 0.3 * t);
    if (s.is_pacing())
        return detail::pacing_path(t + s.turn_phase_s, s.speed_mps, s.turn_period_s) -
               detail::pacing_path(s.turn_phase_s, s.speed_mps, s.turn_period_s);
    return s.speed_mps * t;
}

// Torso, two legs and two arms as point scatterers. Limb oscillation has
// velocity amplitude A along the heading, so the position offset is
// -(A / (2*pi*f)) * cos(2*pi*f*t + phase).
inline std::vector<Scatterer> subject_scatterers(const Subject& s) {
    const Vec3 dir(std::cos(s.heading_rad), std::sin(s.heading_rad), 0.0);
    const Vec3 side(-dir.y(), dir.x(), 0.0);
    const double h = s.height_m;
    const double f = s.gait_freq();
    const double a_leg = 1.5 * s.speed_mps;
    const double a_arm = 0.8 * s.speed_mps;

    struct Limb {
        double z, lateral, amp, phase, refl;
    };
    const Limb limbs[5] = {
        {0.55 * h, 0.0, 0.0, 0.0, 1.0},          // torso
        {0.25 * h, 0.10, a_leg, 0.0, 0.4},       // legs, opposite phases
        {0.25 * h, -0.10, a_leg, M_PI, 0.4},
        {0.45 * h, 0.20, a_arm, M_PI, 0.25},     // arms swing against same-side leg
        {0.45 * h, -0.20, a_arm, 0.0, 0.25},
    };

    std::vector<Scatterer> out;
    out.reserve(5);
    for (const Limb& limb : limbs) {
        Scatterer sc;
        sc.reflectivity = limb.refl;
        sc.is_static = false;
        sc.trajectory = [s, dir, side, limb, f](double t) {
            double d = torso_displacement(s, t);
            if (limb.amp > 0.0 && f > 0.0) {
                d -= limb.amp / (2.0 * M_PI * f) *
                     std::cos(2.0 * M_PI * f * t + limb.phase + s.gait_phase);
            }
            return Vec3(s.start + d * dir + limb.lateral * side + Vec3(0, 0, limb.z));
        };
        out.push_back(std::move(sc));
    }
    return out;
}

// Fixed static clutter used by every scene.
inline std::vector<Scatterer> default_clutter() {
    return {
        static_scatterer({1.0, -1.2, 0.5}, 2.0),
        static_scatterer({3.8, 1.2, 1.5}, 2.0),
        static_scatterer({2.25, 0.0, 2.8}, 2.0),
    };
}

struct SensingParams {
    double t_spec_s = 0.5;          // unit sensing time
    int slow_time_decimation = 1;   // chirp spacing multiplier (reduced profile: 10)
    double sensing_snr_db = 20.0;
    int clutter_rank = 1;
    int num_clutter = 3;
    double turn_period_s = 2.0;     // pacing T_turn applied to generated subjects
    StftParams stft;                // sample_rate_hz is overwritten per run

    double chirp_spacing(const IsacConfig& cfg) const {
        return slow_time_decimation * cfg.chirp_duration_s;
    }
    int num_frames(const IsacConfig& cfg) const {
        const double exact =
            t_spec_s / (cfg.chirps_per_frame * chirp_spacing(cfg));
        const double rounded = std::round(exact);
        if (rounded < 1.0 || std::abs(exact - rounded) > 1e-6 * exact)
            throw std::invalid_argument("SensingParams: T_spec / T_frame is not an integer");
        return static_cast<int>(rounded);
    }
};

struct MultiViewSample {
    uint8_t label = 0;
    std::vector<Eigen::MatrixXf> views;  // one spectrogram per device
};

// One device's spectrogram of a scene.
inline Eigen::MatrixXf sense_scene(const std::vector<Scatterer>& scatterers,
                                   const Vec3& device, const IsacConfig& cfg,
                                   const SensingParams& p, Rng& noise_rng) {
    const int nf = p.num_frames(cfg);
    const double spacing = p.chirp_spacing(cfg);
    const PhaseSequence phases(cfg.chirps_per_frame, 0.0);  // sensing frames unmodulated
    const BasebandFrame tx = synth_frame(cfg, phases);

    std::vector<Signal> echoes(nf);
    double power = 0.0;
    size_t total = 0;
    for (int f = 0; f < nf; ++f) {
        const double t0 = f * cfg.chirps_per_frame * spacing;
        echoes[f] = apply_echo(tx, scatterers, device, t0, spacing);
        for (const auto& v : echoes[f]) power += std::norm(v);
        total += echoes[f].size();
    }
    power /= std::max<size_t>(total, 1);

    NoiseSpec noise{NoiseSpec::Mode::Power,
                    power / std::pow(10.0, p.sensing_snr_db / 10.0)};
    std::vector<FrameMatrix> frames(nf);
    for (int f = 0; f < nf; ++f) {
        frames[f] = dechirp(add_noise(echoes[f], noise, noise_rng), phases, cfg);
    }
    SensingCube cube = concat_frames(frames);
    cube = svd_clutter_filter(cube, p.clutter_rank);
    StftParams stft = p.stft;
    stft.sample_rate_hz = 1.0 / spacing;
    return stft_spectrogram(slow_time_series(cube), stft).data;
}

// All K devices observe the same subject over [0, T_spec]. If the subject's
// torso leaves the room footprint during the interval the start position is
// re-drawn (bounded retries).
inline MultiViewSample generate_sample(const Scenario& sc, Subject subject,
                                       const IsacConfig& cfg, const SensingParams& p,
                                       uint64_t sample_seed) {
    sc.validate();
    cfg.validate();

    Rng respawn_rng(derive_stream(sample_seed, 0xAB5));
    const double margin = 0.1;
    bool ok = false;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
        ok = true;
        const Vec3 dir(std::cos(subject.heading_rad), std::sin(subject.heading_rad), 0.0);
        for (int i = 0; i <= 20; ++i) {
            const double t = p.t_spec_s * i / 20.0;
            const Vec3 pos = subject.start + torso_displacement(subject, t) * dir;
            if (pos.x() < sc.room_min.x() + margin || pos.x() > sc.room_max.x() - margin ||
                pos.y() < sc.room_min.y() + margin || pos.y() > sc.room_max.y() - margin) {
                ok = false;
                break;
            }
        }
        if (!ok) {
            subject.start = Vec3(respawn_rng.uniform(sc.spawn_min_x, sc.spawn_max_x),
                                 respawn_rng.uniform(sc.spawn_min_y, sc.spawn_max_y), 0.0);
        }
    }
    if (!ok)
        throw std::runtime_error("generate_sample: subject cannot stay inside the room");

    std::vector<Scatterer> scatterers = subject_scatterers(subject);
    auto clutter = default_clutter();
    for (int i = 0; i < std::min<int>(p.num_clutter, clutter.size()); ++i)
        scatterers.push_back(clutter[i]);

    MultiViewSample out;
    out.label = static_cast<uint8_t>(subject.motion);
    out.views.reserve(sc.devices.size());
    for (size_t k = 0; k < sc.devices.size(); ++k) {
        Rng noise_rng(derive_stream(sample_seed, 1000 + k));
        IsacConfig dev_cfg = cfg;
        dev_cfg.carrier_hz = cfg.carrier_hz + 0.01e9 * static_cast<double>(k);
        out.views.push_back(sense_scene(scatterers, sc.devices[k], dev_cfg, p, noise_rng));
    }
    return out;
}

struct Dataset {
    int num_devices = 0;
    int height = 0, width = 0;
    int num_classes = kNumClasses;
    std::vector<MultiViewSample> train, test;
};

// Balanced dataset: per class, train_per_class + test_per_class samples are
// generated and split by a seeded shuffle. Sample i (global, class-major)
// uses rng stream derive_stream(seed, i).
inline Dataset generate_dataset(const Scenario& sc, const IsacConfig& cfg,
                                const SensingParams& p, int train_per_class,
                                int test_per_class, uint64_t seed) {
    if (train_per_class < 0 || test_per_class < 0 || train_per_class + test_per_class < 1)
        throw std::invalid_argument("generate_dataset: counts must be >= 1 in total");
    Dataset ds;
    ds.num_devices = sc.num_devices();
    ds.height = p.stft.out_height;
    ds.width = p.stft.out_width;

    const int per_class = train_per_class + test_per_class;
    Rng split_rng(derive_stream(seed, 0x5917));
    for (int c = 0; c < kNumClasses; ++c) {
        std::vector<MultiViewSample> pool(per_class);
        for (int i = 0; i < per_class; ++i) {
            const uint64_t sample_seed = derive_stream(seed, c * per_class + i);
            Rng subject_rng(sample_seed);
            Subject subj = sample_subject(subject_rng, static_cast<MotionClass>(c), sc);
            // apply the configured pacing turn period, keeping the sampled
            // phase uniform over the new cycle
            subj.turn_phase_s *= p.turn_period_s / subj.turn_period_s;
            subj.turn_period_s = p.turn_period_s;
            pool[i] = generate_sample(sc, subj, cfg, p, sample_seed);
        }
        // seeded Fisher-Yates, then first train_per_class go to train
        std::vector<int> idx(per_class);
        for (int i = 0; i < per_class; ++i) idx[i] = i;
        for (int i = per_class - 1; i > 0; --i)
            std::swap(idx[i], idx[split_rng.uniform_int(i + 1)]);
        for (int i = 0; i < per_class; ++i) {
            auto& dst = (i < train_per_class) ? ds.train : ds.test;
            dst.push_back(std::move(pool[idx[i]]));
        }
    }
    return ds;
}

}  // namespace dws
