#pragma once

// Implementations of the CLI subcommands. Everything here is deterministic
// given (config, seed): outputs contain no timestamps.

#include <filesystem>
#include <iostream>

#include "dws/harness.hpp"

namespace dws {

// ---------------------------------------------------------------------------
// Split-network checkpoints: magic "VFSP", aggregator u8, split point u8,
// u16 model count (K L-models followed by the S-model), then each model in
// the VFNW network format.

inline void save_split_network(const SplitNetwork<float>& net, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write '" + path + "'");
    os.write("VFSP", 4);
    const uint8_t agg = net.agg == Aggregator::Cat ? 1 : 0;
    const uint8_t point = net.point == SplitPoint::B ? 1 : 0;
    const uint16_t count = static_cast<uint16_t>(net.lmodels.size() + 1);
    os.write(reinterpret_cast<const char*>(&agg), 1);
    os.write(reinterpret_cast<const char*>(&point), 1);
    os.write(reinterpret_cast<const char*>(&count), 2);
    for (const auto& l : net.lmodels) save_network(l, os);
    save_network(net.smodel, os);
}

inline SplitNetwork<float> load_split_network(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open '" + path + "'");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "VFSP", 4) != 0)
        throw std::runtime_error("'" + path + "' is not a split checkpoint");
    uint8_t agg, point;
    uint16_t count;
    is.read(reinterpret_cast<char*>(&agg), 1);
    is.read(reinterpret_cast<char*>(&point), 1);
    is.read(reinterpret_cast<char*>(&count), 2);
    if (count < 2) throw std::runtime_error("corrupt split checkpoint");
    SplitNetwork<float> net;
    net.agg = agg ? Aggregator::Cat : Aggregator::Ewa;
    net.point = point ? SplitPoint::B : SplitPoint::A;
    net.d = split_dim(net.point);
    for (int i = 0; i + 1 < count; ++i) net.lmodels.push_back(load_network<float>(is));
    net.smodel = load_network<float>(is);
    return net;
}

// ---------------------------------------------------------------------------

inline Dataset build_dataset(const ExperimentConfig& cfg) {
    return generate_dataset(cfg.scenario, cfg.isac, cfg.sensing, cfg.train_per_class,
                            cfg.test_per_class, cfg.seeds.front());
}

inline uint64_t cmd_gen_data(const ExperimentConfig& cfg, std::ostream& log = std::cout) {
    Dataset ds = build_dataset(cfg);
    save_dataset(ds, cfg.dataset_file());
    std::vector<int> per_class(ds.num_classes, 0);
    for (const auto& s : ds.train) ++per_class[s.label];
    for (const auto& s : ds.test) ++per_class[s.label];
    log << "dataset " << cfg.dataset_file() << ": " << ds.train.size() << " train + "
        << ds.test.size() << " test, K=" << ds.num_devices << "\n";
    for (int c = 0; c < ds.num_classes; ++c)
        log << "  " << motion_class_name(static_cast<MotionClass>(c)) << ": " << per_class[c]
            << "\n";
    const uint64_t digest = file_digest(cfg.dataset_file());
    log << "digest " << std::hex << digest << std::dec << "\n";
    return digest;
}

inline Dataset load_or_build_dataset(const ExperimentConfig& cfg, std::ostream& log) {
    const std::string path = cfg.dataset_file();
    if (std::filesystem::exists(path)) {
        return load_dataset(path, static_cast<int64_t>(cfg.train_per_class) * kNumClasses);
    }
    log << "dataset not found, generating " << path << "\n";
    Dataset ds = build_dataset(cfg);
    save_dataset(ds, path);
    return ds;
}

// Runs one scheme for every configured seed; writes per-seed metric streams,
// checkpoints, and a box-plot summary of the final test accuracies.
inline BoxStats cmd_train(const ExperimentConfig& cfg, const std::string& scheme,
                          std::ostream& log = std::cout) {
    if (std::find(all_schemes().begin(), all_schemes().end(), scheme) == all_schemes().end()) {
        std::string names;
        for (const auto& s : all_schemes()) names += (names.empty() ? "" : ", ") + s;
        throw std::invalid_argument("unknown scheme '" + scheme + "'; valid: " + names);
    }
    std::filesystem::create_directories(cfg.out_dir);
    Dataset ds = load_or_build_dataset(cfg, log);
    std::vector<double> finals;
    for (uint64_t seed : cfg.seeds) {
        SchemeRun run = run_scheme(cfg, ds, scheme, seed);
        const auto mpath =
            (std::filesystem::path(cfg.out_dir) / metrics_filename(scheme, seed)).string();
        write_metrics(run.result.history, mpath);
        const auto cpath = (std::filesystem::path(cfg.out_dir) /
                            (scheme + "_seed" + std::to_string(seed) + ".ckpt"))
                               .string();
        if (run.split) {
            save_split_network(*run.split, cpath);
        } else if (run.full) {
            std::ofstream os(cpath, std::ios::binary);
            save_network(*run.full, os);
        }
        finals.push_back(run.result.final_accuracy);
        log << scheme << " seed=" << seed << " acc=" << run.result.final_accuracy
            << " loss=" << run.result.history.back().train_loss << "\n";
    }
    BoxStats st = box_stats(finals);
    const auto spath =
        (std::filesystem::path(cfg.out_dir) / (scheme + "_summary.csv")).string();
    std::ofstream os(spath);
    os << "scheme,seeds,min,q1,median,q3,max\n";
    os << scheme << "," << st.n << "," << st.min << "," << st.q1 << "," << st.median << ","
       << st.q3 << "," << st.max << "\n";
    log << scheme << " median=" << st.median << " [" << st.min << ", " << st.max << "]\n";
    return st;
}

inline double cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint,
                       const std::string& scheme, std::ostream& log = std::cout) {
    Dataset ds = load_or_build_dataset(cfg, log);
    double acc = 0.0;
    if (scheme.rfind("vfl-", 0) == 0) {
        SplitNetwork<float> net = load_split_network(checkpoint);
        acc = eval_split(net, ds.test);
    } else {
        std::ifstream is(checkpoint, std::ios::binary);
        if (!is) throw std::runtime_error("cannot open '" + checkpoint + "'");
        Network<float> net = load_network<float>(is);
        if (scheme == "cl") acc = eval_full(net, ds.test, -1);
        else if (scheme == "hfeel") acc = eval_per_view(net, ds.test, ds.num_devices);
        else if (scheme.rfind("ed-", 0) == 0)
            acc = eval_full(net, ds.test, std::stoi(scheme.substr(3)) - 1);
        else throw std::invalid_argument("unknown scheme '" + scheme + "'");
    }
    log << "test accuracy: " << acc << "\n";
    return acc;
}

// Overhead table: per scheme, L/S model sizes, FLOPs per training iteration,
// and per-iteration link time under both accounting modes (32-bit two-way
// and 34-bit one-way). Reproduction rows use the published parameter count
// 104,637 and intermediate dimensions 784/60.
inline void cmd_overhead(const ExperimentConfig& cfg, std::ostream& os = std::cout) {
    const int k = cfg.scenario.num_devices();
    const int batch = cfg.batch;
    const double rate = cfg.isac.comm_rate();
    const int h = cfg.sensing.stft.out_height, w = cfg.sensing.stft.out_width;

    os << "scheme,lmodel_params,smodel_params,flops_per_iter,comm_s_32bit_two_way,"
          "comm_s_34bit_one_way\n";
    for (SplitPoint p : {SplitPoint::A, SplitPoint::B}) {
        Network<float> l{lmodel_specs(p)};
        Network<float> s{smodel_specs(p, Aggregator::Ewa, k)};
        const int d = split_dim(p);
        const uint64_t c_l = l.flops_per_sample({1, h, w});
        const uint64_t c_s = s.flops_per_sample({d, 1, 1});
        const double flops = 3.0 * batch * (static_cast<double>(c_l) * k + c_s);
        const double t32 = 2.0 * d * batch * 32 / rate;
        const double t34 = 1.0 * d * batch * 34 / rate;
        os << (p == SplitPoint::A ? "vfl-a-ewa" : "vfl-b-ewa") << "," << l.param_count() << ","
           << s.param_count() << "," << flops << "," << t32 << "," << t34 << "\n";
    }
    {
        Network<float> full{full_network_specs(1)};
        const uint64_t c = full.flops_per_sample({1, h, w});
        const double flops = 3.0 * batch * static_cast<double>(c) * k;
        const double t32 = 2.0 * static_cast<double>(full.param_count()) * 32 / rate;
        os << "hfeel," << full.param_count() << ",0," << flops << "," << t32 << ",\n";
    }
    // published-architecture reproduction rows (model sizes from the source
    // tables; our architecture differs, so only the accounting is reproduced)
    os << "published-vfl-a,,," << "," << 2.0 * 784 * batch * 32 / rate << ","
       << 784.0 * batch * 34 / rate << "\n";
    os << "published-vfl-b,,," << "," << 2.0 * 60 * batch * 32 / rate << ","
       << 60.0 * batch * 34 / rate << "\n";
    os << "published-hfeel,104637,,," << 2.0 * 104637 * 32 / rate << ",\n";
}

// Diagnostic arrays for external plotting: a dechirped fast-time spectrum of
// a static 30 m target, a walking-adult spectrogram, and matched-filter
// constellation decisions at 15 dB, plus an empirical BER estimate.
inline void cmd_signal_demo(const ExperimentConfig& cfg, std::ostream& log = std::cout) {
    std::filesystem::create_directories(cfg.out_dir);
    const IsacConfig& isac = cfg.isac;
    const auto out = [&](const std::string& name) {
        return (std::filesystem::path(cfg.out_dir) / name).string();
    };

    {  // fast-time spectrum, static target at 30 m
        const PhaseSequence phases(isac.chirps_per_frame, 0.0);
        const BasebandFrame tx = synth_frame(isac, phases);
        const Signal rx =
            apply_echo(tx, {static_scatterer({30.0, 0.0, 0.0}, 1.0)}, {0, 0, 0}, 0.0);
        const FrameMatrix m = dechirp(rx, phases, isac);
        Signal col(m.rows());
        for (int i = 0; i < m.rows(); ++i) col[i] = m(i, 0);
        fft_inplace(col);
        std::ofstream os(out("fast_time_spectrum.txt"));
        int peak = 0;
        for (size_t i = 0; i < col.size(); ++i) {
            os << std::abs(col[i]) << "\n";
            if (std::abs(col[i]) > std::abs(col[peak])) peak = static_cast<int>(i);
        }
        log << "fast-time spectrum peak bin: " << peak << "\n";
    }

    {  // walking-adult spectrogram
        Rng rng(derive_stream(cfg.seeds.front(), 0xDE30));
        Subject subj = sample_subject(rng, MotionClass::AdultWalking, cfg.scenario);
        MultiViewSample s = generate_sample(cfg.scenario, subj, isac, cfg.sensing,
                                            derive_stream(cfg.seeds.front(), 0xDE31));
        std::ofstream os(out("spectrogram.txt"));
        const auto& v = s.views[0];
        for (int r = 0; r < v.rows(); ++r) {
            for (int c = 0; c < v.cols(); ++c) os << v(r, c) << (c + 1 < v.cols() ? " " : "");
            os << "\n";
        }
        log << "spectrogram: " << v.rows() << "x" << v.cols() << "\n";
    }

    {  // constellation and BER at 15 dB post-correlation SNR
        const double snr_lin = std::pow(10.0, 15.0 / 10.0);
        QdCommChannel ch;
        ch.distance_m = 3.0;
        ch.wavelength_m = isac.wavelength();
        ch.clusters.push_back(Cluster{1.0, 0.0, {Ray{1.0, 0.0, 0.0}}});
        const int nc = isac.samples_per_chirp();
        const double rx_pow = isac.tx_power_w *
                              std::pow(ch.wavelength_m / (4.0 * M_PI * ch.distance_m), 2.0);
        const double noise_pow = rx_pow * nc / snr_lin;  // correlation gain N_c

        Rng rng(derive_stream(cfg.seeds.front(), 0xBE12));
        const int n_bits = 100000;
        Bits bits(n_bits);
        for (auto& b : bits) b = static_cast<uint8_t>(rng.uniform_int(2));
        Signal tx = modulate_bits(bits, isac);
        Signal rx = apply_comm(tx, ch, isac.sampling_rate_hz);
        rx = add_noise(rx, NoiseSpec{NoiseSpec::Mode::Power, noise_pow}, rng);
        Bits got = demodulate(rx, ch, isac);
        int errors = 0;
        for (int i = 0; i < n_bits; ++i) errors += (bits[i] != got[i]);
        log << "BER at 15 dB: " << static_cast<double>(errors) / n_bits << " (" << errors
            << "/" << n_bits << ")\n";

        // correlation constellation for the first 512 chirps
        Signal ref = reference_chirp(isac);
        for (auto& v : ref) v *= std::sqrt(isac.tx_power_w);
        const Signal ref_ch = apply_comm(ref, ch, isac.sampling_rate_hz);
        std::ofstream os(out("constellation.txt"));
        for (int m = 0; m < std::min<int>(512, n_bits / 2); ++m) {
            Cplx z{0, 0};
            for (int n = 0; n < nc; ++n) z += rx[m * nc + n] * std::conj(ref_ch[n]);
            os << z.real() << " " << z.imag() << " " << int(got[2 * m]) << int(got[2 * m + 1])
               << "\n";
        }
    }
}

struct SweepRow {
    std::string scheme;
    BoxStats stats;
};

// Full scheme x seed matrix; per-seed metric streams plus one combined
// summary table.
inline std::vector<SweepRow> cmd_sweep(const ExperimentConfig& cfg,
                                       std::ostream& log = std::cout) {
    std::filesystem::create_directories(cfg.out_dir);
    Dataset ds = load_or_build_dataset(cfg, log);
    std::vector<SweepRow> rows;
    for (const auto& scheme : cfg.schemes) {
        std::vector<double> finals;
        for (uint64_t seed : cfg.seeds) {
            SchemeRun run = run_scheme(cfg, ds, scheme, seed);
            const auto mpath =
                (std::filesystem::path(cfg.out_dir) / metrics_filename(scheme, seed)).string();
            write_metrics(run.result.history, mpath);
            finals.push_back(run.result.final_accuracy);
            log << scheme << " seed=" << seed << " acc=" << run.result.final_accuracy << "\n";
        }
        rows.push_back({scheme, box_stats(finals)});
    }
    const auto spath = (std::filesystem::path(cfg.out_dir) / "summary.csv").string();
    std::ofstream os(spath);
    os << "scheme,seeds,min,q1,median,q3,max\n";
    for (const auto& r : rows) {
        os << r.scheme << "," << r.stats.n << "," << r.stats.min << "," << r.stats.q1 << ","
           << r.stats.median << "," << r.stats.q3 << "," << r.stats.max << "\n";
        log << r.scheme << " median=" << r.stats.median << "\n";
    }
    return rows;
}

}  // namespace dws
