#pragma once

// Experiment configuration, dataset persistence, orchestration, and results
// emission. Config files are strict key=value text: unknown keys are fatal.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dws/motion.hpp"
#include "dws/vfeel.hpp"

namespace dws {

inline const std::vector<std::string>& all_schemes() {
    static const std::vector<std::string> s{"vfl-a-ewa", "vfl-a-cat", "vfl-b-ewa", "vfl-b-cat",
                                           "ed-1",      "ed-2",      "ed-3",      "hfeel",
                                           "cl"};
    return s;
}

struct ExperimentConfig {
    std::string profile = "full";
    IsacConfig isac;
    Scenario scenario;
    SensingParams sensing;
    int train_per_class = 200;
    int test_per_class = 50;
    int batch = 32;
    double learning_rate = 0.01;
    int iterations = 2000;
    int eval_interval = 50;
    std::vector<uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
    std::vector<std::string> schemes = all_schemes();
    std::string link_mode = "ideal";  // ideal | simulated-isac
    int bits_per_element = 32;
    std::string accounting = "two-way";  // two-way | one-way
    std::string out_dir = "out";
    std::string dataset_path;  // defaults to <out_dir>/dataset.vfsd

    std::string dataset_file() const {
        return dataset_path.empty()
                   ? (std::filesystem::path(out_dir) / "dataset.vfsd").string()
                   : dataset_path;
    }

    void apply_profile(const std::string& p) {
        profile = p;
        if (p == "reduced") {
            sensing.slow_time_decimation = 10;
            train_per_class = 60;
            test_per_class = 20;
            iterations = 500;
            eval_interval = 50;
        } else if (p == "full") {
            sensing.slow_time_decimation = 1;
            train_per_class = 200;
            test_per_class = 50;
            iterations = 2000;
        } else {
            throw std::invalid_argument("unknown profile '" + p + "'");
        }
    }

    void validate() const {
        isac.validate();
        scenario.validate();
        (void)sensing.num_frames(isac);
        if (batch < 1) throw std::invalid_argument("batch must be >= 1");
        if (learning_rate <= 0) throw std::invalid_argument("learning rate must be > 0");
        if (bits_per_element != 32 && bits_per_element != 34)
            throw std::invalid_argument("bits_per_element must be 32 or 34");
        if (link_mode != "ideal" && link_mode != "simulated-isac")
            throw std::invalid_argument("link_mode must be ideal or simulated-isac");
        if (accounting != "two-way" && accounting != "one-way")
            throw std::invalid_argument("accounting must be two-way or one-way");
        for (const auto& s : schemes)
            if (std::find(all_schemes().begin(), all_schemes().end(), s) == all_schemes().end())
                throw std::invalid_argument("unknown scheme '" + s + "'");
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& is, const std::string& origin = "<config>") {
    // two passes: profile first so explicit keys override profile defaults
    std::vector<std::pair<int, std::pair<std::string, std::string>>> entries;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                        ": expected key=value");
        entries.push_back({lineno, {detail::trim(line.substr(0, eq)),
                                    detail::trim(line.substr(eq + 1))}});
    }

    ExperimentConfig cfg;
    for (const auto& [ln, kv] : entries)
        if (kv.first == "profile") cfg.apply_profile(kv.second);

    for (const auto& [ln, kv] : entries) {
        const std::string& key = kv.first;
        const std::string& val = kv.second;
        try {
            if (key == "profile") continue;
            else if (key == "bandwidth_hz") cfg.isac.bandwidth_hz = std::stod(val);
            else if (key == "carrier_hz") cfg.isac.carrier_hz = std::stod(val);
            else if (key == "chirp_duration_s") cfg.isac.chirp_duration_s = std::stod(val);
            else if (key == "chirps_per_frame") cfg.isac.chirps_per_frame = std::stoi(val);
            else if (key == "sampling_rate_hz") cfg.isac.sampling_rate_hz = std::stod(val);
            else if (key == "tx_power_w") cfg.isac.tx_power_w = std::stod(val);
            else if (key == "t_spec_s") cfg.sensing.t_spec_s = std::stod(val);
            else if (key == "slow_time_decimation")
                cfg.sensing.slow_time_decimation = std::stoi(val);
            else if (key == "sensing_snr_db") cfg.sensing.sensing_snr_db = std::stod(val);
            else if (key == "clutter_rank") cfg.sensing.clutter_rank = std::stoi(val);
            else if (key == "turn_period_s") cfg.sensing.turn_period_s = std::stod(val);
            else if (key == "stft_window") cfg.sensing.stft.window = std::stoi(val);
            else if (key == "stft_hop") cfg.sensing.stft.hop = std::stoi(val);
            else if (key == "stft_fft") cfg.sensing.stft.fft_size = std::stoi(val);
            else if (key == "doppler_band_hz") cfg.sensing.stft.band_hz = std::stod(val);
            else if (key == "spec_height") cfg.sensing.stft.out_height = std::stoi(val);
            else if (key == "spec_width") cfg.sensing.stft.out_width = std::stoi(val);
            else if (key == "train_per_class") cfg.train_per_class = std::stoi(val);
            else if (key == "test_per_class") cfg.test_per_class = std::stoi(val);
            else if (key == "batch") cfg.batch = std::stoi(val);
            else if (key == "learning_rate") cfg.learning_rate = std::stod(val);
            else if (key == "iterations") cfg.iterations = std::stoi(val);
            else if (key == "eval_interval") cfg.eval_interval = std::stoi(val);
            else if (key == "seed") cfg.seeds = {std::stoull(val)};
            else if (key == "seeds") {
                cfg.seeds.clear();
                for (const auto& s : detail::split_csv(val)) cfg.seeds.push_back(std::stoull(s));
            } else if (key == "schemes") cfg.schemes = detail::split_csv(val);
            else if (key == "link_mode") cfg.link_mode = val;
            else if (key == "bits_per_element") cfg.bits_per_element = std::stoi(val);
            else if (key == "accounting") cfg.accounting = val;
            else if (key == "out_dir") cfg.out_dir = val;
            else if (key == "dataset_path") cfg.dataset_path = val;
            else
                throw std::invalid_argument("unknown key '" + key + "'");
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(origin + ":" + std::to_string(ln) + ": " + e.what());
        }
    }
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config file '" + path + "'");
    return parse_config(is, path);
}

// ---------------------------------------------------------------------------
// Dataset persistence: magic "VFSD", version u16, K u16, height u16,
// width u16, class count u16, sample count u32, then per sample label u8
// followed by K spectrograms as float32 little-endian row-major.
// Train samples are written first, then test; the split position is not part
// of the file and is supplied by the caller on load (it follows from the
// configured per-class counts).

inline void save_dataset(const Dataset& ds, const std::string& path) {
    std::filesystem::create_directories(std::filesystem::path(path).parent_path().empty()
                                            ? "."
                                            : std::filesystem::path(path).parent_path().string());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write dataset file '" + path + "'");
    os.write("VFSD", 4);
    const uint16_t version = 1;
    const uint16_t k = static_cast<uint16_t>(ds.num_devices);
    const uint16_t h = static_cast<uint16_t>(ds.height);
    const uint16_t w = static_cast<uint16_t>(ds.width);
    const uint16_t classes = static_cast<uint16_t>(ds.num_classes);
    const uint32_t count = static_cast<uint32_t>(ds.train.size() + ds.test.size());
    os.write(reinterpret_cast<const char*>(&version), 2);
    os.write(reinterpret_cast<const char*>(&k), 2);
    os.write(reinterpret_cast<const char*>(&h), 2);
    os.write(reinterpret_cast<const char*>(&w), 2);
    os.write(reinterpret_cast<const char*>(&classes), 2);
    os.write(reinterpret_cast<const char*>(&count), 4);
    auto write_sample = [&](const MultiViewSample& s) {
        os.write(reinterpret_cast<const char*>(&s.label), 1);
        for (const auto& v : s.views)
            for (int r = 0; r < v.rows(); ++r)
                for (int c = 0; c < v.cols(); ++c) {
                    const float f = v(r, c);
                    os.write(reinterpret_cast<const char*>(&f), 4);
                }
    };
    for (const auto& s : ds.train) write_sample(s);
    for (const auto& s : ds.test) write_sample(s);
    if (!os) throw std::runtime_error("write error on '" + path + "'");
}

// train_count < 0 loads every sample into the train partition.
inline Dataset load_dataset(const std::string& path, int64_t train_count = -1) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open dataset file '" + path + "'");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "VFSD", 4) != 0)
        throw std::runtime_error("'" + path + "' is not a dataset file");
    uint16_t version, k, h, w, classes;
    uint32_t count;
    is.read(reinterpret_cast<char*>(&version), 2);
    is.read(reinterpret_cast<char*>(&k), 2);
    is.read(reinterpret_cast<char*>(&h), 2);
    is.read(reinterpret_cast<char*>(&w), 2);
    is.read(reinterpret_cast<char*>(&classes), 2);
    is.read(reinterpret_cast<char*>(&count), 4);
    if (version != 1) throw std::runtime_error("unsupported dataset version");
    if (train_count < 0) train_count = count;
    if (train_count > static_cast<int64_t>(count))
        throw std::runtime_error("dataset smaller than train count");
    Dataset ds;
    ds.num_devices = k;
    ds.height = h;
    ds.width = w;
    ds.num_classes = classes;
    for (uint32_t i = 0; i < count; ++i) {
        MultiViewSample s;
        is.read(reinterpret_cast<char*>(&s.label), 1);
        if (s.label >= classes) throw std::runtime_error("corrupt dataset: label out of range");
        for (int dev = 0; dev < k; ++dev) {
            Eigen::MatrixXf m(h, w);
            for (int r = 0; r < h; ++r)
                for (int c = 0; c < w; ++c) {
                    float f;
                    is.read(reinterpret_cast<char*>(&f), 4);
                    m(r, c) = f;
                }
            s.views.push_back(std::move(m));
        }
        if (!is) throw std::runtime_error("corrupt dataset: truncated payload");
        (static_cast<int64_t>(i) < train_count ? ds.train : ds.test).push_back(std::move(s));
    }
    is.peek();
    if (!is.eof()) throw std::runtime_error("corrupt dataset: trailing bytes");
    return ds;
}

// FNV-1a 64-bit content digest of a file.
inline uint64_t file_digest(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open '" + path + "'");
    uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
        for (std::streamsize i = 0; i < is.gcount(); ++i) {
            h ^= static_cast<uint8_t>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (is.eof()) break;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Scheme dispatch

inline TrainConfig make_train_config(const ExperimentConfig& cfg, uint64_t seed) {
    TrainConfig tc;
    tc.batch = cfg.batch;
    tc.lr_s = tc.lr_l = cfg.learning_rate;
    tc.iterations = cfg.iterations;
    tc.seed = seed;
    tc.eval_interval = cfg.eval_interval;
    tc.ledger_bits_per_element = cfg.bits_per_element;
    tc.ledger_two_way = (cfg.accounting == "two-way");
    if (cfg.link_mode == "simulated-isac")
        tc.link = default_link_sim(cfg.scenario, cfg.isac);
    return tc;
}

struct SchemeRun {
    TrainResult result;
    // trained models, for checkpointing; split schemes fill `split`, the
    // rest fill `full`
    std::optional<SplitNetwork<float>> split;
    std::optional<Network<float>> full;
};

inline SchemeRun run_scheme(const ExperimentConfig& cfg, const Dataset& ds,
                            const std::string& scheme, uint64_t seed) {
    TrainConfig tc = make_train_config(cfg, seed);
    // same init stream for every scheme, so reduction properties (e.g. cl on
    // a K=1 dataset vs ed-1) hold exactly
    const uint64_t init_seed = derive_stream(seed, 0x171717);
    SchemeRun run;
    if (scheme.rfind("vfl-", 0) == 0) {
        const SplitPoint p = (scheme[4] == 'a') ? SplitPoint::A : SplitPoint::B;
        const Aggregator agg =
            scheme.size() >= 9 && scheme.substr(6) == "cat" ? Aggregator::Cat : Aggregator::Ewa;
        auto net = build_split_network<float>(ds.num_devices, p, agg, init_seed);
        run.result = train_vfeel(net, ds, tc, cfg.isac, scheme);
        run.split = std::move(net);
    } else if (scheme.rfind("ed-", 0) == 0) {
        const int dev = std::stoi(scheme.substr(3)) - 1;
        if (dev < 0 || dev >= ds.num_devices)
            throw std::invalid_argument("scheme '" + scheme + "': no such device");
        auto net = build_full_network<float>(1, init_seed);
        run.result = train_on_device(net, dev, ds, tc, scheme);
        run.full = std::move(net);
    } else if (scheme == "hfeel") {
        auto net = build_full_network<float>(1, init_seed);
        run.result = train_hfeel(net, ds, tc, cfg.isac, scheme);
        run.full = std::move(net);
    } else if (scheme == "cl") {
        auto net = build_full_network<float>(ds.num_devices, init_seed);
        run.result = train_centralized(net, ds, tc, scheme);
        run.full = std::move(net);
    } else {
        std::string names;
        for (const auto& s : all_schemes()) names += (names.empty() ? "" : ", ") + s;
        throw std::invalid_argument("unknown scheme '" + scheme + "'; valid: " + names);
    }
    return run;
}

// ---------------------------------------------------------------------------
// Metrics and summaries

inline void write_metrics(const std::vector<MetricRecord>& records, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write '" + path + "'");
    os << std::setprecision(9);
    for (const auto& m : records) {
        os << "scheme=" << m.scheme << " seed=" << m.seed << " iter=" << m.iteration
           << " loss=" << m.train_loss << " acc=" << m.test_accuracy << " bits=" << m.cum_bits
           << " seconds=" << m.cum_seconds << " flops=" << m.cum_flops << "\n";
    }
}

struct BoxStats {
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
    size_t n = 0;
};

// Quartiles by linear interpolation on the sorted sample.
inline BoxStats box_stats(std::vector<double> xs) {
    if (xs.empty()) throw std::invalid_argument("box_stats: empty sample");
    std::sort(xs.begin(), xs.end());
    auto q = [&](double p) {
        const double h = (xs.size() - 1) * p;
        const size_t lo = static_cast<size_t>(h);
        const double frac = h - lo;
        return (lo + 1 < xs.size()) ? xs[lo] + frac * (xs[lo + 1] - xs[lo]) : xs[lo];
    };
    return BoxStats{xs.front(), q(0.25), q(0.5), q(0.75), xs.back(), xs.size()};
}

inline std::string metrics_filename(const std::string& scheme, uint64_t seed) {
    return scheme + "_seed" + std::to_string(seed) + ".metrics";
}

}  // namespace dws
