#pragma once

// Vertical FEEL training/inference protocol over K devices, the ED-k /
// H-FEEL / centralized baselines, and per-iteration overhead ledgers.

#include <optional>
#include <string>
#include <vector>

#include "dws/comm.hpp"
#include "dws/motion.hpp"
#include "dws/neural.hpp"
#include "dws/rng.hpp"

namespace dws {

enum class SplitPoint { A, B };     // intermediate dimension 784 / 60
enum class Aggregator { Ewa, Cat };

// Shared 6-layer CNN. Split A cuts after the second pooling stage (flattened
// dimension 784); split B cuts after the first dense layer's ReLU
// (dimension 60).
inline std::vector<LayerSpec> full_network_specs(int in_channels = 1) {
    return {
        LayerSpec::conv(in_channels, 8, 3, 1, 1), LayerSpec::relu(), LayerSpec::maxpool(2),
        LayerSpec::conv(8, 16, 3, 1, 1),          LayerSpec::relu(), LayerSpec::maxpool(2),
        LayerSpec::flatten(),
        LayerSpec::dense(784, 60),                LayerSpec::relu(),
        LayerSpec::dense(60, 5),                  LayerSpec::softmax(5),
    };
}

inline int split_dim(SplitPoint p) { return p == SplitPoint::A ? 784 : 60; }

inline std::vector<LayerSpec> lmodel_specs(SplitPoint p) {
    auto full = full_network_specs(1);
    const size_t cut = (p == SplitPoint::A) ? 7 : 9;  // through flatten / dense+relu
    return {full.begin(), full.begin() + cut};
}

inline std::vector<LayerSpec> smodel_specs(SplitPoint p, Aggregator agg, int k_devices) {
    const int d = split_dim(p);
    const int in = (agg == Aggregator::Cat) ? k_devices * d : d;
    if (p == SplitPoint::A) {
        return {LayerSpec::dense(in, 60), LayerSpec::relu(), LayerSpec::dense(60, 5),
                LayerSpec::softmax(5)};
    }
    return {LayerSpec::dense(in, 5), LayerSpec::softmax(5)};
}

template <class T>
struct SplitNetwork {
    std::vector<Network<T>> lmodels;  // one per device, device K-1 is the coordinator
    Network<T> smodel;
    Aggregator agg = Aggregator::Ewa;
    SplitPoint point = SplitPoint::A;
    int d = 784;

    int num_devices() const { return static_cast<int>(lmodels.size()); }
};

// All L-models share the architecture but are initialized independently.
template <class T>
inline SplitNetwork<T> build_split_network(int k_devices, SplitPoint p, Aggregator agg,
                                           uint64_t seed) {
    SplitNetwork<T> net;
    net.agg = agg;
    net.point = p;
    net.d = split_dim(p);
    for (int k = 0; k < k_devices; ++k) {
        Network<T> l{lmodel_specs(p)};
        Rng rng(derive_stream(seed, k));
        l.init(rng);
        net.lmodels.push_back(std::move(l));
    }
    net.smodel = Network<T>{smodel_specs(p, agg, k_devices)};
    Rng rng(derive_stream(seed, 1000));
    net.smodel.init(rng);
    return net;
}

template <class T>
inline Network<T> build_full_network(int in_channels, uint64_t seed) {
    Network<T> net{full_network_specs(in_channels)};
    Rng rng(seed);
    net.init(rng);
    return net;
}

// ---------------------------------------------------------------------------
// Simulated ISAC link for the intermediate-vector exchange

struct IsacLinkSim {
    IsacConfig cfg;
    std::vector<QdCommChannel> uplink;    // device k -> coordinator, k < K-1
    std::vector<QdCommChannel> downlink;  // coordinator -> device k
    std::optional<double> snr_db;         // absent = noiseless
    VectorCodec codec{32};                // payload codec (lossless)
};

// Noiseless line-of-sight links between the default device positions.
inline IsacLinkSim default_link_sim(const Scenario& sc, const IsacConfig& cfg) {
    IsacLinkSim link;
    link.cfg = cfg;
    const int k = sc.num_devices();
    for (int i = 0; i + 1 < k; ++i) {
        const double dist = (sc.devices[i] - sc.devices[k - 1]).norm();
        QdCommChannel ch;
        ch.distance_m = dist;
        ch.wavelength_m = cfg.wavelength();
        ch.clusters.push_back(Cluster{1.0, 0.0, {Ray{1.0, 0.0, 0.0}}});
        link.uplink.push_back(ch);
        link.downlink.push_back(ch);
    }
    return link;
}

// One vector through encode -> chirp modulation -> channel -> matched filter
// -> decode. Throws on any decode-length mismatch.
inline std::vector<float> link_transfer(const std::vector<float>& v, const IsacLinkSim& link,
                                        const QdCommChannel& ch, Rng& rng) {
    const Bits bits = encode_vector(v, link.codec);
    Signal tx = modulate_bits(bits, link.cfg);
    Signal rx = apply_comm(tx, ch, link.cfg.sampling_rate_hz);
    if (link.snr_db) {
        rx = add_noise(rx, NoiseSpec{NoiseSpec::Mode::SnrDb, *link.snr_db}, rng);
    }
    Bits got = demodulate(rx, ch, link.cfg);
    if (got.size() != bits.size())
        throw std::runtime_error("link_transfer: demodulated bit count mismatch");
    return decode_vector(got, link.codec);
}

// ---------------------------------------------------------------------------
// Training configuration, ledgers, metrics

struct TrainConfig {
    int batch = 32;
    double lr_s = 0.01;
    double lr_l = 0.01;
    int iterations = 500;
    uint64_t seed = 0;
    int eval_interval = 25;
    std::optional<IsacLinkSim> link;  // absent = ideal link
    int ledger_bits_per_element = 32;
    bool ledger_two_way = true;       // count both directions of a device link
};

// Per-device-link communication accounting (the published tables report the
// time of one device's link; links run in parallel on dedicated
// sub-channels). seconds = accounted bits / R^C exactly.
struct CommLedger {
    uint64_t up_bits = 0;    // one device's uplink, cumulative
    uint64_t down_bits = 0;
    uint64_t accounted_bits = 0;
    double seconds = 0.0;
    double flops = 0.0;
    int iterations = 0;

    void add(uint64_t up, uint64_t down, bool two_way, const IsacConfig& cfg, double it_flops) {
        up_bits += up;
        down_bits += down;
        const uint64_t acc = up + (two_way ? down : 0);
        accounted_bits += acc;
        seconds += transfer_time(acc, cfg);
        flops += it_flops;
        ++iterations;
    }
};

struct MetricRecord {
    std::string scheme;
    uint64_t seed = 0;
    int iteration = 0;
    double train_loss = 0.0;
    double test_accuracy = 0.0;
    uint64_t cum_bits = 0;
    double cum_seconds = 0.0;
    double cum_flops = 0.0;
};

struct TrainResult {
    std::vector<MetricRecord> history;
    CommLedger ledger;
    double final_accuracy = 0.0;
};

// ---------------------------------------------------------------------------
// Tensor conversion helpers

template <class T>
inline Tensor<T> view_batch(const std::vector<const MultiViewSample*>& samples, int device) {
    const auto& first = samples.front()->views[device];
    Tensor<T> x(static_cast<int>(samples.size()), 1, static_cast<int>(first.rows()),
                static_cast<int>(first.cols()));
    size_t o = 0;
    for (const auto* s : samples) {
        const auto& v = s->views[device];
        for (int r = 0; r < v.rows(); ++r)
            for (int c = 0; c < v.cols(); ++c) x.data[o++] = static_cast<T>(v(r, c));
    }
    return x;
}

template <class T>
inline Tensor<T> stacked_batch(const std::vector<const MultiViewSample*>& samples) {
    const int k = static_cast<int>(samples.front()->views.size());
    const auto& first = samples.front()->views[0];
    Tensor<T> x(static_cast<int>(samples.size()), k, static_cast<int>(first.rows()),
                static_cast<int>(first.cols()));
    size_t o = 0;
    for (const auto* s : samples) {
        for (int d = 0; d < k; ++d) {
            const auto& v = s->views[d];
            for (int r = 0; r < v.rows(); ++r)
                for (int c = 0; c < v.cols(); ++c) x.data[o++] = static_cast<T>(v(r, c));
        }
    }
    return x;
}

inline std::vector<uint8_t> batch_labels(const std::vector<const MultiViewSample*>& samples) {
    std::vector<uint8_t> y;
    y.reserve(samples.size());
    for (const auto* s : samples) y.push_back(s->label);
    return y;
}

// ---------------------------------------------------------------------------
// Split forward / backward

template <class T>
struct SplitForward {
    double loss = 0.0;
    Tensor<T> probs;
    std::vector<Tensor<T>> v;  // post-link intermediate vectors, per device
    int batch = 0;
};

namespace detail {

template <class T>
inline std::vector<float> tensor_to_floats(const Tensor<T>& t) {
    std::vector<float> out(t.data.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(t.data[i]);
    return out;
}

template <class T>
inline void floats_to_tensor(const std::vector<float>& v, Tensor<T>& t) {
    if (v.size() != t.data.size())
        throw std::runtime_error("link payload size mismatch");
    for (size_t i = 0; i < v.size(); ++i) t.data[i] = static_cast<T>(v[i]);
}

}  // namespace detail

// Each device maps its view through its L-model; non-coordinator vectors
// cross the (ideal or simulated) link; the coordinator aggregates and runs
// the S-model.
template <class T>
inline SplitForward<T> vfeel_forward(SplitNetwork<T>& net,
                                     const std::vector<Tensor<T>>& views,
                                     const std::vector<uint8_t>& labels,
                                     const std::optional<IsacLinkSim>& link = {},
                                     Rng* link_rng = nullptr) {
    const int k = net.num_devices();
    if (static_cast<int>(views.size()) != k)
        throw std::invalid_argument("vfeel_forward: missing device view");
    SplitForward<T> out;
    out.batch = views[0].n;
    out.v.resize(k);
    for (int dev = 0; dev < k; ++dev) {
        Tensor<T> v = net.lmodels[dev].forward(views[dev]);
        if (v.features() != net.d)
            throw std::invalid_argument("vfeel_forward: intermediate dimension mismatch");
        if (link && dev != k - 1) {
            Rng dummy(0);
            std::vector<float> payload = detail::tensor_to_floats(v);
            payload = link_transfer(payload, *link, link->uplink[dev],
                                    link_rng ? *link_rng : dummy);
            detail::floats_to_tensor(payload, v);
        }
        out.v[dev] = std::move(v);
    }

    Tensor<T> a;
    if (net.agg == Aggregator::Ewa) {
        a = out.v[0];
        for (int dev = 1; dev < k; ++dev)
            for (size_t i = 0; i < a.data.size(); ++i) a.data[i] += out.v[dev].data[i];
        const T inv = T(1) / T(k);
        for (auto& x : a.data) x *= inv;
    } else {
        a = Tensor<T>(out.batch, k * net.d, 1, 1);
        for (int i = 0; i < out.batch; ++i)
            for (int dev = 0; dev < k; ++dev)
                std::copy(out.v[dev].data.begin() + static_cast<size_t>(i) * net.d,
                          out.v[dev].data.begin() + static_cast<size_t>(i + 1) * net.d,
                          a.data.begin() + (static_cast<size_t>(i) * k + dev) * net.d);
    }

    out.probs = net.smodel.forward(a);
    out.loss = softmax_xent_grad(out.probs, labels).loss;
    return out;
}

// Backpropagates through the S-model, routes per-device intermediate
// gradients back over the link, and backpropagates every L-model. Gradients
// are left in the layers for sgd_step.
template <class T>
inline void vfeel_backward(SplitNetwork<T>& net, const SplitForward<T>& fwd,
                           const std::vector<uint8_t>& labels,
                           const std::optional<IsacLinkSim>& link = {},
                           Rng* link_rng = nullptr) {
    const int k = net.num_devices();
    LossGrad<T> lg = softmax_xent_grad(fwd.probs, labels);
    Tensor<T> ga = net.smodel.backward(lg.grad);

    for (int dev = 0; dev < k; ++dev) {
        Tensor<T> gv(fwd.batch, net.d, 1, 1);
        if (net.agg == Aggregator::Ewa) {
            const T inv = T(1) / T(k);
            for (size_t i = 0; i < gv.data.size(); ++i) gv.data[i] = ga.data[i] * inv;
        } else {
            for (int i = 0; i < fwd.batch; ++i)
                std::copy(ga.data.begin() + (static_cast<size_t>(i) * k + dev) * net.d,
                          ga.data.begin() + (static_cast<size_t>(i) * k + dev + 1) * net.d,
                          gv.data.begin() + static_cast<size_t>(i) * net.d);
        }
        if (link && dev != k - 1) {
            Rng dummy(0);
            std::vector<float> payload = detail::tensor_to_floats(gv);
            payload = link_transfer(payload, *link, link->downlink[dev],
                                    link_rng ? *link_rng : dummy);
            detail::floats_to_tensor(payload, gv);
        }
        net.lmodels[dev].backward(gv);
    }
}

template <class T>
inline int infer(SplitNetwork<T>& net, const MultiViewSample& sample,
                 const std::optional<IsacLinkSim>& link = {}) {
    std::vector<const MultiViewSample*> one{&sample};
    std::vector<Tensor<T>> views;
    for (int dev = 0; dev < net.num_devices(); ++dev)
        views.push_back(view_batch<T>(one, dev));
    std::vector<uint8_t> label{sample.label};
    SplitForward<T> fwd = vfeel_forward(net, views, label, link);
    int best = 0;
    for (int c = 1; c < fwd.probs.features(); ++c)
        if (fwd.probs.data[c] > fwd.probs.data[best]) best = c;
    return best;
}

template <class T>
inline double eval_split(SplitNetwork<T>& net, const std::vector<MultiViewSample>& samples) {
    if (samples.empty()) return 0.0;
    const int k = net.num_devices();
    std::vector<const MultiViewSample*> ptrs;
    for (const auto& s : samples) ptrs.push_back(&s);
    std::vector<Tensor<T>> views;
    for (int dev = 0; dev < k; ++dev) views.push_back(view_batch<T>(ptrs, dev));
    SplitForward<T> fwd = vfeel_forward(net, views, batch_labels(ptrs));
    int correct = 0;
    const int classes = fwd.probs.features();
    for (size_t i = 0; i < samples.size(); ++i) {
        int best = 0;
        for (int c = 1; c < classes; ++c)
            if (fwd.probs.data[i * classes + c] > fwd.probs.data[i * classes + best]) best = c;
        if (best == samples[i].label) ++correct;
    }
    return static_cast<double>(correct) / samples.size();
}

// Accuracy of a full (single-input) network; device < 0 stacks all views as
// input channels, otherwise the named view is used.
template <class T>
inline double eval_full(Network<T>& net, const std::vector<MultiViewSample>& samples,
                        int device) {
    if (samples.empty()) return 0.0;
    std::vector<const MultiViewSample*> ptrs;
    for (const auto& s : samples) ptrs.push_back(&s);
    Tensor<T> x = device < 0 ? stacked_batch<T>(ptrs) : view_batch<T>(ptrs, device);
    Tensor<T> probs = net.forward(x);
    const int classes = probs.features();
    int correct = 0;
    for (size_t i = 0; i < samples.size(); ++i) {
        int best = 0;
        for (int c = 1; c < classes; ++c)
            if (probs.data[i * classes + c] > probs.data[i * classes + best]) best = c;
        if (best == samples[i].label) ++correct;
    }
    return static_cast<double>(correct) / samples.size();
}

// H-FEEL evaluation: every view of every test sample counts as an
// independent single-view sample.
template <class T>
inline double eval_per_view(Network<T>& net, const std::vector<MultiViewSample>& samples,
                            int num_devices) {
    if (samples.empty()) return 0.0;
    int correct = 0, total = 0;
    std::vector<const MultiViewSample*> ptrs;
    for (const auto& s : samples) ptrs.push_back(&s);
    for (int dev = 0; dev < num_devices; ++dev) {
        Tensor<T> x = view_batch<T>(ptrs, dev);
        Tensor<T> probs = net.forward(x);
        const int classes = probs.features();
        for (size_t i = 0; i < samples.size(); ++i) {
            int best = 0;
            for (int c = 1; c < classes; ++c)
                if (probs.data[i * classes + c] > probs.data[i * classes + best]) best = c;
            if (best == samples[i].label) ++correct;
            ++total;
        }
    }
    return static_cast<double>(correct) / total;
}

// ---------------------------------------------------------------------------
// Training loops

namespace detail {

inline std::vector<const MultiViewSample*> draw_batch(const std::vector<MultiViewSample>& pool,
                                                      int batch, Rng& rng) {
    std::vector<const MultiViewSample*> out;
    out.reserve(batch);
    for (int i = 0; i < batch; ++i)
        out.push_back(&pool[rng.uniform_int(pool.size())]);
    return out;
}

}  // namespace detail

template <class T>
inline TrainResult train_vfeel(SplitNetwork<T>& net, const Dataset& ds, const TrainConfig& cfg,
                               const IsacConfig& isac, const std::string& scheme_name) {
    const int k = net.num_devices();
    Rng batch_rng(derive_stream(cfg.seed, 0xBA7C));
    Rng link_rng(derive_stream(cfg.seed, 0x117C));
    TrainResult res;

    const uint64_t c_l = net.lmodels[0].flops_per_sample({1, ds.height, ds.width});
    const uint64_t c_s = net.smodel.flops_per_sample(
        {net.agg == Aggregator::Cat ? k * net.d : net.d, 1, 1});
    const double it_flops = 3.0 * cfg.batch * (static_cast<double>(c_l) * k + c_s);
    // one non-coordinator device's link: d * batch elements per direction
    const uint64_t dir_bits =
        static_cast<uint64_t>(net.d) * cfg.batch * cfg.ledger_bits_per_element;

    auto record = [&](int iter, double loss) {
        MetricRecord m;
        m.scheme = scheme_name;
        m.seed = cfg.seed;
        m.iteration = iter;
        m.train_loss = loss;
        m.test_accuracy = eval_split(net, ds.test);
        m.cum_bits = res.ledger.accounted_bits;
        m.cum_seconds = res.ledger.seconds;
        m.cum_flops = res.ledger.flops;
        res.history.push_back(m);
    };

    double last_loss = 0.0;
    for (int iter = 0; iter < cfg.iterations; ++iter) {
        auto batch = detail::draw_batch(ds.train, cfg.batch, batch_rng);
        std::vector<Tensor<T>> views;
        for (int dev = 0; dev < k; ++dev) views.push_back(view_batch<T>(batch, dev));
        const auto labels = batch_labels(batch);
        SplitForward<T> fwd = vfeel_forward(net, views, labels, cfg.link, &link_rng);
        vfeel_backward(net, fwd, labels, cfg.link, &link_rng);
        net.smodel.sgd_step(static_cast<T>(cfg.lr_s));
        for (auto& l : net.lmodels) l.sgd_step(static_cast<T>(cfg.lr_l));
        res.ledger.add(dir_bits, dir_bits, cfg.ledger_two_way, isac, it_flops);
        last_loss = fwd.loss;
        if ((iter + 1) % cfg.eval_interval == 0 || iter + 1 == cfg.iterations)
            record(iter + 1, last_loss);
        else if (iter == 0)
            record(1, last_loss);
    }
    if (cfg.iterations == 0) record(0, 0.0);
    res.final_accuracy = res.history.empty() ? 0.0 : res.history.back().test_accuracy;
    return res;
}

// ED-k baseline: full model trained on one device's view only.
template <class T>
inline TrainResult train_on_device(Network<T>& net, int device, const Dataset& ds,
                                   const TrainConfig& cfg, const std::string& scheme_name) {
    Rng batch_rng(derive_stream(cfg.seed, 0xBA7C));
    TrainResult res;
    const uint64_t c_full = net.flops_per_sample({1, ds.height, ds.width});
    const double it_flops = 3.0 * cfg.batch * static_cast<double>(c_full);

    auto record = [&](int iter, double loss) {
        MetricRecord m;
        m.scheme = scheme_name;
        m.seed = cfg.seed;
        m.iteration = iter;
        m.train_loss = loss;
        m.test_accuracy = eval_full(net, ds.test, device);
        m.cum_bits = 0;
        m.cum_seconds = 0.0;
        m.cum_flops = res.ledger.flops;
        res.history.push_back(m);
    };

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        auto batch = detail::draw_batch(ds.train, cfg.batch, batch_rng);
        Tensor<T> x = view_batch<T>(batch, device);
        const auto labels = batch_labels(batch);
        Tensor<T> probs = net.forward(x);
        LossGrad<T> lg = softmax_xent_grad(probs, labels);
        net.backward(lg.grad);
        net.sgd_step(static_cast<T>(cfg.lr_l));
        res.ledger.flops += it_flops;
        ++res.ledger.iterations;
        if ((iter + 1) % cfg.eval_interval == 0 || iter + 1 == cfg.iterations || iter == 0)
            record(iter + 1, lg.loss);
    }
    if (cfg.iterations == 0) record(0, 0.0);
    res.final_accuracy = res.history.empty() ? 0.0 : res.history.back().test_accuracy;
    return res;
}

// H-FEEL baseline: one full-model replica per device, each trained on its
// own single-view samples, with equal-weight parameter averaging after every
// iteration. Ledger: 2 * param_count * 32 bits per device link per iteration.
template <class T>
inline TrainResult train_hfeel(Network<T>& net, const Dataset& ds, const TrainConfig& cfg,
                               const IsacConfig& isac, const std::string& scheme_name) {
    const int k = ds.num_devices;
    Rng batch_rng(derive_stream(cfg.seed, 0xBA7C));
    TrainResult res;
    const uint64_t c_full = net.flops_per_sample({1, ds.height, ds.width});
    const double it_flops = 3.0 * cfg.batch * static_cast<double>(c_full) * k;
    const uint64_t dir_bits = static_cast<uint64_t>(net.param_count()) * 32;

    std::vector<Network<T>> replicas(k, net);

    auto record = [&](int iter, double loss) {
        MetricRecord m;
        m.scheme = scheme_name;
        m.seed = cfg.seed;
        m.iteration = iter;
        m.train_loss = loss;
        m.test_accuracy = eval_per_view(net, ds.test, k);
        m.cum_bits = res.ledger.accounted_bits;
        m.cum_seconds = res.ledger.seconds;
        m.cum_flops = res.ledger.flops;
        res.history.push_back(m);
    };

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        auto batch = detail::draw_batch(ds.train, cfg.batch, batch_rng);
        const auto labels = batch_labels(batch);
        double loss = 0.0;
        for (int dev = 0; dev < k; ++dev) {
            Tensor<T> x = view_batch<T>(batch, dev);
            Tensor<T> probs = replicas[dev].forward(x);
            LossGrad<T> lg = softmax_xent_grad(probs, labels);
            replicas[dev].backward(lg.grad);
            replicas[dev].sgd_step(static_cast<T>(cfg.lr_l));
            loss += lg.loss;
        }
        loss /= k;
        // equal-weight FedAvg
        std::vector<T> avg = replicas[0].flat_params();
        for (int dev = 1; dev < k; ++dev) {
            const auto p = replicas[dev].flat_params();
            for (size_t i = 0; i < avg.size(); ++i) avg[i] += p[i];
        }
        const T inv = T(1) / T(k);
        for (auto& v : avg) v *= inv;
        for (auto& r : replicas) r.set_flat_params(avg);
        net.set_flat_params(avg);
        res.ledger.add(dir_bits, dir_bits, true, isac, it_flops);
        if ((iter + 1) % cfg.eval_interval == 0 || iter + 1 == cfg.iterations || iter == 0)
            record(iter + 1, loss);
    }
    if (cfg.iterations == 0) record(0, 0.0);
    res.final_accuracy = res.history.empty() ? 0.0 : res.history.back().test_accuracy;
    return res;
}

// Centralized baseline: the K spectrograms are stacked as input channels of
// one full model; raw data is shared, no communication ledger.
template <class T>
inline TrainResult train_centralized(Network<T>& net, const Dataset& ds, const TrainConfig& cfg,
                                     const std::string& scheme_name) {
    Rng batch_rng(derive_stream(cfg.seed, 0xBA7C));
    TrainResult res;
    const uint64_t c_full = net.flops_per_sample({ds.num_devices, ds.height, ds.width});
    const double it_flops = 3.0 * cfg.batch * static_cast<double>(c_full);

    auto record = [&](int iter, double loss) {
        MetricRecord m;
        m.scheme = scheme_name;
        m.seed = cfg.seed;
        m.iteration = iter;
        m.train_loss = loss;
        m.test_accuracy = eval_full(net, ds.test, -1);
        m.cum_flops = res.ledger.flops;
        res.history.push_back(m);
    };

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        auto batch = detail::draw_batch(ds.train, cfg.batch, batch_rng);
        Tensor<T> x = stacked_batch<T>(batch);
        const auto labels = batch_labels(batch);
        Tensor<T> probs = net.forward(x);
        LossGrad<T> lg = softmax_xent_grad(probs, labels);
        net.backward(lg.grad);
        net.sgd_step(static_cast<T>(cfg.lr_l));
        res.ledger.flops += it_flops;
        ++res.ledger.iterations;
        if ((iter + 1) % cfg.eval_interval == 0 || iter + 1 == cfg.iterations || iter == 0)
            record(iter + 1, lg.loss);
    }
    if (cfg.iterations == 0) record(0, 0.0);
    res.final_accuracy = res.history.empty() ? 0.0 : res.history.back().test_accuracy;
    return res;
}

}  // namespace dws
