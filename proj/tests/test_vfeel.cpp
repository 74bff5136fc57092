#include <catch2/catch_amalgamated.hpp>

#include "dws/vfeel.hpp"

using namespace dws;

namespace {

// synthetic dataset of random standardized 28x28 views (learning content is
// irrelevant for protocol tests)
Dataset synthetic_dataset(int k, int train, int test, uint64_t seed) {
    Dataset ds;
    ds.num_devices = k;
    ds.height = ds.width = 28;
    Rng rng(seed);
    auto make = [&](int count, std::vector<MultiViewSample>& dst) {
        for (int i = 0; i < count; ++i) {
            MultiViewSample s;
            s.label = static_cast<uint8_t>(rng.uniform_int(kNumClasses));
            for (int d = 0; d < k; ++d) {
                Eigen::MatrixXf v(28, 28);
                for (int r = 0; r < 28; ++r)
                    for (int c = 0; c < 28; ++c) v(r, c) = static_cast<float>(rng.normal());
                s.views.push_back(std::move(v));
            }
            dst.push_back(std::move(s));
        }
    };
    make(train, ds.train);
    make(test, ds.test);
    return ds;
}

template <class T>
std::vector<Tensor<T>> dataset_views(const Dataset& ds, int count) {
    std::vector<const MultiViewSample*> ptrs;
    for (int i = 0; i < count; ++i) ptrs.push_back(&ds.train[i]);
    std::vector<Tensor<T>> views;
    for (int d = 0; d < ds.num_devices; ++d) views.push_back(view_batch<T>(ptrs, d));
    return views;
}

std::vector<uint8_t> dataset_labels(const Dataset& ds, int count) {
    std::vector<uint8_t> out;
    for (int i = 0; i < count; ++i) out.push_back(ds.train[i].label);
    return out;
}

// Monolithic reference: wires the K L-models, the aggregator, and the S-model
// into one end-to-end computation with its own forward/backward code path,
// then takes one SGD step. Used as the oracle for the split protocol.
template <class T>
struct Monolithic {
    std::vector<Network<T>> lmodels;
    Network<T> smodel;
    Aggregator agg;
    int d;

    double step(const std::vector<Tensor<T>>& views, const std::vector<uint8_t>& labels,
                T lr) {
        const int k = static_cast<int>(lmodels.size());
        const int batch = views[0].n;
        std::vector<Tensor<T>> v(k);
        for (int dev = 0; dev < k; ++dev) v[dev] = lmodels[dev].forward(views[dev]);

        Tensor<T> a;
        if (agg == Aggregator::Ewa) {
            a = Tensor<T>(batch, d, 1, 1);
            for (int dev = 0; dev < k; ++dev)
                for (int i = 0; i < a.size(); ++i) a.data[i] += v[dev].data[i] / T(k);
        } else {
            a = Tensor<T>(batch, k * d, 1, 1);
            for (int i = 0; i < batch; ++i)
                for (int dev = 0; dev < k; ++dev)
                    for (int j = 0; j < d; ++j)
                        a.data[(static_cast<size_t>(i) * k + dev) * d + j] =
                            v[dev].data[static_cast<size_t>(i) * d + j];
        }

        Tensor<T> probs = smodel.forward(a);
        LossGrad<T> lg = softmax_xent_grad(probs, labels);
        Tensor<T> ga = smodel.backward(lg.grad);

        for (int dev = 0; dev < k; ++dev) {
            Tensor<T> gv(batch, d, 1, 1);
            if (agg == Aggregator::Ewa) {
                for (int i = 0; i < gv.size(); ++i) gv.data[i] = ga.data[i] / T(k);
            } else {
                for (int i = 0; i < batch; ++i)
                    for (int j = 0; j < d; ++j)
                        gv.data[static_cast<size_t>(i) * d + j] =
                            ga.data[(static_cast<size_t>(i) * k + dev) * d + j];
            }
            lmodels[dev].backward(gv);
        }
        smodel.sgd_step(lr);
        for (auto& l : lmodels) l.sgd_step(lr);
        return lg.loss;
    }
};

}  // namespace

TEST_CASE("split architecture dimensions match the published anchors") {
    CHECK(split_dim(SplitPoint::A) == 784);
    CHECK(split_dim(SplitPoint::B) == 60);
    Network<float> la{lmodel_specs(SplitPoint::A)};
    CHECK(la.out_shape({1, 28, 28}).size() == 784);
    Network<float> lb{lmodel_specs(SplitPoint::B)};
    CHECK(lb.out_shape({1, 28, 28}).size() == 60);
    Network<float> sb{smodel_specs(SplitPoint::B, Aggregator::Ewa, 3)};
    CHECK(sb.param_count() == 305);
    Network<float> sb_cat{smodel_specs(SplitPoint::B, Aggregator::Cat, 3)};
    CHECK(sb_cat.out_shape({180, 1, 1}).size() == 5);
}

TEST_CASE("EWA of identical vectors is the identity; CAT concatenates to K*d") {
    const Dataset ds = synthetic_dataset(3, 4, 0, 50);
    auto views = dataset_views<float>(ds, 2);
    const auto labels = dataset_labels(ds, 2);

    SplitNetwork<float> net = build_split_network<float>(3, SplitPoint::B, Aggregator::Ewa, 1);
    // clone device 0's L-model everywhere: all v_k identical
    net.lmodels[1] = net.lmodels[0];
    net.lmodels[2] = net.lmodels[0];
    std::vector<Tensor<float>> same_views{views[0], views[0], views[0]};
    SplitForward<float> fwd = vfeel_forward(net, same_views, labels);
    Tensor<float> v0 = net.lmodels[0].forward(views[0]);
    Tensor<float> probs_direct = net.smodel.forward(v0);
    for (size_t i = 0; i < fwd.probs.data.size(); ++i)
        CHECK(fwd.probs.data[i] == Catch::Approx(probs_direct.data[i]).margin(1e-6));

    SplitNetwork<float> cat = build_split_network<float>(3, SplitPoint::B, Aggregator::Cat, 1);
    SplitForward<float> cfwd = vfeel_forward(cat, views, labels);
    for (const auto& v : cfwd.v) CHECK(v.features() == 60);
    // the CAT S-model consumes a 180-dim input
    Network<float> s{smodel_specs(SplitPoint::B, Aggregator::Cat, 3)};
    CHECK(s.specs()[0].p[0] == 180);
}

TEST_CASE("untrained split network on zero input has exactly ln(5) loss") {
    // biases initialize to zero, so zero input gives zero logits and a
    // uniform softmax: loss = ln(5) to rounding
    const int batch = 16;
    std::vector<Tensor<double>> views(3, Tensor<double>(batch, 1, 28, 28));
    std::vector<uint8_t> labels(batch);
    for (int i = 0; i < batch; ++i) labels[i] = static_cast<uint8_t>(i % kNumClasses);
    SplitNetwork<double> net =
        build_split_network<double>(3, SplitPoint::A, Aggregator::Ewa, 33);
    SplitForward<double> fwd = vfeel_forward(net, views, labels);
    CHECK(fwd.loss == Catch::Approx(std::log(5.0)).margin(1e-9));
}

TEST_CASE("vfeel_forward rejects a missing view") {
    const Dataset ds = synthetic_dataset(3, 2, 0, 52);
    auto views = dataset_views<float>(ds, 2);
    views.pop_back();
    SplitNetwork<float> net = build_split_network<float>(3, SplitPoint::B, Aggregator::Ewa, 1);
    const auto labels = dataset_labels(ds, 2);
    CHECK_THROWS_AS(vfeel_forward(net, views, labels), std::invalid_argument);
}

TEST_CASE("split protocol equals the monolithic oracle for all four variants") {
    const Dataset ds = synthetic_dataset(3, 8, 0, 53);
    const int batch = 8;
    auto views = dataset_views<double>(ds, batch);
    const auto labels = dataset_labels(ds, batch);

    for (SplitPoint p : {SplitPoint::A, SplitPoint::B}) {
        for (Aggregator agg : {Aggregator::Ewa, Aggregator::Cat}) {
            SplitNetwork<double> net = build_split_network<double>(3, p, agg, 7);
            Monolithic<double> mono{net.lmodels, net.smodel, agg, net.d};

            SplitForward<double> fwd = vfeel_forward(net, views, labels);
            vfeel_backward(net, fwd, labels);
            net.smodel.sgd_step(0.01);
            for (auto& l : net.lmodels) l.sgd_step(0.01);

            const double mono_loss = mono.step(views, labels, 0.01);
            CHECK(fwd.loss == Catch::Approx(mono_loss).margin(1e-12));

            auto rel_diff = [](const std::vector<double>& a, const std::vector<double>& b) {
                double num = 0.0, den = 0.0;
                for (size_t i = 0; i < a.size(); ++i) {
                    num = std::max(num, std::abs(a[i] - b[i]));
                    den = std::max(den, std::abs(b[i]));
                }
                return num / den;
            };
            CHECK(rel_diff(net.smodel.flat_params(), mono.smodel.flat_params()) <= 1e-6);
            for (int dev = 0; dev < 3; ++dev)
                CHECK(rel_diff(net.lmodels[dev].flat_params(),
                               mono.lmodels[dev].flat_params()) <= 1e-6);
        }
    }
}

TEST_CASE("EWA backward hands every device 1/K of the aggregate gradient") {
    const Dataset ds = synthetic_dataset(3, 4, 0, 54);
    auto views = dataset_views<double>(ds, 4);
    const auto labels = dataset_labels(ds, 4);
    SplitNetwork<double> net = build_split_network<double>(3, SplitPoint::B, Aggregator::Ewa, 9);
    // make all L-models identical so their backward inputs can be compared
    net.lmodels[1] = net.lmodels[0];
    net.lmodels[2] = net.lmodels[0];
    std::vector<Tensor<double>> same_views{views[0], views[0], views[0]};
    SplitForward<double> fwd = vfeel_forward(net, same_views, labels);
    vfeel_backward(net, fwd, labels);
    const auto g0 = net.lmodels[0].flat_grads();
    const auto g1 = net.lmodels[1].flat_grads();
    const auto g2 = net.lmodels[2].flat_grads();
    for (size_t i = 0; i < g0.size(); ++i) {
        CHECK(g0[i] == Catch::Approx(g1[i]).margin(1e-12));
        CHECK(g0[i] == Catch::Approx(g2[i]).margin(1e-12));
    }
}

TEST_CASE("EWA is invariant to device permutation") {
    const Dataset ds = synthetic_dataset(3, 6, 0, 55);
    auto views = dataset_views<double>(ds, 6);
    const auto labels = dataset_labels(ds, 6);
    SplitNetwork<double> net = build_split_network<double>(3, SplitPoint::B, Aggregator::Ewa, 3);

    SplitNetwork<double> perm = net;
    std::swap(perm.lmodels[0], perm.lmodels[2]);
    std::vector<Tensor<double>> perm_views{views[2], views[1], views[0]};

    SplitForward<double> f1 = vfeel_forward(net, views, labels);
    SplitForward<double> f2 = vfeel_forward(perm, perm_views, labels);
    CHECK(f1.loss == Catch::Approx(f2.loss).margin(1e-9));

    vfeel_backward(net, f1, labels);
    vfeel_backward(perm, f2, labels);
    const auto gs1 = net.smodel.flat_grads();
    const auto gs2 = perm.smodel.flat_grads();
    for (size_t i = 0; i < gs1.size(); ++i)
        CHECK(gs1[i] == Catch::Approx(gs2[i]).margin(1e-9));
}

TEST_CASE("noiseless simulated-ISAC link reproduces the ideal trajectory bit-exactly") {
    const Dataset ds = synthetic_dataset(3, 12, 6, 56);
    const IsacConfig isac;
    Scenario sc;
    TrainConfig ideal;
    ideal.batch = 2;
    ideal.iterations = 2;
    ideal.eval_interval = 1;
    ideal.seed = 4;

    TrainConfig simulated = ideal;
    simulated.link = default_link_sim(sc, isac);

    SplitNetwork<float> net_a = build_split_network<float>(3, SplitPoint::B, Aggregator::Ewa, 6);
    SplitNetwork<float> net_b = net_a;
    const TrainResult ra = train_vfeel(net_a, ds, ideal, isac, "vfl-b-ewa");
    const TrainResult rb = train_vfeel(net_b, ds, simulated, isac, "vfl-b-ewa");
    CHECK(net_a.smodel.flat_params() == net_b.smodel.flat_params());
    for (int dev = 0; dev < 3; ++dev)
        CHECK(net_a.lmodels[dev].flat_params() == net_b.lmodels[dev].flat_params());
    REQUIRE(ra.history.size() == rb.history.size());
    for (size_t i = 0; i < ra.history.size(); ++i) {
        CHECK(ra.history[i].train_loss == rb.history[i].train_loss);
        CHECK(ra.history[i].test_accuracy == rb.history[i].test_accuracy);
    }
}

TEST_CASE("ledger: V-FEEL bits scale in d and batch; H-FEEL bits do not depend on batch") {
    const IsacConfig isac;
    const Dataset ds = synthetic_dataset(3, 16, 4, 57);
    auto vfl_bits = [&](SplitPoint p, int batch) {
        TrainConfig tc;
        tc.batch = batch;
        tc.iterations = 3;
        tc.eval_interval = 100;
        SplitNetwork<float> net = build_split_network<float>(3, p, Aggregator::Ewa, 2);
        return train_vfeel(net, ds, tc, isac, "x").ledger;
    };
    const CommLedger a = vfl_bits(SplitPoint::A, 8);
    const CommLedger b = vfl_bits(SplitPoint::B, 8);
    const CommLedger a2 = vfl_bits(SplitPoint::A, 16);
    CHECK(a.up_bits * 60 == b.up_bits * 784);         // linear in d
    CHECK(a2.up_bits == 2 * a.up_bits);               // linear in batch
    CHECK(a.seconds == transfer_time(a.accounted_bits, isac));  // exact seconds law
    CHECK(a.up_bits == 3ull * 784 * 8 * 32);          // 3 iterations

    auto hfeel_bits = [&](int batch) {
        TrainConfig tc;
        tc.batch = batch;
        tc.iterations = 2;
        tc.eval_interval = 100;
        Network<float> net = build_full_network<float>(1, 5);
        return train_hfeel(net, ds, tc, isac, "hfeel").ledger;
    };
    const CommLedger h1 = hfeel_bits(4);
    const CommLedger h2 = hfeel_bits(32);
    CHECK(h1.up_bits == h2.up_bits);
    CHECK(h1.up_bits == 2ull * 48653 * 32);  // 2 iterations, param_count * 32 per direction
}

TEST_CASE("zero iterations leave the network unchanged") {
    const Dataset ds = synthetic_dataset(3, 4, 2, 58);
    const IsacConfig isac;
    TrainConfig tc;
    tc.iterations = 0;
    SplitNetwork<float> net = build_split_network<float>(3, SplitPoint::B, Aggregator::Cat, 8);
    const auto before = net.smodel.flat_params();
    const TrainResult res = train_vfeel(net, ds, tc, isac, "x");
    CHECK(net.smodel.flat_params() == before);
    CHECK(res.ledger.accounted_bits == 0);
    REQUIRE(res.history.size() == 1);
    CHECK(res.history[0].iteration == 0);
}

TEST_CASE("ED-k uses only its own view") {
    Dataset ds = synthetic_dataset(3, 16, 4, 59);
    TrainConfig tc;
    tc.batch = 4;
    tc.iterations = 5;
    tc.eval_interval = 100;
    tc.seed = 12;
    Network<float> net1 = build_full_network<float>(1, 3);
    Network<float> net2 = net1;
    const TrainResult r1 = train_on_device(net1, 1, ds, tc, "ed-2");
    // corrupt the other views; device 1's trajectory must not change
    for (auto& s : ds.train) {
        s.views[0].setConstant(9.0f);
        s.views[2].setConstant(-9.0f);
    }
    const TrainResult r2 = train_on_device(net2, 1, ds, tc, "ed-2");
    CHECK(net1.flat_params() == net2.flat_params());
    CHECK(r1.ledger.accounted_bits == 0);
    CHECK(r2.ledger.accounted_bits == 0);
}

TEST_CASE("H-FEEL with identical replicas and shared data reduces to averaging no-ops") {
    // K = 1: averaging one replica must equal plain training on that device
    Dataset ds = synthetic_dataset(1, 16, 4, 60);
    const IsacConfig isac;
    TrainConfig tc;
    tc.batch = 4;
    tc.iterations = 5;
    tc.eval_interval = 100;
    tc.seed = 3;
    Network<float> hf = build_full_network<float>(1, 31);
    Network<float> ed = hf;
    train_hfeel(hf, ds, tc, isac, "hfeel");
    train_on_device(ed, 0, ds, tc, "ed-1");
    const auto a = hf.flat_params();
    const auto b = ed.flat_params();
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == Catch::Approx(b[i]).margin(1e-6));
}

TEST_CASE("centralized training stacks K input channels") {
    const Dataset ds = synthetic_dataset(3, 8, 2, 61);
    std::vector<const MultiViewSample*> ptrs;
    for (const auto& s : ds.train) ptrs.push_back(&s);
    const Tensor<float> x = stacked_batch<float>(ptrs);
    CHECK(x.c == 3);
    CHECK(x.h == 28);
    CHECK(x.w == 28);
    Network<float> net = build_full_network<float>(3, 17);
    CHECK(net.out_shape({3, 28, 28}).size() == 5);
}

TEST_CASE("inference is deterministic and matches the eval code path") {
    const Dataset ds = synthetic_dataset(3, 4, 8, 62);
    SplitNetwork<float> net = build_split_network<float>(3, SplitPoint::A, Aggregator::Cat, 21);
    const int c1 = infer(net, ds.test[0]);
    const int c2 = infer(net, ds.test[0]);
    CHECK(c1 == c2);
    int correct = 0;
    for (const auto& s : ds.test) correct += (infer(net, s) == s.label);
    CHECK(eval_split(net, ds.test) ==
          Catch::Approx(static_cast<double>(correct) / ds.test.size()));
}

TEST_CASE("training loss decreases over the first 50 iterations on learnable data") {
    // class-dependent mean shift makes the synthetic data separable
    Dataset ds = synthetic_dataset(3, 64, 16, 63);
    auto shift = [](Dataset& d) {
        for (auto& part : {&d.train, &d.test})
            for (auto& s : *part)
                for (auto& v : s.views) v.array() += 0.4f * static_cast<float>(s.label);
    };
    shift(ds);
    const IsacConfig isac;
    TrainConfig tc;
    tc.batch = 16;
    tc.iterations = 50;
    tc.eval_interval = 50;
    tc.seed = 5;
    SplitNetwork<float> net = build_split_network<float>(3, SplitPoint::B, Aggregator::Ewa, 44);
    const TrainResult res = train_vfeel(net, ds, tc, isac, "vfl-b-ewa");
    REQUIRE(res.history.size() >= 2);
    CHECK(res.history.back().train_loss < res.history.front().train_loss);
}
