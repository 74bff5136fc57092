#pragma once

// Minimal dense/convolutional network stack with exact backpropagation, SGD,
// parameter and FLOP counting. Templated on the scalar type: float is the
// training default, double is used for gradient certification.

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dws/rng.hpp"

namespace dws {

template <class T>
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> data;  // row-major, index ((i*c + ch)*h + y)*w + x

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_), data(static_cast<size_t>(n_) * c_ * h_ * w_, T(0)) {}

    int size() const { return n * c * h * w; }
    int features() const { return c * h * w; }
    T& at(int i, int ch, int y, int x) {
        return data[((static_cast<size_t>(i) * c + ch) * h + y) * w + x];
    }
    T at(int i, int ch, int y, int x) const {
        return data[((static_cast<size_t>(i) * c + ch) * h + y) * w + x];
    }
};

enum class LayerKind : uint8_t {
    Conv2D = 0,
    MaxPool = 1,
    ReLU = 2,
    Flatten = 3,
    Dense = 4,
    Softmax = 5,
};

struct LayerSpec {
    LayerKind kind = LayerKind::ReLU;
    std::array<int32_t, 5> p{0, 0, 0, 0, 0};

    static LayerSpec conv(int in, int out, int k, int stride = 1, int pad = 0) {
        return {LayerKind::Conv2D, {in, out, k, stride, pad}};
    }
    static LayerSpec maxpool(int s) { return {LayerKind::MaxPool, {s, 0, 0, 0, 0}}; }
    static LayerSpec relu() { return {LayerKind::ReLU, {}}; }
    static LayerSpec flatten() { return {LayerKind::Flatten, {}}; }
    static LayerSpec dense(int in, int out) { return {LayerKind::Dense, {in, out, 0, 0, 0}}; }
    static LayerSpec softmax(int classes) { return {LayerKind::Softmax, {classes, 0, 0, 0, 0}}; }
};

struct Shape3 {
    int c = 0, h = 0, w = 0;
    int size() const { return c * h * w; }
};

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor<T> forward(const Tensor<T>& x) = 0;
    virtual Tensor<T> backward(const Tensor<T>& gout) = 0;
    virtual LayerSpec spec() const = 0;
    virtual std::unique_ptr<Layer<T>> clone() const = 0;
    virtual Shape3 out_shape(const Shape3& in) const = 0;
    virtual uint64_t flops(const Shape3& in) const = 0;
    virtual size_t param_count() const { return 0; }
    virtual void init(Rng&) {}
    // flat parameter / gradient storage (empty for stateless layers)
    virtual std::vector<T>* params() { return nullptr; }
    virtual std::vector<T>* grads() { return nullptr; }

protected:
    void require_cache(bool have) const {
        if (!have) throw std::logic_error("Layer::backward: no cached forward pass");
    }
};

template <class T>
class DenseLayer final : public Layer<T> {
public:
    DenseLayer(int in, int out) : in_(in), out_(out), w_(static_cast<size_t>(in) * out + out, T(0)),
                                  g_(w_.size(), T(0)) {
        if (in < 1 || out < 1) throw std::invalid_argument("Dense: bad dimensions");
    }

    Tensor<T> forward(const Tensor<T>& x) override {
        if (x.features() != in_) throw std::invalid_argument("Dense: input size mismatch");
        x_ = x;
        have_ = true;
        Eigen::Map<const Mat<T>> xm(x.data.data(), x.n, in_);
        Eigen::Map<const Mat<T>> wm(w_.data(), out_, in_);
        Eigen::Map<const Eigen::Vector<T, Eigen::Dynamic>> b(w_.data() + in_ * out_, out_);
        Tensor<T> y(x.n, out_, 1, 1);
        Eigen::Map<Mat<T>> ym(y.data.data(), x.n, out_);
        ym.noalias() = xm * wm.transpose();
        ym.rowwise() += b.transpose();
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gout) override {
        this->require_cache(have_);
        Eigen::Map<const Mat<T>> gm(gout.data.data(), gout.n, out_);
        Eigen::Map<const Mat<T>> xm(x_.data.data(), x_.n, in_);
        Eigen::Map<const Mat<T>> wm(w_.data(), out_, in_);
        Eigen::Map<Mat<T>> gw(g_.data(), out_, in_);
        Eigen::Map<Eigen::Vector<T, Eigen::Dynamic>> gb(g_.data() + in_ * out_, out_);
        gw.noalias() = gm.transpose() * xm;
        // fixed-order scalar sum: vectorized reductions over mapped heap
        // buffers round differently depending on allocation alignment
        for (int o = 0; o < out_; ++o) {
            T s = T(0);
            for (int i = 0; i < gout.n; ++i) s += gm(i, o);
            gb[o] = s;
        }
        Tensor<T> gx(x_.n, x_.c, x_.h, x_.w);
        Eigen::Map<Mat<T>> gxm(gx.data.data(), x_.n, in_);
        gxm.noalias() = gm * wm;
        return gx;
    }

    LayerSpec spec() const override { return LayerSpec::dense(in_, out_); }
    std::unique_ptr<Layer<T>> clone() const override {
        auto c = std::make_unique<DenseLayer<T>>(in_, out_);
        c->w_ = w_;
        return c;
    }
    Shape3 out_shape(const Shape3& in) const override {
        if (in.size() != in_) throw std::invalid_argument("Dense: shape chain mismatch");
        return {out_, 1, 1};
    }
    uint64_t flops(const Shape3&) const override {
        return 2ull * in_ * out_;
    }
    size_t param_count() const override { return static_cast<size_t>(out_) * (in_ + 1); }
    void init(Rng& rng) override {
        const double limit = std::sqrt(6.0 / in_);
        for (int i = 0; i < in_ * out_; ++i) w_[i] = static_cast<T>(rng.uniform(-limit, limit));
        for (int i = 0; i < out_; ++i) w_[in_ * out_ + i] = T(0);
    }
    std::vector<T>* params() override { return &w_; }
    std::vector<T>* grads() override { return &g_; }

private:
    int in_, out_;
    std::vector<T> w_, g_;  // weights row-major (out x in) then bias
    Tensor<T> x_;
    bool have_ = false;
};

template <class T>
class Conv2DLayer final : public Layer<T> {
public:
    Conv2DLayer(int in_ch, int out_ch, int k, int stride, int pad)
        : in_(in_ch), out_(out_ch), k_(k), stride_(stride), pad_(pad) {
        if (in_ch < 1 || out_ch < 1 || k < 1 || stride < 1 || pad < 0)
            throw std::invalid_argument("Conv2D: bad dimensions");
        w_.assign(static_cast<size_t>(out_) * in_ * k_ * k_ + out_, T(0));
        g_.assign(w_.size(), T(0));
    }

    Tensor<T> forward(const Tensor<T>& x) override {
        if (x.c != in_) throw std::invalid_argument("Conv2D: channel mismatch");
        x_ = x;
        have_ = true;
        const int ho = (x.h + 2 * pad_ - k_) / stride_ + 1;
        const int wo = (x.w + 2 * pad_ - k_) / stride_ + 1;
        if (ho < 1 || wo < 1) throw std::invalid_argument("Conv2D: input too small");
        ho_ = ho;
        wo_ = wo;
        const int patch = in_ * k_ * k_;
        cols_.assign(x.n, Mat<T>());
        Tensor<T> y(x.n, out_, ho, wo);
        Eigen::Map<const Mat<T>> wm(w_.data(), out_, patch);
        for (int i = 0; i < x.n; ++i) {
            Mat<T>& col = cols_[i];
            col.resize(patch, ho * wo);
            im2col(x, i, col);
            Eigen::Map<Mat<T>> ym(y.data.data() + static_cast<size_t>(i) * out_ * ho * wo,
                                  out_, ho * wo);
            ym.noalias() = wm * col;
            for (int oc = 0; oc < out_; ++oc) ym.row(oc).array() += w_[out_ * patch + oc];
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gout) override {
        this->require_cache(have_);
        const int patch = in_ * k_ * k_;
        Eigen::Map<const Mat<T>> wm(w_.data(), out_, patch);
        Eigen::Map<Mat<T>> gw(g_.data(), out_, patch);
        gw.setZero();
        for (int oc = 0; oc < out_; ++oc) g_[out_ * patch + oc] = T(0);
        Tensor<T> gx(x_.n, x_.c, x_.h, x_.w);
        Mat<T> gcol(patch, ho_ * wo_);
        for (int i = 0; i < x_.n; ++i) {
            Eigen::Map<const Mat<T>> gm(
                gout.data.data() + static_cast<size_t>(i) * out_ * ho_ * wo_, out_, ho_ * wo_);
            gw.noalias() += gm * cols_[i].transpose();
            // fixed-order scalar sum; see the dense-layer bias note
            for (int oc = 0; oc < out_; ++oc) {
                T s = T(0);
                for (int j = 0; j < ho_ * wo_; ++j) s += gm(oc, j);
                g_[out_ * patch + oc] += s;
            }
            gcol.noalias() = wm.transpose() * gm;
            col2im(gcol, i, gx);
        }
        return gx;
    }

    LayerSpec spec() const override { return LayerSpec::conv(in_, out_, k_, stride_, pad_); }
    std::unique_ptr<Layer<T>> clone() const override {
        auto c = std::make_unique<Conv2DLayer<T>>(in_, out_, k_, stride_, pad_);
        c->w_ = w_;
        return c;
    }
    Shape3 out_shape(const Shape3& in) const override {
        if (in.c != in_) throw std::invalid_argument("Conv2D: shape chain mismatch");
        return {out_, (in.h + 2 * pad_ - k_) / stride_ + 1, (in.w + 2 * pad_ - k_) / stride_ + 1};
    }
    uint64_t flops(const Shape3& in) const override {
        const Shape3 o = out_shape(in);
        return 2ull * k_ * k_ * in_ * out_ * o.h * o.w;
    }
    size_t param_count() const override {
        return static_cast<size_t>(out_) * (static_cast<size_t>(in_) * k_ * k_ + 1);
    }
    void init(Rng& rng) override {
        const int patch = in_ * k_ * k_;
        const double limit = std::sqrt(6.0 / patch);
        for (int i = 0; i < out_ * patch; ++i) w_[i] = static_cast<T>(rng.uniform(-limit, limit));
        for (int i = 0; i < out_; ++i) w_[out_ * patch + i] = T(0);
    }
    std::vector<T>* params() override { return &w_; }
    std::vector<T>* grads() override { return &g_; }

private:
    void im2col(const Tensor<T>& x, int i, Mat<T>& col) const {
        int row = 0;
        for (int ch = 0; ch < in_; ++ch) {
            for (int ky = 0; ky < k_; ++ky) {
                for (int kx = 0; kx < k_; ++kx, ++row) {
                    int idx = 0;
                    for (int oy = 0; oy < ho_; ++oy) {
                        const int y = oy * stride_ + ky - pad_;
                        for (int ox = 0; ox < wo_; ++ox, ++idx) {
                            const int xx = ox * stride_ + kx - pad_;
                            col(row, idx) = (y >= 0 && y < x.h && xx >= 0 && xx < x.w)
                                                ? x.at(i, ch, y, xx)
                                                : T(0);
                        }
                    }
                }
            }
        }
    }

    void col2im(const Mat<T>& gcol, int i, Tensor<T>& gx) const {
        int row = 0;
        for (int ch = 0; ch < in_; ++ch) {
            for (int ky = 0; ky < k_; ++ky) {
                for (int kx = 0; kx < k_; ++kx, ++row) {
                    int idx = 0;
                    for (int oy = 0; oy < ho_; ++oy) {
                        const int y = oy * stride_ + ky - pad_;
                        for (int ox = 0; ox < wo_; ++ox, ++idx) {
                            const int xx = ox * stride_ + kx - pad_;
                            if (y >= 0 && y < gx.h && xx >= 0 && xx < gx.w)
                                gx.at(i, ch, y, xx) += gcol(row, idx);
                        }
                    }
                }
            }
        }
    }

    int in_, out_, k_, stride_, pad_;
    int ho_ = 0, wo_ = 0;
    std::vector<T> w_, g_;
    std::vector<Mat<T>> cols_;
    Tensor<T> x_;
    bool have_ = false;
};

template <class T>
class MaxPoolLayer final : public Layer<T> {
public:
    explicit MaxPoolLayer(int s) : s_(s) {
        if (s < 1) throw std::invalid_argument("MaxPool: bad size");
    }

    Tensor<T> forward(const Tensor<T>& x) override {
        const int ho = x.h / s_, wo = x.w / s_;
        if (ho < 1 || wo < 1) throw std::invalid_argument("MaxPool: input too small");
        in_ = {x.n, x.c, x.h, x.w};
        Tensor<T> y(x.n, x.c, ho, wo);
        argmax_.assign(y.size(), 0);
        size_t o = 0;
        for (int i = 0; i < x.n; ++i)
            for (int ch = 0; ch < x.c; ++ch)
                for (int oy = 0; oy < ho; ++oy)
                    for (int ox = 0; ox < wo; ++ox, ++o) {
                        T best = x.at(i, ch, oy * s_, ox * s_);
                        int besty = oy * s_, bestx = ox * s_;
                        for (int dy = 0; dy < s_; ++dy)
                            for (int dx = 0; dx < s_; ++dx) {
                                const T v = x.at(i, ch, oy * s_ + dy, ox * s_ + dx);
                                if (v > best) {
                                    best = v;
                                    besty = oy * s_ + dy;
                                    bestx = ox * s_ + dx;
                                }
                            }
                        y.data[o] = best;
                        argmax_[o] = besty * x.w + bestx;
                    }
        have_ = true;
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gout) override {
        this->require_cache(have_);
        Tensor<T> gx(in_[0], in_[1], in_[2], in_[3]);
        const int ho = in_[2] / s_, wo = in_[3] / s_;
        size_t o = 0;
        for (int i = 0; i < in_[0]; ++i)
            for (int ch = 0; ch < in_[1]; ++ch)
                for (int oy = 0; oy < ho; ++oy)
                    for (int ox = 0; ox < wo; ++ox, ++o) {
                        const int pos = argmax_[o];
                        gx.at(i, ch, pos / in_[3], pos % in_[3]) += gout.data[o];
                    }
        return gx;
    }

    LayerSpec spec() const override { return LayerSpec::maxpool(s_); }
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<MaxPoolLayer<T>>(s_); }
    Shape3 out_shape(const Shape3& in) const override { return {in.c, in.h / s_, in.w / s_}; }
    uint64_t flops(const Shape3& in) const override {
        const Shape3 o = out_shape(in);
        return static_cast<uint64_t>(o.size());
    }

private:
    int s_;
    std::array<int, 4> in_{};
    std::vector<int> argmax_;
    bool have_ = false;
};

template <class T>
class ReLULayer final : public Layer<T> {
public:
    Tensor<T> forward(const Tensor<T>& x) override {
        mask_.assign(x.data.size(), 0);
        Tensor<T> y = x;
        for (size_t i = 0; i < y.data.size(); ++i) {
            if (y.data[i] > T(0)) {
                mask_[i] = 1;
            } else {
                y.data[i] = T(0);
            }
        }
        have_ = true;
        return y;
    }
    Tensor<T> backward(const Tensor<T>& gout) override {
        this->require_cache(have_);
        Tensor<T> gx = gout;
        for (size_t i = 0; i < gx.data.size(); ++i)
            if (!mask_[i]) gx.data[i] = T(0);
        return gx;
    }
    LayerSpec spec() const override { return LayerSpec::relu(); }
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<ReLULayer<T>>(); }
    Shape3 out_shape(const Shape3& in) const override { return in; }
    uint64_t flops(const Shape3& in) const override { return static_cast<uint64_t>(in.size()); }

private:
    std::vector<uint8_t> mask_;
    bool have_ = false;
};

template <class T>
class FlattenLayer final : public Layer<T> {
public:
    Tensor<T> forward(const Tensor<T>& x) override {
        in_ = {x.n, x.c, x.h, x.w};
        have_ = true;
        Tensor<T> y = x;
        y.c = x.features();
        y.h = y.w = 1;
        return y;
    }
    Tensor<T> backward(const Tensor<T>& gout) override {
        this->require_cache(have_);
        Tensor<T> gx = gout;
        gx.n = in_[0];
        gx.c = in_[1];
        gx.h = in_[2];
        gx.w = in_[3];
        return gx;
    }
    LayerSpec spec() const override { return LayerSpec::flatten(); }
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<FlattenLayer<T>>(); }
    Shape3 out_shape(const Shape3& in) const override { return {in.size(), 1, 1}; }
    uint64_t flops(const Shape3&) const override { return 0; }

private:
    std::array<int, 4> in_{};
    bool have_ = false;
};

// Fused softmax / cross-entropy head: forward yields class probabilities;
// backward expects the gradient with respect to the logits (see
// softmax_xent_grad) and passes it through unchanged.
template <class T>
class SoftmaxLayer final : public Layer<T> {
public:
    explicit SoftmaxLayer(int classes) : classes_(classes) {
        if (classes < 2) throw std::invalid_argument("Softmax: bad class count");
    }
    Tensor<T> forward(const Tensor<T>& x) override {
        if (x.features() != classes_) throw std::invalid_argument("Softmax: size mismatch");
        Tensor<T> y = x;
        for (int i = 0; i < x.n; ++i) {
            T* row = y.data.data() + static_cast<size_t>(i) * classes_;
            T mx = row[0];
            for (int c = 1; c < classes_; ++c) mx = std::max(mx, row[c]);
            T sum = T(0);
            for (int c = 0; c < classes_; ++c) {
                row[c] = std::exp(row[c] - mx);
                sum += row[c];
            }
            for (int c = 0; c < classes_; ++c) row[c] /= sum;
        }
        have_ = true;
        return y;
    }
    Tensor<T> backward(const Tensor<T>& gout) override {
        this->require_cache(have_);
        return gout;
    }
    LayerSpec spec() const override { return LayerSpec::softmax(classes_); }
    std::unique_ptr<Layer<T>> clone() const override {
        return std::make_unique<SoftmaxLayer<T>>(classes_);
    }
    Shape3 out_shape(const Shape3& in) const override {
        if (in.size() != classes_) throw std::invalid_argument("Softmax: shape chain mismatch");
        return {classes_, 1, 1};
    }
    uint64_t flops(const Shape3& in) const override { return static_cast<uint64_t>(in.size()); }

private:
    int classes_;
    bool have_ = false;
};

template <class T>
inline std::unique_ptr<Layer<T>> make_layer(const LayerSpec& s) {
    switch (s.kind) {
        case LayerKind::Conv2D:
            return std::make_unique<Conv2DLayer<T>>(s.p[0], s.p[1], s.p[2], s.p[3], s.p[4]);
        case LayerKind::MaxPool: return std::make_unique<MaxPoolLayer<T>>(s.p[0]);
        case LayerKind::ReLU: return std::make_unique<ReLULayer<T>>();
        case LayerKind::Flatten: return std::make_unique<FlattenLayer<T>>();
        case LayerKind::Dense: return std::make_unique<DenseLayer<T>>(s.p[0], s.p[1]);
        case LayerKind::Softmax: return std::make_unique<SoftmaxLayer<T>>(s.p[0]);
    }
    throw std::invalid_argument("make_layer: unknown layer kind");
}

template <class T>
class Network {
public:
    Network() = default;
    explicit Network(const std::vector<LayerSpec>& specs) {
        for (const auto& s : specs) layers_.push_back(make_layer<T>(s));
    }
    Network(const Network& other) { *this = other; }
    Network& operator=(const Network& other) {
        layers_.clear();
        for (const auto& l : other.layers_) layers_.push_back(l->clone());
        return *this;
    }
    Network(Network&&) = default;
    Network& operator=(Network&&) = default;

    bool empty() const { return layers_.empty(); }
    size_t num_layers() const { return layers_.size(); }
    Layer<T>& layer(size_t i) { return *layers_[i]; }

    Tensor<T> forward(const Tensor<T>& x) {
        Tensor<T> y = x;
        for (auto& l : layers_) y = l->forward(y);
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gout) {
        Tensor<T> g = gout;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
        return g;
    }

    void sgd_step(T lr) {
        for (auto& l : layers_) {
            auto* w = l->params();
            auto* g = l->grads();
            if (!w) continue;
            for (size_t i = 0; i < w->size(); ++i) (*w)[i] -= lr * (*g)[i];
        }
    }

    void init(Rng& rng) {
        for (auto& l : layers_) l->init(rng);
    }

    size_t param_count() const {
        size_t n = 0;
        for (const auto& l : layers_) n += l->param_count();
        return n;
    }

    uint64_t flops_per_sample(Shape3 in) const {
        uint64_t f = 0;
        for (const auto& l : layers_) {
            f += l->flops(in);
            in = l->out_shape(in);
        }
        return f;
    }

    Shape3 out_shape(Shape3 in) const {
        for (const auto& l : layers_) in = l->out_shape(in);
        return in;
    }

    std::vector<LayerSpec> specs() const {
        std::vector<LayerSpec> s;
        for (const auto& l : layers_) s.push_back(l->spec());
        return s;
    }

    std::vector<T> flat_params() const {
        std::vector<T> out;
        out.reserve(param_count());
        for (const auto& l : layers_) {
            auto* w = const_cast<Layer<T>&>(*l).params();
            if (w) out.insert(out.end(), w->begin(), w->end());
        }
        return out;
    }

    std::vector<T> flat_grads() const {
        std::vector<T> out;
        out.reserve(param_count());
        for (const auto& l : layers_) {
            auto* g = const_cast<Layer<T>&>(*l).grads();
            if (g) out.insert(out.end(), g->begin(), g->end());
        }
        return out;
    }

    void set_flat_params(const std::vector<T>& v) {
        size_t off = 0;
        for (auto& l : layers_) {
            auto* w = l->params();
            if (!w) continue;
            if (off + w->size() > v.size())
                throw std::invalid_argument("set_flat_params: length mismatch");
            std::copy(v.begin() + off, v.begin() + off + w->size(), w->begin());
            off += w->size();
        }
        if (off != v.size()) throw std::invalid_argument("set_flat_params: length mismatch");
    }

private:
    std::vector<std::unique_ptr<Layer<T>>> layers_;
};

template <class T>
struct LossGrad {
    double loss = 0.0;
    Tensor<T> grad;  // d(mean loss)/d(logits), to feed Network::backward
};

// Mean cross-entropy over the batch; gradient w.r.t. logits is
// (probs - onehot) / batch.
template <class T>
inline LossGrad<T> softmax_xent_grad(const Tensor<T>& probs,
                                     const std::vector<uint8_t>& labels) {
    const int classes = probs.features();
    if (static_cast<int>(labels.size()) != probs.n)
        throw std::invalid_argument("softmax_xent_grad: label count mismatch");
    LossGrad<T> out;
    out.grad = probs;
    double loss = 0.0;
    for (int i = 0; i < probs.n; ++i) {
        const int y = labels[i];
        if (y >= classes) throw std::invalid_argument("softmax_xent_grad: label out of range");
        const double p = std::max<double>(probs.data[static_cast<size_t>(i) * classes + y], 1e-30);
        loss -= std::log(p);
        out.grad.data[static_cast<size_t>(i) * classes + y] -= T(1);
    }
    const T inv = T(1.0 / probs.n);
    for (auto& g : out.grad.data) g *= inv;
    out.loss = loss / probs.n;
    return out;
}

// ---------------------------------------------------------------------------
// Checkpoint format: magic "VFNW", version u16, layer count u16, per layer
// kind u8 + 5 x i32, then all parameters as 32-bit IEEE-754 little-endian in
// layer order.

template <class T>
inline void save_network(const Network<T>& net, std::ostream& os) {
    os.write("VFNW", 4);
    const uint16_t version = 1;
    const auto specs = net.specs();
    const uint16_t count = static_cast<uint16_t>(specs.size());
    os.write(reinterpret_cast<const char*>(&version), 2);
    os.write(reinterpret_cast<const char*>(&count), 2);
    for (const auto& s : specs) {
        const uint8_t kind = static_cast<uint8_t>(s.kind);
        os.write(reinterpret_cast<const char*>(&kind), 1);
        for (int32_t p : s.p) os.write(reinterpret_cast<const char*>(&p), 4);
    }
    for (T v : net.flat_params()) {
        const float f = static_cast<float>(v);
        os.write(reinterpret_cast<const char*>(&f), 4);
    }
}

template <class T>
inline Network<T> load_network(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "VFNW", 4) != 0)
        throw std::runtime_error("load_network: bad magic");
    uint16_t version = 0, count = 0;
    is.read(reinterpret_cast<char*>(&version), 2);
    is.read(reinterpret_cast<char*>(&count), 2);
    if (version != 1) throw std::runtime_error("load_network: unsupported version");
    std::vector<LayerSpec> specs(count);
    for (auto& s : specs) {
        uint8_t kind = 0;
        is.read(reinterpret_cast<char*>(&kind), 1);
        s.kind = static_cast<LayerKind>(kind);
        for (auto& p : s.p) is.read(reinterpret_cast<char*>(&p), 4);
    }
    Network<T> net(specs);
    std::vector<T> params(net.param_count());
    for (auto& v : params) {
        float f = 0;
        is.read(reinterpret_cast<char*>(&f), 4);
        v = static_cast<T>(f);
    }
    if (!is) throw std::runtime_error("load_network: truncated file");
    net.set_flat_params(params);
    return net;
}

}  // namespace dws
