#include "loadcast/neural.hpp"

#include "loadcast/error.hpp"
#include "loadcast/kernels.hpp"
#include "loadcast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace loadcast {

std::string activation_name(Activation a) {
    switch (a) {
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::identity: return "identity";
    }
    raise("activation_name: unknown activation");
}

Activation activation_from_name(const std::string& name) {
    if (name == "sigmoid") return Activation::sigmoid;
    if (name == "tanh") return Activation::tanh;
    if (name == "relu") return Activation::relu;
    if (name == "identity") return Activation::identity;
    raise("activation_from_name: unknown activation '", name, "'");
}

double activate_scalar(Activation a, double x) {
    switch (a) {
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::tanh: return std::tanh(x);
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::identity: return x;
    }
    raise("activate_scalar: unknown activation");
}

namespace {

void activate_tensor(Activation a, const Tensor& pre, Tensor& post) {
    post = pre;
    if (a == Activation::identity) {
        return;
    }
    for (double& v : post.values()) {
        v = activate_scalar(a, v);
    }
}

// dZ = grad_output * act'(z), using post-activation values where the
// derivative has a closed form in them and pre-activation for relu.
Tensor activation_backward(Activation a, const Tensor& grad_output, const Tensor& pre,
                           const Tensor& post) {
    Tensor dz = grad_output;
    switch (a) {
    case Activation::identity:
        break;
    case Activation::sigmoid:
        for (std::size_t i = 0; i < dz.size(); ++i) {
            dz[i] *= post[i] * (1.0 - post[i]);
        }
        break;
    case Activation::tanh:
        for (std::size_t i = 0; i < dz.size(); ++i) {
            dz[i] *= 1.0 - post[i] * post[i];
        }
        break;
    case Activation::relu:
        for (std::size_t i = 0; i < dz.size(); ++i) {
            dz[i] = pre[i] > 0.0 ? dz[i] : 0.0;
        }
        break;
    }
    return dz;
}

void add_bias_rows(Tensor& y, const Tensor& b) {
    const std::size_t rows = y.dim(0);
    const std::size_t cols = b.size();
    for (std::size_t r = 0; r < rows; ++r) {
        double* row = y.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) {
            row[c] += b[c];
        }
    }
}

void accumulate_column_sums(const Tensor& m, Tensor& out) {
    const std::size_t rows = m.dim(0);
    const std::size_t cols = m.dim(1);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = m.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) {
            out[c] += row[c];
        }
    }
}

void accumulate(Tensor& dst, const Tensor& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] += src[i];
    }
}

// Copies time step t of a (batch x steps x width) tensor into (batch x width).
Tensor time_slice(const Tensor& x, std::size_t t) {
    const std::size_t batch = x.dim(0), steps = x.dim(1), width = x.dim(2);
    Tensor out = Tensor::matrix(batch, width);
    for (std::size_t b = 0; b < batch; ++b) {
        const double* src = x.data() + (b * steps + t) * width;
        std::copy(src, src + width, out.data() + b * width);
    }
    return out;
}

void scatter_time_slice(Tensor& x, std::size_t t, const Tensor& slice) {
    const std::size_t batch = x.dim(0), steps = x.dim(1), width = x.dim(2);
    for (std::size_t b = 0; b < batch; ++b) {
        const double* src = slice.data() + b * width;
        std::copy(src, src + width, x.data() + (b * steps + t) * width);
    }
}

void init_uniform(Tensor& t, Rng& rng, double r) {
    for (double& v : t.values()) {
        v = rng.uniform(-r, r);
    }
}

nlohmann::json tensor_values(const Tensor& t) {
    return nlohmann::json(std::vector<double>(t.values().begin(), t.values().end()));
}

void load_tensor_values(Tensor& t, const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    require(v.size() == t.size(), "Network::from_json: parameter size mismatch");
    std::copy(v.begin(), v.end(), t.data());
}

} // namespace

// ---------------------------------------------------------------------------
// DenseLayer
// ---------------------------------------------------------------------------

DenseLayer::DenseLayer(std::size_t in, std::size_t out, Activation act)
    : in_(in), out_(out), act_(act), w_(Tensor::matrix(in, out)), b_(Tensor::vector(out)),
      gw_(Tensor::matrix(in, out)), gb_(Tensor::vector(out)) {
    require(in >= 1 && out >= 1, "DenseLayer: widths must be >= 1");
}

Tensor DenseLayer::forward(const Tensor& input, LayerCache* cache) const {
    require(input.rank() == 2, "DenseLayer::forward: expected a (batch x features) input");
    require(input.dim(1) == in_, "DenseLayer::forward: input width ", input.dim(1),
            " does not match layer width ", in_);
    const std::size_t batch = input.dim(0);
    Tensor pre = Tensor::matrix(batch, out_);
    kernels::matmul_nn(input.data(), w_.data(), pre.data(), batch, in_, out_);
    add_bias_rows(pre, b_);
    Tensor post;
    activate_tensor(act_, pre, post);
    post.ensure_finite("DenseLayer::forward");
    if (cache != nullptr) {
        cache->input = input;
        cache->pre = std::move(pre);
        cache->post = post;
    }
    return post;
}

Tensor DenseLayer::backward(const Tensor& grad_output, const LayerCache& cache) {
    require(grad_output.same_shape(cache.post), "DenseLayer::backward: cache/network mismatch");
    const std::size_t batch = grad_output.dim(0);
    const Tensor dz = activation_backward(act_, grad_output, cache.pre, cache.post);

    Tensor gw = Tensor::matrix(in_, out_);
    kernels::matmul_tn(cache.input.data(), dz.data(), gw.data(), in_, batch, out_);
    accumulate(gw_, gw);
    accumulate_column_sums(dz, gb_);

    Tensor dx = Tensor::matrix(batch, in_);
    kernels::matmul_nt(dz.data(), w_.data(), dx.data(), batch, out_, in_);
    return dx;
}

void DenseLayer::collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads) {
    params.push_back(&w_);
    params.push_back(&b_);
    grads.push_back(&gw_);
    grads.push_back(&gb_);
}

void DenseLayer::init_params(Rng& rng) {
    init_uniform(w_, rng, std::sqrt(6.0 / static_cast<double>(in_ + out_)));
    b_.fill(0.0);
}

nlohmann::json DenseLayer::to_json() const {
    return {{"kind", kind()},        {"in", in_},
            {"out", out_},           {"activation", activation_name(act_)},
            {"weights", tensor_values(w_)}, {"bias", tensor_values(b_)}};
}

std::unique_ptr<Layer> DenseLayer::clone() const {
    return std::make_unique<DenseLayer>(*this);
}

// ---------------------------------------------------------------------------
// RnnLayer
// ---------------------------------------------------------------------------

RnnLayer::RnnLayer(std::size_t in, std::size_t hidden)
    : in_(in), hidden_(hidden), wx_(Tensor::matrix(in, hidden)),
      wh_(Tensor::matrix(hidden, hidden)), b_(Tensor::vector(hidden)),
      gwx_(Tensor::matrix(in, hidden)), gwh_(Tensor::matrix(hidden, hidden)),
      gb_(Tensor::vector(hidden)) {}

Tensor RnnLayer::forward(const Tensor& input, LayerCache* cache) const {
    require(input.rank() == 3, "RnnLayer::forward: expected a (batch x steps x in) input");
    require(input.dim(2) == in_, "RnnLayer::forward: input width mismatch");
    const std::size_t batch = input.dim(0), steps = input.dim(1);
    require(steps >= 1, "RnnLayer::forward: need at least one time step");

    Tensor h = Tensor::matrix(batch, hidden_);
    Tensor xw = Tensor::matrix(batch, hidden_);
    Tensor hw = Tensor::matrix(batch, hidden_);
    if (cache != nullptr) {
        cache->input = input;
        cache->states.clear();
        cache->states.reserve(steps);
    }
    for (std::size_t t = 0; t < steps; ++t) {
        const Tensor xt = time_slice(input, t);
        kernels::matmul_nn(xt.data(), wx_.data(), xw.data(), batch, in_, hidden_);
        kernels::matmul_nn(h.data(), wh_.data(), hw.data(), batch, hidden_, hidden_);
        for (std::size_t i = 0; i < h.size(); ++i) {
            h[i] = std::tanh(xw[i] + hw[i] + b_[i % hidden_]);
        }
        if (cache != nullptr) {
            cache->states.push_back(h);
        }
    }
    h.ensure_finite("RnnLayer::forward");
    return h;
}

Tensor RnnLayer::backward(const Tensor& grad_output, const LayerCache& cache) {
    const Tensor& input = cache.input;
    const std::size_t batch = input.dim(0), steps = input.dim(1);
    require(cache.states.size() == steps, "RnnLayer::backward: cache/network mismatch");

    Tensor dinput(std::vector<std::size_t>{batch, steps, in_});
    Tensor dh = grad_output;
    Tensor gwx = Tensor::matrix(in_, hidden_);
    Tensor gwh = Tensor::matrix(hidden_, hidden_);

    for (std::size_t t = steps; t-- > 0;) {
        const Tensor& ht = cache.states[t];
        Tensor dz = dh;
        for (std::size_t i = 0; i < dz.size(); ++i) {
            dz[i] *= 1.0 - ht[i] * ht[i];
        }

        const Tensor xt = time_slice(input, t);
        kernels::matmul_tn(xt.data(), dz.data(), gwx.data(), in_, batch, hidden_);
        accumulate(gwx_, gwx);
        const Tensor hprev = t > 0 ? cache.states[t - 1] : Tensor::matrix(batch, hidden_);
        kernels::matmul_tn(hprev.data(), dz.data(), gwh.data(), hidden_, batch, hidden_);
        accumulate(gwh_, gwh);
        accumulate_column_sums(dz, gb_);

        Tensor dx = Tensor::matrix(batch, in_);
        kernels::matmul_nt(dz.data(), wx_.data(), dx.data(), batch, hidden_, in_);
        scatter_time_slice(dinput, t, dx);

        Tensor dh_prev = Tensor::matrix(batch, hidden_);
        kernels::matmul_nt(dz.data(), wh_.data(), dh_prev.data(), batch, hidden_, hidden_);
        dh = std::move(dh_prev);
    }
    return dinput;
}

void RnnLayer::collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads) {
    params.push_back(&wx_);
    params.push_back(&wh_);
    params.push_back(&b_);
    grads.push_back(&gwx_);
    grads.push_back(&gwh_);
    grads.push_back(&gb_);
}

void RnnLayer::init_params(Rng& rng) {
    init_uniform(wx_, rng, std::sqrt(6.0 / static_cast<double>(in_ + hidden_)));
    init_uniform(wh_, rng, std::sqrt(6.0 / static_cast<double>(hidden_ + hidden_)));
    b_.fill(0.0);
}

nlohmann::json RnnLayer::to_json() const {
    return {{"kind", kind()},
            {"in", in_},
            {"hidden", hidden_},
            {"wx", tensor_values(wx_)},
            {"wh", tensor_values(wh_)},
            {"bias", tensor_values(b_)}};
}

std::unique_ptr<Layer> RnnLayer::clone() const {
    return std::make_unique<RnnLayer>(*this);
}

// ---------------------------------------------------------------------------
// LstmLayer
// ---------------------------------------------------------------------------

LstmLayer::LstmLayer(std::size_t in, std::size_t hidden)
    : in_(in), hidden_(hidden), wx_(Tensor::matrix(in, 4 * hidden)),
      wh_(Tensor::matrix(hidden, 4 * hidden)), b_(Tensor::vector(4 * hidden)),
      gwx_(Tensor::matrix(in, 4 * hidden)), gwh_(Tensor::matrix(hidden, 4 * hidden)),
      gb_(Tensor::vector(4 * hidden)) {}

Tensor LstmLayer::forward(const Tensor& input, LayerCache* cache) const {
    require(input.rank() == 3, "LstmLayer::forward: expected a (batch x steps x in) input");
    require(input.dim(2) == in_, "LstmLayer::forward: input width mismatch");
    const std::size_t batch = input.dim(0), steps = input.dim(1);
    const std::size_t h4 = 4 * hidden_;

    Tensor h = Tensor::matrix(batch, hidden_);
    Tensor c = Tensor::matrix(batch, hidden_);
    Tensor gates = Tensor::matrix(batch, h4);
    Tensor hw = Tensor::matrix(batch, h4);

    if (cache != nullptr) {
        cache->input = input;
        cache->states.clear();
        cache->extras.clear();
    }

    for (std::size_t t = 0; t < steps; ++t) {
        const Tensor xt = time_slice(input, t);
        kernels::matmul_nn(xt.data(), wx_.data(), gates.data(), batch, in_, h4);
        kernels::matmul_nn(h.data(), wh_.data(), hw.data(), batch, hidden_, h4);
        for (std::size_t i = 0; i < gates.size(); ++i) {
            gates[i] += hw[i] + b_[i % h4];
        }

        Tensor gi = Tensor::matrix(batch, hidden_);
        Tensor gf = Tensor::matrix(batch, hidden_);
        Tensor gg = Tensor::matrix(batch, hidden_);
        Tensor go = Tensor::matrix(batch, hidden_);
        for (std::size_t bi = 0; bi < batch; ++bi) {
            const double* row = gates.data() + bi * h4;
            for (std::size_t u = 0; u < hidden_; ++u) {
                gi.at2(bi, u) = activate_scalar(Activation::sigmoid, row[u]);
                gf.at2(bi, u) = activate_scalar(Activation::sigmoid, row[hidden_ + u]);
                gg.at2(bi, u) = std::tanh(row[2 * hidden_ + u]);
                go.at2(bi, u) = activate_scalar(Activation::sigmoid, row[3 * hidden_ + u]);
            }
        }

        const Tensor c_prev = c;
        Tensor tanhc = Tensor::matrix(batch, hidden_);
        for (std::size_t i = 0; i < c.size(); ++i) {
            c[i] = gf[i] * c_prev[i] + gi[i] * gg[i];
            tanhc[i] = std::tanh(c[i]);
            h[i] = go[i] * tanhc[i];
        }

        if (cache != nullptr) {
            cache->states.push_back(h);
            cache->extras.push_back(gi);
            cache->extras.push_back(gf);
            cache->extras.push_back(gg);
            cache->extras.push_back(go);
            cache->extras.push_back(c_prev);
            cache->extras.push_back(tanhc);
        }
    }
    h.ensure_finite("LstmLayer::forward");
    return h;
}

Tensor LstmLayer::backward(const Tensor& grad_output, const LayerCache& cache) {
    const Tensor& input = cache.input;
    const std::size_t batch = input.dim(0), steps = input.dim(1);
    const std::size_t h4 = 4 * hidden_;
    require(cache.extras.size() == 6 * steps, "LstmLayer::backward: cache/network mismatch");

    Tensor dinput(std::vector<std::size_t>{batch, steps, in_});
    Tensor dh = grad_output;
    Tensor dc = Tensor::matrix(batch, hidden_);
    Tensor gwx = Tensor::matrix(in_, h4);
    Tensor gwh = Tensor::matrix(hidden_, h4);

    for (std::size_t t = steps; t-- > 0;) {
        const Tensor& gi = cache.extras[6 * t + 0];
        const Tensor& gf = cache.extras[6 * t + 1];
        const Tensor& gg = cache.extras[6 * t + 2];
        const Tensor& go = cache.extras[6 * t + 3];
        const Tensor& c_prev = cache.extras[6 * t + 4];
        const Tensor& tanhc = cache.extras[6 * t + 5];

        Tensor dz = Tensor::matrix(batch, h4);
        for (std::size_t bi = 0; bi < batch; ++bi) {
            for (std::size_t u = 0; u < hidden_; ++u) {
                const std::size_t i = bi * hidden_ + u;
                const double do_ = dh[i] * tanhc[i];
                const double dci = dc[i] + dh[i] * go[i] * (1.0 - tanhc[i] * tanhc[i]);
                const double di = dci * gg[i];
                const double df = dci * c_prev[i];
                const double dg = dci * gi[i];
                double* row = dz.data() + bi * h4;
                row[u] = di * gi[i] * (1.0 - gi[i]);
                row[hidden_ + u] = df * gf[i] * (1.0 - gf[i]);
                row[2 * hidden_ + u] = dg * (1.0 - gg[i] * gg[i]);
                row[3 * hidden_ + u] = do_ * go[i] * (1.0 - go[i]);
                dc[i] = dci * gf[i];
            }
        }

        const Tensor xt = time_slice(input, t);
        kernels::matmul_tn(xt.data(), dz.data(), gwx.data(), in_, batch, h4);
        accumulate(gwx_, gwx);
        const Tensor hprev = t > 0 ? cache.states[t - 1] : Tensor::matrix(batch, hidden_);
        kernels::matmul_tn(hprev.data(), dz.data(), gwh.data(), hidden_, batch, h4);
        accumulate(gwh_, gwh);
        accumulate_column_sums(dz, gb_);

        Tensor dx = Tensor::matrix(batch, in_);
        kernels::matmul_nt(dz.data(), wx_.data(), dx.data(), batch, h4, in_);
        scatter_time_slice(dinput, t, dx);

        Tensor dh_prev = Tensor::matrix(batch, hidden_);
        kernels::matmul_nt(dz.data(), wh_.data(), dh_prev.data(), batch, h4, hidden_);
        dh = std::move(dh_prev);
    }
    return dinput;
}

void LstmLayer::collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads) {
    params.push_back(&wx_);
    params.push_back(&wh_);
    params.push_back(&b_);
    grads.push_back(&gwx_);
    grads.push_back(&gwh_);
    grads.push_back(&gb_);
}

void LstmLayer::init_params(Rng& rng) {
    init_uniform(wx_, rng, std::sqrt(6.0 / static_cast<double>(in_ + 4 * hidden_)));
    init_uniform(wh_, rng, std::sqrt(6.0 / static_cast<double>(hidden_ + 4 * hidden_)));
    b_.fill(0.0);
}

nlohmann::json LstmLayer::to_json() const {
    return {{"kind", kind()},
            {"in", in_},
            {"hidden", hidden_},
            {"wx", tensor_values(wx_)},
            {"wh", tensor_values(wh_)},
            {"bias", tensor_values(b_)}};
}

std::unique_ptr<Layer> LstmLayer::clone() const {
    return std::make_unique<LstmLayer>(*this);
}

// ---------------------------------------------------------------------------
// Conv1dLayer
// ---------------------------------------------------------------------------

Conv1dLayer::Conv1dLayer(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_len,
                         std::size_t stride, Activation act)
    : cin_(in_channels), cout_(out_channels), klen_(kernel_len), stride_(stride), act_(act),
      kern_(Tensor({out_channels, kernel_len, in_channels})), b_(Tensor::vector(out_channels)),
      gkern_(Tensor({out_channels, kernel_len, in_channels})), gb_(Tensor::vector(out_channels)) {
    require(stride >= 1, "Conv1dLayer: stride must be >= 1");
    require(kernel_len >= 1, "Conv1dLayer: kernel length must be >= 1");
}

std::size_t Conv1dLayer::out_len(std::size_t in_len) const {
    require(klen_ <= in_len, "Conv1dLayer: kernel length ", klen_, " exceeds input length ",
            in_len);
    return (in_len - klen_) / stride_ + 1;
}

Tensor Conv1dLayer::forward(const Tensor& input, LayerCache* cache) const {
    require(input.rank() == 3, "Conv1dLayer::forward: expected a (batch x len x channels) input");
    require(input.dim(2) == cin_, "Conv1dLayer::forward: channel count mismatch");
    const std::size_t batch = input.dim(0), len = input.dim(1);
    const std::size_t olen = out_len(len);

    Tensor pre(std::vector<std::size_t>{batch, olen, cout_});
    kernels::conv1d_batch(input.data(), batch, len, cin_, kern_.data(), cout_, klen_, stride_,
                          b_.data(), pre.data());
    Tensor post;
    activate_tensor(act_, pre, post);
    post.ensure_finite("Conv1dLayer::forward");
    if (cache != nullptr) {
        cache->input = input;
        cache->pre = std::move(pre);
        cache->post = post;
    }
    return post;
}

Tensor Conv1dLayer::backward(const Tensor& grad_output, const LayerCache& cache) {
    require(grad_output.same_shape(cache.post), "Conv1dLayer::backward: cache/network mismatch");
    const Tensor& input = cache.input;
    const std::size_t batch = input.dim(0), len = input.dim(1);
    const std::size_t olen = grad_output.dim(1);

    const Tensor dz = activation_backward(act_, grad_output, cache.pre, cache.post);
    Tensor dinput(std::vector<std::size_t>{batch, len, cin_});

    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t ot = 0; ot < olen; ++ot) {
            for (std::size_t oc = 0; oc < cout_; ++oc) {
                const double v = dz.at3(b, ot, oc);
                gb_[oc] += v;
                for (std::size_t kt = 0; kt < klen_; ++kt) {
                    const std::size_t it = ot * stride_ + kt;
                    for (std::size_t ch = 0; ch < cin_; ++ch) {
                        gkern_.at3(oc, kt, ch) += v * input.at3(b, it, ch);
                        dinput.at3(b, it, ch) += v * kern_.at3(oc, kt, ch);
                    }
                }
            }
        }
    }
    return dinput;
}

void Conv1dLayer::collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads) {
    params.push_back(&kern_);
    params.push_back(&b_);
    grads.push_back(&gkern_);
    grads.push_back(&gb_);
}

void Conv1dLayer::init_params(Rng& rng) {
    init_uniform(kern_, rng,
                 std::sqrt(6.0 / static_cast<double>(cin_ * klen_ + cout_ * klen_)));
    b_.fill(0.0);
}

nlohmann::json Conv1dLayer::to_json() const {
    return {{"kind", kind()},
            {"cin", cin_},
            {"cout", cout_},
            {"kernel_len", klen_},
            {"stride", stride_},
            {"activation", activation_name(act_)},
            {"kernels", tensor_values(kern_)},
            {"bias", tensor_values(b_)}};
}

std::unique_ptr<Layer> Conv1dLayer::clone() const {
    return std::make_unique<Conv1dLayer>(*this);
}

// ---------------------------------------------------------------------------
// FlattenLayer
// ---------------------------------------------------------------------------

Tensor FlattenLayer::forward(const Tensor& input, LayerCache* cache) const {
    require(input.rank() >= 2, "FlattenLayer::forward: need a batched input");
    const std::size_t batch = input.dim(0);
    const std::size_t width = input.size() / batch;
    Tensor out = input.reshaped({batch, width});
    if (cache != nullptr) {
        cache->input = input;
        cache->post = out;
    }
    return out;
}

Tensor FlattenLayer::backward(const Tensor& grad_output, const LayerCache& cache) {
    return grad_output.reshaped(cache.input.shape());
}

nlohmann::json FlattenLayer::to_json() const {
    return {{"kind", kind()}};
}

std::unique_ptr<Layer> FlattenLayer::clone() const {
    return std::make_unique<FlattenLayer>();
}

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

Network::Network(const Network& other) {
    layers_.reserve(other.layers_.size());
    for (const auto& l : other.layers_) {
        layers_.push_back(l->clone());
    }
}

Network& Network::operator=(const Network& other) {
    if (this != &other) {
        Network copy(other);
        layers_ = std::move(copy.layers_);
    }
    return *this;
}

void Network::add(std::unique_ptr<Layer> layer) {
    layers_.push_back(std::move(layer));
}

Tensor Network::forward(const Tensor& input, std::vector<LayerCache>* caches) const {
    require(!layers_.empty(), "Network::forward: empty network");
    if (caches != nullptr) {
        caches->assign(layers_.size(), LayerCache{});
    }
    Tensor x = input;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        x = layers_[i]->forward(x, caches != nullptr ? &(*caches)[i] : nullptr);
    }
    return x;
}

void Network::backward(const Tensor& loss_gradient, std::vector<LayerCache>& caches) {
    require(caches.size() == layers_.size(), "Network::backward: cache/network mismatch");
    zero_grads();
    Tensor g = loss_gradient;
    for (std::size_t i = layers_.size(); i-- > 0;) {
        g = layers_[i]->backward(g, caches[i]);
    }
}

void Network::zero_grads() {
    for (Tensor* g : grads()) {
        g->fill(0.0);
    }
}

std::vector<Tensor*> Network::params() {
    std::vector<Tensor*> p, g;
    for (auto& l : layers_) {
        l->collect(p, g);
    }
    return p;
}

std::vector<Tensor*> Network::grads() {
    std::vector<Tensor*> p, g;
    for (auto& l : layers_) {
        l->collect(p, g);
    }
    return g;
}

std::size_t Network::param_count() const {
    std::size_t n = 0;
    std::vector<Tensor*> p, g;
    for (const auto& l : layers_) {
        const_cast<Layer&>(*l).collect(p, g);
    }
    for (const Tensor* t : p) {
        n += t->size();
    }
    return n;
}

void Network::init(std::uint64_t seed) {
    Rng rng(seed);
    for (auto& l : layers_) {
        l->init_params(rng);
    }
}

nlohmann::json Network::to_json() const {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : layers_) {
        layers.push_back(l->to_json());
    }
    return {{"format_version", 1}, {"layers", layers}};
}

Network Network::from_json(const nlohmann::json& j) {
    Network net;
    for (const auto& lj : j.at("layers")) {
        const std::string kind = lj.at("kind").get<std::string>();
        if (kind == "dense") {
            auto layer = std::make_unique<DenseLayer>(
                lj.at("in").get<std::size_t>(), lj.at("out").get<std::size_t>(),
                activation_from_name(lj.at("activation").get<std::string>()));
            load_tensor_values(layer->weights(), lj.at("weights"));
            load_tensor_values(layer->bias(), lj.at("bias"));
            net.add(std::move(layer));
        } else if (kind == "rnn") {
            auto layer = std::make_unique<RnnLayer>(lj.at("in").get<std::size_t>(),
                                                    lj.at("hidden").get<std::size_t>());
            load_tensor_values(layer->input_weights(), lj.at("wx"));
            load_tensor_values(layer->recurrent_weights(), lj.at("wh"));
            load_tensor_values(layer->bias(), lj.at("bias"));
            net.add(std::move(layer));
        } else if (kind == "lstm") {
            auto layer = std::make_unique<LstmLayer>(lj.at("in").get<std::size_t>(),
                                                     lj.at("hidden").get<std::size_t>());
            load_tensor_values(layer->input_weights(), lj.at("wx"));
            load_tensor_values(layer->recurrent_weights(), lj.at("wh"));
            load_tensor_values(layer->bias(), lj.at("bias"));
            net.add(std::move(layer));
        } else if (kind == "conv1d") {
            auto layer = std::make_unique<Conv1dLayer>(
                lj.at("cin").get<std::size_t>(), lj.at("cout").get<std::size_t>(),
                lj.at("kernel_len").get<std::size_t>(), lj.at("stride").get<std::size_t>(),
                activation_from_name(lj.at("activation").get<std::string>()));
            load_tensor_values(layer->kernels(), lj.at("kernels"));
            load_tensor_values(layer->bias(), lj.at("bias"));
            net.add(std::move(layer));
        } else if (kind == "flatten") {
            net.add(std::make_unique<FlattenLayer>());
        } else {
            raise("Network::from_json: unknown layer kind '", kind, "'");
        }
    }
    return net;
}

// ---------------------------------------------------------------------------
// Loss, optimizer, training loop
// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
    require(epochs >= 1, "TrainConfig: epochs must be >= 1");
    require(batch_size >= 1, "TrainConfig: batch_size must be >= 1");
    require(learning_rate > 0.0, "TrainConfig: learning_rate must be > 0");
    require(momentum >= 0.0 && momentum < 1.0, "TrainConfig: momentum must be in [0, 1)");
}

double mse_loss(const Tensor& pred, const Tensor& target, Tensor* grad) {
    require(pred.same_shape(target), "mse_loss: prediction/target shape mismatch");
    const double inv = 1.0 / static_cast<double>(pred.size());
    double loss = 0.0;
    if (grad != nullptr) {
        *grad = pred;
    }
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        loss += d * d;
        if (grad != nullptr) {
            (*grad)[i] = 2.0 * d * inv;
        }
    }
    return loss * inv;
}

void sgd_step(Tensor& param, const Tensor& grad, Tensor& velocity, double learning_rate,
              double momentum) {
    require(param.same_shape(grad) && param.same_shape(velocity),
            "sgd_step: parameter/gradient/velocity shape mismatch");
    for (std::size_t i = 0; i < param.size(); ++i) {
        velocity[i] = momentum * velocity[i] - learning_rate * grad[i];
        param[i] += velocity[i];
    }
}

SgdOptimizer::SgdOptimizer(const std::vector<Tensor*>& params) {
    velocity_.reserve(params.size());
    for (const Tensor* p : params) {
        velocity_.emplace_back(p->shape());
    }
}

void SgdOptimizer::step(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads,
                        double learning_rate, double momentum) {
    require(params.size() == velocity_.size() && grads.size() == velocity_.size(),
            "SgdOptimizer::step: parameter set changed");
    for (std::size_t i = 0; i < params.size(); ++i) {
        sgd_step(*params[i], *grads[i], velocity_[i], learning_rate, momentum);
    }
}

Tensor gather_rows(const Tensor& data, std::span<const std::size_t> indices) {
    require(data.rank() >= 1, "gather_rows: scalar input");
    const std::size_t n = data.dim(0);
    const std::size_t row_elems = data.size() / n;
    std::vector<std::size_t> shape = data.shape();
    shape[0] = indices.size();
    Tensor out(std::move(shape));
    for (std::size_t i = 0; i < indices.size(); ++i) {
        require(indices[i] < n, "gather_rows: index out of range");
        const double* src = data.data() + indices[i] * row_elems;
        std::copy(src, src + row_elems, out.data() + i * row_elems);
    }
    return out;
}

TrainResult train_epochs(Network& net, const Tensor& inputs, const Tensor& targets,
                         const TrainConfig& cfg) {
    cfg.validate();
    require(inputs.rank() >= 2, "train_epochs: inputs must be batched");
    require(targets.rank() == 2, "train_epochs: targets must be (n x k)");
    const std::size_t n = inputs.dim(0);
    require(targets.dim(0) == n, "train_epochs: input/target count mismatch");
    require(n >= 1, "train_epochs: empty training set");

    Rng rng(cfg.seed);
    const std::vector<Tensor*> params = net.params();
    const std::vector<Tensor*> grads = net.grads();
    SgdOptimizer optimizer(params);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    result.loss_trace.reserve(cfg.epochs);
    std::vector<LayerCache> caches;
    Tensor loss_grad;

    result.seconds = metrics::time_block([&] {
        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            rng.shuffle(order);
            double epoch_loss = 0.0;
            for (std::size_t start = 0; start < n; start += cfg.batch_size) {
                const std::size_t end = std::min(n, start + cfg.batch_size);
                const std::span<const std::size_t> idx(order.data() + start, end - start);
                const Tensor bx = gather_rows(inputs, idx);
                const Tensor by = gather_rows(targets, idx);

                const Tensor pred = net.forward(bx, &caches);
                const double loss = mse_loss(pred, by, &loss_grad);
                if (!std::isfinite(loss)) {
                    raise("train_epochs: non-finite loss at epoch ", epoch);
                }
                epoch_loss += loss * static_cast<double>(end - start);

                net.backward(loss_grad, caches);
                optimizer.step(params, grads, cfg.learning_rate, cfg.momentum);
            }
            result.loss_trace.push_back(epoch_loss / static_cast<double>(n));
        }
    });
    return result;
}

double gradient_check(Network& net, const Tensor& inputs, const Tensor& targets) {
    std::vector<LayerCache> caches;
    Tensor loss_grad;
    const Tensor pred = net.forward(inputs, &caches);
    mse_loss(pred, targets, &loss_grad);
    net.backward(loss_grad, caches);

    std::vector<Tensor> analytic;
    for (const Tensor* g : net.grads()) {
        analytic.push_back(*g);
    }

    const double h = 1e-5;
    const auto loss_at = [&] {
        const Tensor p = net.forward(inputs, nullptr);
        return mse_loss(p, targets, nullptr);
    };

    double worst = 0.0;
    const std::vector<Tensor*> params = net.params();
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = *params[pi];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double saved = p[i];
            p[i] = saved + h;
            const double up = loss_at();
            p[i] = saved - h;
            const double down = loss_at();
            p[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double a = analytic[pi][i];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
            worst = std::max(worst, std::abs(a - numeric) / denom);
        }
    }
    return worst;
}

} // namespace loadcast
