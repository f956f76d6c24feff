#pragma once

#include "loadcast/rng.hpp"
#include "loadcast/tensor.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

namespace loadcast {

enum class Activation { sigmoid, tanh, relu, identity };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

double activate_scalar(Activation a, double x);

/// Per-layer forward state consumed by backward. Owned by the caller so that
/// forward stays const and trained networks can serve concurrent predictions.
struct LayerCache {
    Tensor input;
    Tensor pre;
    Tensor post;
    std::vector<Tensor> states; // recurrent hidden states, one per time step
    std::vector<Tensor> extras; // gate activations and cell states
};

class Layer {
public:
    virtual ~Layer() = default;

    virtual Tensor forward(const Tensor& input, LayerCache* cache) const = 0;

    /// Returns dL/dinput and accumulates parameter gradients; requires the
    /// cache produced by the matching forward call.
    virtual Tensor backward(const Tensor& grad_output, const LayerCache& cache) = 0;

    virtual void collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads) = 0;
    virtual void init_params(Rng& rng) = 0;
    virtual std::string kind() const = 0;
    virtual nlohmann::json to_json() const = 0;
    virtual std::unique_ptr<Layer> clone() const = 0;
};

class DenseLayer : public Layer {
public:
    DenseLayer(std::size_t in, std::size_t out, Activation act);

    Tensor forward(const Tensor& input, LayerCache* cache) const override;
    Tensor backward(const Tensor& grad_output, const LayerCache& cache) override;
    void collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads) override;
    void init_params(Rng& rng) override;
    std::string kind() const override { return "dense"; }
    nlohmann::json to_json() const override;
    std::unique_ptr<Layer> clone() const override;

    std::size_t in_width() const { return in_; }
    std::size_t out_width() const { return out_; }
    Activation activation() const { return act_; }
    Tensor& weights() { return w_; }
    const Tensor& weights() const { return w_; }
    Tensor& bias() { return b_; }
    const Tensor& bias() const { return b_; }

private:
    std::size_t in_, out_;
    Activation act_;
    Tensor w_, b_;       // (in x out), (out)
    Tensor gw_, gb_;
};

/// Elman recurrent layer: h_t = tanh(x_t Wx + h_{t-1} Wh + b); consumes
/// (batch x steps x in) and emits the final hidden state (batch x hidden).
class RnnLayer : public Layer {
public:
    RnnLayer(std::size_t in, std::size_t hidden);

    Tensor forward(const Tensor& input, LayerCache* cache) const override;
    Tensor backward(const Tensor& grad_output, const LayerCache& cache) override;
    void collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads) override;
    void init_params(Rng& rng) override;
    std::string kind() const override { return "rnn"; }
    nlohmann::json to_json() const override;
    std::unique_ptr<Layer> clone() const override;

    std::size_t hidden_width() const { return hidden_; }
    Tensor& input_weights() { return wx_; }
    Tensor& recurrent_weights() { return wh_; }
    Tensor& bias() { return b_; }

private:
    std::size_t in_, hidden_;
    Tensor wx_, wh_, b_;
    Tensor gwx_, gwh_, gb_;
};

/// Standard LSTM with gate order [input, forget, cell, output]; consumes
/// (batch x steps x in) and emits the final hidden state (batch x hidden).
class LstmLayer : public Layer {
public:
    LstmLayer(std::size_t in, std::size_t hidden);

    Tensor forward(const Tensor& input, LayerCache* cache) const override;
    Tensor backward(const Tensor& grad_output, const LayerCache& cache) override;
    void collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads) override;
    void init_params(Rng& rng) override;
    std::string kind() const override { return "lstm"; }
    nlohmann::json to_json() const override;
    std::unique_ptr<Layer> clone() const override;

    std::size_t hidden_width() const { return hidden_; }
    Tensor& input_weights() { return wx_; }  // (in x 4*hidden)
    Tensor& recurrent_weights() { return wh_; } // (hidden x 4*hidden)
    Tensor& bias() { return b_; }            // (4*hidden)

private:
    std::size_t in_, hidden_;
    Tensor wx_, wh_, b_;
    Tensor gwx_, gwh_, gb_;
};

/// Valid 1-D convolution (cross-correlation) over (batch x len x channels).
class Conv1dLayer : public Layer {
public:
    Conv1dLayer(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_len,
                std::size_t stride, Activation act);

    Tensor forward(const Tensor& input, LayerCache* cache) const override;
    Tensor backward(const Tensor& grad_output, const LayerCache& cache) override;
    void collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads) override;
    void init_params(Rng& rng) override;
    std::string kind() const override { return "conv1d"; }
    nlohmann::json to_json() const override;
    std::unique_ptr<Layer> clone() const override;

    std::size_t out_len(std::size_t in_len) const;
    std::size_t out_channels() const { return cout_; }
    std::size_t kernel_len() const { return klen_; }
    Tensor& kernels() { return kern_; } // (cout x klen x cin)
    Tensor& bias() { return b_; }

private:
    std::size_t cin_, cout_, klen_, stride_;
    Activation act_;
    Tensor kern_, b_;
    Tensor gkern_, gb_;
};

class FlattenLayer : public Layer {
public:
    FlattenLayer() = default;

    Tensor forward(const Tensor& input, LayerCache* cache) const override;
    Tensor backward(const Tensor& grad_output, const LayerCache& cache) override;
    void collect(std::vector<Tensor*>&, std::vector<Tensor*>&) override {}
    void init_params(Rng&) override {}
    std::string kind() const override { return "flatten"; }
    nlohmann::json to_json() const override;
    std::unique_ptr<Layer> clone() const override;
};

class Network {
public:
    Network() = default;
    Network(const Network& other);
    Network& operator=(const Network& other);
    Network(Network&&) = default;
    Network& operator=(Network&&) = default;

    void add(std::unique_ptr<Layer> layer);

    Tensor forward(const Tensor& input, std::vector<LayerCache>* caches) const;
    void backward(const Tensor& loss_gradient, std::vector<LayerCache>& caches);

    void zero_grads();
    std::vector<Tensor*> params();
    std::vector<Tensor*> grads();
    std::size_t param_count() const;

    /// Seed-deterministic initialization: uniform(-r, r) weights with
    /// r = sqrt(6 / (fan_in + fan_out)), zero biases.
    void init(std::uint64_t seed);

    std::size_t layer_count() const { return layers_.size(); }
    Layer& layer(std::size_t i) { return *layers_[i]; }
    const Layer& layer(std::size_t i) const { return *layers_[i]; }

    nlohmann::json to_json() const;
    static Network from_json(const nlohmann::json& j);

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

struct TrainConfig {
    std::size_t epochs = 200;
    std::size_t batch_size = 32;
    double learning_rate = 0.05;
    double momentum = 0.9;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Mean squared error over all output elements; fills grad with dL/dpred.
double mse_loss(const Tensor& pred, const Tensor& target, Tensor* grad);

/// v <- momentum * v - lr * g; p <- p + v.
void sgd_step(Tensor& param, const Tensor& grad, Tensor& velocity, double learning_rate,
              double momentum);

class SgdOptimizer {
public:
    explicit SgdOptimizer(const std::vector<Tensor*>& params);
    void step(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads,
              double learning_rate, double momentum);

private:
    std::vector<Tensor> velocity_;
};

struct TrainResult {
    std::vector<double> loss_trace; // mean training loss per epoch
    double seconds = 0.0;           // wall clock around the training loop only
};

/// Exactly cfg.epochs passes over seeded shuffled mini-batches of
/// (inputs, targets); aborts with the epoch index if the loss goes
/// non-finite. inputs: (n x ...) with the sample dimension first;
/// targets: (n x k).
TrainResult train_epochs(Network& net, const Tensor& inputs, const Tensor& targets,
                         const TrainConfig& cfg);

/// Central finite differences (h = 1e-5) against backward on every parameter;
/// returns the worst relative error. Intended for small networks.
double gradient_check(Network& net, const Tensor& inputs, const Tensor& targets);

/// Gathers sample rows (first dimension) into a contiguous batch tensor.
Tensor gather_rows(const Tensor& data, std::span<const std::size_t> indices);

} // namespace loadcast
