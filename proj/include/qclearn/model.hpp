#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qclearn/tensor.hpp"

namespace qclearn {

// Architecture of the scalable CNN: n_conv same-padded conv layers with
// batch norm and Mish, a global max pool, a dense head with batch norm and
// Mish, and a sigmoid output layer. With n_outputs = 1 the same weights
// apply to any input height/width; with n_outputs = N the qubit dimension
// is pinned.
struct ModelConfig {
    int n_conv = 10;
    int filters = 32;
    int kernel_h = 3;
    int kernel_w = 3;
    std::vector<int> dense_sizes{128, 64, 32};
    int n_outputs = 1;
    int gate_channels = 4;

    void validate() const;
    std::string to_json() const;
    static ModelConfig from_json(const std::string& text);
    bool operator==(const ModelConfig&) const = default;
};

struct BatchNorm {
    Tensor gamma, beta, running_mean, running_var;

    BatchNorm() = default;
    explicit BatchNorm(std::int64_t channels);
};

struct ConvLayer {
    Tensor kernel;  // (KH*KW*Cin) x F, rows ordered (ky, kx, cin)
    Tensor bias;    // F
    BatchNorm bn;
};

struct DenseLayer {
    Tensor weight;  // in x out
    Tensor bias;    // out
    BatchNorm bn;
};

double mish(double x);
double mish_derivative(double x);

// Channel-wise maximum over all spatial positions: (B, H, W, F) -> (B, F).
Tensor global_max_pool(const Tensor& features);

// Mean over rows of the summed per-output binary cross-entropy;
// predictions are clamped to [1e-7, 1 - 1e-7]. Targets may be fractional.
double bce_loss(const Tensor& pred, const Tensor& target);

// Everything backward() needs, captured by forward_train().
struct ForwardCache {
    std::int64_t batch = 0, height = 0, width = 0;
    std::vector<Tensor> conv_in;    // conv_in[i] feeds conv layer i; [n_conv] is pool input
    std::vector<Tensor> conv_col;   // im2col of conv_in[i], reused for the kernel gradient
    std::vector<Tensor> conv_pre;   // conv output, pre batch-norm
    std::vector<Tensor> conv_mean, conv_var;  // batch statistics, per channel
    std::vector<Tensor> conv_bn_out;  // batch-norm output, pre Mish
    std::vector<Tensor> conv_mish_t, conv_mish_sig;  // tanh(softplus) and sigmoid values
    std::vector<std::int32_t> pool_argmax;  // flat spatial index per (b, f)
    std::vector<Tensor> dense_in;
    std::vector<Tensor> dense_pre;
    std::vector<Tensor> dense_mean, dense_var;
    std::vector<Tensor> dense_bn_out;
    std::vector<Tensor> dense_mish_t, dense_mish_sig;
    Tensor logits;
    Tensor pred;
};

class Model {
  public:
    Model(const ModelConfig& config, std::uint64_t init_seed);

    const ModelConfig& config() const { return config_; }

    // batch (B, H, W, C) -> (B, n_outputs); inference mode (running stats).
    Tensor predict(const Tensor& batch) const;

    // Training-mode forward with batch statistics; returns predictions.
    Tensor forward_train(const Tensor& batch, ForwardCache& cache, bool update_running = true);

    // Exact reverse-mode gradients of bce_loss(forward_train(...), targets),
    // aligned with parameters().
    std::vector<Tensor> backward(const ForwardCache& cache, const Tensor& targets) const;

    // Fixed traversal order shared by gradients, optimizer state and
    // checkpoints.
    std::vector<Tensor*> parameters();
    std::vector<const Tensor*> parameters() const;
    std::vector<std::string> parameter_names() const;
    std::vector<Tensor*> running_stats();
    std::vector<const Tensor*> running_stats() const;
    std::vector<std::string> running_stat_names() const;
    std::int64_t parameter_count() const;

    std::vector<ConvLayer>& conv_layers() { return convs_; }
    std::vector<DenseLayer>& dense_layers() { return denses_; }
    DenseLayer& output_layer() { return output_; }
    const DenseLayer& output_layer() const { return output_; }

    // Small enough that normalized batch variance sits within 1e-6 of 1 for
    // any realistically scaled activations.
    static constexpr double kBnEpsilon = 1e-9;
    static constexpr double kBnMomentum = 0.9;
    static constexpr double kBceClamp = 1e-7;

  private:
    ModelConfig config_;
    std::vector<ConvLayer> convs_;
    std::vector<DenseLayer> denses_;
    DenseLayer output_;

    void check_input(const Tensor& batch) const;
    Tensor forward_impl(const Tensor& batch, bool train, ForwardCache* cache) const;
    void update_running_stats(const ForwardCache& cache);
};

}  // namespace qclearn
