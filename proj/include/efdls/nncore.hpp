#pragma once

#include "efdls/tensor.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace efdls {

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

// 1-D convolution with same-length zero padding. kernel is [C_out, C_in, K].
struct ConvLayer {
    Tensor kernel;
    Tensor bias;
    Tensor grad_kernel;
    Tensor grad_bias;

    ConvLayer() = default;
    ConvLayer(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_size);

    std::size_t in_channels() const { return kernel.dim(1); }
    std::size_t out_channels() const { return kernel.dim(0); }
    std::size_t kernel_size() const { return kernel.dim(2); }
};

enum class BnMode {
    Train,       // batch statistics, running statistics updated
    BatchStats,  // batch statistics, running statistics left alone
    Inference,   // running statistics
};

// Per-channel batch normalization over the batch and length axes.
//
// Standard form: alpha * (x - mu) / sqrt(var + zeta) + beta with var the
// population variance. With `literal_delta` set the denominator becomes
// delta + zeta where delta = sqrt(sum (x - mu)^2) over the whole channel; in
// that mode running_var tracks delta^2.
struct BatchNormLayer {
    Tensor alpha;
    Tensor beta;
    Tensor running_mean;
    Tensor running_var;
    Tensor grad_alpha;
    Tensor grad_beta;
    double zeta = 1e-5;
    double momentum = 0.9;
    bool literal_delta = false;

    BatchNormLayer() = default;
    explicit BatchNormLayer(std::size_t channels, double zeta = 1e-5, double momentum = 0.9);

    std::size_t channels() const { return alpha.size(); }
};

// weight is [D_out, D_in].
struct DenseLayer {
    Tensor weight;
    Tensor bias;
    Tensor grad_weight;
    Tensor grad_bias;

    DenseLayer() = default;
    DenseLayer(std::size_t in_features, std::size_t out_features);

    std::size_t in_features() const { return weight.dim(1); }
    std::size_t out_features() const { return weight.dim(0); }
};

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
void init_uniform(ConvLayer& layer, std::mt19937_64& rng);
void init_uniform(DenseLayer& layer, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Forward / backward ops
// ---------------------------------------------------------------------------

Tensor conv1d_forward(const Tensor& input, const ConvLayer& layer);
// Fills layer.grad_kernel / grad_bias and returns the gradient w.r.t. input.
Tensor conv1d_backward(const Tensor& input, const Tensor& grad_output, ConvLayer& layer);

struct BatchNormCache {
    Tensor normalized;               // xhat
    std::vector<double> inv_denom;   // 1 / denominator per channel
    std::vector<double> stat_coef;   // weight of the xhat term in the input gradient
    bool batch_stats = false;
};

Tensor batchnorm_forward(const Tensor& input, BatchNormLayer& layer, BnMode mode,
                         BatchNormCache* cache = nullptr);
inline Tensor batchnorm_forward(const Tensor& input, BatchNormLayer& layer, bool training) {
    return batchnorm_forward(input, layer, training ? BnMode::Train : BnMode::Inference);
}
Tensor batchnorm_backward(const Tensor& grad_output, const BatchNormCache& cache,
                          BatchNormLayer& layer);

Tensor relu_forward(const Tensor& input);
// Gradient through ReLU given the ReLU's output.
Tensor relu_backward(const Tensor& grad_output, const Tensor& output);

Tensor global_avg_pool(const Tensor& input);
Tensor global_avg_pool_backward(const Tensor& grad_output, std::size_t length);

Tensor dense_forward(const Tensor& input, const DenseLayer& layer);
Tensor dense_backward(const Tensor& input, const Tensor& grad_output, DenseLayer& layer);

// Row-wise softmax with max subtraction.
Tensor softmax_rows(const Tensor& logits);

// ---------------------------------------------------------------------------
// Optimization
// ---------------------------------------------------------------------------

// Non-owning view of one learnable tensor and its gradient.
struct ParamSlot {
    std::string name;
    Tensor* value = nullptr;
    Tensor* grad = nullptr;
};

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;  // L2 coefficient, added to the gradient
};

struct AdamState {
    AdamConfig config;
    std::vector<Tensor> first_moment;
    std::vector<Tensor> second_moment;
    std::uint64_t step_count = 0;

    AdamState() = default;
    explicit AdamState(AdamConfig cfg) : config(cfg) {}
};

// One bias-corrected Adam update over `params` (moments allocated on first use).
void adam_step(std::span<const ParamSlot> params, AdamState& state);

// ---------------------------------------------------------------------------
// Finite-difference gradient check
// ---------------------------------------------------------------------------

struct GradcheckOptions {
    double epsilon = 1e-6;
    // 0 checks every coordinate; otherwise this many sampled coordinates per tensor.
    std::size_t samples_per_param = 0;
    std::uint64_t seed = 0;
    // Parameters the loss is provably invariant to (e.g. conv biases feeding
    // batch-statistics normalization). Their analytic gradient must be below
    // `invariant_tolerance` in absolute value instead of matching a quotient.
    std::vector<std::string> invariant_params;
    double invariant_tolerance = 1e-9;
};

struct GradcheckResult {
    double max_relative_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
    bool invariants_ok = true;
};

// Compares the gradients already stored in `params` against central
// differences of `loss`. `loss` must be a pure function of the parameter values.
GradcheckResult finite_diff_gradcheck(std::span<const ParamSlot> params,
                                      const std::function<double()>& loss,
                                      const GradcheckOptions& options = {});

}  // namespace efdls
