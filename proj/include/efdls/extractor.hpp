#pragma once

#include "efdls/nncore.hpp"
#include "efdls/tensor.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace efdls {

struct ConvBlockSpec {
    std::size_t kernel = 0;
    std::size_t channels = 0;
};

struct ExtractorConfig {
    std::array<ConvBlockSpec, 3> blocks{{{9, 128}, {5, 256}, {3, 128}}};
    std::size_t hidden_width = 128;
    std::size_t input_channels = 1;
    bool bn_literal_delta = false;
    double bn_zeta = 1e-5;
    double bn_momentum = 0.9;
};

// Outputs of one forward pass: three conv blocks, the hidden dense layer, and the classifier.
struct ForwardTrace {
    Tensor o1;  // [B, C1, L]
    Tensor o2;  // [B, C2, L]
    Tensor o3;  // [B, C3, L]
    Tensor o4;  // [B, hidden]
    Tensor logits;
    Tensor probs;

    const Tensor& hidden(int m) const;  // m in 1..4
};

// Upstream gradients for backward(). Empty tensors stand for zero.
struct TraceGrad {
    Tensor o1, o2, o3, o4;
    Tensor logits;
};

enum class TensorKind : std::uint8_t {
    ConvKernel = 0,
    ConvBias = 1,
    BnAlpha = 2,
    BnBeta = 3,
    BnRunningMean = 4,
    BnRunningVar = 5,
    DenseWeight = 6,
    DenseBias = 7,
};

bool is_learnable(TensorKind kind);

struct BundleEntry {
    std::uint8_t block = 0;  // 1..4
    TensorKind kind = TensorKind::ConvKernel;
    Tensor value;

    std::uint8_t tag() const { return static_cast<std::uint8_t>((block << 4) | static_cast<std::uint8_t>(kind)); }
    bool learnable() const { return is_learnable(kind); }
    bool operator==(const BundleEntry&) const = default;
};

// Snapshot of the hidden-layer weights (conv blocks 1-3 and the hidden dense
// layer). BN running statistics are carried but are not learnable.
struct WeightBundle {
    std::vector<BundleEntry> entries;
    std::int64_t epoch = 0;

    std::size_t learnable_count() const;
    bool same_layout(const WeightBundle& other) const;
    bool operator==(const WeightBundle&) const = default;
};

class FeatureExtractor {
public:
    struct ConvBlock {
        ConvLayer conv;
        BatchNormLayer bn;
    };

    FeatureExtractor(const ExtractorConfig& config, std::size_t num_classes, std::mt19937_64& rng);

    // Forward pass; `keep_cache` retains the intermediates backward() needs.
    ForwardTrace forward(const Tensor& x, BnMode mode, bool keep_cache = false);
    ForwardTrace forward(const Tensor& x, bool training) {
        return forward(x, training ? BnMode::Train : BnMode::Inference);
    }

    // Writes gradients of every parameter into the layers' grad tensors.
    // Consumes the cache of the preceding forward(..., keep_cache = true).
    void backward(const TraceGrad& grad);
    bool has_cache() const { return cache_.has_value(); }

    WeightBundle extract_hidden_weights(std::int64_t epoch = 0) const;
    void load_hidden_weights(const WeightBundle& bundle);

    // Top-1 labels in inference mode; ties go to the lowest class index.
    std::vector<std::size_t> predict(const Tensor& x, std::size_t chunk = 64);

    std::vector<ParamSlot> parameters();
    std::vector<ParamSlot> hidden_parameters();
    void zero_grad();

    const ExtractorConfig& config() const { return config_; }
    std::size_t num_classes() const { return classifier.out_features(); }

    std::array<ConvBlock, 3> blocks;
    DenseLayer hidden;
    DenseLayer classifier;

private:
    struct BlockCache {
        Tensor input;
        BatchNormCache bn;
        Tensor output;
    };
    struct Cache {
        std::array<BlockCache, 3> blocks;
        Tensor pooled;
        Tensor hidden_out;
    };

    ExtractorConfig config_;
    std::optional<Cache> cache_;
};

// Argmax per row, lowest index on ties.
std::vector<std::size_t> argmax_rows(const Tensor& probs);

}  // namespace efdls
