#include "efdls/extractor.hpp"

#include "efdls/errors.hpp"

#include <algorithm>

namespace efdls {

namespace {

void check_finite(const Tensor& t, const char* where) {
    if (!t.all_finite()) throw NumericError(std::string("non-finite activations in ") + where);
}

void add_into(Tensor& acc, const Tensor& extra) {
    if (extra.empty()) return;
    if (extra.shape() != acc.shape()) {
        throw DimensionError("trace gradient shape " + shape_string(extra.shape()) + " does not match " +
                             shape_string(acc.shape()));
    }
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += extra[i];
}

Tensor slice_batch(const Tensor& x, std::size_t begin, std::size_t end) {
    Shape shape = x.shape();
    const std::size_t row = x.size() / shape[0];
    shape[0] = end - begin;
    std::vector<double> data(x.data() + begin * row, x.data() + end * row);
    return Tensor(std::move(shape), std::move(data));
}

}  // namespace

const Tensor& ForwardTrace::hidden(int m) const {
    switch (m) {
        case 1: return o1;
        case 2: return o2;
        case 3: return o3;
        case 4: return o4;
        default: throw DimensionError("hidden output index must be 1..4, got " + std::to_string(m));
    }
}

bool is_learnable(TensorKind kind) {
    return kind != TensorKind::BnRunningMean && kind != TensorKind::BnRunningVar;
}

std::size_t WeightBundle::learnable_count() const {
    std::size_t n = 0;
    for (const auto& e : entries) {
        if (e.learnable()) n += e.value.size();
    }
    return n;
}

bool WeightBundle::same_layout(const WeightBundle& other) const {
    if (entries.size() != other.entries.size()) return false;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].tag() != other.entries[i].tag() ||
            entries[i].value.shape() != other.entries[i].value.shape()) {
            return false;
        }
    }
    return true;
}

FeatureExtractor::FeatureExtractor(const ExtractorConfig& config, std::size_t num_classes, std::mt19937_64& rng)
    : config_(config) {
    if (num_classes < 2) throw ConfigError("extractor needs at least 2 classes, got " + std::to_string(num_classes));
    std::size_t in = config.input_channels;
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& spec = config.blocks[i];
        blocks[i].conv = ConvLayer(in, spec.channels, spec.kernel);
        blocks[i].bn = BatchNormLayer(spec.channels, config.bn_zeta, config.bn_momentum);
        blocks[i].bn.literal_delta = config.bn_literal_delta;
        init_uniform(blocks[i].conv, rng);
        in = spec.channels;
    }
    hidden = DenseLayer(in, config.hidden_width);
    init_uniform(hidden, rng);
    classifier = DenseLayer(config.hidden_width, num_classes);
    init_uniform(classifier, rng);
}

ForwardTrace FeatureExtractor::forward(const Tensor& x, BnMode mode, bool keep_cache) {
    if (x.rank() != 3 || x.dim(1) != config_.input_channels) {
        throw DimensionError("extractor input must be [B," + std::to_string(config_.input_channels) + ",L], got " +
                             shape_string(x.shape()));
    }
    if (x.dim(2) == 0) throw DimensionError("extractor input has empty length axis");

    static constexpr const char* kBlockNames[3] = {"conv block 1", "conv block 2", "conv block 3"};
    Cache cache;
    ForwardTrace trace;
    const Tensor* current = &x;
    std::array<Tensor*, 3> outs{&trace.o1, &trace.o2, &trace.o3};
    for (std::size_t i = 0; i < 3; ++i) {
        Tensor z = conv1d_forward(*current, blocks[i].conv);
        Tensor y = batchnorm_forward(z, blocks[i].bn, mode, keep_cache ? &cache.blocks[i].bn : nullptr);
        *outs[i] = relu_forward(y);
        check_finite(*outs[i], kBlockNames[i]);
        if (keep_cache) cache.blocks[i].input = *current;
        current = outs[i];
    }
    Tensor pooled = global_avg_pool(trace.o3);
    trace.o4 = dense_forward(pooled, hidden);
    check_finite(trace.o4, "hidden dense layer");
    trace.logits = dense_forward(trace.o4, classifier);
    check_finite(trace.logits, "classifier");
    trace.probs = softmax_rows(trace.logits);

    if (keep_cache) {
        for (std::size_t i = 0; i < 3; ++i) cache.blocks[i].output = *outs[i];
        cache.pooled = std::move(pooled);
        cache.hidden_out = trace.o4;
        cache_ = std::move(cache);
    } else {
        cache_.reset();
    }
    return trace;
}

void FeatureExtractor::backward(const TraceGrad& grad) {
    if (!cache_) throw StateError("backward called without a cached forward pass");
    Cache cache = std::move(*cache_);
    cache_.reset();

    const std::size_t batch = cache.hidden_out.dim(0);
    Tensor d_hidden({batch, config_.hidden_width});
    if (!grad.logits.empty()) {
        d_hidden = dense_backward(cache.hidden_out, grad.logits, classifier);
    } else {
        classifier.grad_weight.fill(0.0);
        classifier.grad_bias.fill(0.0);
    }
    add_into(d_hidden, grad.o4);

    Tensor d_pooled = dense_backward(cache.pooled, d_hidden, hidden);
    const std::size_t length = cache.blocks[2].output.dim(2);
    Tensor d_out = global_avg_pool_backward(d_pooled, length);

    const std::array<const Tensor*, 3> extra{&grad.o1, &grad.o2, &grad.o3};
    for (std::size_t i = 3; i-- > 0;) {
        add_into(d_out, *extra[i]);
        Tensor d_bn = relu_backward(d_out, cache.blocks[i].output);
        Tensor d_conv = batchnorm_backward(d_bn, cache.blocks[i].bn, blocks[i].bn);
        d_out = conv1d_backward(cache.blocks[i].input, d_conv, blocks[i].conv);
    }
}

WeightBundle FeatureExtractor::extract_hidden_weights(std::int64_t epoch) const {
    WeightBundle bundle;
    bundle.epoch = epoch;
    for (std::size_t i = 0; i < 3; ++i) {
        const auto block = static_cast<std::uint8_t>(i + 1);
        const auto& b = blocks[i];
        bundle.entries.push_back({block, TensorKind::ConvKernel, b.conv.kernel});
        bundle.entries.push_back({block, TensorKind::ConvBias, b.conv.bias});
        bundle.entries.push_back({block, TensorKind::BnAlpha, b.bn.alpha});
        bundle.entries.push_back({block, TensorKind::BnBeta, b.bn.beta});
        bundle.entries.push_back({block, TensorKind::BnRunningMean, b.bn.running_mean});
        bundle.entries.push_back({block, TensorKind::BnRunningVar, b.bn.running_var});
    }
    bundle.entries.push_back({4, TensorKind::DenseWeight, hidden.weight});
    bundle.entries.push_back({4, TensorKind::DenseBias, hidden.bias});
    return bundle;
}

void FeatureExtractor::load_hidden_weights(const WeightBundle& bundle) {
    const WeightBundle layout = extract_hidden_weights();
    if (!layout.same_layout(bundle)) {
        throw IncompatibleBundleError("weight bundle layout does not match this extractor's hidden layers");
    }
    std::size_t idx = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        auto& b = blocks[i];
        b.conv.kernel = bundle.entries[idx++].value;
        b.conv.bias = bundle.entries[idx++].value;
        b.bn.alpha = bundle.entries[idx++].value;
        b.bn.beta = bundle.entries[idx++].value;
        b.bn.running_mean = bundle.entries[idx++].value;
        b.bn.running_var = bundle.entries[idx++].value;
    }
    hidden.weight = bundle.entries[idx++].value;
    hidden.bias = bundle.entries[idx++].value;
}

std::vector<std::size_t> FeatureExtractor::predict(const Tensor& x, std::size_t chunk) {
    std::vector<std::size_t> labels;
    labels.reserve(x.dim(0));
    for (std::size_t begin = 0; begin < x.dim(0); begin += chunk) {
        const std::size_t end = std::min(x.dim(0), begin + chunk);
        const ForwardTrace trace = forward(slice_batch(x, begin, end), BnMode::Inference);
        const auto part = argmax_rows(trace.probs);
        labels.insert(labels.end(), part.begin(), part.end());
    }
    return labels;
}

std::vector<ParamSlot> FeatureExtractor::hidden_parameters() {
    std::vector<ParamSlot> slots;
    for (std::size_t i = 0; i < 3; ++i) {
        const std::string p = "block" + std::to_string(i + 1) + ".";
        auto& b = blocks[i];
        slots.push_back({p + "conv.kernel", &b.conv.kernel, &b.conv.grad_kernel});
        slots.push_back({p + "conv.bias", &b.conv.bias, &b.conv.grad_bias});
        slots.push_back({p + "bn.alpha", &b.bn.alpha, &b.bn.grad_alpha});
        slots.push_back({p + "bn.beta", &b.bn.beta, &b.bn.grad_beta});
    }
    slots.push_back({"hidden.weight", &hidden.weight, &hidden.grad_weight});
    slots.push_back({"hidden.bias", &hidden.bias, &hidden.grad_bias});
    return slots;
}

std::vector<ParamSlot> FeatureExtractor::parameters() {
    auto slots = hidden_parameters();
    slots.push_back({"classifier.weight", &classifier.weight, &classifier.grad_weight});
    slots.push_back({"classifier.bias", &classifier.bias, &classifier.grad_bias});
    return slots;
}

void FeatureExtractor::zero_grad() {
    for (auto& slot : parameters()) slot.grad->fill(0.0);
}

std::vector<std::size_t> argmax_rows(const Tensor& probs) {
    std::vector<std::size_t> out(probs.dim(0));
    const std::size_t cols = probs.dim(1);
    for (std::size_t r = 0; r < out.size(); ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < cols; ++c) {
            if (probs.at(r, c) > probs.at(r, best)) best = c;
        }
        out[r] = best;
    }
    return out;
}

}  // namespace efdls
