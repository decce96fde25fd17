#include "efdls/nncore.hpp"

#include "efdls/errors.hpp"
#include "efdls/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace efdls {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
    if (t.rank() != rank) {
        throw DimensionError(std::string(what) + ": expected rank " + std::to_string(rank) +
                             " tensor, got " + shape_string(t.shape()));
    }
}

void fill_uniform(Tensor& t, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : t.values()) v = dist(rng);
}

}  // namespace

ConvLayer::ConvLayer(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_size)
    : kernel({out_channels, in_channels, kernel_size}),
      bias({out_channels}),
      grad_kernel({out_channels, in_channels, kernel_size}),
      grad_bias({out_channels}) {
    if (kernel_size % 2 == 0) {
        throw ConfigError("conv kernel size must be odd for symmetric same padding, got " +
                          std::to_string(kernel_size));
    }
}

BatchNormLayer::BatchNormLayer(std::size_t channels, double zeta_, double momentum_)
    : alpha({channels}, 1.0),
      beta({channels}, 0.0),
      running_mean({channels}, 0.0),
      running_var({channels}, 1.0),
      grad_alpha({channels}),
      grad_beta({channels}),
      zeta(zeta_),
      momentum(momentum_) {
    if (!(zeta > 0.0)) throw ConfigError("batch norm zeta must be positive");
    if (!(momentum > 0.0 && momentum < 1.0)) throw ConfigError("batch norm momentum must lie in (0,1)");
}

DenseLayer::DenseLayer(std::size_t in_features, std::size_t out_features)
    : weight({out_features, in_features}),
      bias({out_features}),
      grad_weight({out_features, in_features}),
      grad_bias({out_features}) {}

void init_uniform(ConvLayer& layer, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in_channels() * layer.kernel_size()));
    fill_uniform(layer.kernel, bound, rng);
    fill_uniform(layer.bias, bound, rng);
}

void init_uniform(DenseLayer& layer, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in_features()));
    fill_uniform(layer.weight, bound, rng);
    fill_uniform(layer.bias, bound, rng);
}

// ---------------------------------------------------------------------------

Tensor conv1d_forward(const Tensor& input, const ConvLayer& layer) {
    require_rank(input, 3, "conv1d_forward");
    if (input.dim(1) != layer.in_channels()) {
        throw DimensionError("conv1d_forward: input channel axis (axis 1) is " +
                             std::to_string(input.dim(1)) + " but kernel input-channel axis (axis 1) is " +
                             std::to_string(layer.in_channels()));
    }
    if (input.dim(2) == 0) throw DimensionError("conv1d_forward: length axis (axis 2) is empty");
    const kernels::ConvDims d{input.dim(0), layer.in_channels(), layer.out_channels(), input.dim(2),
                              layer.kernel_size()};
    Tensor out({d.batch, d.out_channels, d.length});
    kernels::parallel::conv1d_forward(input.values(), layer.kernel.values(), layer.bias.values(),
                                      out.values(), d);
    return out;
}

Tensor conv1d_backward(const Tensor& input, const Tensor& grad_output, ConvLayer& layer) {
    const kernels::ConvDims d{input.dim(0), layer.in_channels(), layer.out_channels(), input.dim(2),
                              layer.kernel_size()};
    if (grad_output.shape() != Shape{d.batch, d.out_channels, d.length}) {
        throw DimensionError("conv1d_backward: upstream gradient shape " + shape_string(grad_output.shape()));
    }
    Tensor grad_input(input.shape());
    kernels::parallel::conv1d_backward_input(grad_output.values(), layer.kernel.values(),
                                             grad_input.values(), d);
    kernels::parallel::conv1d_backward_params(input.values(), grad_output.values(),
                                              layer.grad_kernel.values(), layer.grad_bias.values(), d);
    return grad_input;
}

Tensor batchnorm_forward(const Tensor& input, BatchNormLayer& layer, BnMode mode,
                         BatchNormCache* cache) {
    require_rank(input, 3, "batchnorm_forward");
    const kernels::ChannelDims d{input.dim(0), input.dim(1), input.dim(2)};
    if (d.channels != layer.channels()) {
        throw DimensionError("batchnorm_forward: channel axis is " + std::to_string(d.channels) +
                             ", layer has " + std::to_string(layer.channels()));
    }
    const bool batch_stats = mode != BnMode::Inference;
    if (batch_stats && (d.batch == 0 || d.length == 0)) {
        throw DimensionError("batchnorm_forward: empty batch in training mode");
    }

    const std::size_t n = d.batch * d.length;
    std::vector<double> mean(d.channels);
    std::vector<double> inv(d.channels);
    std::vector<double> coef(d.channels, 0.0);

    if (batch_stats) {
        std::vector<double> sq(d.channels);
        kernels::parallel::channel_moments(input.values(), mean, sq, d);
        for (std::size_t c = 0; c < d.channels; ++c) {
            if (!std::isfinite(mean[c]) || !std::isfinite(sq[c])) {
                throw NumericError("batchnorm_forward: non-finite statistics in channel " + std::to_string(c));
            }
            double stat = 0.0;  // value tracked by running_var
            if (layer.literal_delta) {
                const double delta = std::sqrt(sq[c]);
                const double denom = delta + layer.zeta;
                inv[c] = 1.0 / denom;
                coef[c] = delta > 0.0 ? denom / delta : 0.0;
                stat = sq[c];
            } else {
                const double var = sq[c] / static_cast<double>(n);
                inv[c] = 1.0 / std::sqrt(var + layer.zeta);
                coef[c] = 1.0 / static_cast<double>(n);
                stat = var;
            }
            if (mode == BnMode::Train) {
                layer.running_mean[c] = layer.momentum * layer.running_mean[c] + (1.0 - layer.momentum) * mean[c];
                layer.running_var[c] = layer.momentum * layer.running_var[c] + (1.0 - layer.momentum) * stat;
            }
        }
    } else {
        for (std::size_t c = 0; c < d.channels; ++c) {
            mean[c] = layer.running_mean[c];
            const double rv = std::max(0.0, layer.running_var[c]);
            inv[c] = layer.literal_delta ? 1.0 / (std::sqrt(rv) + layer.zeta) : 1.0 / std::sqrt(rv + layer.zeta);
        }
    }

    Tensor out(input.shape());
    Tensor normalized;
    if (cache) normalized = Tensor(input.shape());
    kernels::parallel::channel_affine(input.values(), mean, inv, layer.alpha.values(), layer.beta.values(),
                                      out.values(), normalized.values(), d);
    if (cache) {
        cache->normalized = std::move(normalized);
        cache->inv_denom = std::move(inv);
        cache->stat_coef = std::move(coef);
        cache->batch_stats = batch_stats;
    }
    return out;
}

Tensor batchnorm_backward(const Tensor& grad_output, const BatchNormCache& cache, BatchNormLayer& layer) {
    const Tensor& xhat = cache.normalized;
    if (grad_output.shape() != xhat.shape()) {
        throw DimensionError("batchnorm_backward: upstream gradient shape " + shape_string(grad_output.shape()) +
                             " vs cached " + shape_string(xhat.shape()));
    }
    const kernels::ChannelDims d{xhat.dim(0), xhat.dim(1), xhat.dim(2)};
    std::vector<double> sum_dy(d.channels);
    std::vector<double> sum_dy_xhat(d.channels);
    kernels::parallel::channel_sums(grad_output.values(), xhat.values(), sum_dy, sum_dy_xhat, d);
    for (std::size_t c = 0; c < d.channels; ++c) {
        layer.grad_alpha[c] = sum_dy_xhat[c];
        layer.grad_beta[c] = sum_dy[c];
    }

    const double n = static_cast<double>(d.batch * d.length);
    Tensor grad_input(xhat.shape());
    for (std::size_t b = 0; b < d.batch; ++b) {
        for (std::size_t c = 0; c < d.channels; ++c) {
            const double scale = layer.alpha[c] * cache.inv_denom[c];
            const double mean_dy = cache.batch_stats ? sum_dy[c] / n : 0.0;
            const double k = cache.batch_stats ? sum_dy_xhat[c] * cache.stat_coef[c] : 0.0;
            const std::size_t base = (b * d.channels + c) * d.length;
            for (std::size_t t = 0; t < d.length; ++t) {
                grad_input[base + t] = scale * (grad_output[base + t] - mean_dy - xhat[base + t] * k);
            }
        }
    }
    return grad_input;
}

Tensor relu_forward(const Tensor& input) {
    Tensor out(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > 0.0 ? input[i] : 0.0;
    return out;
}

Tensor relu_backward(const Tensor& grad_output, const Tensor& output) {
    Tensor grad(output.shape());
    for (std::size_t i = 0; i < output.size(); ++i) grad[i] = output[i] > 0.0 ? grad_output[i] : 0.0;
    return grad;
}

Tensor global_avg_pool(const Tensor& input) {
    require_rank(input, 3, "global_avg_pool");
    const std::size_t batch = input.dim(0);
    const std::size_t channels = input.dim(1);
    const std::size_t length = input.dim(2);
    if (length == 0) throw DimensionError("global_avg_pool: length axis is empty");
    Tensor out({batch, channels});
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t c = 0; c < channels; ++c) {
            const double* row = input.data() + (b * channels + c) * length;
            double acc = 0.0;
            for (std::size_t t = 0; t < length; ++t) acc += row[t];
            out.at(b, c) = acc / static_cast<double>(length);
        }
    }
    return out;
}

Tensor global_avg_pool_backward(const Tensor& grad_output, std::size_t length) {
    const std::size_t batch = grad_output.dim(0);
    const std::size_t channels = grad_output.dim(1);
    Tensor grad({batch, channels, length});
    const double inv = 1.0 / static_cast<double>(length);
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t c = 0; c < channels; ++c) {
            const double g = grad_output.at(b, c) * inv;
            for (std::size_t t = 0; t < length; ++t) grad.at(b, c, t) = g;
        }
    }
    return grad;
}

Tensor dense_forward(const Tensor& input, const DenseLayer& layer) {
    require_rank(input, 2, "dense_forward");
    if (input.dim(1) != layer.in_features()) {
        throw DimensionError("dense_forward: input feature axis is " + std::to_string(input.dim(1)) +
                             ", weight expects " + std::to_string(layer.in_features()));
    }
    const kernels::DenseDims d{input.dim(0), layer.in_features(), layer.out_features()};
    Tensor out({d.batch, d.out_features});
    kernels::parallel::dense_forward(input.values(), layer.weight.values(), layer.bias.values(), out.values(), d);
    return out;
}

Tensor dense_backward(const Tensor& input, const Tensor& grad_output, DenseLayer& layer) {
    const kernels::DenseDims d{input.dim(0), layer.in_features(), layer.out_features()};
    if (grad_output.shape() != Shape{d.batch, d.out_features}) {
        throw DimensionError("dense_backward: upstream gradient shape " + shape_string(grad_output.shape()));
    }
    Tensor grad_input(input.shape());
    kernels::parallel::dense_backward(input.values(), layer.weight.values(), grad_output.values(),
                                      grad_input.values(), layer.grad_weight.values(), layer.grad_bias.values(), d);
    return grad_input;
}

Tensor softmax_rows(const Tensor& logits) {
    require_rank(logits, 2, "softmax_rows");
    Tensor probs(logits.shape());
    const std::size_t cols = logits.dim(1);
    for (std::size_t r = 0; r < logits.dim(0); ++r) {
        double mx = logits.at(r, 0);
        for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, logits.at(r, c));
        double sum = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            const double e = std::exp(logits.at(r, c) - mx);
            probs.at(r, c) = e;
            sum += e;
        }
        for (std::size_t c = 0; c < cols; ++c) probs.at(r, c) /= sum;
    }
    return probs;
}

// ---------------------------------------------------------------------------

void adam_step(std::span<const ParamSlot> params, AdamState& state) {
    const AdamConfig& cfg = state.config;
    if (state.first_moment.empty()) {
        for (const auto& p : params) {
            state.first_moment.emplace_back(p.value->shape());
            state.second_moment.emplace_back(p.value->shape());
        }
    }
    if (state.first_moment.size() != params.size()) {
        throw StateError("adam_step: parameter list changed between steps");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].grad->shape() != params[i].value->shape() ||
            state.first_moment[i].shape() != params[i].value->shape()) {
            throw DimensionError("adam_step: shape mismatch for parameter " + params[i].name);
        }
        if (!params[i].grad->all_finite()) {
            throw NumericError("adam_step: non-finite gradient in parameter " + params[i].name);
        }
    }

    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& w = *params[i].value;
        const Tensor& g = *params[i].grad;
        Tensor& m = state.first_moment[i];
        Tensor& v = state.second_moment[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            const double gj = g[j] + cfg.weight_decay * w[j];
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * gj;
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * gj * gj;
            w[j] -= cfg.lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg.eps);
        }
    }
}

// ---------------------------------------------------------------------------

GradcheckResult finite_diff_gradcheck(std::span<const ParamSlot> params, const std::function<double()>& loss,
                                      const GradcheckOptions& options) {
    GradcheckResult result;
    std::mt19937_64 rng(options.seed);
    for (const auto& p : params) {
        Tensor& w = *p.value;
        const Tensor& g = *p.grad;
        const bool invariant = std::find(options.invariant_params.begin(), options.invariant_params.end(),
                                         p.name) != options.invariant_params.end();
        if (invariant) {
            for (std::size_t j = 0; j < g.size(); ++j) {
                if (std::abs(g[j]) > options.invariant_tolerance) result.invariants_ok = false;
            }
            continue;
        }

        std::vector<std::size_t> coords;
        if (options.samples_per_param == 0 || options.samples_per_param >= w.size()) {
            coords.resize(w.size());
            for (std::size_t j = 0; j < w.size(); ++j) coords[j] = j;
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, w.size() - 1);
            for (std::size_t s = 0; s < options.samples_per_param; ++s) coords.push_back(pick(rng));
        }

        for (std::size_t j : coords) {
            const double orig = w[j];
            w[j] = orig + options.epsilon;
            const double up = loss();
            w[j] = orig - options.epsilon;
            const double down = loss();
            w[j] = orig;
            const double numeric = (up - down) / (2.0 * options.epsilon);
            const double analytic = g[j];
            const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
            const double rel = std::abs(analytic - numeric) / denom;
            ++result.checked;
            if (rel > result.max_relative_error || !std::isfinite(rel)) {
                result.max_relative_error = std::isfinite(rel) ? rel : std::numeric_limits<double>::infinity();
                result.worst_param = p.name;
                result.worst_index = j;
            }
        }
    }
    return result;
}

}  // namespace efdls
