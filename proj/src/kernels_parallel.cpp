#include "efdls/kernels.hpp"

#include <algorithm>
#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace efdls::kernels {

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace parallel {

namespace {

using Index = std::ptrdiff_t;

// Valid output range [lo, hi) for tap k so that t + k - pad stays inside [0, len).
inline void tap_range(Index len, Index shift, Index& lo, Index& hi) {
    lo = std::max<Index>(0, -shift);
    hi = std::min<Index>(len, len - shift);
}

}  // namespace

void conv1d_forward(std::span<const double> input, std::span<const double> kernel,
                    std::span<const double> bias, std::span<double> output, const ConvDims& d) {
    const Index batch = static_cast<Index>(d.batch);
    const Index outs = static_cast<Index>(d.out_channels);
    const Index len = static_cast<Index>(d.length);
    const Index pad = static_cast<Index>(d.kernel / 2);
    const double* in = input.data();
    const double* w = kernel.data();
    double* out = output.data();

#pragma omp parallel for collapse(2) schedule(static)
    for (Index b = 0; b < batch; ++b) {
        for (Index o = 0; o < outs; ++o) {
            double* row = out + (b * outs + o) * len;
            std::fill(row, row + len, 0.0);
            for (std::size_t c = 0; c < d.in_channels; ++c) {
                const double* src = in + (b * static_cast<Index>(d.in_channels) + static_cast<Index>(c)) * len;
                const double* taps = w + (static_cast<std::size_t>(o) * d.in_channels + c) * d.kernel;
                for (std::size_t k = 0; k < d.kernel; ++k) {
                    const Index shift = static_cast<Index>(k) - pad;
                    Index lo = 0;
                    Index hi = 0;
                    tap_range(len, shift, lo, hi);
                    const double tap = taps[k];
                    const double* s = src + shift;
                    for (Index t = lo; t < hi; ++t) row[t] += tap * s[t];
                }
            }
            const double bo = bias[static_cast<std::size_t>(o)];
            for (Index t = 0; t < len; ++t) row[t] += bo;
        }
    }
}

void conv1d_backward_input(std::span<const double> grad_output, std::span<const double> kernel,
                           std::span<double> grad_input, const ConvDims& d) {
    const Index batch = static_cast<Index>(d.batch);
    const Index ins = static_cast<Index>(d.in_channels);
    const Index len = static_cast<Index>(d.length);
    const Index pad = static_cast<Index>(d.kernel / 2);
    const double* g = grad_output.data();
    const double* w = kernel.data();
    double* gin = grad_input.data();

#pragma omp parallel for collapse(2) schedule(static)
    for (Index b = 0; b < batch; ++b) {
        for (Index c = 0; c < ins; ++c) {
            double* row = gin + (b * ins + c) * len;
            std::fill(row, row + len, 0.0);
            for (std::size_t o = 0; o < d.out_channels; ++o) {
                const double* go = g + (b * static_cast<Index>(d.out_channels) + static_cast<Index>(o)) * len;
                const double* taps = w + (o * d.in_channels + static_cast<std::size_t>(c)) * d.kernel;
                for (std::size_t k = 0; k < d.kernel; ++k) {
                    // output t = s - shift reads input s
                    const Index shift = static_cast<Index>(k) - pad;
                    Index lo = 0;
                    Index hi = 0;
                    tap_range(len, -shift, lo, hi);
                    const double tap = taps[k];
                    const double* src = go - shift;
                    for (Index s = lo; s < hi; ++s) row[s] += tap * src[s];
                }
            }
        }
    }
}

void conv1d_backward_params(std::span<const double> input, std::span<const double> grad_output,
                            std::span<double> grad_kernel, std::span<double> grad_bias,
                            const ConvDims& d) {
    const Index outs = static_cast<Index>(d.out_channels);
    const Index len = static_cast<Index>(d.length);
    const Index pad = static_cast<Index>(d.kernel / 2);
    const double* in = input.data();
    const double* g = grad_output.data();

#pragma omp parallel for schedule(static)
    for (Index o = 0; o < outs; ++o) {
        double bias_acc = 0.0;
        for (std::size_t b = 0; b < d.batch; ++b) {
            const double* go = g + (static_cast<Index>(b) * outs + o) * len;
            for (Index t = 0; t < len; ++t) bias_acc += go[t];
        }
        grad_bias[static_cast<std::size_t>(o)] = bias_acc;

        double* taps = grad_kernel.data() + static_cast<std::size_t>(o) * d.in_channels * d.kernel;
        std::fill(taps, taps + d.in_channels * d.kernel, 0.0);
        for (std::size_t b = 0; b < d.batch; ++b) {
            const double* go = g + (static_cast<Index>(b) * outs + o) * len;
            for (std::size_t c = 0; c < d.in_channels; ++c) {
                const double* src = in + (b * d.in_channels + c) * d.length;
                for (std::size_t k = 0; k < d.kernel; ++k) {
                    const Index shift = static_cast<Index>(k) - pad;
                    Index lo = 0;
                    Index hi = 0;
                    tap_range(len, shift, lo, hi);
                    const double* s = src + shift;
                    double acc = 0.0;
                    for (Index t = lo; t < hi; ++t) acc += go[t] * s[t];
                    taps[c * d.kernel + k] += acc;
                }
            }
        }
    }
}

void dense_forward(std::span<const double> input, std::span<const double> weight,
                   std::span<const double> bias, std::span<double> output, const DenseDims& d) {
    const Index batch = static_cast<Index>(d.batch);
    const Index outs = static_cast<Index>(d.out_features);
#pragma omp parallel for collapse(2) schedule(static)
    for (Index b = 0; b < batch; ++b) {
        for (Index o = 0; o < outs; ++o) {
            const double* x = input.data() + static_cast<std::size_t>(b) * d.in_features;
            const double* w = weight.data() + static_cast<std::size_t>(o) * d.in_features;
            double acc = 0.0;
            for (std::size_t i = 0; i < d.in_features; ++i) acc += x[i] * w[i];
            output[static_cast<std::size_t>(b * outs + o)] = acc + bias[static_cast<std::size_t>(o)];
        }
    }
}

void dense_backward(std::span<const double> input, std::span<const double> weight,
                    std::span<const double> grad_output, std::span<double> grad_input,
                    std::span<double> grad_weight, std::span<double> grad_bias, const DenseDims& d) {
    const Index batch = static_cast<Index>(d.batch);
    const Index outs = static_cast<Index>(d.out_features);
    const std::size_t ins = d.in_features;

#pragma omp parallel for schedule(static)
    for (Index b = 0; b < batch; ++b) {
        double* row = grad_input.data() + static_cast<std::size_t>(b) * ins;
        std::fill(row, row + ins, 0.0);
        for (std::size_t o = 0; o < d.out_features; ++o) {
            const double go = grad_output[static_cast<std::size_t>(b) * d.out_features + o];
            const double* w = weight.data() + o * ins;
            for (std::size_t i = 0; i < ins; ++i) row[i] += go * w[i];
        }
    }

#pragma omp parallel for schedule(static)
    for (Index o = 0; o < outs; ++o) {
        double* row = grad_weight.data() + static_cast<std::size_t>(o) * ins;
        std::fill(row, row + ins, 0.0);
        double bias_acc = 0.0;
        for (std::size_t b = 0; b < d.batch; ++b) {
            const double go = grad_output[b * d.out_features + static_cast<std::size_t>(o)];
            bias_acc += go;
            const double* x = input.data() + b * ins;
            for (std::size_t i = 0; i < ins; ++i) row[i] += go * x[i];
        }
        grad_bias[static_cast<std::size_t>(o)] = bias_acc;
    }
}

void channel_moments(std::span<const double> input, std::span<double> mean,
                     std::span<double> sq_dev_sum, const ChannelDims& d) {
    const Index channels = static_cast<Index>(d.channels);
    const double n = static_cast<double>(d.batch * d.length);
#pragma omp parallel for schedule(static)
    for (Index c = 0; c < channels; ++c) {
        double sum = 0.0;
        for (std::size_t b = 0; b < d.batch; ++b) {
            const double* x = input.data() + (b * d.channels + static_cast<std::size_t>(c)) * d.length;
            for (std::size_t t = 0; t < d.length; ++t) sum += x[t];
        }
        const double mu = sum / n;
        double sq = 0.0;
        for (std::size_t b = 0; b < d.batch; ++b) {
            const double* x = input.data() + (b * d.channels + static_cast<std::size_t>(c)) * d.length;
            for (std::size_t t = 0; t < d.length; ++t) {
                const double dev = x[t] - mu;
                sq += dev * dev;
            }
        }
        mean[static_cast<std::size_t>(c)] = mu;
        sq_dev_sum[static_cast<std::size_t>(c)] = sq;
    }
}

void channel_affine(std::span<const double> input, std::span<const double> mean,
                    std::span<const double> inv_denom, std::span<const double> alpha,
                    std::span<const double> beta, std::span<double> output,
                    std::span<double> centered, const ChannelDims& d) {
    const Index batch = static_cast<Index>(d.batch);
    const Index channels = static_cast<Index>(d.channels);
    const bool keep = !centered.empty();
#pragma omp parallel for collapse(2) schedule(static)
    for (Index b = 0; b < batch; ++b) {
        for (Index c = 0; c < channels; ++c) {
            const auto cc = static_cast<std::size_t>(c);
            const std::size_t base = static_cast<std::size_t>(b * channels + c) * d.length;
            const double mu = mean[cc];
            const double inv = inv_denom[cc];
            const double a = alpha[cc];
            const double sh = beta[cc];
            for (std::size_t t = 0; t < d.length; ++t) {
                const double xhat = (input[base + t] - mu) * inv;
                if (keep) centered[base + t] = xhat;
                output[base + t] = a * xhat + sh;
            }
        }
    }
}

void channel_sums(std::span<const double> a, std::span<const double> b, std::span<double> sum_a,
                  std::span<double> sum_ab, const ChannelDims& d) {
    const Index channels = static_cast<Index>(d.channels);
#pragma omp parallel for schedule(static)
    for (Index c = 0; c < channels; ++c) {
        double sa = 0.0;
        double sab = 0.0;
        for (std::size_t n = 0; n < d.batch; ++n) {
            const std::size_t base = (n * d.channels + static_cast<std::size_t>(c)) * d.length;
            for (std::size_t t = 0; t < d.length; ++t) {
                sa += a[base + t];
                sab += a[base + t] * b[base + t];
            }
        }
        sum_a[static_cast<std::size_t>(c)] = sa;
        sum_ab[static_cast<std::size_t>(c)] = sab;
    }
}

}  // namespace parallel
}  // namespace efdls::kernels
