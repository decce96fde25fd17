#include "efdls/kernels.hpp"

#include <cstddef>

namespace efdls::kernels::serial {

void conv1d_forward(std::span<const double> input, std::span<const double> kernel,
                    std::span<const double> bias, std::span<double> output, const ConvDims& d) {
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(d.kernel / 2);
    const auto len = static_cast<std::ptrdiff_t>(d.length);
    for (std::size_t b = 0; b < d.batch; ++b) {
        for (std::size_t o = 0; o < d.out_channels; ++o) {
            for (std::ptrdiff_t t = 0; t < len; ++t) {
                double acc = bias[o];
                for (std::size_t c = 0; c < d.in_channels; ++c) {
                    for (std::size_t k = 0; k < d.kernel; ++k) {
                        const std::ptrdiff_t src = t + static_cast<std::ptrdiff_t>(k) - pad;
                        if (src < 0 || src >= len) continue;
                        acc += kernel[(o * d.in_channels + c) * d.kernel + k] *
                               input[(b * d.in_channels + c) * d.length + static_cast<std::size_t>(src)];
                    }
                }
                output[(b * d.out_channels + o) * d.length + static_cast<std::size_t>(t)] = acc;
            }
        }
    }
}

void conv1d_backward_input(std::span<const double> grad_output, std::span<const double> kernel,
                           std::span<double> grad_input, const ConvDims& d) {
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(d.kernel / 2);
    const auto len = static_cast<std::ptrdiff_t>(d.length);
    for (std::size_t b = 0; b < d.batch; ++b) {
        for (std::size_t c = 0; c < d.in_channels; ++c) {
            for (std::ptrdiff_t s = 0; s < len; ++s) {
                double acc = 0.0;
                for (std::size_t o = 0; o < d.out_channels; ++o) {
                    for (std::size_t k = 0; k < d.kernel; ++k) {
                        // input position s feeds output t = s - k + pad
                        const std::ptrdiff_t t = s - static_cast<std::ptrdiff_t>(k) + pad;
                        if (t < 0 || t >= len) continue;
                        acc += kernel[(o * d.in_channels + c) * d.kernel + k] *
                               grad_output[(b * d.out_channels + o) * d.length + static_cast<std::size_t>(t)];
                    }
                }
                grad_input[(b * d.in_channels + c) * d.length + static_cast<std::size_t>(s)] = acc;
            }
        }
    }
}

void conv1d_backward_params(std::span<const double> input, std::span<const double> grad_output,
                            std::span<double> grad_kernel, std::span<double> grad_bias,
                            const ConvDims& d) {
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(d.kernel / 2);
    const auto len = static_cast<std::ptrdiff_t>(d.length);
    for (std::size_t o = 0; o < d.out_channels; ++o) {
        double bias_acc = 0.0;
        for (std::size_t b = 0; b < d.batch; ++b) {
            for (std::size_t t = 0; t < d.length; ++t) {
                bias_acc += grad_output[(b * d.out_channels + o) * d.length + t];
            }
        }
        grad_bias[o] = bias_acc;
        for (std::size_t c = 0; c < d.in_channels; ++c) {
            for (std::size_t k = 0; k < d.kernel; ++k) {
                double acc = 0.0;
                for (std::size_t b = 0; b < d.batch; ++b) {
                    for (std::ptrdiff_t t = 0; t < len; ++t) {
                        const std::ptrdiff_t src = t + static_cast<std::ptrdiff_t>(k) - pad;
                        if (src < 0 || src >= len) continue;
                        acc += grad_output[(b * d.out_channels + o) * d.length + static_cast<std::size_t>(t)] *
                               input[(b * d.in_channels + c) * d.length + static_cast<std::size_t>(src)];
                    }
                }
                grad_kernel[(o * d.in_channels + c) * d.kernel + k] = acc;
            }
        }
    }
}

void dense_forward(std::span<const double> input, std::span<const double> weight,
                   std::span<const double> bias, std::span<double> output, const DenseDims& d) {
    for (std::size_t b = 0; b < d.batch; ++b) {
        for (std::size_t o = 0; o < d.out_features; ++o) {
            double acc = bias[o];
            for (std::size_t i = 0; i < d.in_features; ++i) {
                acc += input[b * d.in_features + i] * weight[o * d.in_features + i];
            }
            output[b * d.out_features + o] = acc;
        }
    }
}

void dense_backward(std::span<const double> input, std::span<const double> weight,
                    std::span<const double> grad_output, std::span<double> grad_input,
                    std::span<double> grad_weight, std::span<double> grad_bias, const DenseDims& d) {
    for (std::size_t b = 0; b < d.batch; ++b) {
        for (std::size_t i = 0; i < d.in_features; ++i) {
            double acc = 0.0;
            for (std::size_t o = 0; o < d.out_features; ++o) {
                acc += grad_output[b * d.out_features + o] * weight[o * d.in_features + i];
            }
            grad_input[b * d.in_features + i] = acc;
        }
    }
    for (std::size_t o = 0; o < d.out_features; ++o) {
        double bias_acc = 0.0;
        for (std::size_t b = 0; b < d.batch; ++b) bias_acc += grad_output[b * d.out_features + o];
        grad_bias[o] = bias_acc;
        for (std::size_t i = 0; i < d.in_features; ++i) {
            double acc = 0.0;
            for (std::size_t b = 0; b < d.batch; ++b) {
                acc += grad_output[b * d.out_features + o] * input[b * d.in_features + i];
            }
            grad_weight[o * d.in_features + i] = acc;
        }
    }
}

void channel_moments(std::span<const double> input, std::span<double> mean,
                     std::span<double> sq_dev_sum, const ChannelDims& d) {
    const double n = static_cast<double>(d.batch * d.length);
    for (std::size_t c = 0; c < d.channels; ++c) {
        double sum = 0.0;
        for (std::size_t b = 0; b < d.batch; ++b) {
            for (std::size_t t = 0; t < d.length; ++t) sum += input[(b * d.channels + c) * d.length + t];
        }
        const double mu = sum / n;
        double sq = 0.0;
        for (std::size_t b = 0; b < d.batch; ++b) {
            for (std::size_t t = 0; t < d.length; ++t) {
                const double dev = input[(b * d.channels + c) * d.length + t] - mu;
                sq += dev * dev;
            }
        }
        mean[c] = mu;
        sq_dev_sum[c] = sq;
    }
}

void channel_affine(std::span<const double> input, std::span<const double> mean,
                    std::span<const double> inv_denom, std::span<const double> alpha,
                    std::span<const double> beta, std::span<double> output,
                    std::span<double> centered, const ChannelDims& d) {
    for (std::size_t b = 0; b < d.batch; ++b) {
        for (std::size_t c = 0; c < d.channels; ++c) {
            for (std::size_t t = 0; t < d.length; ++t) {
                const std::size_t i = (b * d.channels + c) * d.length + t;
                const double xhat = (input[i] - mean[c]) * inv_denom[c];
                if (!centered.empty()) centered[i] = xhat;
                output[i] = alpha[c] * xhat + beta[c];
            }
        }
    }
}

void channel_sums(std::span<const double> a, std::span<const double> b, std::span<double> sum_a,
                  std::span<double> sum_ab, const ChannelDims& d) {
    for (std::size_t c = 0; c < d.channels; ++c) {
        double sa = 0.0;
        double sab = 0.0;
        for (std::size_t n = 0; n < d.batch; ++n) {
            for (std::size_t t = 0; t < d.length; ++t) {
                const std::size_t i = (n * d.channels + c) * d.length + t;
                sa += a[i];
                sab += a[i] * b[i];
            }
        }
        sum_a[c] = sa;
        sum_ab[c] = sab;
    }
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return acc;
}

}  // namespace efdls::kernels::serial
