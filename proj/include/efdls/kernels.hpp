#pragma once

// Numerical kernels behind the layers.
//
// `serial` holds straightforward reference loops that mirror the defining
// formulas one output element at a time. `parallel` holds the production
// versions: loops reordered so the innermost one runs over contiguous memory,
// with OpenMP splitting work over independent outputs only. Every output
// element is reduced by a single thread in a fixed order, so parallel results
// do not depend on the thread count. They may differ from the serial
// reference in the last bits because the summation order differs.

#include <cstddef>
#include <span>

namespace efdls::kernels {

struct ConvDims {
    std::size_t batch = 0;
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t length = 0;
    std::size_t kernel = 0;  // odd; padding is kernel / 2 on both sides
};

struct DenseDims {
    std::size_t batch = 0;
    std::size_t in_features = 0;
    std::size_t out_features = 0;
};

struct ChannelDims {
    std::size_t batch = 0;
    std::size_t channels = 0;
    std::size_t length = 0;
};

namespace serial {

void conv1d_forward(std::span<const double> input, std::span<const double> kernel,
                    std::span<const double> bias, std::span<double> output, const ConvDims& d);
void conv1d_backward_input(std::span<const double> grad_output, std::span<const double> kernel,
                           std::span<double> grad_input, const ConvDims& d);
void conv1d_backward_params(std::span<const double> input, std::span<const double> grad_output,
                            std::span<double> grad_kernel, std::span<double> grad_bias,
                            const ConvDims& d);

void dense_forward(std::span<const double> input, std::span<const double> weight,
                   std::span<const double> bias, std::span<double> output, const DenseDims& d);
void dense_backward(std::span<const double> input, std::span<const double> weight,
                    std::span<const double> grad_output, std::span<double> grad_input,
                    std::span<double> grad_weight, std::span<double> grad_bias, const DenseDims& d);

// Per-channel mean and sum of squared deviations over the batch and length axes.
void channel_moments(std::span<const double> input, std::span<double> mean,
                     std::span<double> sq_dev_sum, const ChannelDims& d);
// out = alpha * (x - mean) * inv_denom + beta, per channel. `centered` receives
// (x - mean) * inv_denom when non-empty.
void channel_affine(std::span<const double> input, std::span<const double> mean,
                    std::span<const double> inv_denom, std::span<const double> alpha,
                    std::span<const double> beta, std::span<double> output,
                    std::span<double> centered, const ChannelDims& d);
// Per-channel sums of a and of a * b.
void channel_sums(std::span<const double> a, std::span<const double> b, std::span<double> sum_a,
                  std::span<double> sum_ab, const ChannelDims& d);

double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace serial

namespace parallel {

void conv1d_forward(std::span<const double> input, std::span<const double> kernel,
                    std::span<const double> bias, std::span<double> output, const ConvDims& d);
void conv1d_backward_input(std::span<const double> grad_output, std::span<const double> kernel,
                           std::span<double> grad_input, const ConvDims& d);
void conv1d_backward_params(std::span<const double> input, std::span<const double> grad_output,
                            std::span<double> grad_kernel, std::span<double> grad_bias,
                            const ConvDims& d);

void dense_forward(std::span<const double> input, std::span<const double> weight,
                   std::span<const double> bias, std::span<double> output, const DenseDims& d);
void dense_backward(std::span<const double> input, std::span<const double> weight,
                    std::span<const double> grad_output, std::span<double> grad_input,
                    std::span<double> grad_weight, std::span<double> grad_bias, const DenseDims& d);

void channel_moments(std::span<const double> input, std::span<double> mean,
                     std::span<double> sq_dev_sum, const ChannelDims& d);
void channel_affine(std::span<const double> input, std::span<const double> mean,
                    std::span<const double> inv_denom, std::span<const double> alpha,
                    std::span<const double> beta, std::span<double> output,
                    std::span<double> centered, const ChannelDims& d);
void channel_sums(std::span<const double> a, std::span<const double> b, std::span<double> sum_a,
                  std::span<double> sum_ab, const ChannelDims& d);

}  // namespace parallel

int max_threads();

}  // namespace efdls::kernels
