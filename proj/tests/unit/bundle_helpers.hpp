#pragma once

#include <random>

#include "efdls/extractor.hpp"

namespace testing_helpers {

// A miniature bundle with the standard 20-entry layout.
inline efdls::WeightBundle mini_bundle(std::mt19937_64& rng, std::size_t c = 2) {
    using efdls::TensorKind;
    std::normal_distribution<double> d(0.0, 1.0);
    auto t = [&](efdls::Shape s) {
        efdls::Tensor x(std::move(s));
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = d(rng);
        return x;
    };
    efdls::WeightBundle b;
    std::size_t in = 1;
    for (std::uint8_t block = 1; block <= 3; ++block) {
        b.entries.push_back({block, TensorKind::ConvKernel, t({c, in, 3})});
        b.entries.push_back({block, TensorKind::ConvBias, t({c})});
        b.entries.push_back({block, TensorKind::BnAlpha, t({c})});
        b.entries.push_back({block, TensorKind::BnBeta, t({c})});
        b.entries.push_back({block, TensorKind::BnRunningMean, t({c})});
        b.entries.push_back({block, TensorKind::BnRunningVar, t({c})});
        in = c;
    }
    b.entries.push_back({4, TensorKind::DenseWeight, t({2, c})});
    b.entries.push_back({4, TensorKind::DenseBias, t({2})});
    return b;
}

// One learnable scalar (a dense bias) plus a running stat that must be ignored.
inline efdls::WeightBundle scalar_bundle(double v, double running = 0.0) {
    efdls::WeightBundle b;
    b.entries.push_back({1, efdls::TensorKind::BnRunningMean, efdls::Tensor({1}, running)});
    b.entries.push_back({4, efdls::TensorKind::DenseBias, efdls::Tensor({1}, v)});
    return b;
}

}  // namespace testing_helpers
