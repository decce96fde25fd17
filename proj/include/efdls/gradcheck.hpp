#pragma once

#include "efdls/extractor.hpp"
#include "efdls/nncore.hpp"

#include <cstdint>

namespace efdls {

enum class GradcheckLoss { CrossEntropy, Combined };

struct ExtractorGradcheckOptions {
    ExtractorConfig extractor;
    std::size_t num_classes = 3;
    std::size_t batch = 2;
    std::size_t length = 12;
    GradcheckLoss loss = GradcheckLoss::CrossEntropy;
    double epsilon_mix = 0.9;  // weight of the supervised term for Combined
    std::size_t samples_per_param = 4;
    double fd_step = 1e-6;
    std::uint64_t seed = 0;
};

// Central-difference check of the full extractor (batch-statistics BN) against
// its analytic backward pass. Conv biases are reported through the invariant
// check because batch normalization cancels them exactly.
GradcheckResult gradcheck_extractor(const ExtractorGradcheckOptions& options);

}  // namespace efdls
