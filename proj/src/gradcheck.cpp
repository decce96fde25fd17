#include "efdls/gradcheck.hpp"

#include "efdls/fbst.hpp"

#include <random>

namespace efdls {

GradcheckResult gradcheck_extractor(const ExtractorGradcheckOptions& options) {
    std::mt19937_64 rng(options.seed);
    FeatureExtractor model(options.extractor, options.num_classes, rng);
    FeatureExtractor teacher(options.extractor, options.num_classes, rng);

    std::normal_distribution<double> normal(0.0, 1.0);
    Tensor x({options.batch, options.extractor.input_channels, options.length});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = normal(rng);
    std::vector<std::size_t> labels(options.batch);
    std::uniform_int_distribution<std::size_t> pick(0, options.num_classes - 1);
    for (auto& y : labels) y = pick(rng);

    const bool combined = options.loss == GradcheckLoss::Combined;
    const ForwardTrace target = teacher.forward(x, BnMode::BatchStats);
    const double eps = options.epsilon_mix;

    const ForwardTrace trace = model.forward(x, BnMode::BatchStats, true);
    TraceGrad grad;
    if (combined) {
        grad = kd_loss_grad(trace, target, 1.0 - eps);
        grad.logits = sup_loss_grad_logits(trace.probs, labels, eps);
    } else {
        grad.logits = sup_loss_grad_logits(trace.probs, labels);
    }
    model.backward(grad);

    auto loss = [&] {
        const ForwardTrace t = model.forward(x, BnMode::BatchStats);
        const double sup = sup_loss(t.probs, labels);
        return combined ? total_loss(sup, kd_loss(t, target), eps) : sup;
    };

    GradcheckOptions gc;
    gc.epsilon = options.fd_step;
    gc.samples_per_param = options.samples_per_param;
    gc.seed = options.seed ^ 0x9e3779b97f4a7c15ULL;
    gc.invariant_params = {"block1.conv.bias", "block2.conv.bias", "block3.conv.bias"};
    const auto params = model.parameters();
    return finite_diff_gradcheck(params, loss, gc);
}

}  // namespace efdls
