#include "efdls/fbst.hpp"

#include "efdls/dataio.hpp"
#include "efdls/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace efdls {

void validate(const FBSTConfig& config) {
    if (!(config.epsilon > 0.0 && config.epsilon < 1.0)) {
        throw ConfigError("epsilon must lie strictly inside (0,1), got " + std::to_string(config.epsilon));
    }
    if (config.batch_size == 0) throw ConfigError("batch_size must be positive");
    if (config.local_epochs == 0) throw ConfigError("local_epochs must be positive");
}

FBSTPair::FBSTPair(const ExtractorConfig& config, std::size_t num_classes, std::mt19937_64& rng,
                   const AdamConfig& adam)
    : student(config, num_classes, rng), teacher(student), optimizer(adam) {}

void FBSTPair::load_teacher(const WeightBundle& bundle) {
    teacher.load_hidden_weights(bundle);
    teacher_initialized = true;
}

double kd_loss(const ForwardTrace& student, const ForwardTrace& teacher) {
    double total = 0.0;
    for (int m = 1; m <= 4; ++m) {
        const Tensor& s = student.hidden(m);
        const Tensor& t = teacher.hidden(m);
        if (s.shape() != t.shape()) {
            throw DimensionError("kd_loss: hidden output " + std::to_string(m) + " shapes " +
                                 shape_string(s.shape()) + " and " + shape_string(t.shape()) + " differ");
        }
        double sq = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double d = t[i] - s[i];
            sq += d * d;
        }
        total += sq / static_cast<double>(s.dim(0));
    }
    return total;
}

TraceGrad kd_loss_grad(const ForwardTrace& student, const ForwardTrace& teacher, double weight) {
    TraceGrad grad;
    std::array<Tensor*, 4> outs{&grad.o1, &grad.o2, &grad.o3, &grad.o4};
    for (int m = 1; m <= 4; ++m) {
        const Tensor& s = student.hidden(m);
        const Tensor& t = teacher.hidden(m);
        Tensor g(s.shape());
        const double scale = 2.0 * weight / static_cast<double>(s.dim(0));
        for (std::size_t i = 0; i < s.size(); ++i) g[i] = scale * (s[i] - t[i]);
        *outs[static_cast<std::size_t>(m - 1)] = std::move(g);
    }
    return grad;
}

double sup_loss(const Tensor& probs, std::span<const std::size_t> labels) {
    if (probs.rank() != 2 || probs.dim(0) != labels.size()) {
        throw DimensionError("sup_loss: probs " + shape_string(probs.shape()) + " vs " +
                             std::to_string(labels.size()) + " labels");
    }
    if (labels.empty()) throw DimensionError("sup_loss: empty batch");
    double acc = 0.0;
    for (std::size_t j = 0; j < labels.size(); ++j) {
        if (labels[j] >= probs.dim(1)) {
            throw DimensionError("sup_loss: label " + std::to_string(labels[j]) + " out of range for " +
                                 std::to_string(probs.dim(1)) + " classes");
        }
        acc += std::log(std::max(probs.at(j, labels[j]), 1e-12));
    }
    return -acc / static_cast<double>(labels.size());
}

Tensor sup_loss_grad_logits(const Tensor& probs, std::span<const std::size_t> labels, double weight) {
    Tensor grad = probs;
    const double scale = weight / static_cast<double>(labels.size());
    for (std::size_t j = 0; j < labels.size(); ++j) {
        grad.at(j, labels[j]) -= 1.0;
        for (std::size_t c = 0; c < probs.dim(1); ++c) grad.at(j, c) *= scale;
    }
    return grad;
}

double total_loss(double sup, double kd, double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw ConfigError("epsilon must lie strictly inside (0,1), got " + std::to_string(epsilon));
    }
    return epsilon * sup + (1.0 - epsilon) * kd;
}

namespace {

BatchLoss compute(FBSTPair& pair, const Tensor& x, std::span<const std::size_t> labels,
                  const FBSTConfig& config, bool distill, bool train) {
    const ForwardTrace s = pair.student.forward(x, train ? BnMode::Train : BnMode::BatchStats, train);
    BatchLoss loss;
    loss.sup = sup_loss(s.probs, labels);
    if (!distill) {
        loss.total = loss.sup;
        if (train) {
            TraceGrad grad;
            grad.logits = sup_loss_grad_logits(s.probs, labels);
            pair.student.backward(grad);
        }
        return loss;
    }
    // Teacher uses batch statistics of the same batch and never updates its running stats.
    const ForwardTrace t = pair.teacher.forward(x, BnMode::BatchStats);
    loss.kd = kd_loss(s, t);
    loss.total = total_loss(loss.sup, loss.kd, config.epsilon);
    if (train) {
        TraceGrad grad = kd_loss_grad(s, t, 1.0 - config.epsilon);
        grad.logits = sup_loss_grad_logits(s.probs, labels, config.epsilon);
        pair.student.backward(grad);
    }
    return loss;
}

}  // namespace

BatchLoss train_batch(FBSTPair& pair, const Tensor& x, std::span<const std::size_t> labels,
                      const FBSTConfig& config, bool distill) {
    const BatchLoss loss = compute(pair, x, labels, config, distill, true);
    auto params = pair.student.parameters();
    adam_step(params, pair.optimizer);
    return loss;
}

BatchLoss evaluate_batch_loss(FBSTPair& pair, const Tensor& x, std::span<const std::size_t> labels,
                              const FBSTConfig& config, bool distill) {
    return compute(pair, x, labels, config, distill, false);
}

std::pair<LossReport, WeightBundle> local_train_epoch(FBSTPair& pair, const TrainData& data,
                                                      const FBSTConfig& config, std::int64_t k,
                                                      std::mt19937_64& rng, bool connected) {
    validate(config);
    if (data.x == nullptr || data.y.empty() || data.x->dim(0) == 0) {
        throw DatasetError("local_train_epoch: empty training set");
    }
    const std::size_t n = data.x->dim(0);
    const bool distill = connected && k > 1 && pair.teacher_initialized;

    LossReport report;
    report.epoch = k;
    report.distilled = distill;
    std::vector<std::size_t> order(n);
    for (std::size_t pass = 0; pass < config.local_epochs; ++pass) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
            const std::size_t end = std::min(n, begin + config.batch_size);
            const std::span<const std::size_t> idx(order.data() + begin, end - begin);
            const Tensor x = gather_batch(*data.x, idx);
            const auto y = gather_labels(data.y, idx);
            const BatchLoss loss = train_batch(pair, x, y, config, distill);
            if (!std::isfinite(loss.total)) {
                throw NumericError("non-finite loss at federated epoch " + std::to_string(k) + ", batch " +
                                   std::to_string(report.batches));
            }
            if (report.batches == 0) report.first_batch_kd = loss.kd;
            report.kd += loss.kd;
            report.sup += loss.sup;
            report.total += loss.total;
            ++report.batches;
        }
    }
    const double nb = static_cast<double>(report.batches);
    report.kd /= nb;
    report.sup /= nb;
    report.total /= nb;
    return {report, pair.student.extract_hidden_weights(k)};
}

double top1_on(FeatureExtractor& model, const Tensor& x, std::span<const std::size_t> labels) {
    std::vector<std::size_t> all(x.dim(0));
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto preds = model.predict(gather_batch(x, all));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == labels[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

}  // namespace efdls
