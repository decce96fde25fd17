#pragma once

#include "efdls/extractor.hpp"
#include "efdls/nncore.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace efdls {

// How the squared feature differences are reduced: mean over the batch, sum
// over features and over the four hidden outputs.
enum class KdReduction { BatchMeanSumFeatures };

struct FBSTConfig {
    double epsilon = 0.9;
    std::size_t local_epochs = 1;
    std::size_t batch_size = 16;
    KdReduction kd_reduction = KdReduction::BatchMeanSumFeatures;
    AdamConfig adam;
};

void validate(const FBSTConfig& config);

// Student and teacher share one architecture. The teacher only changes via
// load_hidden_weights and is never optimized.
struct FBSTPair {
    FeatureExtractor student;
    FeatureExtractor teacher;
    bool teacher_initialized = false;
    AdamState optimizer;

    FBSTPair(const ExtractorConfig& config, std::size_t num_classes, std::mt19937_64& rng,
             const AdamConfig& adam = {});

    void load_teacher(const WeightBundle& bundle);
};

struct LossReport {
    double kd = 0.0;
    double sup = 0.0;
    double total = 0.0;
    std::int64_t epoch = 0;
    std::size_t batches = 0;
    double first_batch_kd = 0.0;
    bool distilled = false;
};

struct TrainData {
    const Tensor* x = nullptr;  // [N, L]
    std::span<const std::size_t> y;
};

double kd_loss(const ForwardTrace& student, const ForwardTrace& teacher);
// d kd / d student outputs for o1..o4, scaled by `weight`.
TraceGrad kd_loss_grad(const ForwardTrace& student, const ForwardTrace& teacher, double weight = 1.0);

// Mean cross-entropy with probabilities clamped below at 1e-12.
double sup_loss(const Tensor& probs, std::span<const std::size_t> labels);
// d sup / d logits for a softmax classifier, scaled by `weight`.
Tensor sup_loss_grad_logits(const Tensor& probs, std::span<const std::size_t> labels, double weight = 1.0);

double total_loss(double sup, double kd, double epsilon);

struct BatchLoss {
    double kd = 0.0;
    double sup = 0.0;
    double total = 0.0;
};

// One optimizer step of the student on a single batch x [B,1,L].
BatchLoss train_batch(FBSTPair& pair, const Tensor& x, std::span<const std::size_t> labels,
                      const FBSTConfig& config, bool distill);

// Loss of the student on a batch without touching any state.
BatchLoss evaluate_batch_loss(FBSTPair& pair, const Tensor& x, std::span<const std::size_t> labels,
                              const FBSTConfig& config, bool distill);

// Local training for federated epoch k. Distillation is active when k > 1, the
// teacher has been loaded and `connected` is set; otherwise only the supervised
// loss is used.
// Returns the loss report and the student's hidden weights tagged k.
std::pair<LossReport, WeightBundle> local_train_epoch(FBSTPair& pair, const TrainData& data,
                                                      const FBSTConfig& config, std::int64_t k,
                                                      std::mt19937_64& rng, bool connected = true);

double top1_on(FeatureExtractor& model, const Tensor& x, std::span<const std::size_t> labels);

}  // namespace efdls
