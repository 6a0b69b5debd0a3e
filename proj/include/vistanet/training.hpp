#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "vistanet/model.hpp"
#include "vistanet/types.hpp"

namespace vistanet {

struct LossWeights {
    double lambda_attn = 1.0;
    double lambda_seg = 1.0;

    void validate() const;
};

struct TrainConfig {
    int epochs = 10;
    int batch_size = 4;
    double learning_rate = 1e-3;
    uint64_t seed = 42;
    LossWeights loss_weights;
    std::vector<BackboneSpec> backbones{BackboneSpec{}};
    DecoderSpec decoder;
    bool deterministic = true;

    void validate() const;
};

struct EpochLog {
    int epoch = 0;
    double mean_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainResult {
    std::vector<Model> models;
    std::vector<EpochLog> log;
};

// Three-path objective:
//   CE(std) + lambda_attn * CE(attn) + lambda_seg * BCE_mean(pred, target)
// CE is -log of the true-class probability; probabilities are clamped to
// [1e-7, 1-1e-7] before the log. The target comes from seg_target(frame).
double combined_loss(const ProbVector& std_probs,
                     const std::optional<ProbVector>& attn_probs,
                     const SegmentationMask& pred_mask, const AnnotatedFrame& frame,
                     const LossWeights& w);

// Trains one model per backbone spec on identical seeded batch order.
// Deterministic for a fixed config: logs and final parameter digests are
// bit-identical across runs. on_epoch, when set, fires after every epoch so
// callers can append to logs as training progresses.
TrainResult train(const DatasetSplit& split, const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace vistanet
