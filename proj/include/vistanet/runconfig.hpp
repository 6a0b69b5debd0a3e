#pragma once

#include <string>

#include "vistanet/detection.hpp"
#include "vistanet/training.hpp"

namespace vistanet {

// Flat key=value run configuration. Unknown keys are rejected so a stale or
// misspelled config fails loudly; the resolved snapshot written next to each
// run's outputs reproduces the run bit-identically.
struct RunConfig {
    uint64_t seed = 42;
    std::string data_root;
    std::string out_dir;
    double val_fraction = 0.2;
    int epochs = 10;
    int batch_size = 4;
    double learning_rate = 1e-3;
    double lambda_attn = 1.0;
    double lambda_seg = 1.0;
    std::string backbones = "tiny_test,tiny_test";
    double width_mult = 1.0;
    int stage_count = 0;  // 0 = per-arch default (3 for tiny_test, 4 otherwise)
    std::string activation = "relu";
    bool deterministic = true;
    std::string nms_method = "gaussian";
    double nms_sigma = 0.5;
    double nms_overlap_threshold = 0.3;
    double nms_score_floor = 0.001;

    static RunConfig from_file(const std::string& path);

    // referenced paths must exist before any work starts
    void validate() const;

    TrainConfig train_config() const;
    SuppressionConfig suppression() const;

    // resolved snapshot (all keys, defaults applied)
    std::string to_text() const;
};

}  // namespace vistanet
