#pragma once

#include <utility>
#include <vector>

#include "vistanet/model.hpp"

namespace vistanet {

// Standard classification path of one member, and the probability-averaging
// ensemble over members. Inference touches only the code in this header:
// the attention branch and the segmentation decoder never run here.

// Graph builders (shared with the training engine).
std::vector<autodiff::Var> encode_graph(const Model& model, const Tensor& image);
autodiff::Var head_probs_graph(const Model& model, const autodiff::Var& final_stage);

// Encoder forward over a batch sharing one image size.
std::vector<FeatureMapStack> encode(const std::vector<ImageFrame>& batch,
                                    const Model& model);

// Global average pool -> affine -> softmax on a final-stage feature map.
ProbVector classify_head(const Tensor& final_stage, const Model& model);

// Elementwise arithmetic mean of member probabilities.
ProbVector ensemble_average(const std::vector<ProbVector>& members);

// Argmax with ties resolved toward bleeding.
ClassLabel decide(const ProbVector& probs);

std::pair<ClassLabel, ProbVector> predict(const ImageFrame& image,
                                          const std::vector<Model>& models);

}  // namespace vistanet
