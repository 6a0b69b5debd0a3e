#pragma once

#include <cstdint>

#include "vistanet/model.hpp"

namespace vistanet {

// Training-only branch: weights final-stage encoder features by the
// ground-truth mask so the shared head attends to bleeding regions. For
// non-bleeding frames the features pass through unchanged (global
// attention). Nothing in this header runs at inference; the invocation
// counter below lets tests prove it.

// Block-average pooling of a full-resolution mask down to (h, w). Mask dims
// must be integer multiples of the target; output values stay in [0,1] and
// block_area * sum(output) preserves the mask's total mass.
Tensor downsample_mask(const SegmentationMask& mask, int h, int w);

// bleeding: features scaled per-pixel by the low-res mask (broadcast over
// channels); non_bleeding: identity.
Tensor apply_attention(const Tensor& features, const Tensor& lowres_mask,
                       ClassLabel label);

autodiff::Var apply_attention_graph(const autodiff::Var& features,
                                    const Tensor& lowres_mask, ClassLabel label);

// Same pooling + affine + softmax as the standard path, using the same head
// parameters of the same model.
ProbVector attention_classify(const Tensor& weighted, const Model& model);

// Total calls into this module since the last reset; inference-path purity
// tests assert it stays zero across predict.
uint64_t attention_invocations();
void reset_attention_invocations();

}  // namespace vistanet
