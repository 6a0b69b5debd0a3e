#pragma once

#include <cstdint>

#include "vistanet/model.hpp"

namespace vistanet {

// U-Net-style decoder over the encoder stack. Predicted masks explain the
// classification; they never feed back into it (predict in ensemble.hpp has
// no path into this module).

autodiff::Var decode_graph(const Model& model, const std::vector<autodiff::Var>& stages);

// Full-resolution bleeding-probability mask from an encoder stack.
SegmentationMask decode(const FeatureMapStack& stack, const Model& model);

// Training target: the ground-truth mask for bleeding frames, an all-zero
// mask for non-bleeding frames.
SegmentationMask seg_target(const AnnotatedFrame& frame);

// Highlights mask regions on the image:
// out = (1 - alpha*m) * pixel + alpha*m * highlight, clamped to [0,1].
ImageFrame overlay(const ImageFrame& image, const SegmentationMask& mask, double alpha);

uint64_t decoder_invocations();
void reset_decoder_invocations();

}  // namespace vistanet
